"""First-order stochastic dominance and stochastic bounds for default profiles.

``X`` is *stochastically preferred* to ``Y`` (``X <= Y`` in the dominance
order, :func:`fosd`) when ``F_X <= F_Y`` pointwise, equivalently when
``VaR_a(X) <= VaR_a(Y)`` at every level.  A stochastic bound for an
acceptance set is a distribution ``F*`` such that every restricted default
profile ``1_B X`` of a member is preferred to it.  Bounds are represented
as :class:`StepCdf` objects and need not live on the ambient space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .acceptance import (
    REPLAYERS,
    AcceptanceSpec,
    CheckBudget,
    ExpectedTailLoss,
    MemberSampler,
    Shortfall,
    Verdict,
    Witness,
    _sampler_factory,
    accepts,
    resolve_space,
    run_sharded,
)
from .errors import EmptyFamily, NotDecayingEnvelope, UnsupportedFamily
from .prob_core import Law, RandVar
from .risk_measures import law_es, law_var, law_var_integral

__all__ = [
    "StepCdf",
    "fosd",
    "fosd_var_equivalence",
    "tightness_envelope",
    "construct_bound",
    "closed_form_bound",
    "verify_bound",
    "level_grid",
]


@dataclass(frozen=True)
class StepCdf:
    """Right-continuous step distribution function.

    ``F(x) = levels[k]`` for ``breakpoints[k] <= x < breakpoints[k+1]`` and
    0 left of the first breakpoint; the last level is 1.  ``analytic``
    optionally carries the exact CDF a discretised bound was built from.
    """

    breakpoints: np.ndarray
    levels: np.ndarray
    analytic: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        b = np.array(self.breakpoints, dtype=float)
        lv = np.array(self.levels, dtype=float)
        if b.ndim != 1 or b.size == 0 or lv.shape != b.shape:
            raise ValueError("breakpoints and levels must be nonempty lists of equal length")
        if not np.all(np.isfinite(b)) or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be finite and strictly increasing")
        if np.any(lv < 0) or np.any(lv > 1) or np.any(np.diff(lv) < 0):
            raise ValueError("levels must be nondecreasing probabilities")
        if lv[-1] != 1.0:
            raise ValueError(f"last level must be 1, got {lv[-1]!r}")
        b.setflags(write=False)
        lv.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", lv)

    @classmethod
    def point_mass(cls, v: float) -> "StepCdf":
        return cls([float(v)], [1.0])

    @classmethod
    def from_law(cls, law: Law) -> "StepCdf":
        lv = np.minimum(law.below[1:], 1.0)
        lv[-1] = 1.0
        return cls(law.values, lv)

    @classmethod
    def from_randvar(cls, X: RandVar) -> "StepCdf":
        return cls.from_law(X.law())

    @classmethod
    def from_json(cls, obj: dict) -> "StepCdf":
        return cls(obj["breakpoints"], obj["levels"])

    def to_json(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "levels": self.levels.tolist()}

    def __eq__(self, other):
        if not isinstance(other, StepCdf):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(self.levels, other.levels)

    __hash__ = None

    def law(self) -> Law:
        masses = np.diff(np.concatenate([[0.0], self.levels]))
        keep = masses > 0
        vals = self.breakpoints[keep]
        below = np.concatenate([[0.0], self.levels[keep]])
        return Law(vals, below)

    def cdf(self, x):
        k = np.searchsorted(self.breakpoints, x, side="right")
        lv = np.concatenate([[0.0], self.levels])
        out = lv[k]
        return out if np.ndim(x) else float(out)

    def cdf_strict(self, x):
        k = np.searchsorted(self.breakpoints, x, side="left")
        lv = np.concatenate([[0.0], self.levels])
        out = lv[k]
        return out if np.ndim(x) else float(out)

    def var(self, alpha):
        return law_var(self.law(), alpha)

    def es(self, alpha):
        return law_es(self.law(), alpha)

    def mean(self) -> float:
        return -float(law_var_integral(self.law(), 1.0))

    def quantile_table(self, alphas) -> list:
        law = self.law()
        return [{"alpha": float(a), "var": float(law_var(law, a)), "es": float(law_es(law, a))} for a in alphas]


def _as_law(X) -> Law:
    if isinstance(X, StepCdf):
        return X.law()
    if isinstance(X, Law):
        return X
    return X.law()


def _cdf_on(law: Law, t: np.ndarray) -> np.ndarray:
    # at and beyond the top atom the CDF is 1, whatever the rounded total
    k = np.searchsorted(law.values, t, side="right")
    return np.where(k >= law.values.size, 1.0, law.below[k])


def _exact_cdf(law: Law, t: float) -> Fraction:
    return law.exact_below(int(np.searchsorted(law.values, t, side="right")))


def fosd(X, Y) -> bool:
    """``F_X <= F_Y`` everywhere (``X`` stochastically preferred to ``Y``).

    Accepts random variables, laws or :class:`StepCdf` objects; both CDFs
    are step functions, so comparing them on the merged breakpoints is exact.
    Points where the rounded CDFs tie are decided on the exact atom masses.
    """
    lx, ly = _as_law(X), _as_law(Y)
    t = np.union1d(lx.values, ly.values)
    fx, fy = _cdf_on(lx, t), _cdf_on(ly, t)
    if np.any(fx > fy):
        return False
    return all(_exact_cdf(lx, t[j]) <= _exact_cdf(ly, t[j]) for j in np.flatnonzero(fx == fy))


def level_grid(*laws) -> np.ndarray:
    """Levels on which VaR comparisons are exact: every cumulative-mass
    breakpoint in ``(0, 1)`` of the given laws, the midpoints between
    consecutive ones, and a point inside the first interval."""
    pts = np.unique(np.concatenate([_as_law(l).below[1:-1] for l in laws] + [np.array([1.0])]))
    pts = pts[(pts > 0.0) & (pts <= 1.0)]
    edges = np.concatenate([[0.0], pts])
    mids = 0.5 * (edges[:-1] + edges[1:])
    grid = np.unique(np.concatenate([pts[pts < 1.0], mids]))
    return grid[(grid > 0.0) & (grid < 1.0)]


def _exact_level_grid(*laws) -> list:
    pts = {l.exact_below(k) for l in laws for k in range(1, l.values.size)}
    pts = sorted(q for q in pts if 0 < q < 1) + [Fraction(1)]
    edges = [Fraction(0)] + pts
    mids = [(a + b) / 2 for a, b in zip(edges[:-1], edges[1:])]
    return sorted(set(pts[:-1]) | set(mids))


def _exact_var(law: Law, a: Fraction) -> float:
    k = law.values.size - 1
    while k > 0 and law.exact_below(k) > a:
        k -= 1
    return 0.0 - float(law.values[k])


def fosd_var_equivalence(X, Y, alpha_grid=None, es_tol: float = 1e-12) -> Verdict:
    """Check ``fosd(X, Y)`` against ``VaR_a(X) <= VaR_a(Y)`` on the grid and,
    when dominance holds, ``ES_a(X) <= ES_a(Y)``.

    The default grid comes from :func:`level_grid`, for which the VaR
    comparison is equivalent to the comparison at all levels.  When the two
    laws share a rounded cumulative mass, the VaR comparison runs on exact
    rational levels instead, since the levels separating them may not be
    representable as floats.
    """
    lx, ly = _as_law(X), _as_law(Y)
    grid = level_grid(lx, ly) if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    dom = fosd(lx, ly)
    shared = np.intersect1d(lx.below[1:lx.values.size], ly.below[1:ly.values.size])
    if alpha_grid is None and shared.size:
        levels = _exact_level_grid(lx, ly)
        above = [a for a in levels if _exact_var(lx, a) > _exact_var(ly, a)]
        var_ordered, bad_alpha = not above, (float(above[0]) if above else 0.0)
    else:
        vx, vy = law_var(lx, grid), law_var(ly, grid)
        var_ordered = bool(np.all(vx <= vy))
        bad_alpha = float(grid[int(np.argmax(vx > vy))]) if not var_ordered else float(grid[0]) if grid.size else 0.0
    wit = None
    if dom != var_ordered:
        wit = Witness("fosd_var", (), None, {"fosd": dom, "var_ordered": var_ordered, "alpha": bad_alpha})
    elif dom:
        ex, ey = law_es(lx, grid), law_es(ly, grid)
        scale = max(1.0, float(np.max(np.abs(np.concatenate([ex, ey])))))
        viol = ex > ey + es_tol * scale
        if np.any(viol):
            k = int(np.argmax(viol))
            wit = Witness("fosd_es", (), None, {"alpha": float(grid[k]), "es_x": float(ex[k]), "es_y": float(ey[k])})
    return Verdict(wit is None, wit, int(grid.size), "fosd_var_equivalence")


def tightness_envelope(members) -> StepCdf:
    """Pointwise supremum ``H`` of the member CDFs.

    The tail envelope of the family is ``G(x) = H(-x)`` for ``x > 0``,
    i.e. the largest probability any member assigns to a default of size at
    least ``x``.
    """
    members = list(members)
    if not members:
        raise EmptyFamily("tightness envelope of an empty family")
    laws = []
    for X in members:
        if np.any(X.values > 0):
            raise ValueError("envelope members must be <= 0")
        laws.append(X.law())
    t = np.unique(np.concatenate([l.values for l in laws]))
    F = np.vstack([_cdf_on(l, t) for l in laws])
    H = np.max(F, axis=0)
    # round up wherever a member's exact mass sits above its rounded value
    for i, j in zip(*np.nonzero(F == H)):
        if _exact_cdf(laws[i], t[j]) > Fraction(float(H[j])):
            H[j] = np.nextafter(H[j], 2.0)
    H = np.minimum(H, 1.0)
    H[-1] = 1.0
    return StepCdf(t, H)


def construct_bound(G: StepCdf, margin: float | None = None) -> StepCdf:
    """Stochastic bound for a uniformly bounded family with envelope ``G``.

    Without ``margin`` the bound is the point mass at the largest default
    ``-M`` (``M`` the smallest size with zero tail), which every member is
    preferred to.  With ``margin`` in ``[0, 1)`` the bound is
    ``min(1, H + margin)`` on the envelope's own breakpoints, the smallest
    dominating step CDF up to that margin.
    """
    b, lv = G.breakpoints, G.levels
    masses = np.diff(np.concatenate([[0.0], lv]))
    if np.any((b > 0) & (masses > 0)):
        raise NotDecayingEnvelope("envelope puts mass on positive values; members must be <= 0")
    if margin is None:
        m = float(b[masses > 0][0])
        return StepCdf.point_mass(m)
    if not 0.0 <= margin < 1.0:
        raise ValueError("margin must lie in [0, 1)")
    out = np.minimum(1.0, lv + margin)
    out[-1] = 1.0
    return StepCdf(b, out)


def closed_form_bound(spec: AcceptanceSpec, n_points: int = 512, tail: float = 1e-9) -> StepCdf:
    """Analytic stochastic bound for Shortfall and Expected Tail Loss sets.

    Shortfall: ``F(x) = c / l(-x)`` for ``x <= x*`` with ``l(-x*) = c``.
    Expected Tail Loss: ``F(x) = -alpha c / x`` for ``x < -c``.
    Both equal 1 to the right of their kink.  The returned StepCdf uses
    ``n_points`` log-spaced breakpoints between the level-``tail`` point and
    the kink; on each step it takes the left limit of ``F`` at the next
    breakpoint (rounded up), so it lies above ``F`` wherever it is nonzero.
    The exact ``F`` is attached as ``analytic``.
    """
    if isinstance(spec, Shortfall):
        ell, c = spec.loss, spec.c
        x_star = -float(ell.inverse(c))
        x_min = -float(ell.inverse(c / tail))

        def F(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                val = np.where(x < x_star, c / ell(np.maximum(-x, 0.0)), 1.0)
            return np.minimum(val, 1.0)

        kink, kink_level = x_star, 1.0
    elif isinstance(spec, ExpectedTailLoss):
        a, c = spec.alpha, spec.c
        if c <= 0:
            raise UnsupportedFamily("Expected Tail Loss bound needs c > 0")
        x_star = -c
        x_min = -a * c / tail

        def F(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                val = np.where(x < x_star, -a * c / np.minimum(x, -1e-300), 1.0)
            return np.minimum(val, 1.0)

        kink, kink_level = x_star, 1.0
    else:
        raise UnsupportedFamily(f"no closed-form bound for {spec.family}")
    mags = np.geomspace(-x_min, -kink, n_points)
    pts = -mags  # increasing from x_min to the kink
    pts[-1] = kink
    nxt = pts[1:]
    # sup of F on [pts[j], pts[j+1]) is its left limit at pts[j+1]
    left_limits = np.asarray(F(np.nextafter(nxt, -np.inf)), dtype=float)
    levels = np.nextafter(np.minimum(left_limits, 1.0), np.inf)
    levels = np.minimum(np.maximum.accumulate(levels), 1.0)
    levels = np.concatenate([levels, [kink_level]])
    return StepCdf(pts, levels, analytic=F)


def _replay_bound(spec, w: Witness) -> bool:
    X = w.members[0]
    if not accepts(spec, X):
        return False
    bound = StepCdf.from_json(w.recipe["bound"])
    y = RandVar(np.where(X.space.event(w.recipe["B"]).mask, X.values, 0.0), X.space)
    a = w.recipe["alpha"]
    if w.recipe["clause"] == "var":
        return law_var(y.law(), a) > bound.var(a)
    return law_es(y.law(), a) > bound.es(a) + w.recipe.get("tol", 0.0)


REPLAYERS["bound"] = _replay_bound


def verify_bound(spec: AcceptanceSpec, partition, bound: StepCdf, alpha_grid=None,
                 budget: CheckBudget | None = None, es_tol: float = 1e-12) -> Verdict:
    """Check ``VaR_a(1_B X) <= VaR_a(X*)`` (and the ES inequality) for members.

    Members are the constructive single-atom defaults ``-u_w 1_w`` at the
    finite caps on ``B`` followed by ``budget.samples`` sampled members.  With
    ``alpha_grid=None`` each comparison uses the exact level grid of the
    member and the bound.
    """
    budget = budget or CheckBudget(samples=1000)
    space = resolve_space(spec, partition.space)
    B = partition.B.mask
    bl = bound.law()
    user_grid = None if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    bound_json = bound.to_json()

    def test(x):
        y = np.where(B, x, 0.0)
        yl = Law.from_atoms(y, space.probs)
        grid = level_grid(yl, bl) if user_grid is None else user_grid
        vy, vb = law_var(yl, grid), law_var(bl, grid)
        bad = vy > vb
        if np.any(bad):
            k = int(np.argmax(bad))
            return {"clause": "var", "alpha": float(grid[k]), "member_value": float(vy[k]), "bound_value": float(vb[k])}
        ey, eb = law_es(yl, grid), law_es(bl, grid)
        tol = es_tol * max(1.0, float(np.max(np.abs(eb))))
        bad = ey > eb + tol
        if np.any(bad):
            k = int(np.argmax(bad))
            return {"clause": "es", "alpha": float(grid[k]), "member_value": float(ey[k]),
                    "bound_value": float(eb[k]), "tol": tol}
        return None

    def witness(x, info):
        info.update({"bound": bound_json, "B": partition.B.indices})
        return Witness("bound", (RandVar(x, space),), RandVar(np.where(B, x, 0.0), space), info)

    constructive = 0
    for i in np.flatnonzero(B):
        u = partition.caps[i]
        if not math.isfinite(u) or u <= 0:
            continue
        x = np.zeros(space.n)
        x[i] = -u
        if not spec.contains(x, space):
            continue
        constructive += 1
        info = test(x)
        if info is not None:
            return Verdict(False, witness(x, info), constructive, "bound")

    make = _sampler_factory(spec, space, budget)

    def work(rng, count):
        s = make(rng)
        for k in range(count):
            x = s.draw()
            info = test(x)
            if info is not None:
                return k + 1, witness(x, info)
        return count, None

    checked, wit = run_sharded(budget, 7, work)
    return Verdict(wit is None, wit, constructive + checked, "bound")
