"""Acceptance-set families and randomized property checkers.

An acceptance set is represented by a spec object whose ``contains`` method
is the exact membership test on a raw value vector.  :func:`accepts` is the
public entry point working on :class:`~surplex.prob_core.RandVar`.

The checkers draw members of a set with :class:`MemberSampler` and try to
break monotonicity, convexity, conicity and surplus invariance.  Every
failure is returned as a :class:`Witness` that :func:`replay` re-verifies
through :func:`accepts`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np

from . import _lp
from .errors import SamplerExhausted, SpaceMismatch, SpecError
from .prob_core import Event, Law, OutcomeSpace, RandVar, same_space, uniform_space
from .risk_measures import LossFunction, law_es, law_var_integral

__all__ = [
    "AcceptanceSpec",
    "VaRLevel",
    "Shortfall",
    "TestScenario",
    "ExpectedTailLoss",
    "ExpectedShortfall",
    "EsConstructed",
    "PolyhedralSolid",
    "CheckBudget",
    "Verdict",
    "Witness",
    "accepts",
    "check_monotone",
    "check_convex",
    "check_cone",
    "check_surplus_invariant",
    "equivalent_forms_audit",
    "replay",
    "spec_from_json",
    "resolve_space",
    "MemberSampler",
    "ray_sup",
    "family_scale",
    "ES_GRID_DEFAULT",
]

ES_GRID_DEFAULT = (0.01,) + tuple(round(0.05 * k, 2) for k in range(1, 20)) + (0.99,)


# --------------------------------------------------------------------------
# families
# --------------------------------------------------------------------------


class AcceptanceSpec:
    """Common interface of the acceptance-set families.

    Subclasses implement ``contains(x, space, slack)`` on a raw value array.
    ``space`` is None for families whose definition does not refer to
    particular outcomes.
    """

    family: ClassVar[str] = ""

    @property
    def space(self) -> OutcomeSpace | None:
        return None

    def contains(self, x: np.ndarray, space: OutcomeSpace, slack: float = 0.0) -> bool:
        raise NotImplementedError

    def params_json(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params_json()}


def _below_zero_law(x: np.ndarray, probs: np.ndarray) -> Law:
    return Law.from_atoms(np.minimum(x, 0.0), probs)


@dataclass(frozen=True)
class VaRLevel(AcceptanceSpec):
    """``{X : VaR_alpha(X) <= 0} = {X : P(X < 0) <= alpha}``."""

    alpha: float
    family: ClassVar[str] = "VaRLevel"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise SpecError(f"VaRLevel alpha must lie in (0, 1), got {self.alpha!r}")

    def contains(self, x, space, slack=0.0):
        return space.prob_le(x < 0, self.alpha + slack)

    def params_json(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class Shortfall(AcceptanceSpec):
    """``{X : E[l(X^-)] <= c}``."""

    loss: LossFunction
    c: float
    family: ClassVar[str] = "Shortfall"

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise SpecError(f"Shortfall threshold must be > 0, got {self.c!r}")

    def contains(self, x, space, slack=0.0):
        d = np.maximum(-x, 0.0)
        return math.fsum(space.probs * self.loss(d)) <= self.c + slack

    def params_json(self):
        return {"loss": self.loss.to_json(), "c": self.c}


@dataclass(frozen=True)
class TestScenario(AcceptanceSpec):
    """``{X : 1_E X >= 0}``: no default allowed on the stress event ``E``."""

    event: Event
    family: ClassVar[str] = "TestScenario"
    __test__: ClassVar[bool] = False  # keep pytest from collecting this class

    def __post_init__(self):
        if not self.event.mask.any():
            raise SpecError("TestScenario needs a nonempty event")

    @property
    def space(self):
        return self.event.space

    def contains(self, x, space, slack=0.0):
        return bool(np.all(x[self.event.mask] >= -slack))

    def params_json(self):
        return {"event": self.event.indices}


@dataclass(frozen=True)
class ExpectedTailLoss(AcceptanceSpec):
    """``{X : ES_alpha(-X^-) <= c}``; ``c = 0`` gives the positive cone."""

    alpha: float
    c: float
    family: ClassVar[str] = "ExpectedTailLoss"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise SpecError(f"ExpectedTailLoss alpha must lie in (0, 1), got {self.alpha!r}")
        if not (math.isfinite(self.c) and self.c >= 0.0):
            raise SpecError(f"ExpectedTailLoss threshold must be >= 0, got {self.c!r}")

    def contains(self, x, space, slack=0.0):
        return law_es(_below_zero_law(x, space.probs), self.alpha) <= self.c + slack

    def params_json(self):
        return {"alpha": self.alpha, "c": self.c}


@dataclass(frozen=True)
class ExpectedShortfall(AcceptanceSpec):
    """``{X : ES_alpha(X) <= 0}``; coherent but not surplus invariant."""

    alpha: float
    family: ClassVar[str] = "ExpectedShortfall"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise SpecError(f"ExpectedShortfall alpha must lie in (0, 1), got {self.alpha!r}")

    def contains(self, x, space, slack=0.0):
        return law_es(Law.from_atoms(x, space.probs), self.alpha) <= slack

    def params_json(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class EsConstructed(AcceptanceSpec):
    """No default on ``A``; on ``B = A^c`` the default profile must satisfy
    ``ES_a(1_B (-X^-)) <= ES_a(X*)`` for every level ``a``.

    With ``alphas=None`` the comparison runs over the default grid plus every
    breakpoint of both level curves (cumulative masses of the sorted atoms
    of ``1_B(-X^-)`` and of ``X*``, and level 1).  Between breakpoints both
    sides of ``a ES_a`` are linear in ``a``, so this finite check is
    equivalent to the check for all ``a`` in ``(0, 1)``.  An explicit
    ``alphas`` tuple restricts the check to exactly those levels.
    """

    event: Event
    xstar: RandVar
    alphas: tuple | None = None
    family: ClassVar[str] = "EsConstructed"
    _star: Law = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not same_space(self.event.space, self.xstar.space):
            raise SpecError("EsConstructed event and bound live on different spaces")
        if np.any(self.xstar.values > 0):
            raise SpecError("EsConstructed bound X* must be <= 0")
        if self.alphas is not None:
            a = tuple(float(v) for v in self.alphas)
            if not a or any(not 0.0 < v < 1.0 for v in a):
                raise SpecError("EsConstructed alphas must be a nonempty list in (0, 1)")
            object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "_star", self.xstar.law())

    @property
    def space(self):
        return self.event.space

    @property
    def b_event(self) -> Event:
        return self.event.complement

    def levels_for(self, y_law: Law) -> np.ndarray:
        if self.alphas is not None:
            return np.array(self.alphas)
        pts = np.concatenate([ES_GRID_DEFAULT, y_law.below[1:], self._star.below[1:], [1.0]])
        pts = pts[(pts > 0.0) & (pts <= 1.0)]
        return np.unique(pts)

    def contains(self, x, space, slack=0.0):
        a_mask = self.event.mask
        if np.any(x[a_mask] < -slack):
            return False
        y = np.where(a_mask, 0.0, np.minimum(x, 0.0))
        y_law = Law.from_atoms(y, space.probs)
        grid = self.levels_for(y_law)
        lhs = law_var_integral(y_law, grid) / grid
        rhs = law_var_integral(self._star, grid) / grid
        return bool(np.all(lhs <= rhs + slack))

    def params_json(self):
        out = {"event": self.event.indices, "xstar": self.xstar.tolist()}
        if self.alphas is not None:
            out["alphas"] = list(self.alphas)
        return out


@dataclass(frozen=True)
class PolyhedralSolid(AcceptanceSpec):
    """Solid hull of ``conv(generators)`` plus the positive cone.

    ``X`` is accepted iff ``-X^- >= sum_i lam_i g_i`` for some convex
    weights ``lam``.  Decided by an exact rational LP for up to 12 atoms and
    by floating point (tolerance 1e-9) above that.
    """

    generators: tuple
    family: ClassVar[str] = "PolyhedralSolid"
    _G: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise SpecError("PolyhedralSolid needs at least one generator")
        sp = gens[0].space
        for g in gens:
            if not same_space(g.space, sp):
                raise SpecError("PolyhedralSolid generators live on different spaces")
            if np.any(g.values > 0):
                raise SpecError("PolyhedralSolid generators must be <= 0")
        object.__setattr__(self, "generators", gens)
        G = np.vstack([g.values for g in gens])
        G.setflags(write=False)
        object.__setattr__(self, "_G", G)

    @property
    def space(self):
        return self.generators[0].space

    @property
    def matrix(self) -> np.ndarray:
        return self._G

    def contains(self, x, space, slack=0.0):
        target = np.minimum(x, 0.0) + slack
        G = self._G
        if np.any(np.all(G <= target, axis=1)):
            return True
        if np.any(target < G.min(axis=0)):
            return False
        return _lp.simplex_point_below(G, target) is not None

    def params_json(self):
        return {"generators": [g.tolist() for g in self.generators]}


_FAMILIES = {
    cls.family: cls
    for cls in (VaRLevel, Shortfall, TestScenario, ExpectedTailLoss, ExpectedShortfall, EsConstructed, PolyhedralSolid)
}


def spec_from_json(obj: dict, space: OutcomeSpace | None = None) -> AcceptanceSpec:
    """Build a spec from ``{"family": ..., "params": {...}}``.

    Families that refer to outcomes (events, bounds, generators) need
    ``space``; events are lists of 0-based outcome indices.
    """
    if not isinstance(obj, dict) or "family" not in obj:
        raise SpecError('spec must be an object with a "family" key')
    fam = obj["family"]
    params = obj.get("params", {})
    if fam not in _FAMILIES:
        raise SpecError(f"unknown family {fam!r}; expected one of {sorted(_FAMILIES)}")
    if not isinstance(params, dict):
        raise SpecError('"params" must be an object')

    def need(key):
        if key not in params:
            raise SpecError(f"{fam} requires parameter {key!r}")
        return params[key]

    def need_space():
        if space is None:
            raise SpecError(f"{fam} refers to outcomes; an outcome space is required")
        return space

    try:
        if fam == "VaRLevel":
            return VaRLevel(float(need("alpha")))
        if fam == "ExpectedShortfall":
            return ExpectedShortfall(float(need("alpha")))
        if fam == "ExpectedTailLoss":
            return ExpectedTailLoss(float(need("alpha")), float(need("c")))
        if fam == "Shortfall":
            return Shortfall(LossFunction.from_json(need("loss")), float(need("c")))
        if fam == "TestScenario":
            sp = need_space()
            return TestScenario(sp.event(need("event")))
        if fam == "EsConstructed":
            sp = need_space()
            alphas = params.get("alphas")
            return EsConstructed(sp.event(need("event")), RandVar(need("xstar"), sp),
                                 None if alphas is None else tuple(alphas))
        if fam == "PolyhedralSolid":
            sp = need_space()
            return PolyhedralSolid(tuple(RandVar(g, sp) for g in need("generators")))
    except SpecError:
        raise
    except (TypeError, ValueError, IndexError) as exc:
        raise SpecError(f"invalid parameters for {fam}: {exc}") from exc
    raise AssertionError(fam)


def _check_on_space(spec: AcceptanceSpec, space: OutcomeSpace):
    if spec.space is not None and not same_space(spec.space, space):
        raise SpaceMismatch(f"{spec.family} spec is bound to {spec.space!r}, position lives on {space!r}")


def accepts(spec: AcceptanceSpec, X: RandVar, slack: float = 0.0) -> bool:
    """Exact membership of ``X`` in the acceptance set; ``slack`` relaxes
    each defining inequality by that amount."""
    _check_on_space(spec, X.space)
    return bool(spec.contains(X.values, X.space, slack))


def resolve_space(spec: AcceptanceSpec, space: OutcomeSpace | None = None) -> OutcomeSpace:
    """Space a checker runs on: the spec's own, else ``space``, else uniform-4."""
    if spec.space is not None:
        if space is not None and not same_space(space, spec.space):
            raise SpaceMismatch("checker space differs from the spec's outcome space")
        return spec.space
    return space if space is not None else uniform_space(4)


# --------------------------------------------------------------------------
# budgets, verdicts, witnesses
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckBudget:
    samples: int = 1000
    seed: int = 0
    exhaustive_threshold: int = 10
    workers: int | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("a check budget needs at least one sample")


@dataclass(frozen=True)
class Witness:
    """Counterexample: every ``members`` entry is accepted, ``violator`` is not.

    ``recipe`` records how the violator was built from the members (for
    example the convex weight or the scaling factor).
    """

    kind: str
    members: tuple
    violator: RandVar | None
    recipe: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "members": [_jsonable(m) for m in self.members],
            "violator": _jsonable(self.violator),
            "recipe": {k: _jsonable(v) for k, v in self.recipe.items()},
        }


def _jsonable(v):
    if isinstance(v, RandVar):
        return v.tolist()
    if isinstance(v, Event):
        return v.indices
    if hasattr(v, "to_json"):
        return v.to_json()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: Witness | None = None
    checked: int = 0
    name: str = ""

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failing verdict must carry a witness")

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        return {
            "property": self.name,
            "holds": self.holds,
            "checked": self.checked,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


REPLAYERS: dict = {}


def replay(spec: AcceptanceSpec, witness_or_verdict) -> bool:
    """True iff the witness still exhibits its violation under :func:`accepts`.

    Property witnesses replay generically: every member is accepted and the
    violator is not.  Witness kinds with other semantics register a
    replayer in ``REPLAYERS``.
    """
    w = witness_or_verdict.witness if isinstance(witness_or_verdict, Verdict) else witness_or_verdict
    if w is None:
        return False
    if w.kind in REPLAYERS:
        return bool(REPLAYERS[w.kind](spec, w))
    return all(accepts(spec, m) for m in w.members) and not accepts(spec, w.violator)


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def ray_sup(contains: Callable[[np.ndarray], bool], direction: np.ndarray, cap_max: float = 1e12,
            rel_tol: float = 1e-10, floor: float = 1e-12) -> float:
    """Largest ``t`` with ``-t * direction`` accepted (``direction >= 0``).

    Doubling from 1 up to ``cap_max`` then bisection; returns ``inf`` when
    ``-cap_max * direction`` is still accepted and 0 when ``-floor *
    direction`` is already rejected.  The returned value is itself accepted.
    """
    w = np.asarray(direction, dtype=float)
    if not contains(-floor * w):
        return 0.0
    t = 1.0
    if contains(-t * w):
        while True:
            nxt = t * 2.0
            if nxt >= cap_max:
                if contains(-cap_max * w):
                    return math.inf
                lo, hi = t, cap_max
                break
            if not contains(-nxt * w):
                lo, hi = t, nxt
                break
            t = nxt
    else:
        lo, hi = floor, 1.0
    while hi - lo > rel_tol * hi:
        mid = math.sqrt(lo * hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if contains(-mid * w):
            lo = mid
        else:
            hi = mid
    return lo


def _atom_caps(spec: AcceptanceSpec, space: OutcomeSpace, cap_max=1e12) -> np.ndarray:
    contains = lambda v: spec.contains(v, space)  # noqa: E731
    caps = np.empty(space.n)
    for i in range(space.n):
        e = np.zeros(space.n)
        e[i] = 1.0
        caps[i] = ray_sup(contains, e, cap_max=cap_max)
    return caps


def family_scale(spec: AcceptanceSpec, space: OutcomeSpace) -> float:
    """Typical default size: median of the finite positive per-atom caps."""
    caps = _atom_caps(spec, space, cap_max=1e9)
    finite = caps[np.isfinite(caps) & (caps > 0)]
    return float(np.median(finite)) if finite.size else 1.0


class MemberSampler:
    """Draws members of an acceptance set on a fixed space.

    Mixes boundary points along random default directions (from a
    precomputed pool), atomwise Gaussian rejection draws, nonnegative
    positions, and surplus-heavy positions whose default exceeds the
    boundary.  Every draw passes ``spec.contains``.
    """

    POOL = 48
    MAX_TRIES = 1000

    def __init__(self, spec: AcceptanceSpec, space: OutcomeSpace, rng: np.random.Generator,
                 scale: float | None = None, pool=None):
        self.spec = spec
        self.space = space
        self.rng = rng
        self.n = space.n
        self.scale = family_scale(spec, space) if scale is None else scale
        self.pool = pool if pool is not None else self.boundary_pool(spec, space, self.scale, rng)
        self.rejection_tries = 0
        self.rejection_hits = 0

    @classmethod
    def boundary_pool(cls, spec, space, scale, rng, size=None):
        n = space.n
        contains = lambda v: spec.contains(v, space)  # noqa: E731
        pool = []
        size = size or cls.POOL
        dirs = [np.eye(n)[i] for i in range(n)] + [np.ones(n)]
        while len(dirs) < size:
            k = int(rng.integers(1, n + 1))
            idx = rng.choice(n, size=k, replace=False)
            w = np.zeros(n)
            w[idx] = rng.uniform(0.2, 1.0, size=k) if rng.random() < 0.7 else 1.0
            dirs.append(w)
        for w in dirs[:max(size, n + 1)]:
            t = ray_sup(contains, w, cap_max=1e6 * scale, rel_tol=1e-12)
            pool.append((w, t))
        return pool

    def contains(self, x) -> bool:
        return bool(self.spec.contains(x, self.space))

    def _surplus(self, allowed: np.ndarray, density=0.5, big=1.0) -> np.ndarray:
        rng = self.rng
        on = allowed & (rng.random(self.n) < density)
        mag = self.scale * big * rng.exponential(1.0, size=self.n) * np.exp(rng.uniform(-2, 2, size=self.n))
        return np.where(on, mag, 0.0)

    def boundary(self) -> np.ndarray:
        rng = self.rng
        w, t = self.pool[int(rng.integers(len(self.pool)))]
        if math.isinf(t):
            t = self.scale * math.exp(rng.uniform(math.log(1e-2), math.log(1e3)))
            theta = 1.0
        else:
            u = rng.random()
            theta = 1.0 if u < 0.5 else (0.0 if u < 0.55 else rng.random())
        x = -theta * t * w
        x = x + self._surplus(w == 0)
        if not self.contains(x):
            # surplus can only help a monotone set; this guards rounding
            x = -theta * t * w
            if not self.contains(x):
                x = np.zeros(self.n)
        return x

    def gaussian(self, big=1.0) -> np.ndarray:
        rng = self.rng
        mu = rng.uniform(-0.5, 2.0)
        sd = rng.uniform(0.5, 2.0)
        return self.scale * big * (mu + sd * rng.standard_normal(self.n))

    def rejection(self) -> np.ndarray:
        for _ in range(self.MAX_TRIES):
            self.rejection_tries += 1
            x = self.gaussian()
            if self.contains(x):
                self.rejection_hits += 1
                return x
        if self.rejection_tries >= 5000 and self.rejection_hits < 1e-3 * self.rejection_tries:
            raise SamplerExhausted(
                f"{self.spec.family}: rejection sampler accepted {self.rejection_hits} of "
                f"{self.rejection_tries} draws"
            )
        return self.boundary()

    def nonnegative(self) -> np.ndarray:
        return self._surplus(np.ones(self.n, dtype=bool), density=0.6)

    def surplus_heavy(self) -> np.ndarray:
        rng = self.rng
        w, t = self.pool[int(rng.integers(len(self.pool)))]
        if math.isinf(t) or t == 0.0:
            t = self.scale
        x = -t * rng.uniform(0.5, 2.0) * w + self._surplus(w == 0, density=0.9, big=rng.uniform(2, 20))
        return x if self.contains(x) else self.boundary()

    def draw(self) -> np.ndarray:
        u = self.rng.random()
        if u < 0.45:
            return self.boundary()
        if u < 0.7:
            return self.rejection()
        if u < 0.8:
            return self.nonnegative()
        return self.surplus_heavy()

    def draw_any(self) -> np.ndarray:
        """Arbitrary position (member or not) for two-sided checks."""
        u = self.rng.random()
        if u < 0.5:
            return self.draw()
        if u < 0.8:
            return self.gaussian()
        w, t = self.pool[int(self.rng.integers(len(self.pool)))]
        t = self.scale if (math.isinf(t) or t == 0.0) else t
        return -t * self.rng.uniform(0.8, 3.0) * w + self._surplus(w == 0)


# --------------------------------------------------------------------------
# sharded runner
# --------------------------------------------------------------------------

SHARD = 256


def _workers(budget: CheckBudget) -> int:
    if budget.workers is not None:
        return max(1, int(budget.workers))
    env = os.environ.get("SURPLEX_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def run_sharded(budget: CheckBudget, salt: int, work) -> tuple[int, object]:
    """Run ``work(rng, count) -> (checked, witness)`` over fixed-size shards.

    Each shard gets its own generator spawned from ``(seed, salt)``, and the
    first witness in shard order wins, so results do not depend on the
    worker count.
    """
    n_shards = -(-budget.samples // SHARD)
    seqs = np.random.SeedSequence([budget.seed & (2**64 - 1), salt]).spawn(n_shards)
    counts = [min(SHARD, budget.samples - i * SHARD) for i in range(n_shards)]

    def one(i):
        return work(np.random.default_rng(seqs[i]), counts[i])

    total = 0
    workers = _workers(budget)
    if workers == 1:
        for i in range(n_shards):
            checked, wit = one(i)
            total += checked
            if wit is not None:
                return total, wit
        return total, None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, n_shards, workers):
            for checked, wit in pool.map(one, range(start, min(n_shards, start + workers))):
                total += checked
                if wit is not None:
                    return total, wit
    return total, None


def _sampler_factory(spec, space, budget):
    """Shared scale and boundary pool so that shards only differ in their rng."""
    rng = np.random.default_rng(np.random.SeedSequence([budget.seed & (2**64 - 1), 0xB0]))
    scale = family_scale(spec, space)
    pool = MemberSampler.boundary_pool(spec, space, scale, rng)

    def make(rng):
        return MemberSampler(spec, space, rng, scale=scale, pool=pool)

    return make


def _rv(x, space) -> RandVar:
    return RandVar(x, space)


# --------------------------------------------------------------------------
# checkers
# --------------------------------------------------------------------------


def _log_uniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def check_monotone(spec: AcceptanceSpec, budget: CheckBudget, space: OutcomeSpace | None = None) -> Verdict:
    """Sampled ``X in A, D >= 0  =>  X + D in A``."""
    space = resolve_space(spec, space)
    make = _sampler_factory(spec, space, budget)

    def work(rng, count):
        s = make(rng)
        for k in range(count):
            x = s.draw()
            d = s._surplus(np.ones(space.n, dtype=bool), density=rng.uniform(0.2, 1.0),
                           big=_log_uniform(rng, 1e-3, 1e2))
            if not s.contains(x + d):
                return k + 1, Witness("monotone", (_rv(x, space),), _rv(x + d, space), {"delta": d.tolist()})
        return count, None

    checked, wit = run_sharded(budget, 1, work)
    return Verdict(wit is None, wit, checked, "monotone")


def check_convex(spec: AcceptanceSpec, budget: CheckBudget, space: OutcomeSpace | None = None) -> Verdict:
    """Sampled ``X, Y in A  =>  lam X + (1 - lam) Y in A``."""
    space = resolve_space(spec, space)
    make = _sampler_factory(spec, space, budget)

    def work(rng, count):
        s = make(rng)
        for k in range(count):
            x, y = s.draw(), s.draw()
            lam = 0.5 if rng.random() < 0.5 else float(rng.random())
            z = lam * x + (1.0 - lam) * y
            if not s.contains(z):
                return k + 1, Witness("convex", (_rv(x, space), _rv(y, space)), _rv(z, space), {"weight": lam})
        return count, None

    checked, wit = run_sharded(budget, 2, work)
    return Verdict(wit is None, wit, checked, "convex")


def check_cone(spec: AcceptanceSpec, budget: CheckBudget, space: OutcomeSpace | None = None) -> Verdict:
    """Sampled ``X in A, t in (0, 1000]  =>  t X in A``."""
    space = resolve_space(spec, space)
    make = _sampler_factory(spec, space, budget)

    def work(rng, count):
        s = make(rng)
        for k in range(count):
            x = s.draw()
            u = rng.random()
            t = 2.0 if u < 0.3 else (1e3 if u < 0.4 else _log_uniform(rng, 1e-3, 1e3))
            if not s.contains(t * x):
                return k + 1, Witness("cone", (_rv(x, space),), _rv(t * x, space), {"t": t})
        return count, None

    checked, wit = run_sharded(budget, 3, work)
    return Verdict(wit is None, wit, checked, "cone")


def _events_for(x, space, rng, budget, n_random=8):
    n = space.n
    if n <= budget.exhaustive_threshold:
        bits = np.arange(n)
        return [((code >> bits) & 1).astype(bool) for code in range(1 << n)]
    evs = [x < 0, x >= 0, np.ones(n, dtype=bool), np.zeros(n, dtype=bool)]
    evs += [rng.random(n) < rng.uniform(0.1, 0.9) for _ in range(n_random)]
    return evs


def check_surplus_invariant(spec: AcceptanceSpec, budget: CheckBudget,
                            space: OutcomeSpace | None = None) -> Verdict:
    """Sampled ``X in A  =>  -X^- in A`` and ``1_E X in A`` for events ``E``.

    Events are enumerated exhaustively when the space has at most
    ``budget.exhaustive_threshold`` outcomes and sampled otherwise.
    """
    space = resolve_space(spec, space)
    make = _sampler_factory(spec, space, budget)

    def work(rng, count):
        s = make(rng)
        for k in range(count):
            x = s.draw()
            negx = np.minimum(x, 0.0)
            if not s.contains(negx):
                return k + 1, Witness("surplus_negative_part", (_rv(x, space),), _rv(negx, space), {})
            for mask in _events_for(x, space, rng, budget):
                y = np.where(mask, x, 0.0)
                if not s.contains(y):
                    ev = Event(mask, space)
                    return k + 1, Witness("surplus_restriction", (_rv(x, space),), _rv(y, space),
                                          {"event": ev.indices})
        return count, None

    checked, wit = run_sharded(budget, 4, work)
    return Verdict(wit is None, wit, checked, "surplus_invariant")


def equivalent_forms_audit(spec: AcceptanceSpec, budget: CheckBudget, space: OutcomeSpace | None = None) -> dict:
    """Evaluate the four equivalent forms of surplus invariance side by side.

    Forms, for a sampled member ``X``:
      a. every ``Y`` with ``Y^- <= X^-`` is accepted (sampled ``Y``);
      b. every ``Y`` with ``Y^- = X^-`` is accepted (sampled ``Y``);
      c. ``-X^-`` is accepted;
      d. ``1_E X`` is accepted for every event ``E``.
    Returns per-form verdicts and, per pair of forms, on how many members the
    two per-member outcomes agreed.  ``consistent`` is True when all forms
    reach the same global verdict.
    """
    space = resolve_space(spec, space)
    make = _sampler_factory(spec, space, budget)
    rng = np.random.default_rng(np.random.SeedSequence([budget.seed & (2**64 - 1), 5]))
    s = make(rng)
    n = space.n
    names = ("a", "b", "c", "d")
    first = {f: None for f in names}
    fails = {f: 0 for f in names}
    pair = {f"{f}{g}": 0 for i, f in enumerate(names) for g in names[i + 1:]}

    for _ in range(budget.samples):
        x = s.draw()
        negx = np.minimum(x, 0.0)
        nonneg = x >= 0
        res = {}
        # a
        bad_a = None
        for j in range(4):
            theta = np.ones(n) if j == 0 else rng.random(n)
            y = theta * negx + (s._surplus(np.ones(n, dtype=bool)) if j > 1 else 0.0)
            if not s.contains(y):
                bad_a = y
                break
        res["a"] = bad_a
        # b
        bad_b = None
        for j in range(3):
            y = negx + (s._surplus(nonneg) if j else 0.0)
            if not s.contains(y):
                bad_b = y
                break
        res["b"] = bad_b
        res["c"] = None if s.contains(negx) else negx
        bad_d = None
        for mask in _events_for(x, space, rng, budget):
            y = np.where(mask, x, 0.0)
            if not s.contains(y):
                bad_d = y
                break
        res["d"] = bad_d
        ok = {f: res[f] is None for f in names}
        for f in names:
            if not ok[f]:
                fails[f] += 1
                if first[f] is None:
                    first[f] = Witness(f"form_{f}", (_rv(x, space),), _rv(res[f], space), {})
        for key in pair:
            if ok[key[0]] == ok[key[1]]:
                pair[key] += 1

    forms = {f: Verdict(first[f] is None, first[f], budget.samples, f"form_{f}") for f in names}
    holds = {f: v.holds for f, v in forms.items()}
    return {
        "family": spec.family,
        "samples": budget.samples,
        "forms": forms,
        "violations": fails,
        "pair_agreement": pair,
        "consistent": len(set(holds.values())) == 1,
        "holds": all(holds.values()),
    }
