"""Numeraire invariance and cross-currency capital arbitrage.

A rescaling factor ``R > 0`` converts a position from one currency into
another.  An acceptance set is numeraire invariant when ``X in A`` implies
``RX in A`` for every such ``R``; this holds exactly when the set is both a
cone and surplus invariant.  :func:`equivalence_audit` checks that the three
sampled verdicts line up and converts witnesses between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .acceptance import (
    AcceptanceSpec,
    CheckBudget,
    Verdict,
    Witness,
    _sampler_factory,
    accepts,
    check_cone,
    check_surplus_invariant,
    replay,
    resolve_space,
    run_sharded,
)
from .prob_core import OutcomeSpace, RandVar
from .risk_measures import law_es, law_var
from .prob_core import Law

__all__ = [
    "RescalingFactor",
    "check_numeraire_invariance",
    "equivalence_audit",
    "ArbitrageWitness",
    "arbitrage_search",
    "translate_set",
    "risk_value",
]


@dataclass(frozen=True)
class RescalingFactor:
    """Strictly positive exchange rate per outcome."""

    rate: RandVar

    def __post_init__(self):
        if np.any(self.rate.values <= 0):
            raise ValueError(f"rescaling factors must be > 0, got {self.rate.tolist()}")

    @property
    def space(self) -> OutcomeSpace:
        return self.rate.space

    def apply(self, X: RandVar) -> RandVar:
        return X * self.rate

    def tolist(self):
        return self.rate.tolist()


def _log_uniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size=size))


def _draw_factor(rng, x) -> tuple[np.ndarray, str]:
    """Mixture of rescaling factors; some have zero entries on purpose."""
    n = x.size
    u = rng.random()
    if u < 0.35:
        return _log_uniform(rng, 1e-3, 1e3, n), "log_uniform"
    if u < 0.5:
        return rng.uniform(0.5, 2.0, n) * _log_uniform(rng, 0.1, 10.0), "bounded_away"
    if u < 0.6:
        return np.full(n, _log_uniform(rng, 1e-3, 1e3)), "constant"
    if u < 0.75:
        r = _log_uniform(rng, 1e-3, 1e3, n)
        r[rng.random(n) < 0.4] = 0.0
        return r, "zero_entries"
    eps = _log_uniform(rng, 1e-4, 1.0)
    big = _log_uniform(rng, 1.0, 1e3) if rng.random() < 0.5 else 1.0
    return np.where(x < 0, big, eps), "default_weighted"


def check_numeraire_invariance(spec: AcceptanceSpec, budget: CheckBudget,
                               space: OutcomeSpace | None = None) -> Verdict:
    """Sampled ``X in A  =>  RX in A``.

    Factors mix per-atom log-uniform rates in ``[1e-3, 1e3]``, rates bounded
    away from zero, constants, rates vanishing on random events, and rates
    that shrink the surplus while keeping or inflating the defaults.
    """
    space = resolve_space(spec, space)
    make = _sampler_factory(spec, space, budget)

    def work(rng, count):
        s = make(rng)
        for k in range(count):
            x = s.draw()
            r, kind = _draw_factor(rng, x)
            y = r * x
            if not s.contains(y):
                return k + 1, Witness("numeraire", (RandVar(x, space),), RandVar(y, space),
                                      {"R": r.tolist(), "factor": kind})
        return count, None

    checked, wit = run_sharded(budget, 6, work)
    return Verdict(wit is None, wit, checked, "numeraire_invariant")


def _numeraire_to_other(spec, w: Witness) -> Witness:
    """A numeraire witness becomes a surplus, cone or monotonicity witness."""
    X = w.members[0]
    space = X.space
    negx = RandVar(np.minimum(X.values, 0.0), space)
    if not accepts(spec, negx):
        return Witness("surplus_negative_part", (X,), negx, {})
    r = np.asarray(w.recipe["R"])
    t = float(r.max())
    scaled = t * negx
    if not accepts(spec, scaled):
        return Witness("cone", (negx,), scaled, {"t": t})
    # R X >= t (-X^-) pointwise, so the rescaled position sits above a member
    return Witness("monotone", (scaled,), w.violator, {"delta": (w.violator.values - scaled.values).tolist()})


def _cone_to_numeraire(spec, w: Witness) -> Witness:
    X = w.members[0]
    t = w.recipe["t"]
    r = np.full(X.space.n, float(t))
    return Witness("numeraire", (X,), RandVar(r * X.values, X.space), {"R": r.tolist(), "factor": "constant"})


def _surplus_to_numeraire(spec, w: Witness) -> Witness | None:
    """Shrink the surplus (or the unrestricted part) towards zero until the
    rescaled position leaves the set; closedness guarantees this happens for
    a small enough factor, and the factor 0 is tried last."""
    X = w.members[0]
    space = X.space
    if w.kind == "surplus_restriction":
        keep = space.event(w.recipe["event"]).mask
    else:
        keep = X.values < 0
    for k in list(range(1, 17)) + [None]:
        eps = 0.0 if k is None else 10.0 ** (-k)
        r = np.where(keep, 1.0, eps)
        y = RandVar(r * X.values, space)
        if not accepts(spec, y):
            return Witness("numeraire", (X,), y, {"R": r.tolist(), "factor": "surplus_shrink"})
    return None


def equivalence_audit(spec: AcceptanceSpec, budget: CheckBudget, space: OutcomeSpace | None = None) -> dict:
    """Numeraire invariance versus conicity and surplus invariance.

    Runs the three checkers at the same budget and seed and reports whether
    ``numeraire == cone and surplus``.  Each witness is converted into a
    witness for the other side of the equivalence and replayed.
    """
    space = resolve_space(spec, space)
    nu = check_numeraire_invariance(spec, budget, space)
    cone = check_cone(spec, budget, space)
    surplus = check_surplus_invariant(spec, budget, space)
    conversions = {}
    if nu.witness is not None:
        cw = _numeraire_to_other(spec, nu.witness)
        conversions["numeraire"] = {"converted": cw, "replayed": replay(spec, cw)}
    if cone.witness is not None:
        cw = _cone_to_numeraire(spec, cone.witness)
        conversions["cone"] = {"converted": cw, "replayed": replay(spec, cw)}
    if surplus.witness is not None:
        cw = _surplus_to_numeraire(spec, surplus.witness)
        conversions["surplus_invariant"] = {"converted": cw, "replayed": cw is not None and replay(spec, cw)}
    return {
        "family": spec.family,
        "numeraire_invariant": nu,
        "cone": cone,
        "surplus_invariant": surplus,
        "consistent": nu.holds == (cone.holds and surplus.holds),
        "conversions": conversions,
    }


# --------------------------------------------------------------------------
# arbitrage
# --------------------------------------------------------------------------


def risk_value(measure: str, x: np.ndarray, probs: np.ndarray, alpha: float) -> float:
    law = Law.from_atoms(x, probs)
    m = measure.upper()
    if m == "VAR":
        return float(law_var(law, alpha))
    if m == "ES":
        return float(law_es(law, alpha))
    raise ValueError(f"measure must be 'VaR' or 'ES', got {measure!r}")


@dataclass(frozen=True)
class ArbitrageWitness:
    X: RandVar
    R: RescalingFactor
    rho_before: float
    rho_after: float
    measure: str
    alpha: float

    def to_json(self) -> dict:
        return {
            "X": self.X.tolist(),
            "R": self.R.tolist(),
            "rho_before": self.rho_before,
            "rho_after": self.rho_after,
            "measure": self.measure,
            "alpha": self.alpha,
        }


def _arbitrage_candidate(rng, n, r, scale=1.0):
    """Random position, a two-atom default with large surplus, or a surplus
    template whose surplus sits where ``R`` is small."""
    u = rng.random()
    if u < 0.3:
        return scale * rng.normal(rng.uniform(-0.5, 1.5), rng.uniform(0.5, 2.0), n)
    x = np.abs(rng.exponential(scale, n)) * rng.uniform(1.0, 10.0)
    k = int(rng.integers(1, min(2, n - 1) + 1)) if n > 1 else 1
    if u < 0.65:
        idx = rng.choice(n, size=k, replace=False)
    else:
        # default where R is large, surplus where R is small
        idx = np.argsort(-r + 1e-9 * rng.random(n))[:k]
    x[idx] = -scale * rng.uniform(0.1, 2.0, k)
    return x


def arbitrage_search(measure: str, alpha: float, R: RescalingFactor, budget: CheckBudget) -> ArbitrageWitness | None:
    """Search for ``X`` with ``rho(X) <= 0 < rho(RX)`` or the reverse.

    Each candidate is tried as drawn and after scaling its surplus to sit just
    on the acceptable side of ``rho = 0``, which is where the surplus term of
    ES moves most under rescaling.  Returns the first witness in shard order.
    """
    from .risk_measures import _check_alpha

    alpha = _check_alpha(alpha)
    space = R.space
    p = space.probs
    r = R.rate.values
    n = space.n

    def rho(x):
        return risk_value(measure, x, p, alpha)

    def found(x):
        a, b = rho(x), rho(r * x)
        if (a <= 0 < b) or (b <= 0 < a):
            return ArbitrageWitness(RandVar(x, space), R, a, b, measure, alpha)
        return None

    def tuned(x):
        pos, neg = np.maximum(x, 0.0), np.minimum(x, 0.0)
        if not pos.any() or not neg.any():
            return None
        f = lambda s: rho(neg + s * pos)  # noqa: E731, decreasing in s
        lo, hi = 0.0, 1.0
        while f(hi) > 0:
            hi *= 2.0
            if hi > 1e8:
                return None
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        # step a little inside the acceptable region, away from the boundary
        return neg + hi * (1.0 + 1e-6) * pos

    def work(rng, count):
        for k in range(count):
            x = _arbitrage_candidate(rng, n, r)
            hit = found(x)
            if hit is None:
                xt = tuned(x)
                hit = None if xt is None else found(xt)
            if hit is not None:
                return k + 1, hit
        return count, None

    _, wit = run_sharded(budget, 8, work)
    return wit


def translate_set(spec: AcceptanceSpec, R: RescalingFactor):
    """Membership predicate of ``R A``: ``Y`` is accepted iff ``Y / R`` is."""
    def member(Y: RandVar) -> bool:
        return accepts(spec, Y / R.rate)

    return member
