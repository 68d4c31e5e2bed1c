"""Value-at-Risk, Expected Shortfall and shortfall-risk functionals.

Conventions: ``X`` is a capital position (positive is good), so
``VaR_a(X) = inf{t : P(X + t < 0) <= a}`` and ``ES_a(X)`` is the average of
``VaR_b(X)`` over ``b`` in ``(0, a]``.  On a finite space ``b -> VaR_b(X)``
is a right-continuous step function whose jumps sit at the cumulative
masses of the sorted atoms, so both functionals are evaluated exactly from
the atom table without quadrature.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from .errors import AlphaOutOfRange
from .prob_core import Law, RandVar, neg_part, pos_part

__all__ = [
    "LossFunction",
    "Power",
    "Exponential",
    "var",
    "es",
    "expected_tail_loss",
    "es_split",
    "shortfall_risk",
    "es_dual_maximizer",
    "law_var",
    "law_es",
    "law_var_integral",
]


def _check_alpha(alpha: float) -> float:
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    return a


def _law(X) -> Law:
    return X if isinstance(X, Law) else X.law()


def law_var(law: Law, alpha):
    """VaR of a :class:`Law`, vectorised over ``alpha``.

    A level equal to a rounded cumulative mass is compared with the exact
    mass, so ``VaR_a(X) <= 0`` matches ``P(X < 0) <= a`` exactly.
    """
    m = law.values.size
    a = np.asarray(alpha, dtype=float)
    k = np.atleast_1d(np.searchsorted(law.below[:m], a, side="right") - 1)
    flat = np.atleast_1d(a)
    tie = law.below[k] == flat
    # only a tie with a rounded-down mass can put the exact mass above alpha
    for j in np.flatnonzero(tie & law.rounded_down()[k]) if tie.any() else ():
        level = Fraction(float(flat[j]))
        while k[j] > 0 and law.exact_below(int(k[j])) > level:
            k[j] -= 1
    out = 0.0 - law.values[k]  # no negative zero
    return out.reshape(a.shape) if np.ndim(alpha) else float(out[0])


def _integral_table(law: Law):
    if law._cum is None:
        pieces = -law.values * np.diff(law.below)
        law._cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return law._cum


def law_var_integral(law: Law, alpha):
    """``int_0^alpha VaR_b db``; exact piecewise-linear evaluation.

    Valid for ``alpha`` in ``[0, 1]``; ``alpha = 1`` gives ``E[-X]``.
    """
    m = law.values.size
    cum = _integral_table(law)
    if np.ndim(alpha) == 0:
        a = float(alpha)
        k = min(max(int(np.searchsorted(law.below[:m], a, side="right")) - 1, 0), m - 1)
        return float(cum[k] - law.values[k] * (a - law.below[k]))
    a = np.asarray(alpha, dtype=float)
    # below[0] == 0, so k >= 0 for every alpha >= 0 and k <= m - 1 always
    k = np.maximum(np.searchsorted(law.below[:m], a, side="right") - 1, 0)
    return cum[k] - law.values[k] * (a - law.below[k])


def law_es(law: Law, alpha):
    a = np.asarray(alpha, dtype=float)
    out = law_var_integral(law, a) / a
    return out if np.ndim(alpha) else float(out)


def var(X: RandVar, alpha: float) -> float:
    """Value-at-Risk at level ``alpha``; the infimum is attained."""
    return law_var(_law(X), _check_alpha(alpha))


def es(X: RandVar, alpha: float) -> float:
    """Expected Shortfall at level ``alpha``."""
    a = _check_alpha(alpha)
    return law_var_integral(_law(X), a) / a


def expected_tail_loss(X: RandVar, alpha: float) -> float:
    """``ES_alpha(-X^-)``."""
    return es(-neg_part(X), alpha)


def es_split(X: RandVar, alpha: float) -> tuple[float, float]:
    """Split ``ES_alpha(X)`` into its default and surplus contributions.

    Returns ``(left, right)`` with ``left`` the VaR integral of ``-X^-`` over
    ``(0, P(X<0))`` and ``right`` that of ``X^+`` over ``(P(X<0), alpha)``,
    both divided by ``alpha``.  When ``P(X<0) > alpha`` the surplus interval
    is empty and ``(es(X, alpha), 0.0)`` is returned.
    """
    a = _check_alpha(alpha)
    p0 = X.space.prob(X.values < 0)
    if p0 > a:
        return es(X, a), 0.0
    left = law_var_integral(_law(-neg_part(X)), p0) / a
    plus = _law(pos_part(X))
    right = (law_var_integral(plus, a) - law_var_integral(plus, p0)) / a
    return left, right


@dataclass(frozen=True)
class LossFunction:
    """Base for loss functions ``l: R+ -> R+`` with ``l(0) = 0``."""

    def __call__(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(obj: dict) -> "LossFunction":
        kind = str(obj.get("kind", "")).lower()
        if kind == "power":
            return Power(float(obj.get("p", 2.0)))
        if kind == "exponential":
            return Exponential(float(obj.get("k", 1.0)))
        raise ValueError(f"unknown loss family {obj.get('kind')!r}")


@dataclass(frozen=True)
class Power(LossFunction):
    """``l(x) = x**p`` with ``p >= 1``."""

    p: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p >= 1.0):
            raise ValueError(f"power loss needs p >= 1, got {self.p!r}")

    def __call__(self, x):
        return np.power(x, self.p)

    def inverse(self, y):
        return np.power(y, 1.0 / self.p)

    def derivative(self, x):
        return self.p * np.power(x, self.p - 1.0)

    def to_json(self):
        return {"kind": "power", "p": self.p}


@dataclass(frozen=True)
class Exponential(LossFunction):
    """``l(x) = exp(k x) - 1`` with ``k > 0``."""

    k: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise ValueError(f"exponential loss needs k > 0, got {self.k!r}")

    def __call__(self, x):
        with np.errstate(over="ignore"):
            return np.expm1(self.k * np.asarray(x, dtype=float))

    def inverse(self, y):
        return np.log1p(y) / self.k

    def derivative(self, x):
        with np.errstate(over="ignore"):
            return self.k * np.exp(self.k * np.asarray(x, dtype=float))

    def to_json(self):
        return {"kind": "exponential", "k": self.k}


def shortfall_risk(X: RandVar, ell: LossFunction) -> float:
    """``E[l(X^-)]``."""
    d = np.maximum(-X.values, 0.0)
    return math.fsum(X.space.probs * ell(d))


def es_dual_maximizer(X: RandVar, alpha: float) -> RandVar:
    """Density ``Z*`` in ``Q_alpha`` attaining ``ES_alpha(X) = E[-X Z*]``.

    ``Z* = (1_{X<q} + kappa 1_{X=q}) / alpha`` with ``q`` the lower
    ``alpha``-quantile (smallest ``q`` with ``P(X <= q) >= alpha``).
    """
    a = _check_alpha(alpha)
    law = _law(X)
    upto = law.below[1:]
    j = int(np.searchsorted(upto, a, side="left"))
    j = min(j, law.values.size - 1)
    q = law.values[j]
    below_q = law.below[j]
    at_q = X.space.prob(X.values == q)
    kappa = (a - below_q) / at_q
    kappa = min(max(kappa, 0.0), 1.0)
    z = np.where(X.values < q, 1.0, np.where(X.values == q, kappa, 0.0)) / a
    return RandVar(z, X.space)
