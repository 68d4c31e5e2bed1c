"""Finite probability spaces, capital positions and events.

Every outcome carries strictly positive mass, so "almost surely" and
"everywhere" coincide and no null-set bookkeeping is needed.  Probability
masses are always added with :func:`math.fsum` (or an equivalent exact
accumulation), which makes every mass computation independent of summation
order: ``P(X < 0)`` computed from a mask and the same quantity read off a
sorted cumulative table are bit-identical.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import NonPositiveProbability, ProbabilitySumMismatch, SpaceMismatch

__all__ = [
    "OutcomeSpace",
    "RandVar",
    "Event",
    "Law",
    "make_space",
    "uniform_space",
    "pos_part",
    "neg_part",
    "restrict",
    "expectation",
    "cdf",
    "cdf_strict",
    "dominates_ae",
    "constant",
    "indicator",
    "same_space",
]

SUM_TOL = 1e-9


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


class OutcomeSpace:
    """Finite outcome set with strictly positive probabilities.

    Use :func:`make_space` to build one from raw input.  ``labels`` are
    cosmetic (used by scenario files) and do not take part in equality.
    """

    __slots__ = ("probs", "labels", "_key")

    def __init__(self, probs, labels=None):
        p = _frozen(probs)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("an outcome space needs at least one outcome")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise NonPositiveProbability(f"probabilities must be > 0, got {p.tolist()}")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ProbabilitySumMismatch(f"probabilities sum to {math.fsum(p)!r}, expected 1")
        self.probs = p
        if labels is None:
            labels = tuple(f"w{i + 1}" for i in range(p.size))
        self.labels = tuple(str(s) for s in labels)
        if len(self.labels) != p.size:
            raise ValueError("one label per outcome is required")
        self._key = p.tobytes()

    @property
    def n(self) -> int:
        return int(self.probs.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, OutcomeSpace):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"OutcomeSpace({self.probs.tolist()})"

    def prob(self, mask) -> float:
        """Mass of a boolean mask over outcomes."""
        return math.fsum(self.probs[np.asarray(mask, dtype=bool)])

    def prob_le(self, mask, bound: float) -> bool:
        """Exact test of ``P(mask) <= bound`` for the float atom masses.

        The rounded sum can only tie with ``bound`` when the exact sum lies
        above it, so ties are settled in rationals.
        """
        m = self.probs[np.asarray(mask, dtype=bool)]
        s = math.fsum(m)
        if s != bound:
            return s < bound
        return sum(map(Fraction, m.tolist()), Fraction(0)) <= Fraction(bound)

    def randvar(self, values) -> "RandVar":
        return RandVar(values, self)

    def event(self, members) -> "Event":
        """Event from a boolean mask or an iterable of outcome indices."""
        return Event.from_any(members, self)

    @property
    def omega(self) -> "Event":
        return Event(np.ones(self.n, dtype=bool), self)

    @property
    def empty(self) -> "Event":
        return Event(np.zeros(self.n, dtype=bool), self)

    def events(self):
        """Iterate over all 2**n events (including the empty one)."""
        n = self.n
        bits = np.arange(n)
        for code in range(1 << n):
            yield Event(((code >> bits) & 1).astype(bool), self)


def make_space(probs: Sequence[float], normalize: bool = False, labels=None) -> OutcomeSpace:
    """Validate probabilities and build an :class:`OutcomeSpace`.

    Sums off by more than ``1e-9`` are rejected unless ``normalize`` is set,
    in which case the vector is rescaled.  Sums within ``1e-12`` are stored
    verbatim so that scenario files round-trip bit-for-bit.
    """
    p = np.array(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("an outcome space needs at least one outcome")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise NonPositiveProbability(f"probabilities must be > 0, got {p.tolist()}")
    total = math.fsum(p)
    if abs(total - 1.0) > SUM_TOL and not normalize:
        raise ProbabilitySumMismatch(f"probabilities sum to {total!r}, expected 1")
    if abs(total - 1.0) > 1e-12:
        p = p / total
    return OutcomeSpace(p, labels=labels)


def uniform_space(n: int) -> OutcomeSpace:
    return make_space(np.full(n, 1.0 / n), normalize=True)


def same_space(a: OutcomeSpace, b: OutcomeSpace) -> bool:
    return a is b or a == b


def _check_space(a: OutcomeSpace, b: OutcomeSpace):
    if not same_space(a, b):
        raise SpaceMismatch(f"objects live on different outcome spaces: {a!r} vs {b!r}")


class RandVar:
    """A real value per outcome; immutable.

    Arithmetic with scalars and with random variables on the same space is
    pointwise.
    """

    __slots__ = ("values", "space")

    def __init__(self, values, space: OutcomeSpace):
        v = _frozen(values)
        if v.shape != (space.n,):
            raise ValueError(f"expected {space.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("random variable values must be finite")
        self.values = v
        self.space = space

    def __repr__(self):
        return f"RandVar({self.values.tolist()})"

    def __len__(self):
        return self.space.n

    def __iter__(self):
        return iter(self.values.tolist())

    def tolist(self) -> list:
        return self.values.tolist()

    def _other(self, other):
        if isinstance(other, RandVar):
            _check_space(self.space, other.space)
            return other.values
        if isinstance(other, Event):
            _check_space(self.space, other.space)
            return other.mask.astype(float)
        return float(other)

    def __add__(self, other):
        return RandVar(self.values + self._other(other), self.space)

    __radd__ = __add__

    def __sub__(self, other):
        return RandVar(self.values - self._other(other), self.space)

    def __rsub__(self, other):
        return RandVar(self._other(other) - self.values, self.space)

    def __mul__(self, other):
        return RandVar(self.values * self._other(other), self.space)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RandVar(self.values / self._other(other), self.space)

    def __neg__(self):
        return RandVar(-self.values, self.space)

    def __eq__(self, other):
        if not isinstance(other, RandVar):
            return NotImplemented
        return same_space(self.space, other.space) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.space, self.values.tobytes()))

    def __lt__(self, other) -> "Event":
        return Event(self.values < self._other(other), self.space)

    def __le__(self, other) -> "Event":
        return Event(self.values <= self._other(other), self.space)

    def __gt__(self, other) -> "Event":
        return Event(self.values > self._other(other), self.space)

    def __ge__(self, other) -> "Event":
        return Event(self.values >= self._other(other), self.space)

    # convenience accessors
    @property
    def pos(self) -> "RandVar":
        return pos_part(self)

    @property
    def neg(self) -> "RandVar":
        return neg_part(self)

    def law(self) -> "Law":
        return Law.from_atoms(self.values, self.space.probs)


class Event:
    """Boolean mask over the outcomes of a space."""

    __slots__ = ("mask", "space")

    def __init__(self, mask, space: OutcomeSpace):
        m = _frozen(mask, dtype=bool)
        if m.shape != (space.n,):
            raise ValueError(f"expected {space.n} flags, got shape {m.shape}")
        self.mask = m
        self.space = space

    @classmethod
    def from_any(cls, members, space: OutcomeSpace) -> "Event":
        if isinstance(members, Event):
            _check_space(members.space, space)
            return members
        arr = np.asarray(list(members) if not isinstance(members, np.ndarray) else members)
        if arr.dtype == bool:
            return cls(arr, space)
        mask = np.zeros(space.n, dtype=bool)
        if arr.size:
            idx = arr.astype(int)
            if np.any(idx < 0) or np.any(idx >= space.n):
                raise IndexError(f"outcome index out of range for {space.n} outcomes")
            mask[idx] = True
        return cls(mask, space)

    def __repr__(self):
        return f"Event({self.indices})"

    @property
    def indices(self) -> list:
        return np.flatnonzero(self.mask).tolist()

    @property
    def prob(self) -> float:
        return self.space.prob(self.mask)

    @property
    def complement(self) -> "Event":
        return Event(~self.mask, self.space)

    def __invert__(self):
        return self.complement

    def __and__(self, other):
        _check_space(self.space, other.space)
        return Event(self.mask & other.mask, self.space)

    def __or__(self, other):
        _check_space(self.space, other.space)
        return Event(self.mask | other.mask, self.space)

    def __sub__(self, other):
        _check_space(self.space, other.space)
        return Event(self.mask & ~other.mask, self.space)

    def __eq__(self, other):
        if not isinstance(other, Event):
            return NotImplemented
        return same_space(self.space, other.space) and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.space, self.mask.tobytes()))

    def __len__(self):
        return int(self.mask.sum())

    def __contains__(self, i):
        return bool(self.mask[i])

    def indicator(self) -> RandVar:
        return RandVar(self.mask.astype(float), self.space)


def constant(space: OutcomeSpace, m: float) -> RandVar:
    return RandVar(np.full(space.n, float(m)), space)


def indicator(event: Event) -> RandVar:
    return event.indicator()


def pos_part(X: RandVar) -> RandVar:
    return RandVar(np.maximum(X.values, 0.0), X.space)


def neg_part(X: RandVar) -> RandVar:
    return RandVar(np.maximum(-X.values, 0.0), X.space)


def restrict(X: RandVar, E: Event) -> RandVar:
    """``1_E X``: values kept on ``E`` and set to zero elsewhere."""
    _check_space(X.space, E.space)
    return RandVar(np.where(E.mask, X.values, 0.0), X.space)


def expectation(X: RandVar) -> float:
    return math.fsum(X.values * X.space.probs)


def cdf(X: RandVar, t: float) -> float:
    """``P(X <= t)``."""
    return X.space.prob(X.values <= t)


def cdf_strict(X: RandVar, t: float) -> float:
    """``P(X < t)``, the left limit of :func:`cdf` at ``t``."""
    return X.space.prob(X.values < t)


def dominates_ae(X: RandVar, Y: RandVar) -> bool:
    """True iff ``X >= Y`` at every outcome."""
    _check_space(X.space, Y.space)
    return bool(np.all(X.values >= Y.values))


def exact_prefix_sums(masses: Iterable[float]) -> np.ndarray:
    """Correctly rounded running sums ``[0, m0, m0+m1, ...]``.

    Each entry equals ``math.fsum`` of the corresponding prefix, so prefix
    sums agree bit-for-bit with masks evaluated through ``OutcomeSpace.prob``.
    """
    m = np.asarray(list(masses) if not isinstance(masses, np.ndarray) else masses, dtype=float)
    # floats are dyadic: scale to a common power of two and sum in integers;
    # int / int true division rounds correctly
    ratios = [v.as_integer_ratio() for v in m.tolist()]
    shift = max((d.bit_length() - 1 for _, d in ratios), default=0)
    den = 1 << shift
    acc = 0
    out = [0.0]
    for num, d in ratios:
        acc += num << (shift - d.bit_length() + 1)
        out.append(acc / den)
    return np.array(out)


class Law:
    """Distribution of a finite random variable as a sorted atom table.

    ``values`` are the distinct atoms in increasing order and ``below[k]``
    is ``P(X < values[k])`` (so ``below[0] == 0``); ``below`` has one extra
    trailing entry equal to the total mass (1 up to rounding).

    Laws built from atoms keep the sorted atom masses so that comparisons
    which tie in floating point can be settled exactly (:meth:`exact_below`).
    """

    __slots__ = ("values", "below", "_masses", "_starts", "_exact", "_low", "_cum")

    def __init__(self, values: np.ndarray, below: np.ndarray, masses=None, starts=None):
        self.values = values
        self.below = below
        self._masses = masses
        self._starts = starts
        self._exact = None
        self._low = None
        self._cum = None

    @classmethod
    def from_atoms(cls, values, probs) -> "Law":
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        order = np.argsort(values, kind="stable")
        v = values[order]
        p = probs[order]
        first = np.empty(v.size, dtype=bool)
        first[:1] = True
        np.not_equal(v[1:], v[:-1], out=first[1:])
        starts = np.append(np.flatnonzero(first), v.size)
        return cls(v[first], exact_prefix_sums(p)[starts], p, starts)

    def exact_below(self, k: int) -> Fraction:
        """``P(X < values[k])`` in rationals; ``k == len(values)`` gives 1.

        The total mass of a probability space is 1 by definition even when
        the float atom masses sum to 1 only up to rounding.  Step laws have
        no atoms and their float levels are taken as exact.
        """
        if k >= self.values.size:
            return Fraction(1)
        if self._masses is None:
            return Fraction(float(self.below[k]))
        if self._exact is None:
            acc = Fraction(0)
            run = [acc]
            for m in self._masses.tolist():
                acc += Fraction(m)
                run.append(acc)
            self._exact = [run[i] for i in self._starts]
        return self._exact[k]

    def rounded_down(self) -> np.ndarray:
        """Mask over ``values``: the float ``below[k]`` is less than the exact mass."""
        if self._low is None:
            m = self.values.size
            if self._masses is None:
                self._low = np.zeros(m, dtype=bool)
            else:
                self._low = np.array([self.exact_below(k) > Fraction(float(self.below[k])) for k in range(m)],
                                     dtype=bool)
        return self._low

    @classmethod
    def from_steps(cls, breakpoints, levels) -> "Law":
        b = np.asarray(breakpoints, dtype=float)
        below = np.concatenate([[0.0], np.asarray(levels, dtype=float)])
        return cls(b, below)

    def cdf(self, t: float) -> float:
        k = int(np.searchsorted(self.values, t, side="right"))
        return float(self.below[k]) if k < self.values.size else float(self.below[-1])

    def cdf_strict(self, t: float) -> float:
        k = int(np.searchsorted(self.values, t, side="left"))
        return float(self.below[k]) if k < self.values.size else float(self.below[-1])
