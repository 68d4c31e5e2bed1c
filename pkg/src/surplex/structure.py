"""Structural decomposition of surplus-invariant acceptance sets.

Every closed convex surplus-invariant acceptance set on a finite space
splits the outcomes into three groups according to the largest default an
atom can carry on its own (its *cap*):

* ``A`` (cap 0): no default allowed;
* ``B`` (finite positive cap): default allowed but jointly controlled;
* ``C`` (infinite cap): unconstrained.

Membership then reads ``X >= 0 on A`` and ``-1_B X^- in A``, with the
behaviour on ``C`` irrelevant.  :func:`decompose` computes the caps and
verifies that reconstruction on random positions.

The module also provides the lower support function ``sigma(Z) = inf_{X in
A} E[XZ]`` in closed form for every family and the dual membership test
``-E[X^- Z] >= sigma(Z)`` over a grid of directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _lp
from .acceptance import (
    AcceptanceSpec,
    CheckBudget,
    EsConstructed,
    ExpectedShortfall,
    ExpectedTailLoss,
    REPLAYERS,
    MemberSampler,
    PolyhedralSolid,
    Shortfall,
    TestScenario,
    VaRLevel,
    Verdict,
    Witness,
    accepts,
    check_cone,
    check_convex,
    check_surplus_invariant,
    family_scale,
    ray_sup,
    resolve_space,
)
from .errors import (
    DecompositionMismatch,
    NegativeDualDirection,
    NotCoherent,
    PCFull,
    ScenarioExtractionMismatch,
    UnsupportedFamily,
)
from .prob_core import Event, Law, OutcomeSpace, RandVar, same_space
from .risk_measures import Exponential, Power, es_dual_maximizer, law_var_integral

__all__ = [
    "Partition",
    "SupportEvaluation",
    "DualVerdict",
    "atom_default_cap",
    "default_caps",
    "decompose",
    "predict_membership",
    "recession_membership",
    "coherent_scenario_set",
    "support_function",
    "dual_membership_check",
    "default_dual_grid",
    "refined_dual_grid",
]

CAP_MAX = 1e12
CAP_FLOOR = 1e-12
CAP_RTOL = 1e-10


@dataclass(frozen=True)
class Partition:
    """Outcome partition ``{A, B, C}`` with the per-atom default caps."""

    A: Event
    B: Event
    C: Event
    caps: np.ndarray
    stats: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = self.A.mask.astype(int) + self.B.mask.astype(int) + self.C.mask.astype(int)
        if not np.all(m == 1):
            raise ValueError("A, B, C must partition the outcome space")

    @classmethod
    def from_caps(cls, caps, space: OutcomeSpace, stats=None) -> "Partition":
        u = np.asarray(caps, dtype=float)
        A = u == 0.0
        C = np.isinf(u)
        return cls(Event(A, space), Event(~A & ~C, space), Event(C, space), u, dict(stats or {}))

    @property
    def space(self) -> OutcomeSpace:
        return self.A.space

    def to_json(self) -> dict:
        return {
            "A": self.A.indices,
            "B": self.B.indices,
            "C": self.C.indices,
            "caps": ["inf" if math.isinf(u) else float(u) for u in self.caps],
            "P(C)": self.C.prob,
            "verification": self.stats,
        }


# --------------------------------------------------------------------------
# caps
# --------------------------------------------------------------------------


def atom_default_cap(spec: AcceptanceSpec, omega: int, cap_max: float = CAP_MAX,
                     space: OutcomeSpace | None = None) -> float:
    """``sup{d >= 0 : -d 1_omega in A}``, with ``inf`` for unbounded.

    TestScenario, VaRLevel and PolyhedralSolid are decided symbolically;
    other families use doubling from 1 up to ``cap_max`` followed by
    bisection to relative tolerance 1e-10 (the returned value is accepted).
    """
    space = resolve_space(spec, space)
    if not 0 <= omega < space.n:
        raise IndexError(f"outcome {omega} out of range")
    if isinstance(spec, TestScenario):
        return 0.0 if spec.event.mask[omega] else math.inf
    if isinstance(spec, VaRLevel):
        return math.inf if space.probs[omega] <= spec.alpha else 0.0
    if isinstance(spec, PolyhedralSolid):
        return float(max(0.0, np.max(-spec.matrix[:, omega])))
    e = np.zeros(space.n)
    e[omega] = 1.0
    return ray_sup(lambda v: spec.contains(v, space), e, cap_max=cap_max, rel_tol=CAP_RTOL, floor=CAP_FLOOR)


def default_caps(spec: AcceptanceSpec, cap_max: float = CAP_MAX, space: OutcomeSpace | None = None) -> np.ndarray:
    space = resolve_space(spec, space)
    return np.array([atom_default_cap(spec, i, cap_max, space) for i in range(space.n)])


def predict_membership(spec: AcceptanceSpec, partition: Partition, X: RandVar) -> bool:
    """Membership implied by the partition: ``X >= 0 on A`` and
    ``-1_B X^-`` accepted; values on ``C`` are ignored."""
    x = X.values
    if np.any(x[partition.A.mask] < 0):
        return False
    y = np.where(partition.B.mask, np.minimum(x, 0.0), 0.0)
    return bool(spec.contains(y, X.space))


def _verification_positions(spec, space, budget: CheckBudget):
    rng = np.random.default_rng(np.random.SeedSequence([budget.seed & (2**64 - 1), 0xDE]))
    sampler = MemberSampler(spec, space, rng)
    n = space.n
    yield from (np.where(np.arange(n) == i, -1.0, 0.0) * sampler.scale for i in range(n))
    yield -np.ones(n) * sampler.scale
    for _ in range(budget.samples):
        yield sampler.draw() if rng.random() < 0.5 else sampler.draw_any()


def decompose(spec: AcceptanceSpec, cap_max: float = CAP_MAX, verify_budget: CheckBudget | None = None,
              space: OutcomeSpace | None = None) -> Partition:
    """Cap trichotomy plus a reconstruction check.

    Raises :class:`DecompositionMismatch` (with the offending position) when
    ``accepts`` disagrees with :func:`predict_membership`, which is how
    non-convex or non-surplus-invariant specs show up.  Only after the check
    passes is ``P(C) = 1`` reported as :class:`PCFull`.
    """
    space = resolve_space(spec, space)
    budget = verify_budget or CheckBudget(samples=2000)
    part = Partition.from_caps(default_caps(spec, cap_max, space), space)
    checked = agreed_members = 0
    for x in _verification_positions(spec, space, budget):
        X = RandVar(x, space)
        actual = accepts(spec, X)
        predicted = predict_membership(spec, part, X)
        checked += 1
        if actual != predicted:
            raise DecompositionMismatch(
                f"{spec.family}: accepts={actual} but partition predicts {predicted} for {X.tolist()}",
                witness=X, actual=actual, predicted=predicted, partition=part,
            )
        agreed_members += actual
    stats = {"checked": checked, "members": agreed_members, "mismatches": 0}
    part = Partition(part.A, part.B, part.C, part.caps, stats)
    if part.C.prob >= 1.0:
        raise PCFull(f"{spec.family}: every outcome has an unbounded default cap (P(C) = 1)")
    return part


def recession_membership(spec: AcceptanceSpec, X: RandVar, t_grid=None) -> bool:
    """``t X`` accepted for every ``t`` in the grid (default ``2**0 .. 2**40``)."""
    grid = 2.0 ** np.arange(41) if t_grid is None else np.asarray(t_grid, dtype=float)
    return all(accepts(spec, float(t) * X) for t in grid)


def coherent_scenario_set(spec: AcceptanceSpec, budget: CheckBudget, space: OutcomeSpace | None = None) -> Event:
    """Event ``A`` with ``accepts(X) <=> 1_A X >= 0`` for a coherent spec.

    Conicity, convexity and surplus invariance are checked first
    (:class:`NotCoherent` otherwise); ``A`` is the zero-cap set and the
    equivalence is verified on ``budget.samples`` positions.
    """
    space = resolve_space(spec, space)
    verdicts = {
        "cone": check_cone(spec, budget, space),
        "convex": check_convex(spec, budget, space),
        "surplus_invariant": check_surplus_invariant(spec, budget, space),
    }
    failed = [k for k, v in verdicts.items() if not v.holds]
    if failed:
        raise NotCoherent(f"{spec.family} is not coherent and surplus invariant: {', '.join(failed)} fails",
                          verdicts)
    caps = default_caps(spec, space=space)
    A = Event(caps == 0.0, space)
    if not A.mask.any():
        raise ScenarioExtractionMismatch(f"{spec.family}: no outcome forbids default, so no scenario event exists")
    for x in _verification_positions(spec, space, budget):
        X = RandVar(x, space)
        if accepts(spec, X) != bool(np.all(x[A.mask] >= 0)):
            raise ScenarioExtractionMismatch(
                f"{spec.family}: membership of {X.tolist()} disagrees with scenario set {A.indices}", witness=X)
    return A


# --------------------------------------------------------------------------
# support function
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SupportEvaluation:
    """``sigma = inf_{X in A} E[XZ]`` for a direction ``Z >= 0``.

    ``sigma`` is always ``<= 0`` (the positive cone lies in every set);
    ``Z`` lies in the barrier cone iff ``sigma`` is finite.  This value is
    also the decreasing floor function used by :func:`dual_membership_check`.
    """

    Z: RandVar
    sigma: float

    @property
    def in_barrier_cone(self) -> bool:
        return math.isfinite(self.sigma)


def _sigma_shortfall(spec: Shortfall, z, p):
    loss, c = spec.loss, spec.c
    if isinstance(loss, Power):
        if loss.p == 1.0:
            return -c * float(z.max())
        q = loss.p / (loss.p - 1.0)
        zmax = float(z.max())
        norm_q = zmax * math.fsum(p * (z / zmax) ** q) ** (1.0 / q)
        return -c ** (1.0 / loss.p) * norm_q
    if isinstance(loss, Exponential):
        # optimum D = log(max(eta Z, 1)) / k with sum p (max(eta Z, 1) - 1) = c;
        # the constraint is piecewise linear in eta, so solve it exactly
        order = np.argsort(-z, kind="stable")
        zs, ps = z[order], p[order]
        pz = ps * zs
        for k in range(1, zs.size + 1):
            if zs[k - 1] <= 0:
                break
            eta = (c + math.fsum(ps[:k])) / math.fsum(pz[:k])
            nxt = zs[k] if k < zs.size else 0.0
            if eta * nxt <= 1.0:
                break
        d = np.log(np.maximum(eta * z, 1.0)) / loss.k
        return -math.fsum(p * z * d)
    raise UnsupportedFamily(f"no support function for loss {loss!r}")


def _es_constructed_phi(spec: EsConstructed, beta):
    return law_var_integral(spec.xstar.law(), beta)


def _sigma_es_constructed(spec: EsConstructed, z, p):
    b = ~spec.event.mask
    if spec.alphas is None:
        # the feasible defaults p*D on B form a polymatroid with rank
        # f(S) = Phi(P(S)), Phi(a) = int_0^a VaR_u(X*) du; greedy is optimal
        idx = np.flatnonzero(b)
        order = idx[np.argsort(-z[idx], kind="stable")]
        masses = np.array([math.fsum(p[order[:k]]) for k in range(order.size + 1)])
        phi = np.asarray(_es_constructed_phi(spec, np.minimum(masses, 1.0)), dtype=float)
        return -math.fsum(z[order] * np.diff(phi))
    return _sigma_es_grid_lp(spec, z, p)


def _sigma_es_grid_lp(spec: EsConstructed, z, p):
    """LP for the grid-restricted set: for each level a,
    ``a s_a + E[(D - s_a)^+] <= Phi(a)`` (Rockafellar-Uryasev form)."""
    from scipy.optimize import linprog

    b = ~spec.event.mask
    n = p.size
    grid = np.array(spec.alphas)
    m = grid.size
    phi = np.asarray(law_var_integral(spec.xstar.law(), grid), dtype=float)
    # variables: D (n), s (m), w (m*n)
    nv = n + m + m * n
    c = np.zeros(nv)
    c[:n] = -p * z
    rows, rhs = [], []
    for j, a in enumerate(grid):
        r = np.zeros(nv)
        r[n + j] = a
        r[n + m + j * n: n + m + (j + 1) * n] = p
        rows.append(r)
        rhs.append(phi[j])
        for i in range(n):
            r = np.zeros(nv)
            r[i] = 1.0
            r[n + j] = -1.0
            r[n + m + j * n + i] = -1.0
            rows.append(r)
            rhs.append(0.0)
    bounds = [(0, None) if b[i] else (0, 0) for i in range(n)] + [(None, None)] * m + [(0, None)] * (m * n)
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status == 3:
        return -math.inf
    if res.status != 0:
        raise RuntimeError(f"support LP failed: {res.message}")
    return float(res.fun)


def support_function(spec: AcceptanceSpec, Z: RandVar, space: OutcomeSpace | None = None) -> SupportEvaluation:
    """Closed-form ``inf_{X in A} E[XZ]`` for ``Z >= 0``."""
    space = resolve_space(spec, space if space is not None else Z.space)
    if not same_space(space, Z.space):
        raise ValueError("direction lives on a different space")
    z = Z.values
    if np.any(z < 0):
        raise NegativeDualDirection(f"dual directions must be >= 0, got {Z.tolist()}")
    p = space.probs
    if not np.any(z > 0):
        return SupportEvaluation(Z, 0.0)
    if isinstance(spec, TestScenario):
        sigma = 0.0 if not np.any(z[~spec.event.mask] > 0) else -math.inf
    elif isinstance(spec, VaRLevel):
        sigma = -math.inf if np.any((z > 0) & (p <= spec.alpha)) else 0.0
    elif isinstance(spec, ExpectedShortfall):
        ez = math.fsum(p * z)
        sigma = 0.0 if np.all(spec.alpha * z <= ez * (1 + 1e-12)) else -math.inf
    elif isinstance(spec, Shortfall):
        sigma = _sigma_shortfall(spec, z, p)
    elif isinstance(spec, ExpectedTailLoss):
        sigma = -spec.c * max(math.fsum(p * z), spec.alpha * float(z.max()))
    elif isinstance(spec, EsConstructed):
        sigma = _sigma_es_constructed(spec, z, p)
    elif isinstance(spec, PolyhedralSolid):
        sigma = float(min(math.fsum(p * g * z) for g in spec.matrix))
    else:
        raise UnsupportedFamily(f"no support function for {type(spec).__name__}")
    return SupportEvaluation(Z, min(sigma, 0.0) if sigma == sigma else sigma)


# --------------------------------------------------------------------------
# dual membership
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DualVerdict(Verdict):
    """Verdict of the dual inequalities plus the primal answer.

    ``min_slack`` is the smallest ``-E[X^- Z] - sigma(Z)`` over the grid
    (``inf`` when every direction lies outside the barrier cone) and
    ``worst`` the direction attaining it.
    """

    accepted: bool = False
    min_slack: float = math.inf
    worst: RandVar | None = None

    @property
    def agrees(self) -> bool:
        return self.holds == self.accepted


def default_dual_grid(space: OutcomeSpace, seed: int = 0, n_random: int = 64) -> list:
    """Indicators of atoms and pairs, the constant 1, and random positive
    directions."""
    n = space.n
    eye = np.eye(n)
    grid = [RandVar(eye[i], space) for i in range(n)]
    grid += [RandVar(eye[i] + eye[j], space) for i, j in combinations(range(n), 2)]
    grid.append(RandVar(np.ones(n), space))
    rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), 0xD0]))
    grid += [RandVar(rng.exponential(1.0, n), space) for _ in range(n_random)]
    return grid


def refined_dual_grid(spec: AcceptanceSpec, X: RandVar, seed: int = 0) -> list:
    """Default grid plus directions adapted to ``X``: ``X^-``, the loss
    gradient at ``X^-``, the ES maximiser at ``-X^-``, every subset
    indicator for small spaces and, for polyhedral sets, the LP separating
    direction."""
    space = X.space
    grid = default_dual_grid(space, seed)
    d = np.maximum(-X.values, 0.0)
    if d.any():
        grid.append(RandVar(d, space))
        negx = RandVar(-d, space)
        if isinstance(spec, Shortfall):
            grid.append(RandVar(spec.loss.derivative(d) * (d > 0), space))
        alpha = getattr(spec, "alpha", None)
        for a in ([alpha] if alpha else []) + (list(ES_LEVELS) if isinstance(spec, EsConstructed) else []):
            grid.append(es_dual_maximizer(negx, a))
        if isinstance(spec, EsConstructed):
            y = RandVar(np.where(spec.event.mask, 0.0, -d), space)
            for a in np.unique(np.concatenate([y.law().below[1:-1], spec.xstar.law().below[1:-1]])):
                if 0 < a < 1:
                    grid.append(es_dual_maximizer(y, float(a)))
        if isinstance(spec, PolyhedralSolid):
            z, gap = _lp.separating_direction(spec.matrix, -d, space.probs)
            if z is not None and z.any():
                grid.append(RandVar(z, space))
    if space.n <= 10:
        bits = np.arange(space.n)
        for code in range(1, 1 << space.n):
            grid.append(RandVar(((code >> bits) & 1).astype(float), space))
    return grid


ES_LEVELS = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99)


def _sigma_batch(spec: AcceptanceSpec, Zm: np.ndarray, space: OutcomeSpace) -> np.ndarray:
    """Support values for the rows of ``Zm`` (all rows >= 0)."""
    p = space.probs
    zero = ~np.any(Zm > 0, axis=1)
    if isinstance(spec, Shortfall) and isinstance(spec.loss, Power) and spec.loss.p > 1.0:
        q = spec.loss.p / (spec.loss.p - 1.0)
        zmax = np.where(zero, 1.0, Zm.max(axis=1))
        norm_q = zmax * np.sum(p * (Zm / zmax[:, None]) ** q, axis=1) ** (1.0 / q)
        out = -spec.c ** (1.0 / spec.loss.p) * norm_q
    elif isinstance(spec, ExpectedTailLoss):
        out = -spec.c * np.maximum(Zm @ p, spec.alpha * Zm.max(axis=1))
    elif isinstance(spec, PolyhedralSolid):
        out = np.min(Zm @ (spec.matrix * p).T, axis=1)
    else:
        return np.array([support_function(spec, RandVar(z, space), space).sigma for z in Zm])
    return np.where(zero, 0.0, np.minimum(out, 0.0))


def dual_membership_check(spec: AcceptanceSpec, X: RandVar, Z_grid=None, tol: float = 1e-9) -> DualVerdict:
    """Test ``-E[X^- Z] >= sigma(Z) - tol`` for every grid direction.

    The inequalities are necessary for membership in every surplus-invariant
    set; with a rich enough grid they are also sufficient for the convex
    families.  The verdict carries ``accepts(X)`` for comparison.
    """
    grid = default_dual_grid(X.space) if Z_grid is None else list(Z_grid)
    if not grid:
        raise ValueError("dual grid must be nonempty")
    Zm = np.array([Z.values for Z in grid], dtype=float)
    if np.any(Zm < 0):
        bad = grid[int(np.argmax(np.any(Zm < 0, axis=1)))]
        raise NegativeDualDirection(f"dual directions must be >= 0, got {bad.tolist()}")
    for Z in grid:
        if not same_space(Z.space, X.space):
            raise ValueError("direction lives on a different space")
    space = resolve_space(spec, X.space)
    sigma = _sigma_batch(spec, Zm, space)
    d = np.maximum(-X.values, 0.0)
    slack = -(Zm @ (space.probs * d)) - sigma
    slack = np.where(np.isfinite(sigma), slack, math.inf)
    k = int(np.argmin(slack))
    worst, worst_slack = (grid[k], float(slack[k])) if math.isfinite(slack[k]) else (None, math.inf)
    holds = worst_slack >= -tol
    wit = None if holds else Witness("dual", (), X, {"Z": worst.tolist(), "slack": worst_slack})
    return DualVerdict(holds, wit, len(grid), "dual_membership", accepted=accepts(spec, X),
                       min_slack=worst_slack, worst=worst)


def _replay_dual(spec, w: Witness) -> bool:
    X = w.violator
    Z = RandVar(w.recipe["Z"], X.space)
    sigma = support_function(spec, Z, X.space).sigma
    return -math.fsum(X.space.probs * np.maximum(-X.values, 0.0) * Z.values) < sigma


REPLAYERS["dual"] = _replay_dual
