import math

import numpy as np
import pytest
from conftest import random_space
from hypothesis import given
from hypothesis import strategies as st
from oracles import es_constructed_support_lp, etl_support_lp, power_support_numeric

from surplex.acceptance import (
    AcceptanceSpec,
    CheckBudget,
    EsConstructed,
    ExpectedShortfall,
    ExpectedTailLoss,
    PolyhedralSolid,
    Shortfall,
    TestScenario,
    VaRLevel,
    accepts,
    replay,
)
from surplex.errors import DecompositionMismatch, NegativeDualDirection, NotCoherent, PCFull, ScenarioExtractionMismatch
from surplex.prob_core import RandVar, make_space, uniform_space
from surplex.risk_measures import Exponential, Power
from surplex.structure import (
    Partition,
    atom_default_cap,
    coherent_scenario_set,
    decompose,
    default_dual_grid,
    dual_membership_check,
    predict_membership,
    recession_membership,
    refined_dual_grid,
    support_function,
)

VB = CheckBudget(samples=1500, seed=11)


def test_caps_closed_forms(u4):
    for omega in range(4):
        assert atom_default_cap(Shortfall(Power(2), 1.0), omega) == pytest.approx(2.0, rel=1e-9)
        for c in (0.5, 1.0, 3.0):
            assert atom_default_cap(ExpectedTailLoss(0.3, c), omega, space=u4) == pytest.approx(1.2 * c, rel=1e-9)
    E = u4.event([0, 1])
    assert atom_default_cap(TestScenario(E), 0) == 0.0
    assert atom_default_cap(TestScenario(E), 3) == math.inf


@given(st.data())
def test_caps_random_spaces(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    sp = random_space(rng, int(rng.integers(1, 8)))
    c = float(rng.uniform(0.1, 5.0))
    a = float(rng.uniform(0.05, 0.95))
    for w in range(sp.n):
        p = sp.probs[w]
        assert atom_default_cap(Shortfall(Power(2), c), w, space=sp) == pytest.approx(math.sqrt(c / p), rel=1e-9)
        assert atom_default_cap(Shortfall(Exponential(2.0), c), w, space=sp) == pytest.approx(
            math.log1p(c / p) / 2.0, rel=1e-9)
        assert atom_default_cap(ExpectedTailLoss(a, c), w, space=sp) == pytest.approx(c * a / min(p, a), rel=1e-9)
        assert atom_default_cap(VaRLevel(a), w, space=sp) == (math.inf if p <= a else 0.0)


def test_polyhedral_caps(u4):
    spec = PolyhedralSolid((RandVar([-1, 0, 0, -1], u4), RandVar([0, -2, 0, 0], u4)))
    assert [atom_default_cap(spec, w) for w in range(4)] == [1.0, 2.0, 0.0, 1.0]


def test_cap_bisection_accepted_value(u4):
    spec = Shortfall(Power(2), 1.0)
    u = atom_default_cap(spec, 0)
    assert accepts(spec, RandVar([-u, 0, 0, 0], u4))
    assert not accepts(spec, RandVar([-u * (1 + 1e-9), 0, 0, 0], u4))


def test_decompose_shortfall_and_etl(u4):
    for spec in (Shortfall(Power(2), 1.0), ExpectedTailLoss(0.3, 1.0)):
        part = decompose(spec, verify_budget=VB, space=u4)
        assert part.B.indices == [0, 1, 2, 3] and not part.A.indices and not part.C.indices
        assert part.stats["mismatches"] == 0 and part.stats["checked"] > 1500


def test_decompose_test_scenario(u4):
    part = decompose(TestScenario(u4.event([0, 1])), verify_budget=VB)
    assert part.A.indices == [0, 1] and part.B.indices == [] and part.C.indices == [2, 3]
    assert part.to_json()["caps"] == [0.0, 0.0, "inf", "inf"]


def test_decompose_es_constructed_and_polyhedral(u4):
    sp = EsConstructed(u4.event([0]), RandVar([-2, -1, 0, 0], u4))
    part = decompose(sp, verify_budget=VB)
    assert part.A.indices == [0] and part.B.indices == [1, 2, 3]
    ps = PolyhedralSolid((RandVar([-1, 0, 0, -1], u4), RandVar([0, -2, 0, 0], u4)))
    part = decompose(ps, verify_budget=VB)
    assert part.A.indices == [2] and part.B.indices == [0, 1, 3]


def test_decompose_var_mismatch(u4):
    spec = VaRLevel(0.3)
    with pytest.raises(DecompositionMismatch) as info:
        decompose(spec, verify_budget=VB, space=u4)
    exc = info.value
    # caps are all infinite, so the partition predicts acceptance
    assert exc.partition.C.indices == [0, 1, 2, 3]
    assert exc.predicted and not exc.actual
    assert not accepts(spec, exc.witness)
    assert predict_membership(spec, exc.partition, exc.witness)
    assert not accepts(spec, RandVar([-1, -1, 1, 1], u4))


def test_decompose_es_mismatch(u4):
    with pytest.raises(DecompositionMismatch):
        decompose(ExpectedShortfall(0.3), verify_budget=VB, space=u4)


class Everything(AcceptanceSpec):
    """Accepts every position; not a valid family, used for the P(C) = 1 path."""

    family = "Everything"

    def contains(self, x, space, slack=0.0):
        return True

    def params_json(self):
        return {}


def test_pc_full(u4):
    with pytest.raises(PCFull):
        decompose(Everything(), verify_budget=CheckBudget(50), space=u4)


def test_partition_validation(u4):
    with pytest.raises(ValueError):
        Partition(u4.event([0]), u4.event([0]), u4.event([1, 2, 3]), np.zeros(4))


def test_recession(u4):
    assert recession_membership(Shortfall(Power(2), 1), RandVar([0, 1, 2, 3], u4))
    assert not recession_membership(Shortfall(Power(2), 1), RandVar([-1, 2, 3, 4], u4))
    assert recession_membership(TestScenario(u4.event([0, 1])), RandVar([0, 0, -1, -1], u4))
    rng = np.random.default_rng(0)
    for spec in (Shortfall(Power(2), 1), ExpectedTailLoss(0.3, 1)):
        for _ in range(200):
            X = RandVar(rng.normal(0.5, 1, 4), u4)
            if recession_membership(spec, X):
                assert np.all(X.values >= 0)


def test_coherent_scenario_set(u4):
    E = u4.event([0, 2])
    assert coherent_scenario_set(TestScenario(E), CheckBudget(800, 1)) == E
    assert coherent_scenario_set(TestScenario(u4.omega), CheckBudget(500, 1)) == u4.omega
    with pytest.raises(NotCoherent) as info:
        coherent_scenario_set(Shortfall(Power(2), 1), CheckBudget(500, 1), u4)
    assert not info.value.verdicts["cone"].holds


def test_coherent_scenario_set_empty_event(u4):
    with pytest.raises(ScenarioExtractionMismatch):
        coherent_scenario_set(Everything(), CheckBudget(300, 1), u4)
    with pytest.raises(NotCoherent) as info:
        coherent_scenario_set(VaRLevel(0.6), CheckBudget(300, 1), make_space([0.5, 0.5]))
    assert not info.value.verdicts["convex"].holds


def test_support_examples(u4):
    sf = Shortfall(Power(2), 1)
    assert support_function(sf, RandVar([1, 1, 1, 1], u4)).sigma == pytest.approx(-1.0, abs=1e-12)
    ts = TestScenario(u4.event([0, 1]))
    assert support_function(ts, RandVar([1, 0, 0, 0], u4)).sigma == 0
    assert support_function(ts, RandVar([0, 0, 1, 0], u4)).sigma == -math.inf
    assert not support_function(ts, RandVar([0, 0, 1, 0], u4)).in_barrier_cone
    for spec in (sf, ts, VaRLevel(0.3), ExpectedTailLoss(0.3, 1), ExpectedShortfall(0.3)):
        assert support_function(spec, RandVar([0, 0, 0, 0], u4), u4).sigma == 0
    with pytest.raises(NegativeDualDirection):
        support_function(sf, RandVar([1, -1, 0, 0], u4))


@given(st.data())
def test_support_against_oracles(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    n = int(rng.integers(1, 7))
    sp = random_space(rng, n)
    z = rng.exponential(1.0, n) * (rng.random(n) < 0.8) + 1e-3
    Z = RandVar(z, sp)
    c = float(rng.uniform(0.2, 3.0))
    a = float(rng.uniform(0.05, 0.95))
    for power in (1.5, 2.0, 3.0):
        got = support_function(Shortfall(Power(power), c), Z, sp).sigma
        assert got == pytest.approx(power_support_numeric(z, sp.probs, power, c), rel=1e-9)
    got = support_function(ExpectedTailLoss(a, c), Z, sp).sigma
    assert got == pytest.approx(etl_support_lp(z, sp.probs, a, c), rel=1e-7, abs=1e-9)
    a_mask = rng.random(n) < 0.3
    xstar = -np.round(rng.exponential(1.0, n), 2)
    spec = EsConstructed(sp.event(a_mask), RandVar(xstar, sp))
    got = support_function(spec, Z).sigma
    assert got == pytest.approx(es_constructed_support_lp(z, sp.probs, a_mask, xstar), rel=1e-7, abs=1e-9)


def test_support_power_one_and_exponential(u4):
    z = RandVar([1.0, 3.0, 0.5, 0.0], u4)
    assert support_function(Shortfall(Power(1), 2.0), z).sigma == pytest.approx(-6.0)
    spec = Shortfall(Exponential(1.0), 0.5)
    sigma = support_function(spec, z, u4).sigma
    # brute force: scale random directions onto the constraint surface
    rng = np.random.default_rng(1)
    d = rng.exponential(1.0, (20000, 4)) * (rng.random((20000, 4)) < 0.7)
    d = d[d.sum(axis=1) > 0]
    lo, hi = np.zeros(len(d)), np.full(len(d), 50.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = np.sum(u4.probs * np.expm1(np.minimum(mid[:, None] * d, 700)), axis=1) <= 0.5
        lo, hi = np.where(ok, mid, lo), np.where(ok, hi, mid)
    best = float(np.max((lo[:, None] * d * z.values) @ u4.probs))
    assert -best >= sigma - 1e-9
    assert -best == pytest.approx(sigma, rel=5e-3)


def test_support_grid_restricted_es_constructed(u4):
    xstar = RandVar([-1, 0, 0, 0], u4)
    full = EsConstructed(u4.empty, xstar)
    coarse = EsConstructed(u4.empty, xstar, alphas=(0.1,))
    Z = RandVar([1, 1, 0, 0], u4)
    # fewer constraints means a larger set and a smaller support value
    assert support_function(coarse, Z).sigma <= support_function(full, Z).sigma


@given(st.data())
def test_support_superlinear_and_homogeneous(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    sp = random_space(rng, int(rng.integers(1, 6)))
    n = sp.n
    specs = [Shortfall(Power(2), 1.0), Shortfall(Exponential(1.0), 0.7), ExpectedTailLoss(0.3, 1.0),
             EsConstructed(sp.event([0]), RandVar(-np.arange(n, dtype=float), sp)),
             PolyhedralSolid((RandVar(-np.ones(n), sp), RandVar(-2 * np.eye(n)[n - 1], sp)))]
    for spec in specs:
        z1 = RandVar(rng.exponential(1.0, n), sp)
        z2 = RandVar(rng.exponential(1.0, n), sp)
        s1 = support_function(spec, z1, sp).sigma
        s2 = support_function(spec, z2, sp).sigma
        s12 = support_function(spec, z1 + z2, sp).sigma
        assert s12 >= s1 + s2 - 1e-9
        t = float(rng.uniform(0.1, 10))
        assert support_function(spec, t * z1, sp).sigma == pytest.approx(t * s1, rel=1e-9, abs=1e-12)
        assert s1 <= 0


def test_coherent_sets_have_zero_sigma_on_barrier_cone(u4):
    for spec in (TestScenario(u4.event([1])), ExpectedShortfall(0.3), VaRLevel(0.3)):
        rng = np.random.default_rng(3)
        for _ in range(100):
            sig = support_function(spec, RandVar(rng.exponential(1, 4) * (rng.random(4) < 0.5), u4), u4).sigma
            assert sig == 0 or sig == -math.inf


def test_dual_examples(u4):
    sf = Shortfall(Power(2), 1)
    member = RandVar([-1, -1, 2, 0], u4)
    assert accepts(sf, member)
    v = dual_membership_check(sf, member)
    assert v.holds and v.accepted and v.agrees
    X = RandVar([-3, 0, 0, 0], u4)
    v = dual_membership_check(sf, X, [RandVar([1, 0, 0, 0], u4)])
    assert not v.holds and not v.accepted
    assert v.min_slack == pytest.approx(-0.75 + 0.5)
    assert replay(sf, v)
    pos = RandVar([0, 1, 2, 3], u4)
    assert dual_membership_check(sf, pos).holds
    with pytest.raises(NegativeDualDirection):
        dual_membership_check(sf, pos, [RandVar([-1, 0, 0, 0], u4)])
    with pytest.raises(ValueError):
        dual_membership_check(sf, pos, [])


def test_default_grid_shape(u4):
    g = default_dual_grid(u4)
    assert len(g) == 4 + 6 + 1 + 64
    assert all(np.all(z.values >= 0) for z in g)


def test_refined_grid_separates(u4):
    rng = np.random.default_rng(4)
    specs = [Shortfall(Power(2), 1), ExpectedTailLoss(0.3, 1),
             EsConstructed(u4.event([0]), RandVar([-2, -1, 0, 0], u4)),
             PolyhedralSolid((RandVar([-1, 0, 0, -1], u4), RandVar([0, -2, 0, 0], u4)))]
    for spec in specs:
        for _ in range(150):
            X = RandVar(rng.normal(0, 1.5, 4), u4)
            v = dual_membership_check(spec, X, refined_dual_grid(spec, X))
            assert v.agrees, (spec, X)


@given(st.data())
def test_refined_grid_separates_polyhedral_random_spaces(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    sp = random_space(rng, int(rng.integers(1, 5)))
    G = tuple(RandVar(-np.round(rng.exponential(1, sp.n) * (rng.random(sp.n) < 0.7), 2), sp)
              for _ in range(int(rng.integers(1, 4))))
    spec = PolyhedralSolid(G)
    for _ in range(40):
        X = RandVar(rng.normal(0.3, 1.5, sp.n), sp)
        assert dual_membership_check(spec, X, refined_dual_grid(spec, X), tol=1e-7).agrees


def test_dual_batch_matches_support_function(u4):
    rng = np.random.default_rng(12)
    specs = [Shortfall(Power(2), 1.3), Shortfall(Power(1), 0.5), Shortfall(Exponential(2.0), 1.0),
             ExpectedTailLoss(0.3, 1.0), PolyhedralSolid((RandVar([-1, 0, 0, -1], u4), RandVar([0, -2, 0, 0], u4))),
             EsConstructed(u4.event([0]), RandVar([-2, -1, 0, 0], u4)), TestScenario(u4.event([1]))]
    grid = default_dual_grid(u4, seed=5)
    for spec in specs:
        for _ in range(20):
            X = RandVar(rng.normal(0, 1.5, 4), u4)
            v = dual_membership_check(spec, X, grid)
            d = np.maximum(-X.values, 0.0)
            slacks = []
            for Z in grid:
                s = support_function(spec, Z, u4).sigma
                if math.isfinite(s):
                    slacks.append(-float(np.sum(u4.probs * d * Z.values)) - s)
            assert v.min_slack == pytest.approx(min(slacks, default=math.inf), abs=1e-12)
