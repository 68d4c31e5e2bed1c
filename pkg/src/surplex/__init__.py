"""Surplus-invariant and numeraire-invariant acceptance sets on finite spaces."""

__version__ = "0.1.0"

from .prob_core import (  # noqa: E402
    Event,
    OutcomeSpace,
    RandVar,
    cdf,
    cdf_strict,
    constant,
    dominates_ae,
    expectation,
    indicator,
    make_space,
    neg_part,
    pos_part,
    restrict,
    uniform_space,
)
from .risk_measures import (  # noqa: E402
    Exponential,
    LossFunction,
    Power,
    es,
    es_dual_maximizer,
    es_split,
    expected_tail_loss,
    shortfall_risk,
    var,
)
from .acceptance import (  # noqa: E402
    AcceptanceSpec,
    CheckBudget,
    EsConstructed,
    ExpectedShortfall,
    ExpectedTailLoss,
    PolyhedralSolid,
    Shortfall,
    TestScenario,
    VaRLevel,
    Verdict,
    Witness,
    accepts,
    check_cone,
    check_convex,
    check_monotone,
    check_surplus_invariant,
    equivalent_forms_audit,
    replay,
    spec_from_json,
)
from .structure import (  # noqa: E402
    Partition,
    SupportEvaluation,
    atom_default_cap,
    coherent_scenario_set,
    decompose,
    dual_membership_check,
    recession_membership,
    support_function,
)
from .dominance import (  # noqa: E402
    StepCdf,
    closed_form_bound,
    construct_bound,
    fosd,
    fosd_var_equivalence,
    tightness_envelope,
    verify_bound,
)
from .numeraire import (  # noqa: E402
    RescalingFactor,
    arbitrage_search,
    check_numeraire_invariance,
    equivalence_audit,
    translate_set,
)
from .io import dump_spec, load_scenarios, load_spec, write_scenarios  # noqa: E402
