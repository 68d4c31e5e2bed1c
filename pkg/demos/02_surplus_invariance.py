"""
=====================================================================
Surplus invariance: which acceptance sets ignore the upside
=====================================================================

An acceptance set is surplus invariant when membership depends only on
the default part X^- of a position. The checkers below look for
counterexamples and return replayable witnesses. ES fails; the
shortfall family passes and decomposes the outcome space into
atoms where no default is tolerated (A), atoms with a finite default
cap (B), and atoms where any default is tolerated (C).

Run:  python demos/02_surplus_invariance.py
"""
from surplex import (
    CheckBudget, ExpectedShortfall, ExpectedTailLoss, Shortfall, TestScenario,
    Power, check_cone, check_convex, check_monotone, check_surplus_invariant,
    decompose, replay, uniform_space,
)

space = uniform_space(4)
budget = CheckBudget(2000, seed=1)

families = {
    "ES 0.3": ExpectedShortfall(0.3),
    "Shortfall x^2 <= 1": Shortfall(Power(2), 1.0),
    "ETL 0.3, c=1": ExpectedTailLoss(0.3, 1.0),
    "no loss on w1,w2": TestScenario(space.event([0, 1])),
}

print(f"{'family':>20}  monotone convex  cone  surplus")
for name, spec in families.items():
    flags = [check(spec, budget, space).holds
             for check in (check_monotone, check_convex, check_cone, check_surplus_invariant)]
    print(f"{name:>20}  " + "  ".join(f"{str(f):>6}" for f in flags))

# a failed check carries a witness that anyone can re-run
v = check_surplus_invariant(ExpectedShortfall(0.3), budget, space)
w = v.witness
print(f"\nES witness ({w.kind}):")
print("  accepted:", [round(v, 4) for v in w.members[0].tolist()])
print("  rejected:", [round(v, 4) for v in w.violator.tolist()], "(its default part)")
print("replays:", replay(ExpectedShortfall(0.3), v))

# -- decomposition of a surplus-invariant set ------------------------
part = decompose(Shortfall(Power(2), 1.0), verify_budget=CheckBudget(500), space=space)
print("\nShortfall x^2 <= 1 partition:")
print("  A =", part.A.indices, " B =", part.B.indices, " C =", part.C.indices)
print("  default caps:", [round(float(u), 6) for u in part.caps])

part = decompose(TestScenario(space.event([0, 1])), verify_budget=CheckBudget(500), space=space)
print("Test scenario {w1,w2} partition:")
print("  A =", part.A.indices, " B =", part.B.indices, " C =", part.C.indices)
