"""
=====================================================================
Changing the unit of account
=====================================================================

Expressing payoffs in a different numeraire multiplies them by a
positive, state-dependent exchange rate R. An acceptance set is
numeraire invariant when this never changes which positions are
accepted; that happens exactly when it is a cone and surplus invariant.
For ES the change of unit can flip the sign of the capital requirement.

Run:  python demos/04_numeraire.py
"""
import numpy as np

from surplex import (
    CheckBudget, ExpectedShortfall, ExpectedTailLoss, RandVar, RescalingFactor,
    TestScenario, VaRLevel, accepts, arbitrage_search, equivalence_audit,
    translate_set, uniform_space,
)

space = uniform_space(4)
budget = CheckBudget(1000, seed=9)

print(f"{'family':>17}  numeraire  cone  surplus  consistent")
for spec in (VaRLevel(0.3), ExpectedShortfall(0.3), ExpectedTailLoss(0.3, 1.0), TestScenario(space.event([0]))):
    rep = equivalence_audit(spec, budget, space)
    print(f"{spec.family:>17}  {str(rep['numeraire_invariant'].holds):>9}  "
          f"{str(rep['cone'].holds):>4}  {str(rep['surplus_invariant'].holds):>7}  {rep['consistent']}")

# translated set R*A: Y is accepted in the new unit iff Y/R was
R = RescalingFactor(RandVar([1.0, 0.1, 1.0, 1.0], space))
X = RandVar([-1.0, 2.0, 3.0, 4.0], space)
in_new_unit = translate_set(ExpectedShortfall(0.3), R)
print(f"\nX accepted by ES_0.3: {accepts(ExpectedShortfall(0.3), X)}; "
      f"R*X accepted by R*A: {in_new_unit(R.apply(X))}")

w = arbitrage_search("ES", 0.5, R, CheckBudget(2000, seed=0))
if w is not None:
    print("\nES arbitrage in the new unit:")
    print("  X =", np.round(w.X.values, 4).tolist())
    print(f"  ES before {w.rho_before:+.4f}, after rescaling {w.rho_after:+.4f}")
print("VaR arbitrage found:", arbitrage_search("VaR", 0.3, R, CheckBudget(500)) is not None)
