"""
=====================================================================
Risk measures and acceptance sets on a four-state market
=====================================================================

A position is a random payoff on a finite outcome space. This walk-through
prices capital requirements with VaR and ES, splits ES into its two
parts, and checks which positions each acceptance family lets through.

Run:  python demos/01_risk_measures.py
"""
import numpy as np

from surplex import (
    ExpectedTailLoss, RandVar, Shortfall, TestScenario, VaRLevel, Power,
    accepts, es, es_dual_maximizer, expectation, es_split, expected_tail_loss,
    shortfall_risk, uniform_space, var,
)

space = uniform_space(4)
X = RandVar([-1.0, 2.0, 3.0, 4.0], space)
alpha = 0.3

# VaR is the smallest cash amount making the loss probability at most alpha
print(f"VaR_{alpha}(X) = {var(X, alpha):+.4f}")
print(f"ES_{alpha}(X)  = {es(X, alpha):+.4f}")

# ES splits into a default part (losses) and a surplus part (gains up to alpha)
left, right = es_split(X, alpha)
print(f"  default + surplus: {left:+.4f} + {right:+.4f}")

# the maximizing density of the dual form attains ES
Z = es_dual_maximizer(X, alpha)
print(f"  dual density Z = {np.round(Z.values, 4)}, E[-XZ] = {-expectation(X * Z):+.4f}")

print(f"expected tail loss ES_alpha(-X^-) = {expected_tail_loss(X, alpha):.4f}")
print(f"shortfall risk E[l(X^-)], l(x)=x^2 = {shortfall_risk(X, Power(2)):.4f}")

# -- acceptance -------------------------------------------------------
specs = {
    "VaR 0.3": VaRLevel(0.3),
    "VaR 0.2": VaRLevel(0.2),
    "Shortfall x^2 <= 0.5": Shortfall(Power(2), 0.5),
    "ETL 0.3, c=0.1": ExpectedTailLoss(0.3, 0.1),
    "no loss on w1": TestScenario(space.event([0])),
}
print()
for name, spec in specs.items():
    print(f"{name:>22}: {'accepted' if accepts(spec, X) else 'rejected'}")
