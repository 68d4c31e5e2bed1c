"""Small feasibility LPs for finitely generated solid sets.

The exact path is a phase-one simplex over :class:`fractions.Fraction` with
Bland's rule (no cycling, no tolerances).  Floats convert to fractions
exactly, so the answer is the true answer for the given binary inputs.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

EXACT_MAX_ATOMS = 12
FLOAT_TOL = 1e-9


def _phase_one(A, b) -> list | None:
    """Find ``x >= 0`` with ``A x = b`` (``b >= 0``), or return None."""
    m = len(A)
    n = len(A[0]) if m else 0
    # tableau columns: n originals, m artificials, rhs
    T = [list(A[i]) + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    width = n + m
    # reduced costs of the phase-one objective (minimise sum of artificials)
    cost = [Fraction(0)] * (width + 1)
    for i in range(m):
        for j in range(width + 1):
            if j < n or j == width:
                cost[j] -= T[i][j]
    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][width] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            # phase one is bounded below by 0, so this cannot happen
            break
        piv = T[leave][enter]
        row = [v / piv for v in T[leave]]
        T[leave] = row
        for i in range(m):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                Ti = T[i]
                T[i] = [Ti[j] - f * row[j] for j in range(width + 1)]
        if cost[enter] != 0:
            f = cost[enter]
            cost = [cost[j] - f * row[j] for j in range(width + 1)]
        basis[leave] = enter
    if -cost[width] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][width]
    return x


def simplex_point_below(G: np.ndarray, target: np.ndarray, exact: bool | None = None):
    """Weights ``lam`` in the simplex with ``G.T @ lam <= target`` or None.

    ``G`` holds one generator per row (shape ``(k, n)``).
    """
    G = np.asarray(G, dtype=float)
    target = np.asarray(target, dtype=float)
    k, n = G.shape
    if exact is None:
        exact = n <= EXACT_MAX_ATOMS
    if exact:
        return _exact_point_below(G, target)
    return _float_point_below(G, target)


def _exact_point_below(G, target):
    k, n = G.shape
    Gf = [[Fraction(float(v)) for v in row] for row in G]
    tf = [Fraction(float(v)) for v in target]
    # variables: lam (k), slack (n); rows: sum lam = 1, G^T lam + s = t
    rows, rhs = [], []
    rows.append([Fraction(1)] * k + [Fraction(0)] * n)
    rhs.append(Fraction(1))
    for w in range(n):
        r = [Gf[i][w] for i in range(k)] + [Fraction(int(j == w)) for j in range(n)]
        t = tf[w]
        if t < 0:
            r = [-v for v in r]
            t = -t
        rows.append(r)
        rhs.append(t)
    x = _phase_one(rows, rhs)
    if x is None:
        return None
    return np.array([float(v) for v in x[:k]])


def _float_point_below(G, target):
    from scipy.optimize import linprog

    k, n = G.shape
    res = linprog(
        np.zeros(k),
        A_ub=G.T,
        b_ub=target + FLOAT_TOL,
        A_eq=np.ones((1, k)),
        b_eq=[1.0],
        bounds=[(0, None)] * k,
        method="highs",
    )
    if res.status != 0:
        return None
    return np.asarray(res.x)


def separating_direction(G: np.ndarray, target: np.ndarray, probs: np.ndarray):
    """Direction ``Z >= 0`` maximising ``min_i E[g_i Z] - E[target Z]``.

    A positive optimum certifies ``target`` lies outside the solid hull of
    the generators; returned as ``(Z, gap)`` with ``Z`` summing to one.
    """
    from scipy.optimize import linprog

    G = np.asarray(G, dtype=float)
    k, n = G.shape
    pt = probs * np.asarray(target, dtype=float)
    pg = G * probs
    # variables: z (n), s (free); maximise s - pt.z s.t. s <= pg_i.z
    c = np.concatenate([pt, [-1.0]])
    A_ub = np.hstack([-pg, np.ones((k, 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(k),
        A_eq=np.concatenate([np.ones(n), [0.0]])[None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * n + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        return None, 0.0
    z = np.maximum(res.x[:n], 0.0)
    return z, float(-res.fun)
