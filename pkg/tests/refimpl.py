"""Independent reference implementations used as test oracles.

Everything here is deliberately written the slow, obvious way -- explicit
loops, index arithmetic, exhaustive enumeration -- and shares no code with
the package internals it checks.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def direct_energy(
    nbar: np.ndarray, l_mat: np.ndarray, sig: np.ndarray, a_coeffs: np.ndarray
) -> float:
    """Residual energy by direct filtering of a mismatch signature.

    Applies the numerator with forward shifts inside the horizon (samples
    past the end read as zero), then the causal denominator difference
    equation, then sums squares over the horizon.  This is the signal-level
    counterpart of the quadratic form in the filter coefficients.
    """
    nbar = np.asarray(nbar, dtype=float).ravel()
    a_coeffs = np.asarray(a_coeffs, dtype=float).ravel()
    d_n = len(a_coeffs) - 1
    n_r = l_mat.shape[0]
    horizon = sig.shape[1]
    coeffs = [nbar[i * n_r : (i + 1) * n_r] @ l_mat for i in range(d_n + 1)]
    w = np.zeros(horizon)
    for k in range(horizon):
        for i in range(d_n + 1):
            if k + i < horizon:
                w[k] += float(coeffs[i] @ sig[:, k + i])
    v = np.zeros(horizon)
    for k in range(horizon):
        acc = w[k - d_n] if k - d_n >= 0 else 0.0
        for i in range(d_n):
            idx = k - d_n + i
            if idx >= 0:
                acc -= a_coeffs[i] * v[idx]
        v[k] = acc / a_coeffs[d_n]
    return float(np.sum(v**2))


def impulse_response_bruteforce(a_coeffs: np.ndarray, length: int) -> np.ndarray:
    """Impulse response of 1/a(q) by running the difference equation."""
    a_coeffs = np.asarray(a_coeffs, dtype=float).ravel()
    d_n = len(a_coeffs) - 1
    h = np.zeros(length)
    for k in range(length):
        acc = 1.0 if k == d_n else 0.0
        for i in range(d_n):
            idx = k - d_n + i
            if idx >= 0:
                acc -= a_coeffs[i] * h[idx]
        h[k] = acc / a_coeffs[d_n]
    return h


def gram_bruteforce(a_coeffs: np.ndarray, horizon: int) -> np.ndarray:
    """Gram matrix of the denominator response by impulse simulation.

    Column i of the response operator is the difference-equation output for
    a unit impulse at sample i; the Gram matrix is the operator's normal
    matrix.
    """
    a_coeffs = np.asarray(a_coeffs, dtype=float).ravel()
    d_n = len(a_coeffs) - 1
    resp = np.zeros((horizon, horizon))
    for i in range(horizon):
        w = np.zeros(horizon)
        w[i] = 1.0
        v = np.zeros(horizon)
        for k in range(horizon):
            acc = w[k - d_n] if k - d_n >= 0 else 0.0
            for m in range(d_n):
                idx = k - d_n + m
                if idx >= 0:
                    acc -= a_coeffs[m] * v[idx]
            v[k] = acc / a_coeffs[d_n]
        resp[:, i] = v
    return resp.T @ resp


def lp_by_vertex_enumeration(
    cost: np.ndarray,
    a_ineq: np.ndarray,
    b_ineq: np.ndarray,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    tol: float = 1e-9,
) -> tuple[float, np.ndarray] | None:
    """Minimise cost over {a_ineq x >= b_ineq, a_eq x = b_eq} by enumeration.

    Tries every choice of active inequality rows that, together with the
    equalities, forms a square invertible system; keeps the feasible basic
    point with the smallest objective.  Only meaningful for bounded, pointed
    feasible regions and a handful of variables.  Returns None when no
    feasible vertex exists.
    """
    cost = np.asarray(cost, dtype=float).ravel()
    n = cost.size
    a_ineq = np.atleast_2d(np.asarray(a_ineq, dtype=float))
    b_ineq = np.asarray(b_ineq, dtype=float).ravel()
    if a_eq is None:
        a_eq = np.zeros((0, n))
        b_eq = np.zeros(0)
    else:
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
        b_eq = np.asarray(b_eq, dtype=float).ravel()
    n_eq = a_eq.shape[0]
    need = n - n_eq
    best: tuple[float, np.ndarray] | None = None
    for rows in combinations(range(a_ineq.shape[0]), need):
        mat = np.vstack([a_eq, a_ineq[list(rows)]])
        rhs = np.concatenate([b_eq, b_ineq[list(rows)]])
        if np.linalg.matrix_rank(mat, tol=1e-10) < n:
            continue
        x = np.linalg.lstsq(mat, rhs, rcond=None)[0]
        if np.max(np.abs(mat @ x - rhs)) > 1e-7:
            continue
        if np.any(a_ineq @ x < b_ineq - 1e-7):
            continue
        if n_eq and np.max(np.abs(a_eq @ x - b_eq)) > 1e-7:
            continue
        value = float(cost @ x)
        if best is None or value < best[0] - tol:
            best = (value, x)
    return best


def zoh_bruteforce(a: np.ndarray, b: np.ndarray, t_s: float, terms: int = 60):
    """Sampled-system matrices by truncated exponential series."""
    n = a.shape[0]
    ad = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms):
        term = term @ (a * t_s) / k
        ad = ad + term
    # integral of expm(a s) ds over one period, series form
    integral = np.eye(n) * t_s
    term = np.eye(n) * t_s
    for k in range(1, terms):
        term = term @ (a * t_s) * (1.0 / (k + 1))
        integral = integral + term
    return ad, integral @ b
