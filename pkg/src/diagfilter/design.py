"""Residual filter synthesis: null-space constraints plus recorded mismatch data.

A residual generator ``r = a(q)^{-1} N(q) L(q) y`` is blind to states and
disturbances whenever ``nbar @ barH = 0``.  What remains in the residual is
the attack response and the response to the output mismatch between the
physical plant and its abstract model.  The functions here turn recorded
mismatch trajectories into quadratic forms whose value at ``nbar`` is
exactly the mismatch energy the filter would reproduce, and solve convex
programs that trade that energy off against guaranteed attack visibility.

Horizon convention: a mismatch signature has one column per sample,
k = 1..T; applying the shift beyond the horizon zero-fills, i.e. the
signature is treated as a finite-support signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DetectorInfeasibleError, NoFilterError
from .lti import StackedSystem
from .shiftpoly import pole_polynomial
from .solvers import QpProblem, Solution, solve_lp, solve_qp

# ridge added to the averaged quadratic form before it enters a solver
REGULARIZATION = 1e-10


def mismatch_signature(y_p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Output mismatch ``y_p - y`` between plant and abstract model samples.

    Both arguments are (n_y, T) sample matrices on the same grid; shape
    disagreement is rejected rather than broadcast.
    """
    y_p = np.asarray(y_p, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_p.shape != y.shape:
        raise ValueError(f"trajectory shapes differ: {y_p.shape} vs {y.shape}")
    return y_p - y


def impulse_response(a_coeffs: np.ndarray, length: int) -> np.ndarray:
    """First ``length`` samples of the causal impulse response of 1/a(q).

    Runs the difference equation ``sum_i a_i h[k - deg + i] = delta[k - deg]``
    forward; the response is zero up to the delay ``deg`` (the polynomial
    degree) because 1/a(q) is strictly delaying.
    """
    a = np.asarray(a_coeffs, dtype=float).ravel()
    deg = a.size - 1
    if deg < 1 or a[deg] == 0.0:
        raise ValueError("a(q) must have degree >= 1 with nonzero leading coefficient")
    h = np.zeros(length)
    for k in range(length):
        acc = 1.0 if k == deg else 0.0
        for i in range(deg):
            j = k - deg + i
            if j >= 0:
                acc -= a[i] * h[j]
        h[k] = acc / a[deg]
    return h


def gram_matrix(a_coeffs: np.ndarray, horizon: int) -> np.ndarray:
    """Horizon-truncated Gram matrix of the filter bank ``{a(q)^{-1} e_i}``.

    Entry (i, j) is the inner product over samples 1..T of the responses of
    1/a(q) to unit impulses at times i and j.  With ``h`` the impulse
    response this is ``sum_k h[k-i] h[k-j]``, assembled here from the
    lower-triangular Toeplitz response matrix.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    h = impulse_response(a_coeffs, horizon)
    resp = np.zeros((horizon, horizon))
    for i in range(horizon):
        resp[i:, i] = h[: horizon - i]
    gram = resp.T @ resp
    return 0.5 * (gram + gram.T)


def stack_shifted(signature: np.ndarray, d_n: int) -> np.ndarray:
    """Stack the signature and its first ``d_n`` forward shifts row-wise.

    Block i equals the signature advanced i samples with zero fill at the
    right edge, so multiplying ``nbar @ barL`` against the result applies the
    full filter numerator to the finite-support signal.
    """
    sig = np.atleast_2d(np.asarray(signature, dtype=float))
    n_y, horizon = sig.shape
    out = np.zeros(((d_n + 1) * n_y, horizon))
    for i in range(d_n + 1):
        out[i * n_y : (i + 1) * n_y, : horizon - i] = sig[:, i:]
    return out


@dataclass
class MismatchData:
    """One training instance: signature, its shift stack, and quadratic form."""

    E: np.ndarray
    Dstack: np.ndarray
    Q: np.ndarray


def q_matrix(stacked: StackedSystem, signature: np.ndarray, gram: np.ndarray) -> MismatchData:
    """Quadratic form whose value ``nbar Q nbar'`` is the filtered mismatch energy.

    ``Q = (barL Dstack) G (barL Dstack)'`` is positive semidefinite by
    construction; the returned matrix is explicitly symmetrised to keep
    round-off from leaking into eigenvalue checks.
    """
    sig = np.atleast_2d(np.asarray(signature, dtype=float))
    if sig.shape[0] != stacked.n_y:
        raise ValueError(
            f"signature has {sig.shape[0]} rows, model has {stacked.n_y} outputs"
        )
    if gram.shape != (sig.shape[1], sig.shape[1]):
        raise ValueError("gram matrix does not match the signature horizon")
    dstack = stack_shifted(sig, stacked.d_n)
    ld = stacked.barL @ dstack
    q = ld @ gram @ ld.T
    return MismatchData(E=sig, Dstack=dstack, Q=0.5 * (q + q.T))


def average_q(q_list: list[np.ndarray]) -> np.ndarray:
    """Elementwise mean of the per-instance quadratic forms."""
    if not q_list:
        raise ValueError("need at least one quadratic form")
    acc = np.zeros_like(np.asarray(q_list[0], dtype=float))
    for q in q_list:
        acc += q
    return acc / len(q_list)


def quadratic_value(nbar: np.ndarray, q: np.ndarray) -> float:
    nbar = np.asarray(nbar, dtype=float).ravel()
    return float(nbar @ q @ nbar)


def worst_case_value(nbar: np.ndarray, q_list: list[np.ndarray]) -> float:
    """Largest per-instance energy ``nbar Q_i nbar'`` over a training set."""
    return max(quadratic_value(nbar, q) for q in q_list)


@dataclass
class AttackModel:
    """Declared attack set used during synthesis.

    ``kind="univariate"`` models a single corrupted channel with a constant
    bias in ``[f_min, f_max]``; only the channel's existence matters to the
    design (any nonzero bias is detectable iff the filter responds at all),
    the range is used by experiments when injecting test attacks.

    ``kind="multivariate"`` models coordinated biases ``f = basis @ alpha``
    with ``alpha`` constrained to the polytope ``polytope_a @ alpha >=
    polytope_b``.  ``basis`` has one column per degree of freedom.
    """

    kind: str
    f_min: float = -0.3
    f_max: float = 0.3
    basis: np.ndarray | None = None
    polytope_a: np.ndarray | None = None
    polytope_b: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("univariate", "multivariate"):
            raise ConfigError(f"unknown attack model kind {self.kind!r}")
        if self.kind == "univariate":
            if not self.f_min < self.f_max:
                raise ConfigError("univariate attack range needs f_min < f_max")
            return
        if self.basis is None or self.polytope_a is None or self.polytope_b is None:
            raise ConfigError("multivariate attack model needs basis and polytope")
        self.basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        self.polytope_a = np.atleast_2d(np.asarray(self.polytope_a, dtype=float))
        self.polytope_b = np.asarray(self.polytope_b, dtype=float).ravel()
        d = self.basis.shape[1]
        if self.polytope_a.shape != (self.polytope_b.size, d):
            raise ConfigError("polytope dimensions do not match the basis")

    @property
    def dof(self) -> int:
        return 0 if self.basis is None else self.basis.shape[1]

    def validate_against(self, n_f: int):
        if self.kind == "univariate":
            if n_f != 1:
                raise ConfigError(
                    f"univariate attack model needs one attack channel, model has {n_f}"
                )
            return
        if self.basis.shape[0] != n_f:
            raise ConfigError(
                f"attack basis has {self.basis.shape[0]} rows, model has {n_f} channels"
            )
        probe = solve_lp(
            np.zeros(self.dof), a_ineq=self.polytope_a, b_ineq=self.polytope_b
        )
        if probe.status == "infeasible":
            raise ConfigError("attack polytope is empty")


@dataclass
class FilterDesign:
    """A synthesised residual generator plus its design certificates."""

    nbar: np.ndarray
    d_n: int
    pole: float
    a_coeffs: np.ndarray
    n_r: int
    mode: str
    objective: float
    branch: dict
    track_steady_state: bool = False
    diagnostics: dict = field(default_factory=dict)

    def coeff(self, i: int) -> np.ndarray:
        if not 0 <= i <= self.d_n:
            raise IndexError(f"coefficient index {i} outside 0..{self.d_n}")
        return self.nbar[i * self.n_r : (i + 1) * self.n_r]

    def coeff_sum(self) -> np.ndarray:
        """N(1): the coefficient sum governing the steady-state response."""
        return self.nbar.reshape(self.d_n + 1, self.n_r).sum(axis=0)

    @property
    def a_at_one(self) -> float:
        return float(np.sum(self.a_coeffs))


def _design_matrices(stacked: StackedSystem, qbar: np.ndarray | None):
    n = stacked.n_vars
    if qbar is None:
        qbar = np.zeros((n, n))
    qbar = np.asarray(qbar, dtype=float)
    if qbar.shape != (n, n):
        raise ValueError(f"qbar must be {n} x {n}")
    p_mat = 2.0 * (qbar + REGULARIZATION * np.eye(n))
    a_eq = stacked.barH.T
    b_eq = np.zeros(a_eq.shape[0])
    return qbar, p_mat, a_eq, b_eq


def _nf_first_nonzero(nf_row: np.ndarray) -> float:
    nz = nf_row[np.abs(nf_row) > 1e-9]
    return float(nz[0]) if nz.size else 0.0


def design_univariate(
    stacked: StackedSystem,
    qbar: np.ndarray | None,
    *,
    pole: float,
    mode: str | None = None,
    track_steady_state: bool = False,
) -> FilterDesign:
    """Synthesise a filter against a single attacked channel.

    Minimises the averaged mismatch form over the model null space, subject
    to unit attack visibility: one coefficient of the attack response is
    pushed to at least one in magnitude.  Each coefficient/sign pair is one
    convex branch; the best feasible branch wins (ties resolved toward the
    lowest coefficient index and positive sign).  Without extra linear
    constraints the two signs mirror each other, so only positive branches
    are solved; enabling ``track_steady_state`` adds the DC normalisation
    ``-a(1)^{-1} N(1) F = 1``, which breaks the symmetry, and both signs are
    solved.

    Raises:
        NoFilterError: if every branch is infeasible.
    """
    if stacked.n_f != 1:
        raise ConfigError("design_univariate expects exactly one attack channel")
    if mode is None:
        mode = "pure_model" if qbar is None else "data_assisted"
    qbar_true, p_mat, a_eq, b_eq = _design_matrices(stacked, qbar)
    a_coeffs = pole_polynomial(pole, stacked.d_n)

    if track_steady_state:
        a_one = float(np.sum(a_coeffs))
        dc_row = -(1.0 / a_one) * stacked.barF.sum(axis=1)
        a_eq = np.vstack([a_eq, dc_row])
        b_eq = np.append(b_eq, 1.0)
        signs = (1, -1)
    else:
        signs = (1,)

    best = None
    report = []
    for j in range(stacked.d_n + 1):
        fcol = stacked.barF[:, j]
        for sign in signs:
            sol = solve_qp(
                QpProblem(
                    P=p_mat,
                    c=np.zeros(stacked.n_vars),
                    a_eq=a_eq,
                    b_eq=b_eq,
                    a_ineq=(sign * fcol)[None, :],
                    b_ineq=np.array([1.0]),
                )
            )
            entry = {"coeff_index": j, "sign": sign, "status": sol.status}
            if sol.status == "optimal":
                value = quadratic_value(sol.x, qbar_true)
                entry["objective"] = value
                if best is None or value < best[0] - 1e-12:
                    best = (value, j, sign, sol)
            report.append(entry)
    if best is None:
        raise NoFilterError("all design branches infeasible", report)

    value, j, sign, sol = best
    nbar = sol.x.copy()
    nf_row = nbar @ stacked.barF
    if not track_steady_state and _nf_first_nonzero(nf_row) < 0:
        nbar = -nbar
        nf_row = -nf_row
        sign = -sign
    return FilterDesign(
        nbar=nbar,
        d_n=stacked.d_n,
        pole=pole,
        a_coeffs=a_coeffs,
        n_r=stacked.n_r,
        mode=mode,
        objective=value,
        branch={"coeff_index": j, "sign": sign},
        track_steady_state=track_steady_state,
        diagnostics={
            "null_residual": float(np.abs(nbar @ stacked.barH).max()),
            "attack_gain": float(np.abs(nf_row).max()),
            "branch_report": report,
        },
    )


def program_branch(j: int) -> tuple[int, int]:
    """Map a 1-based program number to (coefficient index, sign).

    Programs come in pairs: numbers 2k-1 and 2k probe coefficient k-1 with
    negative and positive sign respectively.
    """
    if j < 1:
        raise ValueError("program numbers are 1-based")
    return (j + 1) // 2 - 1, (1 if j % 2 == 0 else -1)


@dataclass
class PretrainResult:
    """Attack-visibility margins, one per sign-definite linear program."""

    gammas: np.ndarray
    j_star: int
    statuses: list[str]

    @property
    def feasible(self) -> bool:
        """True when some program certifies strictly positive visibility."""
        return bool(np.nanmax(self.gammas) > 1e-9)

    @property
    def gamma_star(self) -> float:
        return float(self.gammas[self.j_star - 1])


def _coupling_rows(stacked: StackedSystem, attack: AttackModel, j: int):
    """Equality rows tying the coefficient response to the polytope dual."""
    idx, sign = program_branch(j)
    if idx > stacked.d_n:
        raise ValueError(f"program {j} outside 1..{2 * stacked.d_n + 2}")
    sl = stacked.coeff_slice(idx)
    n_vars = stacked.n_vars
    n_b = attack.polytope_b.size
    d = attack.dof
    m_resp = stacked.barF[sl, idx * stacked.n_f : (idx + 1) * stacked.n_f] @ attack.basis
    rows = np.zeros((d, n_vars + n_b))
    for col in range(d):
        rows[col, sl] = sign * m_resp[:, col]
        rows[col, n_vars:] = -attack.polytope_a[:, col]
    return rows, np.zeros(d), idx, sign


def _norm_cap_rows(n_vars: int, n_total: int):
    rows = np.zeros((2 * n_vars, n_total))
    rows[:n_vars, :n_vars] = np.eye(n_vars)
    rows[n_vars:, :n_vars] = -np.eye(n_vars)
    rhs = -np.ones(2 * n_vars)
    return rows, rhs


def pretrain_multivariate(
    stacked: StackedSystem, attack: AttackModel, *, normalize: bool = True
) -> PretrainResult:
    """Feasibility pretraining: largest certified visibility per program.

    For each of the ``2 d_n + 2`` sign-definite programs, maximise the
    polytope support value ``b' lambda`` subject to the null-space
    constraint and the duality coupling between the filter's coefficient
    response and the polytope normals.  A positive optimum certifies that
    every admissible attack is visible in that coefficient with at least the
    optimal margin.  The filter norm is capped at one (infinity norm) so the
    programs stay bounded; without the cap an unbounded program is reported
    as ``inf``.
    """
    attack.validate_against(stacked.n_f)
    n_vars = stacked.n_vars
    n_b = attack.polytope_b.size
    n_total = n_vars + n_b
    n_programs = 2 * stacked.d_n + 2

    gammas = np.zeros(n_programs)
    statuses = []
    for j in range(1, n_programs + 1):
        rows, rhs, _, _ = _coupling_rows(stacked, attack, j)
        a_eq = np.zeros((stacked.barH.shape[1] + rows.shape[0], n_total))
        a_eq[: stacked.barH.shape[1], :n_vars] = stacked.barH.T
        a_eq[stacked.barH.shape[1] :] = rows
        b_eq = np.zeros(a_eq.shape[0])

        ineq_blocks = [np.zeros((n_b, n_total))]
        ineq_blocks[0][:, n_vars:] = np.eye(n_b)
        rhs_blocks = [np.zeros(n_b)]
        if normalize:
            cap, cap_rhs = _norm_cap_rows(n_vars, n_total)
            ineq_blocks.append(cap)
            rhs_blocks.append(cap_rhs)
        a_ineq = np.vstack(ineq_blocks)
        b_ineq = np.concatenate(rhs_blocks)

        cost = np.zeros(n_total)
        cost[n_vars:] = -attack.polytope_b
        sol = solve_lp(cost, a_eq=a_eq, b_eq=b_eq, a_ineq=a_ineq, b_ineq=b_ineq)
        statuses.append(sol.status)
        if sol.status == "optimal":
            gammas[j - 1] = -sol.objective
        elif sol.status == "unbounded":
            gammas[j - 1] = np.inf
        else:
            gammas[j - 1] = 0.0
    j_star = int(np.argmax(gammas)) + 1
    return PretrainResult(gammas=gammas, j_star=j_star, statuses=statuses)


def _multivariate_qp(
    stacked: StackedSystem,
    p_mat: np.ndarray,
    attack: AttackModel,
    gamma: float,
    j: int,
    normalize: bool,
) -> QpProblem:
    n_vars = stacked.n_vars
    n_b = attack.polytope_b.size
    n_total = n_vars + n_b
    rows, rhs, _, _ = _coupling_rows(stacked, attack, j)
    a_eq = np.zeros((stacked.barH.shape[1] + rows.shape[0], n_total))
    a_eq[: stacked.barH.shape[1], :n_vars] = stacked.barH.T
    a_eq[stacked.barH.shape[1] :] = rows
    b_eq = np.zeros(a_eq.shape[0])

    blocks = [np.zeros((n_b, n_total))]
    blocks[0][:, n_vars:] = np.eye(n_b)
    rhs_blocks = [np.zeros(n_b)]
    support = np.zeros((1, n_total))
    support[0, n_vars:] = attack.polytope_b
    blocks.append(support)
    rhs_blocks.append(np.array([gamma]))
    if normalize:
        cap, cap_rhs = _norm_cap_rows(n_vars, n_total)
        blocks.append(cap)
        rhs_blocks.append(cap_rhs)

    p_full = np.zeros((n_total, n_total))
    p_full[:n_vars, :n_vars] = p_mat
    return QpProblem(
        P=p_full,
        c=np.zeros(n_total),
        a_eq=a_eq,
        b_eq=b_eq,
        a_ineq=np.vstack(blocks),
        b_ineq=np.concatenate(rhs_blocks),
    )


def design_multivariate(
    stacked: StackedSystem,
    qbar: np.ndarray | None,
    attack: AttackModel,
    gamma_j: float,
    j: int,
    *,
    pole: float,
    mode: str | None = None,
    tune: bool = True,
    bisect_tol: float = 1e-7,
    bisect_iters: int = 40,
    normalize: bool = True,
) -> FilterDesign:
    """Synthesise a filter against a polytopic attack set at program ``j``.

    Minimises the averaged mismatch form subject to the visibility floor
    ``b' lambda >= gamma`` and the coupling rows of program ``j``.  When
    ``tune`` is set, the floor is pushed by bisection to the largest value
    that keeps the program feasible (within ``bisect_tol``), starting from
    the pretraining recommendation ``gamma_j``.

    Raises:
        NoFilterError: if the program is infeasible even at gamma = 0.
    """
    attack.validate_against(stacked.n_f)
    if mode is None:
        mode = "pure_model" if qbar is None else "data_assisted"
    qbar_true, p_mat, _, _ = _design_matrices(stacked, qbar)
    a_coeffs = pole_polynomial(pole, stacked.d_n)

    def attempt(gamma: float) -> Solution:
        return solve_qp(_multivariate_qp(stacked, p_mat, attack, gamma, j, normalize))

    gamma = float(gamma_j)
    sol = attempt(gamma)
    if tune:
        if sol.status == "optimal":
            lo, lo_sol = gamma, sol
            hi = max(2.0 * gamma, gamma + 1.0)
            hi_sol = attempt(hi)
            expansions = 0
            while hi_sol.status == "optimal" and expansions < bisect_iters:
                lo, lo_sol = hi, hi_sol
                hi *= 2.0
                hi_sol = attempt(hi)
                expansions += 1
            if hi_sol.status == "optimal":
                raise NoFilterError(
                    "visibility floor appears unbounded; enable the norm cap"
                )
        else:
            hi = gamma
            lo = 0.0
            lo_sol = attempt(lo)
            if lo_sol.status != "optimal":
                raise NoFilterError(f"program {j} infeasible even at gamma = 0")
        for _ in range(bisect_iters):
            if hi - lo <= bisect_tol * max(1.0, abs(lo)):
                break
            mid = 0.5 * (lo + hi)
            mid_sol = attempt(mid)
            if mid_sol.status == "optimal":
                lo, lo_sol = mid, mid_sol
            else:
                hi = mid
        gamma, sol = lo, lo_sol
    elif sol.status != "optimal":
        raise NoFilterError(f"program {j} infeasible at gamma = {gamma}")

    n_vars = stacked.n_vars
    nbar = sol.x[:n_vars].copy()
    lam = sol.x[n_vars:].copy()
    idx, sign = program_branch(j)
    value = quadratic_value(nbar, qbar_true)
    return FilterDesign(
        nbar=nbar,
        d_n=stacked.d_n,
        pole=pole,
        a_coeffs=a_coeffs,
        n_r=stacked.n_r,
        mode=mode,
        objective=value,
        branch={"coeff_index": idx, "sign": sign, "program": j},
        diagnostics={
            "null_residual": float(np.abs(nbar @ stacked.barH).max()),
            "gamma": gamma,
            "support_value": float(attack.polytope_b @ lam),
            "polytope_dual": lam,
        },
    )


def worst_case_alpha(
    stacked: StackedSystem, design: FilterDesign, attack: AttackModel, j: int | None = None
) -> tuple[np.ndarray | None, float, str]:
    """Least-visible admissible attack coordinates for a designed filter.

    Minimises the coefficient response ``sign * N_idx F basis @ alpha`` over
    the polytope.  By linear-programming duality the optimum can never fall
    below the ``b' lambda`` certified at design time.  Returns
    ``(alpha, value, status)``; alpha is None when the program is unbounded.
    """
    attack.validate_against(stacked.n_f)
    if j is None:
        j = design.branch["program"]
    idx, sign = program_branch(j)
    resp = design.coeff(idx) @ stacked.barF[
        stacked.coeff_slice(idx), idx * stacked.n_f : (idx + 1) * stacked.n_f
    ]
    cost = sign * (resp @ attack.basis)
    sol = solve_lp(cost, a_ineq=attack.polytope_a, b_ineq=attack.polytope_b)
    if sol.status == "optimal":
        return sol.x, float(sol.objective), sol.status
    return None, float("-inf") if sol.status == "unbounded" else float("nan"), sol.status


def steady_state_residual(design: FilterDesign, f_matrix: np.ndarray, f: np.ndarray) -> float:
    """Residual limit under a constant attack ``f`` on the mismatch-free model.

    Equals ``-a(1)^{-1} N(1) F f``; with the DC tracking constraint active
    this is the injected bias itself.
    """
    f = np.asarray(f, dtype=float).ravel()
    return float(-(design.coeff_sum() @ f_matrix @ f) / design.a_at_one)


def steady_state_margin(
    design: FilterDesign, f_matrix: np.ndarray, attack: AttackModel
) -> tuple[float, np.ndarray | None]:
    """Smallest steady-state residual magnitude over the admissible attack set.

    Solves two sign-restricted linear programs (response >= 0 and <= 0) and
    takes the smaller magnitude; a zero margin certifies the existence of an
    admissible attack that is invisible in steady state.
    """
    attack.validate_against(f_matrix.shape[1])
    cost = -(design.coeff_sum() @ f_matrix @ attack.basis) / design.a_at_one
    best: tuple[float, np.ndarray | None] | None = None
    for sign in (1.0, -1.0):
        a_ineq = np.vstack([attack.polytope_a, sign * cost[None, :]])
        b_ineq = np.concatenate([attack.polytope_b, [0.0]])
        sol = solve_lp(sign * cost, a_ineq=a_ineq, b_ineq=b_ineq)
        if sol.status == "optimal":
            value = abs(float(sol.objective))
            if best is None or value < best[0]:
                best = (value, sol.x)
    if best is None:
        raise DetectorInfeasibleError("attack polytope is empty")
    return best
