"""Max-min concave-quadratic solver under one convex quadratic constraint.

Solves problems of the form

    maximize   min_l  q_l(v_l),   q_l(v_l) = a_l + 2 Re{b_l v_l} - v_l^H C_l v_l
    subject to sum_l v_l^H A_l v_l <= P,

with Hermitian PSD C_l and A_l. Users couple only through the power sum, so
the attainable objective level t admits an exact feasibility test: for each
user the minimum power needed to reach q_l(v_l) >= t is a one-dimensional
convex subproblem, solved by bisection on its multiplier after simultaneous
diagonalization of the (C_l, A_l) pencil, and t is attainable iff those
minimum powers sum to at most P. The solver bisects on t, keeping a bracket
[t_lo, t_hi] where t_lo is achieved by an explicitly constructed feasible
point and t_hi is certified unattainable.

The Lagrangian dual

    g(lam, mu) = mu P + sum_l max_{v_l} [lam_l q_l(v_l) - mu v_l^H A_l v_l],

over simplex weights lam and power price mu >= 0, upper-bounds the optimum
at every dual point; the solver evaluates it (with mu minimized exactly by
bisection on the transmit power) at the weights recovered from the active
users' multipliers to tighten the certificate. The reported gap is the
nonnegative difference between that dual bound and the best feasible value.

A_l may be singular; a ridge of 1e-10 times the trace scale is added before
diagonalizing, which shrinks the feasible set by a negligible margin and
never loosens it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import bisect, pencil_diagonalize

RIDGE_REL = 1e-10


@dataclass
class MaxMinQuadraticProblem:
    """Per-user quadratic data and the shared power budget.

    ``a`` is (L,), ``b`` is (L, n) of row vectors, ``C`` and ``A`` are
    (L, n, n) Hermitian PSD stacks, ``P`` the budget.
    """

    a: np.ndarray
    b: np.ndarray
    C: np.ndarray
    A: np.ndarray
    P: float

    @property
    def n_users(self) -> int:
        return self.a.shape[0]

    @property
    def dim(self) -> int:
        return self.b.shape[1]

    def objective_values(self, v: np.ndarray) -> np.ndarray:
        """Per-user quadratic values at stacked vectors v of shape (L, n)."""
        vals = np.empty(self.n_users)
        for ell in range(self.n_users):
            vals[ell] = self.a[ell] + 2.0 * float(np.real(self.b[ell] @ v[ell])) - float(
                np.real(v[ell].conj() @ (self.C[ell] @ v[ell]))
            )
        return vals


@dataclass
class SubproblemSolution:
    v: np.ndarray
    objective: float
    gap: float
    iterations: int


def ridge_size(c_mat: np.ndarray, a_mat: np.ndarray) -> float:
    """Ridge loading 1e-10 * (trace C + trace A) / dim for one user."""
    n = c_mat.shape[0]
    return RIDGE_REL * float(np.real(np.trace(c_mat)) + np.real(np.trace(a_mat))) / n


def power_ridge_size(a_mat: np.ndarray) -> float:
    """Ridge for the power matrix alone, relative to its own trace scale.

    The pencil diagonalization needs A positive definite; loading it with a
    fraction of the objective curvature's trace would distort the power
    metric whenever the two matrices live on very different scales, so only
    A's own scale enters here.
    """
    n = a_mat.shape[0]
    return RIDGE_REL * max(float(np.real(np.trace(a_mat))) / n, 1e-300)


def dual_inner_argmax(
    problem: MaxMinQuadraticProblem, weights: np.ndarray, mu: float
) -> np.ndarray:
    """Per-user maximizers of the weighted Lagrangian at (weights, mu).

    v_l = w_l (w_l C_l + mu A_l + eps I)^{-1} b_l^H with the standard ridge.
    Raises on a solve that fails beyond the ridge.
    """
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    weights = np.asarray(weights, dtype=float)
    v = np.zeros((problem.n_users, problem.dim), dtype=complex)
    eye = np.eye(problem.dim)
    for ell in range(problem.n_users):
        eps = ridge_size(problem.C[ell], problem.A[ell])
        mat = weights[ell] * problem.C[ell] + mu * problem.A[ell] + eps * eye
        try:
            v[ell] = weights[ell] * np.linalg.solve(mat, problem.b[ell].conj())
        except np.linalg.LinAlgError as err:
            cond = np.linalg.cond(mat)
            raise np.linalg.LinAlgError(
                f"inner system for user {ell} is singular beyond the ridge "
                f"(condition number {cond:.3e})"
            ) from err
    return v


class _Pencils:
    """Diagonalized (C_l, A_l + eps I) pencils shared by all inner solves."""

    def __init__(self, problem: MaxMinQuadraticProblem):
        n_users, dim = problem.n_users, problem.dim
        self.problem = problem
        self.d = np.empty((n_users, dim))
        self.t = np.empty((n_users, dim, dim), dtype=complex)
        self.b_t = np.empty((n_users, dim), dtype=complex)
        eye = np.eye(dim)
        for ell in range(n_users):
            eps = power_ridge_size(problem.A[ell])
            a_r = problem.A[ell] + eps * eye
            self.d[ell], self.t[ell] = pencil_diagonalize(problem.C[ell], a_r)
            self.b_t[ell] = problem.b[ell] @ self.t[ell]
        self.abs_b_sq = np.abs(self.b_t) ** 2
        # Per-user relative floor: transformed linear terms this far below
        # the row maximum are round-off zeros and would otherwise drive the
        # level multipliers to astronomical values near an asymptote.
        row_max = self.abs_b_sq.max(axis=1, keepdims=True)
        self.b_t[self.abs_b_sq <= 1e-28 * row_max] = 0.0
        self.abs_b_sq = np.abs(self.b_t) ** 2
        d_floor = 1e-13 * max(float(self.d.max()), 1e-300)
        self.flat = self.d <= d_floor
        self.escapes = self.flat & (self.abs_b_sq > 0.0)
        # unconstrained per-user maxima of q_l (inf along flat directions
        # carrying a linear term)
        gain = np.where(self.flat, 0.0, self.abs_b_sq / np.where(self.flat, 1.0, self.d))
        self.q_free = self.problem.a + gain.sum(axis=1)
        self.q_free[self.escapes.any(axis=1)] = np.inf

    # --- weighted Lagrangian surface -------------------------------------
    def dual_power_and_value(self, lam: np.ndarray, mu: float) -> tuple[float, float]:
        """Ridged transmit power and sum of inner maxima at (lam, mu)."""
        den = lam[:, None] * self.d + mu
        num = (lam[:, None] ** 2) * self.abs_b_sq
        with np.errstate(divide="ignore", invalid="ignore"):
            frac_pow = num / den**2
            frac_val = num / den
        zero = num == 0.0
        frac_pow[zero] = 0.0
        frac_val[zero] = 0.0
        return float(frac_pow.sum()), float(frac_val.sum())

    def dual_argmax(self, lam: np.ndarray, mu: float) -> np.ndarray:
        den = lam[:, None] * self.d + mu
        num = lam[:, None] * np.conj(self.b_t)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = num / den
        u[num == 0.0] = 0.0
        return np.einsum("lij,lj->li", self.t, u)

    def dual_value(self, lam: np.ndarray) -> float:
        """g(lam, mu*(lam)) with the power price minimized exactly."""
        power0, value0 = self.dual_power_and_value(lam, 0.0)
        if power0 <= self.problem.P:
            return float(lam @ self.problem.a) + value0
        hi = 1.0
        for _ in range(400):
            if self.dual_power_and_value(lam, hi)[0] < self.problem.P:
                break
            hi *= 2.0
        mu = bisect(
            lambda m: self.dual_power_and_value(lam, m)[0] - self.problem.P,
            0.0,
            hi,
            tol=1e-12 * self.problem.P,
            max_iter=220,
        )
        _, value = self.dual_power_and_value(lam, mu)
        return mu * self.problem.P + float(lam @ self.problem.a) + value

    # --- per-user level subproblems ---------------------------------------
    def level_curves(self, ell: int, nu: float) -> tuple[float, float]:
        """(power, q) along user ell's minimum-power path at multiplier nu.

        The path v(nu) = nu (A_l + nu C_l)^{-1} b_l^H traces the efficient
        power/objective frontier; both coordinates increase with nu.
        Overflow-safe: huge multipliers give an infinite power, never an
        exception.
        """
        nu = np.float64(nu)
        den = 1.0 + nu * self.d[ell]
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = np.where(self.abs_b_sq[ell] > 0.0, nu / den, 0.0)
            u_sq = ratio**2 * self.abs_b_sq[ell]
            power = float(u_sq.sum())
            q = self.problem.a[ell] + 2.0 * float(
                (ratio * self.abs_b_sq[ell]).sum()
            ) - float((u_sq * self.d[ell]).sum())
        return power, q

    def min_power_bracket(self, ell: int, level: float) -> tuple[float, float, float]:
        """Bracket the minimum power for q_l >= level.

        Returns ``(power_lo, power_hi, nu_hi)`` with power_lo a certified
        underestimate of the true minimum and nu_hi achieving q >= level at
        power_hi (infinite when the level is out of reach).
        """
        if level <= self.problem.a[ell]:
            return 0.0, 0.0, 0.0
        if level >= self.q_free[ell]:
            return np.inf, np.inf, np.inf
        nu_lo, nu_hi = 0.0, 1.0
        ok = False
        for _ in range(700):
            _, q_hi = self.level_curves(ell, nu_hi)
            if q_hi >= level:
                ok = True
                break
            nu_lo = nu_hi
            nu_hi *= 2.0
        if not ok:
            # Reaching the level needs a multiplier beyond 2^700; the power
            # along the path grows quadratically, so that level is far out
            # of any realistic budget.
            return np.inf, np.inf, np.inf
        for _ in range(200):
            mid = 0.5 * (nu_lo + nu_hi)
            if mid == nu_lo or mid == nu_hi:
                break
            _, q_mid = self.level_curves(ell, mid)
            if q_mid >= level:
                nu_hi = mid
            else:
                nu_lo = mid
            if (nu_hi - nu_lo) <= 1e-13 * nu_hi:
                break
        power_lo, _ = self.level_curves(ell, nu_lo)
        power_hi, _ = self.level_curves(ell, nu_hi)
        return power_lo, power_hi, nu_hi

    def point_at(self, nus: np.ndarray) -> np.ndarray:
        """Stacked minimum-power vectors at the given per-user multipliers."""
        den = 1.0 + nus[:, None] * self.d
        u = nus[:, None] * np.conj(self.b_t) / den
        return np.einsum("lij,lj->li", self.t, u)


def solve_maxmin(
    problem: MaxMinQuadraticProblem,
    tol: float = 1e-5,
    max_iterations: int = 5000,
    warm_start: np.ndarray | None = None,
) -> SubproblemSolution:
    """Solve the max-min quadratic problem with a certified relative gap.

    When ``warm_start`` (a feasible stacked point) is supplied, the returned
    objective never falls below the min-objective at the warm start: the
    warm start always stays in the candidate pool. If the iteration cap is
    reached first, the best feasible point is returned with the achieved gap.
    """
    n_users = problem.n_users
    if problem.P <= 0:
        raise ValueError(f"power budget must be positive, got {problem.P}")
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    pencils = _Pencils(problem)

    best_obj = -np.inf
    best_v = np.zeros((n_users, problem.dim), dtype=complex)

    def ridged_power(v: np.ndarray) -> float:
        eye = np.eye(problem.dim)
        return sum(
            float(
                np.real(
                    v[ell].conj()
                    @ ((problem.A[ell] + power_ridge_size(problem.A[ell]) * eye) @ v[ell])
                )
            )
            for ell in range(n_users)
        )

    def consider(v: np.ndarray, power: float | None = None) -> None:
        nonlocal best_obj, best_v
        if power is None:
            power = ridged_power(v)
        # Rescale only genuine violations; a true-feasible warm start may
        # exceed the ridged budget by ridge order and must pass through
        # untouched so the warm-start guarantee holds exactly.
        if power > problem.P * (1.0 + 1e-9):
            v = v * np.sqrt(problem.P / power)
        obj = float(problem.objective_values(v).min())
        if obj > best_obj:
            best_obj = obj
            best_v = v.copy()

    if warm_start is not None:
        consider(np.asarray(warm_start, dtype=complex))

    # Inactive-constraint short cut: if the unconstrained per-user maximizers
    # exist and are jointly feasible, they solve the problem outright.
    if not pencils.escapes.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            u_free = np.conj(pencils.b_t) / pencils.d
        u_free[pencils.flat] = 0.0
        power_free = float((np.abs(u_free) ** 2).sum())
        if power_free <= problem.P:
            v_free = np.einsum("lij,lj->li", pencils.t, u_free)
            consider(v_free, power=power_free)
            return SubproblemSolution(v=best_v, objective=best_obj, gap=0.0, iterations=0)

    # Bracket the attainable level: the zero point is always feasible, and
    # the dual value at uniform weights upper-bounds the optimum.
    consider(np.zeros((n_users, problem.dim), dtype=complex), power=0.0)
    t_lo = best_obj
    uniform = np.full(n_users, 1.0 / n_users)
    t_hi = min(float(pencils.q_free.min()), pencils.dual_value(uniform))
    t_hi = max(t_hi, t_lo)
    upper = t_hi

    def feasibility(level: float):
        lo_sum = 0.0
        hi_sum = 0.0
        nus = np.zeros(n_users)
        for ell in range(n_users):
            p_lo, p_hi, nu_hi = pencils.min_power_bracket(ell, level)
            lo_sum += p_lo
            hi_sum += p_hi
            nus[ell] = nu_hi
            if lo_sum > problem.P:
                return False, nus
        return hi_sum <= problem.P, nus

    last_nus = None
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        scale = max(1.0, abs(t_lo), abs(t_hi))
        if (t_hi - t_lo) <= 0.25 * tol * scale:
            break
        level = 0.5 * (t_lo + t_hi)
        feasible, nus = feasibility(level)
        if feasible:
            t_lo = level
            last_nus = nus
            consider(pencils.point_at(nus))
        else:
            t_hi = level

    # Dual polish: recover simplex weights from the active multipliers of
    # the last feasible point and evaluate the dual there; any dual value is
    # a valid upper bound, so this can only tighten the certificate.
    if last_nus is not None and float(last_nus.sum()) > 0.0 and np.all(np.isfinite(last_nus)):
        lam_hat = last_nus / float(last_nus.sum())
        upper = min(upper, pencils.dual_value(lam_hat))
    upper = min(upper, t_hi)

    scale = max(1.0, abs(best_obj), abs(upper))
    gap = max(upper - best_obj, 0.0) / scale
    return SubproblemSolution(v=best_v, objective=best_obj, gap=gap, iterations=iterations)
