"""Lagrangian bound for the robust VUF maximum and its exactness checks.

The worst case max J(V) over the three boundary circles is bounded by the dual
function

    g(mu) = c0 + sum_p mu_p (|C_p|^2 - r_p^2) + q(mu)^T Q(mu)^-1 q(mu),
    Q(mu) = -(M + blkdiag(mu_p I_2)),  q(mu) = b - blkdiag(mu_p I_2) C,

valid for every mu with Q(mu) positive definite. Phases with zero radius are
constants: they are folded into the linear term b and the constant c0 before
the dual is formed, so mu only runs over phases with a proper circle.

g is convex on its domain. It is minimized by a short Nelder-Mead multistart and
then polished with a damped Newton method on the log-barrier g(mu) - t log det Q(mu)
for a decreasing t, which also reaches minima on the domain boundary. Every
evaluated mu is a valid bound, so the smallest value seen is returned.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize

from ..solvability.disks import DiskBundle
from ..unbalance.forms import build_quadratic_forms
from ..unbalance.metrics import SequenceKind
from .verdict import Direction, Exactness, Method, RobustVerdict, check_epsilon
from .vuf import vuf_metric

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.5
DEFAULT_RESTARTS = 4
DEFAULT_NM_MAX_ITER = 400
DEFAULT_PSD_TOL = 1e-8
DEFAULT_PG_TOL = 1e-10
DEFAULT_PG_MAX_ITER = 100000

RESTART_OFFSETS = (0.0, 0.5, 2.0, 8.0, 32.0)
POLISH_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class _ReducedProblem:
    """max V^T M V + 2 b^T V + c0 over the circles of the free phases."""

    free: Tuple[int, ...]
    matrix: np.ndarray
    linear: np.ndarray
    constant: float
    centers: np.ndarray
    offsets: np.ndarray

    @property
    def size(self) -> int:
        return len(self.free)


def _phase_index(phases) -> np.ndarray:
    return np.array([2 * p + k for p in phases for k in (0, 1)], dtype=int)


def _reduce(disks: DiskBundle, matrix: np.ndarray) -> _ReducedProblem:
    free = tuple(p for p in range(3) if disks.radii[p] > 0)
    fixed = tuple(p for p in range(3) if disks.radii[p] == 0)
    c = disks.real_centers
    fi, di = _phase_index(free), _phase_index(fixed)

    c_fixed = c[di]
    linear = matrix[np.ix_(fi, di)] @ c_fixed if len(di) else np.zeros(len(fi))
    constant = float(c_fixed @ matrix[np.ix_(di, di)] @ c_fixed) if len(di) else 0.0
    centers = c[fi]
    offsets = np.array([abs(disks.centers[p]) ** 2 - disks.radii[p] ** 2 for p in free])
    return _ReducedProblem(
        free=free,
        matrix=matrix[np.ix_(fi, fi)],
        linear=linear,
        constant=constant,
        centers=centers,
        offsets=offsets,
    )


class _DualTerms:
    """g, its gradient and Hessian at one mu (None factor when outside the domain)."""

    def __init__(self, problem: _ReducedProblem, mu: np.ndarray):
        self.problem = problem
        self.mu = np.asarray(mu, dtype=float)
        d = np.repeat(self.mu, 2)
        self.q_matrix = -(problem.matrix + np.diag(d))
        self.q_vector = problem.linear - d * problem.centers
        try:
            self.factor = cho_factor(self.q_matrix, lower=True)
        except LinAlgError:
            self.factor = None
            self.value = math.inf
            return
        self.x = cho_solve(self.factor, self.q_vector)
        self.value = float(problem.constant + self.mu @ problem.offsets + self.q_vector @ self.x)

    @property
    def feasible(self) -> bool:
        return self.factor is not None and math.isfinite(self.value)

    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.factor[0]))))

    def gradient(self) -> np.ndarray:
        # residual of the circle constraints at the Lagrangian maximizer
        diff = (self.x - self.problem.centers).reshape(-1, 2)
        radii_sq = np.sum(self.problem.centers.reshape(-1, 2) ** 2, axis=1) - self.problem.offsets
        return np.sum(diff ** 2, axis=1) - radii_sq

    def hessian(self) -> np.ndarray:
        k = self.problem.size
        w = np.zeros((2 * k, k))
        diff = self.x - self.problem.centers
        for i in range(k):
            w[2 * i:2 * i + 2, i] = diff[2 * i:2 * i + 2]
        return 2.0 * w.T @ cho_solve(self.factor, w)

    def barrier_derivatives(self) -> Tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian of -log det Q(mu)."""
        k = self.problem.size
        q_inv = cho_solve(self.factor, np.eye(2 * k))
        grad = np.array([np.trace(q_inv[2 * i:2 * i + 2, 2 * i:2 * i + 2]) for i in range(k)])
        hess = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                block = q_inv[2 * i:2 * i + 2, 2 * j:2 * j + 2]
                hess[i, j] = np.sum(block * block)
        return grad, hess


def _barrier_value(problem: _ReducedProblem, mu: np.ndarray, t: float) -> float:
    terms = _DualTerms(problem, mu)
    if not terms.feasible:
        return math.inf
    return terms.value - t * terms.log_det()


def _barrier_polish(
    problem: _ReducedProblem, mu: np.ndarray, scale: float, stages: int = 12, shrink: float = 0.1
) -> Tuple[np.ndarray, bool]:
    """Follow the barrier path from a strictly feasible mu toward the dual minimum.

    Converged when the best dual value moved by at most POLISH_RTOL * scale over
    the last stage.
    """
    t = 1e-1 * scale
    best_mu, best_value = mu, _DualTerms(problem, mu).value
    previous = best_value
    converged = False
    for _ in range(stages):
        for _ in range(50):
            terms = _DualTerms(problem, mu)
            b_grad, b_hess = terms.barrier_derivatives()
            grad = terms.gradient() + t * b_grad
            hess = terms.hessian() + t * b_hess
            try:
                step = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            decrement = float(-grad @ step)
            if decrement <= 1e-15 * scale:
                break
            current = terms.value - t * terms.log_det()
            alpha = 1.0
            while alpha > 1e-14:
                candidate = mu + alpha * step
                if _barrier_value(problem, candidate, t) <= current - 0.25 * alpha * decrement:
                    break
                alpha *= 0.5
            else:
                break
            mu = candidate
            value = _DualTerms(problem, mu).value
            if value < best_value:
                best_mu, best_value = mu, value
        converged = previous - best_value <= POLISH_RTOL * scale
        previous = best_value
        t *= shrink
    return best_mu, converged


def _minimize_dual(
    problem: _ReducedProblem,
    delta: float,
    restarts: int,
    max_iter: int = DEFAULT_NM_MAX_ITER,
    stop_at: Optional[float] = None,
) -> Tuple[np.ndarray, bool, bool]:
    """Minimize g; returns (mu, converged, stopped).

    With stop_at set, the search ends at the first mu whose bound is at or below
    it (stopped is then True and mu is not a minimizer).
    """
    lam_max = float(np.max(np.linalg.eigvalsh(problem.matrix)))
    mu0 = np.full(problem.size, -(lam_max + delta))
    best = {"mu": mu0, "value": _DualTerms(problem, mu0).value}

    def objective(mu):
        value = _DualTerms(problem, mu).value
        if value < best["value"]:
            best["mu"], best["value"] = np.array(mu, dtype=float), value
        return value

    def reached(value: float) -> bool:
        return stop_at is not None and value <= stop_at

    def halt(intermediate_result):
        if reached(best["value"]):
            raise StopIteration

    if reached(best["value"]):
        return best["mu"], True, True
    for offset in RESTART_OFFSETS[:max(1, restarts)]:
        result = minimize(
            objective,
            mu0 - offset,
            method="Nelder-Mead",
            callback=halt,
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": max_iter, "adaptive": True},
        )
        if reached(best["value"]):
            return best["mu"], True, True
        if result.success:
            break

    scale = max(1.0, abs(best["value"]))
    polished, converged = _barrier_polish(problem, best["mu"], scale)
    if _DualTerms(problem, polished).value < best["value"]:
        return polished, converged, False
    return best["mu"], converged, False


def _bordered_min_eig(terms: _DualTerms, gamma: float) -> float:
    problem = terms.problem
    corner = gamma - problem.constant - float(terms.mu @ problem.offsets)
    n = len(terms.q_vector)
    bordered = np.empty((n + 1, n + 1))
    bordered[:n, :n] = terms.q_matrix
    bordered[:n, n] = -terms.q_vector
    bordered[n, :n] = -terms.q_vector
    bordered[n, n] = corner
    return float(np.min(np.linalg.eigvalsh(bordered)))


def lgr_dual_value(disks: DiskBundle, eps: float, mu, which: SequenceKind = SequenceKind.NEGATIVE) -> float:
    """Dual bound at a given mu (one multiplier per phase; zero-radius phases ignored).

    Returns +inf outside the domain where Q(mu) is positive definite.
    """
    eps = check_epsilon(eps)
    problem = _reduce(disks, build_quadratic_forms().objective(which, eps))
    mu = np.asarray(mu, dtype=float).reshape(3)[list(problem.free)]
    if problem.size == 0:
        return problem.constant
    return _DualTerms(problem, mu).value


def vuf_lgr(
    disks: DiskBundle,
    eps: float,
    which: SequenceKind = SequenceKind.NEGATIVE,
    delta: float = DEFAULT_DELTA,
    restarts: int = DEFAULT_RESTARTS,
    psd_tol: float = DEFAULT_PSD_TOL,
    check_exactness: bool = True,
    pg_tol: float = DEFAULT_PG_TOL,
    pg_max_iter: int = DEFAULT_PG_MAX_ITER,
    max_iter: int = DEFAULT_NM_MAX_ITER,
    stop_at: Optional[float] = None,
) -> Tuple[float, np.ndarray, RobustVerdict]:
    """Lagrangian safe approximation of the robust VUF check.

    Args:
        disks: Disk bundle of the critical node
        eps: Tolerance in (0, 1)
        which: Negative- or zero-sequence VUF
        delta: Initial multipliers sit at -(lambda_max + delta)
        restarts: Most Nelder-Mead starts; later ones only run while none has converged
        psd_tol: Accepted smallest eigenvalue of the bordered certificate matrix
        check_exactness: Run the strong-duality checks to label the verdict
        max_iter: Iteration cap of each Nelder-Mead run
        stop_at: End the search at the first bound at or below this value; the
            pass/fail outcome against it is then final but gamma is not minimal

    Returns:
        (gamma, mu, verdict) with gamma >= max J over the circles; mu has one
        entry per phase (zero for zero-radius phases)
    """
    eps = check_epsilon(eps)
    which = SequenceKind(which)
    matrix = build_quadratic_forms().objective(which, eps)
    problem = _reduce(disks, matrix)

    mu_full = np.zeros(3)
    diagnostics = {"fixed_phases": [p for p in range(3) if p not in problem.free]}
    if problem.size == 0:
        gamma = problem.constant
        converged = True
        diagnostics["psd_min_eig"] = 0.0
    else:
        mu, converged, stopped = _minimize_dual(problem, delta, restarts, max_iter, stop_at)
        diagnostics["stopped_early"] = stopped
        terms = _DualTerms(problem, mu)
        gamma = terms.value
        mu_full[list(problem.free)] = mu
        min_eig = _bordered_min_eig(terms, gamma)
        diagnostics["psd_min_eig"] = min_eig
        if min_eig < -psd_tol:
            logger.warning(f"LGR certificate matrix has eigenvalue {min_eig:.3e} below -{psd_tol:.0e}")
    if not converged:
        logger.warning(f"LGR dual minimization did not fully converge; using best bound {gamma:.6g}")
    diagnostics["converged"] = converged
    diagnostics["mu"] = mu_full.tolist()

    exactness = Exactness.SAFE
    if check_exactness:
        if suff2_check(disks, eps, which):
            exactness = Exactness.STRONG_DUALITY
            diagnostics["strong_duality"] = "nullspace"
        else:
            check = suff1_check(disks, eps, which, tol=pg_tol, max_iter=pg_max_iter)
            if check.holds:
                exactness = Exactness.STRONG_DUALITY
                diagnostics["strong_duality"] = "boundary"

    logger.debug(f"LGR eps={eps}: gamma={gamma:.6g} mu={np.round(mu_full, 6).tolist()}")
    verdict = RobustVerdict.from_values(
        vuf_metric(which), Method.LGR, eps, [gamma], Direction.NON_POSITIVE, exactness, diagnostics
    )
    return gamma, mu_full, verdict


# ==================== Strong-duality checks ====================

@dataclass(frozen=True)
class DualityCheck:
    """Outcome of the boundary-optimality check.

    holds is None when an inner minimization did not converge.
    """

    holds: Optional[bool]
    interval: Tuple[bool, bool, bool]
    minima: Tuple[float, ...]
    lower_bounds: Tuple[float, ...]
    thresholds: Tuple[float, ...]
    iterations: Tuple[int, ...]

    def __bool__(self) -> bool:
        return self.holds is True


def _project(y: np.ndarray, radii: np.ndarray) -> np.ndarray:
    pairs = y.reshape(3, 2).copy()
    norms = np.linalg.norm(pairs, axis=1)
    outside = norms > radii
    pairs[outside] *= (radii[outside] / norms[outside])[:, None]
    return pairs.reshape(6)


def _min_pair_norm(
    g: np.ndarray, f: np.ndarray, radii: np.ndarray, threshold: float, tol: float, max_iter: int
) -> Tuple[Optional[bool], float, float, int]:
    """Decide whether min ||g y + f||^2 over the disks is >= threshold.

    Projected gradient with step 1/L. The Frank-Wolfe gap gives a certified
    lower bound, so the decision is exact once either bound crosses.

    Returns:
        (decision, upper estimate, lower bound, iterations)
    """
    if threshold <= 0:
        value = float(f @ f)
        return True, value, value, 0
    lipschitz = 2.0 * float(np.linalg.norm(g.T @ g, 2))
    y = np.zeros(6)
    value = lower = float(f @ f)
    for iteration in range(1, max_iter + 1):
        residual = g @ y + f
        value = float(residual @ residual)
        grad = 2.0 * g.T @ residual
        support = float(np.sum(radii * np.linalg.norm(grad.reshape(3, 2), axis=1)))
        lower = value - float(grad @ y) - support
        if lower >= threshold:
            return True, value, lower, iteration
        if value < threshold:
            return False, value, lower, iteration
        if lipschitz == 0:
            return False, value, lower, iteration
        y_next = _project(y - grad / lipschitz, radii)
        if lipschitz * float(np.linalg.norm(y_next - y)) <= tol:
            # converged with the minimum between lower and value; not certified
            return False, value, lower, iteration
        y = y_next
    return None, value, lower, max_iter


def suff1_check(
    disks: DiskBundle,
    eps: float,
    which: SequenceKind = SequenceKind.NEGATIVE,
    tol: float = DEFAULT_PG_TOL,
    max_iter: int = DEFAULT_PG_MAX_ITER,
) -> DualityCheck:
    """Sufficient condition for the Lagrangian bound to be exact.

    With A = eps^2 A_p - A_x, B = A - lambda_min(A) I and f = 2 A C, it requires
    for every phase pair (1,2), (3,4), (5,6) that f_pair lies outside the box
    [-r_i, r_i] x [-r_i+1, r_i+1], and that min ||(2 B Y + f)_pair||^2 over the
    product of closed disks is at least 4 B_pp^2 r_p^2.
    """
    eps = check_epsilon(eps)
    forms = build_quadratic_forms()
    a = eps ** 2 * forms.a_p - forms.numerator(which)
    b = a - float(np.min(np.linalg.eigvalsh(a))) * np.eye(6)
    c = disks.real_centers
    f = 2.0 * a @ c
    radii = disks.radii

    row_radius = np.array([
        2.0 * sum(radii[p] * np.linalg.norm(b[i, 2 * p:2 * p + 2]) for p in range(3))
        for i in range(6)
    ])
    interval = tuple(
        not (abs(f[i]) <= row_radius[i] and abs(f[i + 1]) <= row_radius[i + 1])
        for i in (0, 2, 4)
    )

    minima: List[float] = []
    lowers: List[float] = []
    thresholds: List[float] = []
    iterations: List[int] = []
    decisions: List[Optional[bool]] = []
    if all(interval):
        for p in range(3):
            rows = slice(2 * p, 2 * p + 2)
            threshold = 4.0 * b[2 * p, 2 * p] ** 2 * radii[p] ** 2
            decision, value, lower, its = _min_pair_norm(
                2.0 * b[rows, :], f[rows], radii, threshold, tol, max_iter
            )
            decisions.append(decision)
            minima.append(value)
            lowers.append(lower)
            thresholds.append(threshold)
            iterations.append(its)

    if not all(interval):
        holds: Optional[bool] = False
    elif any(d is False for d in decisions):
        holds = False
    elif any(d is None for d in decisions):
        holds = None
        logger.warning("Strong-duality check indeterminate: inner minimization hit its iteration cap")
    else:
        holds = True

    return DualityCheck(
        holds=holds,
        interval=interval,
        minima=tuple(minima),
        lower_bounds=tuple(lowers),
        thresholds=tuple(thresholds),
        iterations=tuple(iterations),
    )


def suff2_check(disks: DiskBundle, eps: float, which: SequenceKind = SequenceKind.NEGATIVE) -> bool:
    """Whether the centers lie in the null space of A_x - eps^2 A_p."""
    eps = check_epsilon(eps)
    c = disks.real_centers
    residual = float(np.max(np.abs(build_quadratic_forms().objective(which, eps) @ c)))
    return residual <= 1e-9 * max(1.0, float(np.max(np.abs(c))))
