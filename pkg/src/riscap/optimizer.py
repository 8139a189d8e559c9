"""
RIS phase optimization of the large-system mutual information.

With the fixed-point scalars frozen, the phases of RIS ``k`` only enter

    f_k(theta) = log det(I + c_k Phi^H S_r Phi S_t),   c_k = gamma_k t_1k r_2k,

whose gradient is ``-2 c_k Im diag(S_t M Phi^H S_r Phi)`` with
``M = (I + c_k Phi^H S_r Phi S_t)^{-1}``. The alternating loop re-solves the
fixed point after each phase update.

Sign convention: eigenvectors are ``u(q) ~ exp(i q . x)``, ``S_t`` belongs to
the incoming and ``S_r`` to the outgoing wave. The rank-one optimum is then
``theta_n = (q_r - q_t) . x_n``, the phase gradient that turns in-plane wave
vector ``q_t`` into ``q_r``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import PhaseProfile, ScenarioConfig, wrap_phase
from .covariance import PlanarGrid, analytic_spectrum, exact_spectrum, psd_sqrt
from .errors import ConvergenceError, DomainError
from .replica import ReplicaModel, solve_fixed_point

__all__ = [
    "Op2Result",
    "OptimizationReport",
    "closed_form_phases",
    "eigvec_phase_alignment",
    "alignment_coefficient",
    "Op2Problem",
    "op2_objective",
    "optimize_op2",
    "alternating_optimize",
    "optimize_phases",
    "write_optimization_csv",
]

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# Closed forms
# ----------------------------------------------------------------------------

def closed_form_phases(q_t, q_r, grid: PlanarGrid) -> np.ndarray:
    """
    Phase gradient aligning the dominant incoming and outgoing Fourier modes.

    Parameters
    ----------
    q_t, q_r : array_like, shape (2,)
        In-plane wave vectors (rad/m) of the largest eigenvalue of ``S_t``
        and ``S_r``.

    Returns
    -------
    ndarray, shape (N_s,)
        ``theta_n = (q_r - q_t) . x_n`` wrapped to ``[-pi, pi)``.
    """
    dq = np.asarray(q_r, dtype=float) - np.asarray(q_t, dtype=float)
    return wrap_phase(grid.element_positions[:, :2] @ dq)


def eigvec_phase_alignment(u_r, v_t, return_flags: bool = False):
    """
    ``theta_n = angle(u_r[n] conj(v_t[n]))`` for the dominant eigenvectors
    ``u_r`` of ``S_r`` and ``v_t`` of ``S_t``.

    Entries where ``|u_r[n] v_t[n]| < 1e-14`` get phase zero; pass
    ``return_flags=True`` to also receive the boolean mask of those entries.
    """
    u_r, v_t = np.asarray(u_r), np.asarray(v_t)
    if u_r.shape != v_t.shape or u_r.ndim != 1:
        raise DomainError("eigenvectors must be vectors of equal length")
    prod = u_r * np.conj(v_t)
    flags = np.abs(prod) < 1e-14
    theta = wrap_phase(np.where(flags, 0.0, np.angle(prod)))
    return (theta, flags) if return_flags else theta


def alignment_coefficient(theta, u_r, v_t) -> complex:
    """``u_r^H Phi v_t``; modulus one when the reflection maps ``v_t`` onto ``u_r``."""
    return complex(np.vdot(u_r, np.exp(1j * np.asarray(theta)) * v_t))


# ----------------------------------------------------------------------------
# Frozen-coefficient subproblem
# ----------------------------------------------------------------------------

class Op2Problem:
    """``f(theta) = log det(I + c Phi^H S_r Phi S_t)`` and its gradient for one RIS."""

    def __init__(self, S_r: np.ndarray, S_t: np.ndarray, c: float):
        if c < 0:
            raise DomainError("coefficient must be non-negative")
        self.S_r = np.asarray(S_r)
        self.S_t = np.asarray(S_t)
        if self.S_r.shape != self.S_t.shape:
            raise DomainError("S_r and S_t must have the same shape")
        self.c = float(c)
        self.root = psd_sqrt(self.S_t)
        self.n = self.S_t.shape[0]

    def _parts(self, theta):
        phi = np.exp(1j * np.asarray(theta, dtype=float))
        A = self.S_r * np.outer(phi.conj(), phi)
        B = np.eye(self.n) + self.c * (self.root @ A @ self.root)
        B = 0.5 * (B + B.conj().T)
        L = np.linalg.cholesky(B)
        value = 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))
        return A, L, value

    def value(self, theta) -> float:
        if self.c == 0:
            return 0.0
        return self._parts(theta)[2]

    def value_and_grad(self, theta):
        if self.c == 0:
            return 0.0, np.zeros(self.n)
        A, L, value = self._parts(theta)
        # H = S_t^{1/2} (I + c Sigma)^{-1} S_t^{1/2};  S_t M A = H A
        X = np.linalg.solve(L, self.root)
        H = X.conj().T @ X
        z = np.sum(H * A.T, axis=1)
        return value, -2.0 * self.c * z.imag


def op2_objective(theta, S_r, S_t, c) -> float:
    """
    ``sum_k log det(I + c_k Phi_k^H S_r,k Phi_k S_t,k)``.

    ``theta`` of shape ``(N_s,)`` with single matrices and scalar ``c``, or
    shape ``(K, N_s)`` with length-``K`` sequences.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        return Op2Problem(S_r, S_t, c).value(theta)
    return float(sum(Op2Problem(S_r[k], S_t[k], c[k]).value(theta[k])
                     for k in range(theta.shape[0])))


@dataclass
class Op2Result:
    theta: np.ndarray
    value: float
    initial_value: float
    iterations: int
    grad_norm: float
    converged: bool


def optimize_op2(S_r, S_t, c: float, init, step: Optional[float] = None,
                 max_iter: int = 500, tol: float = 1e-7) -> Op2Result:
    """
    Gradient ascent on the phases of one RIS with backtracking line search.

    Working directly on ``theta`` keeps every reflection coefficient on the
    unit circle. Trial steps follow the Barzilai-Borwein rule (``step`` for
    the first one) and are halved until the Armijo condition holds, so the
    objective never decreases. Stops when the largest gradient component
    is below ``tol``; otherwise the best point is returned with
    ``converged=False``.
    """
    prob = Op2Problem(S_r, S_t, c)
    theta = np.asarray(init, dtype=float).copy()
    if theta.shape != (prob.n,):
        raise DomainError("initial phases do not match the RIS size")
    f, g = prob.value_and_grad(theta)
    f0 = f
    gmax = float(np.max(np.abs(g), initial=0.0))
    if step is None:
        step = 1.0 / max(gmax, 1e-12) * 0.1
    it = 0
    converged = gmax < tol
    while not converged and it < max_iter:
        it += 1
        gg = float(g @ g)
        s = step
        accepted = False
        for _ in range(60):
            trial = theta + s * g
            f_new, g_new = prob.value_and_grad(trial)
            if f_new >= f + 1e-4 * s * gg:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            # no ascent at machine precision: stationary for practical purposes
            break
        dtheta, dg = trial - theta, g_new - g
        theta, f, g = trial, f_new, g_new
        gmax = float(np.max(np.abs(g)))
        converged = gmax < tol
        # ascent Barzilai-Borwein step: s = |dx|^2 / -(dx . dg)
        curv = -float(dtheta @ dg)
        step = float(dtheta @ dtheta) / curv if curv > 0 else 2.0 * s
    return Op2Result(wrap_phase(theta), f, f0, it, gmax, converged)


# ----------------------------------------------------------------------------
# Alternating optimization
# ----------------------------------------------------------------------------

@dataclass
class OptimizationReport:
    initial_C: float
    final_C: float
    outer_iterations: int
    C_trace: list
    method: str
    phases: PhaseProfile
    grad_norms: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)

    @property
    def gain(self) -> float:
        return self.final_C - self.initial_C


def _solve(config, phases, fp_tol, warm=None):
    model = ReplicaModel(config, phases)
    sol = solve_fixed_point(model, tol=fp_tol, init=warm)
    if not sol.converged:
        sol = solve_fixed_point(model, tol=fp_tol, init=warm, max_iter=200000,
                                damping=0.1)
    if not sol.converged:
        raise ConvergenceError(f"fixed point did not converge (residual {sol.residual:.3e})")
    return model, sol


def alternating_optimize(config: ScenarioConfig, init: Optional[PhaseProfile] = None,
                         outer_tol: float = 1e-8, max_outer: int = 50,
                         fp_tol: float = 1e-10, op2_max_iter: int = 500,
                         op2_tol: float = 1e-7) -> OptimizationReport:
    """
    Maximise the large-system MI over the RIS phases.

    Each outer iteration solves the fixed point for the current phases,
    freezes ``c_k = gamma_k t_1k r_2k``, improves every RIS with
    :func:`optimize_op2` and re-evaluates ``C``. A phase update that would
    lower ``C`` is rejected and ends the loop, so ``C_trace`` never
    decreases. The loop also stops when ``C`` improves by less than
    ``outer_tol`` or after ``max_outer`` iterations.

    Raises
    ------
    ConvergenceError
        If a fixed-point solve fails, with the outer iteration number.
    """
    K, Ns = config.K, config.Ns
    phases = PhaseProfile.zeros(K, Ns) if init is None else PhaseProfile(init.theta.copy())
    try:
        model, sol = _solve(config, phases, fp_tol)
    except ConvergenceError as exc:
        raise ConvergenceError(f"outer iteration 0: {exc}") from exc
    C = model.objective(sol.vector).C_per_Nt
    report = OptimizationReport(C, C, 0, [C], "alternating", phases, [np.nan], [0])
    for outer in range(1, max_outer + 1):
        theta = phases.theta.copy()
        gnorm, inner = 0.0, 0
        for k in range(K):
            c = config.gamma[k] * sol.t_1[k] * sol.r_2[k]
            res = optimize_op2(config.covariances.S_r[k], config.covariances.S_t[k], c,
                               theta[k], max_iter=op2_max_iter, tol=op2_tol)
            theta[k] = res.theta
            gnorm = max(gnorm, res.grad_norm)
            inner += res.iterations
        trial = PhaseProfile(theta)
        try:
            model_new, sol_new = _solve(config, trial, fp_tol, warm=sol)
        except ConvergenceError as exc:
            raise ConvergenceError(f"outer iteration {outer}: {exc}") from exc
        C_new = model_new.objective(sol_new.vector).C_per_Nt
        if C_new < C:
            log.debug("outer iteration %d rejected: C %.12g -> %.12g", outer, C, C_new)
            break
        improvement = C_new - C
        phases, sol, C = trial, sol_new, C_new
        report.C_trace.append(C)
        report.grad_norms.append(gnorm)
        report.inner_iterations.append(inner)
        report.outer_iterations = outer
        if improvement < outer_tol:
            break
    report.final_C = C
    report.phases = phases
    return report


def optimize_phases(config: ScenarioConfig, method: str = "alternating",
                    **kwargs) -> OptimizationReport:
    """
    Phase profile by one of three methods, reported with its MI.

    ``closed_form`` uses the dominant Fourier labels of the asymptotic
    spectra (needs ``config.geometry``), ``eig_align`` the dominant exact
    eigenvectors, ``alternating`` runs :func:`alternating_optimize`
    (remaining keyword arguments are passed on). The two closed forms can
    seed the alternating loop via ``init=``.
    """
    if method == "alternating":
        return alternating_optimize(config, **kwargs)
    cov = config.covariances
    rows = []
    for k in range(config.K):
        if method == "closed_form":
            if not config.geometry:
                raise DomainError("closed-form phases need the RIS geometry")
            grid, w_in, w_out = config.geometry[k]
            q_t = analytic_spectrum(grid, w_in).q_vectors[0]
            q_r = analytic_spectrum(grid, w_out).q_vectors[0]
            rows.append(closed_form_phases(q_t, q_r, grid))
        elif method == "eig_align":
            v_t = exact_spectrum(cov.S_t[k]).eigenvectors[:, 0]
            u_r = exact_spectrum(cov.S_r[k]).eigenvectors[:, 0]
            rows.append(eigvec_phase_alignment(u_r, v_t))
        else:
            raise DomainError(f"unknown optimization method {method!r}")
    phases = PhaseProfile(np.array(rows).reshape(config.K, config.Ns))
    base = PhaseProfile.zeros(config.K, config.Ns)
    fp_tol = kwargs.get("fp_tol", 1e-10)
    m0, s0 = _solve(config, base, fp_tol)
    m1, s1 = _solve(config, phases, fp_tol)
    C0 = m0.objective(s0.vector).C_per_Nt
    C1 = m1.objective(s1.vector).C_per_Nt
    return OptimizationReport(C0, C1, 0, [C1], method, phases)


def write_optimization_csv(path, report: OptimizationReport) -> None:
    """``outer_iter,C_nats_per_Nt,grad_norm,inner_iters`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("outer_iter,C_nats_per_Nt,grad_norm,inner_iters\n")
        for i, C in enumerate(report.C_trace):
            g = report.grad_norms[i] if i < len(report.grad_norms) else np.nan
            n = report.inner_iterations[i] if i < len(report.inner_iterations) else 0
            fh.write(f"{i},{C:.12e},{g:.6e},{n}\n")
