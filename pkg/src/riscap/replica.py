"""
Large-system (replica) expression for the ergodic mutual information.

For frozen RIS phases the ergodic mutual information per transmit antenna
converges to

    C = (1/N_t) [ sum_k log det(I + gamma_k t_1k r_2k Sigma_k)
                  + log det(I + R~) + log det(I + rho Q T~) ]
        - r_d t_d - sum_k (r_1k t_1k + r_2k t_2k)

with ``R~ = r_d R_d + sum_k r_1k R_k``, ``T~ = t_d T_d + sum_k t_2k T_k``,
``Sigma_k = S_t,k^{1/2} Phi_k^H S_r,k Phi_k S_t,k^{1/2}`` and the scalars
fixed by the stationarity of ``C``. The scalar vector is laid out as
``[t_d, r_d, t_1 (K), r_1 (K), t_2 (K), r_2 (K)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import PhaseProfile, ScenarioConfig
from .covariance import psd_sqrt
from .errors import ConvergenceError, DomainError

__all__ = [
    "FixedPointSolution",
    "AsymptoticMI",
    "sigma_k",
    "ReplicaModel",
    "solve_fixed_point",
    "asymptotic_mi",
    "write_trace_csv",
]


def sigma_k(S_t: np.ndarray, S_r: np.ndarray, Phi: np.ndarray) -> np.ndarray:
    """
    ``S_t^{1/2} Phi^H S_r Phi S_t^{1/2}``.

    ``Phi`` may be the diagonal matrix or the vector of its diagonal.
    """
    S_t, S_r = np.asarray(S_t), np.asarray(S_r)
    phi = np.asarray(Phi)
    if phi.ndim == 2:
        phi = np.diagonal(phi)
    n = S_t.shape[0]
    if S_r.shape != (n, n) or phi.shape != (n,):
        raise DomainError("S_t, S_r and Phi must share the RIS dimension")
    A = S_r * np.outer(phi.conj(), phi)
    root = psd_sqrt(S_t)
    out = root @ A @ root
    return 0.5 * (out + out.conj().T)


@dataclass
class FixedPointSolution:
    t_d: float
    r_d: float
    t_1: np.ndarray
    r_1: np.ndarray
    t_2: np.ndarray
    r_2: np.ndarray
    residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([[self.t_d, self.r_d], self.t_1, self.r_1, self.t_2, self.r_2])

    @classmethod
    def from_vector(cls, x, K, **kw) -> "FixedPointSolution":
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), float(x[1]), x[2:2 + K].copy(), x[2 + K:2 + 2 * K].copy(),
                   x[2 + 2 * K:2 + 3 * K].copy(), x[2 + 3 * K:2 + 4 * K].copy(), **kw)


@dataclass(frozen=True)
class AsymptoticMI:
    """Large-system mutual information and its additive pieces (nats / N_t)."""

    C_per_Nt: float
    Nt: int
    ris_logdet: float
    rx_logdet: float
    tx_logdet: float
    penalty: float

    @property
    def total_nats(self) -> float:
        return self.C_per_Nt * self.Nt

    @property
    def terms(self) -> dict:
        return {"ris_logdet": self.ris_logdet, "rx_logdet": self.rx_logdet,
                "tx_logdet": self.tx_logdet, "penalty": self.penalty}


def _logdet(A: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(A)
    return float(val)


class ReplicaModel:
    """
    Fixed-point map and objective of the large-system expression for one
    set of RIS phases.

    ``Sigma_k`` only enters through its eigenvalues, which are computed
    once here.
    """

    def __init__(self, config: ScenarioConfig, phases: Optional[PhaseProfile] = None):
        self.config = config
        K, Ns = config.K, config.Ns
        if phases is None:
            phases = PhaseProfile.zeros(K, Ns)
        if K and (phases.K != K or phases.Ns != Ns):
            raise DomainError("phase profile does not match the scenario")
        self.phases = phases
        cov = config.covariances
        self.sigma_eigs = []
        for k in range(K):
            Sig = sigma_k(cov.S_t[k], cov.S_r[k], phases.reflection(k))
            self.sigma_eigs.append(np.clip(np.linalg.eigvalsh(Sig), 0.0, None))
        self.direct = bool(config.direct_link)
        self._QT_d = config.Q @ cov.T_d
        self._QT = [config.Q @ T for T in cov.T]

    @property
    def size(self) -> int:
        return 2 + 4 * self.config.K

    def split(self, x):
        K = self.config.K
        return (x[0], x[1], x[2:2 + K], x[2 + K:2 + 2 * K],
                x[2 + 2 * K:2 + 3 * K], x[2 + 3 * K:2 + 4 * K])

    def _tilde(self, x):
        cov = self.config.covariances
        t_d, r_d, t_1, r_1, t_2, r_2 = self.split(x)
        Rt = np.zeros((cov.Nr, cov.Nr), dtype=complex)
        Tt = np.zeros((cov.Nt, cov.Nt), dtype=complex)
        if self.direct:
            Rt = Rt + r_d * cov.R_d
            Tt = Tt + t_d * cov.T_d
        for k in range(self.config.K):
            Rt = Rt + r_1[k] * cov.R[k]
            Tt = Tt + t_2[k] * cov.T[k]
        return Rt, Tt

    def update(self, x: np.ndarray) -> np.ndarray:
        """One application of the fixed-point map."""
        cfg, cov = self.config, self.config.covariances
        Nt, rho, gamma = cfg.Nt, cfg.rho, cfg.gamma
        t_d, r_d, t_1, r_1, t_2, r_2 = self.split(x)
        Rt, Tt = self._tilde(x)

        # receive side: (I + R~)^{-1} R_.
        A_r = np.eye(cov.Nr) + Rt
        mats = ([cov.R_d] if self.direct else []) + list(cov.R)
        tr_r = [np.trace(np.linalg.solve(A_r, M)).real / Nt for M in mats]
        # transmit side: rho Q T_. (I + rho Q T~)^{-1}
        A_t = np.eye(Nt) + rho * (cfg.Q @ Tt)
        mats = ([self._QT_d] if self.direct else []) + self._QT
        tr_t = [rho * np.trace(np.linalg.solve(A_t, M)).real / Nt for M in mats]

        out = np.zeros_like(x)
        if self.direct:
            out[0], out[1] = tr_r.pop(0), tr_t.pop(0)
        K = cfg.K
        new_t1 = np.array(tr_r)
        new_r2 = np.array(tr_t)
        new_r1 = np.empty(K)
        new_t2 = np.empty(K)
        for k in range(K):
            lam = self.sigma_eigs[k]
            c = gamma[k] * t_1[k] * r_2[k]
            psi = np.sum(lam / (1.0 + c * lam)) / Nt
            new_r1[k] = gamma[k] * r_2[k] * psi
            new_t2[k] = gamma[k] * t_1[k] * psi
        out[2:2 + K] = new_t1
        out[2 + K:2 + 2 * K] = new_r1
        out[2 + 2 * K:2 + 3 * K] = new_t2
        out[2 + 3 * K:2 + 4 * K] = new_r2
        return out

    def residual(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.update(x) - x), initial=0.0))

    def objective(self, x: np.ndarray) -> AsymptoticMI:
        """Evaluate ``C`` at an arbitrary scalar vector (not only at the fixed point)."""
        cfg, cov = self.config, self.config.covariances
        Nt = cfg.Nt
        t_d, r_d, t_1, r_1, t_2, r_2 = self.split(x)
        Rt, Tt = self._tilde(x)
        ris = 0.0
        for k in range(cfg.K):
            c = cfg.gamma[k] * t_1[k] * r_2[k]
            ris += float(np.sum(np.log1p(c * self.sigma_eigs[k])))
        rx = _logdet(np.eye(cov.Nr) + Rt)
        tx = _logdet(np.eye(Nt) + cfg.rho * (cfg.Q @ Tt))
        pen = float(np.sum(r_1 * t_1) + np.sum(r_2 * t_2))
        if self.direct:
            pen += float(r_d * t_d)
        C = (ris + rx + tx) / Nt - pen
        return AsymptoticMI(C, Nt, ris / Nt, rx / Nt, tx / Nt, pen)

    def initial(self) -> np.ndarray:
        x = np.ones(self.size)
        if not self.direct:
            x[:2] = 0.0
        return x


def solve_fixed_point(config: ScenarioConfig, phases: Optional[PhaseProfile] = None,
                      tol: float = 1e-9, max_iter: int = 20000, damping: float = 0.5,
                      init=None, record: bool = False) -> FixedPointSolution:
    """
    Solve the fixed-point system by damped Picard iteration.

    ``x <- (1 - d) x + d F(x)`` starting from all ones (or ``init``), until
    the largest change of any scalar at the nominal damping,
    ``damping * max|F(x) - x|``, drops below ``tol``. The working damping
    ``d`` is halved (down to ``damping / 64``) whenever the residual grows
    three iterations in a row, and doubled back after twenty quiet ones.
    Exhausting ``max_iter`` returns a solution flagged ``converged=False``.

    Parameters
    ----------
    init : array_like or FixedPointSolution, optional
        Starting point (non-negative).
    record : bool
        Keep ``(iteration, residual, x)`` after every iteration in ``history``.
    """
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    model = config if isinstance(config, ReplicaModel) else ReplicaModel(config, phases)
    K = model.config.K
    if init is None:
        x = model.initial()
    elif isinstance(init, FixedPointSolution):
        x = init.vector.copy()
    else:
        x = np.array(init, dtype=float)
    if x.shape != (model.size,) or np.any(x < 0):
        raise DomainError("initial point must be a non-negative vector of the right size")
    if not model.direct:
        x[:2] = 0.0

    # at zero SNR the map settles exactly after a few plain steps (r_d and r_2
    # vanish at once, then r_1), so damping would only slow it down
    d = 1.0 if model.config.rho == 0 else damping
    history = []
    prev_res = np.inf
    growth = calm = 0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        fx = model.update(x)
        res = float(np.max(np.abs(fx - x), initial=0.0))
        # convergence is judged on the nominal-damping update so that
        # later damping reductions cannot fake a small step
        if damping * res < tol:
            converged = True
            break
        if res > prev_res:
            growth, calm = growth + 1, 0
        else:
            growth, calm = 0, calm + 1
        if growth >= 3 and d > damping / 64:
            d *= 0.5
            growth = 0
        elif calm >= 20 and d < damping:
            d = min(2.0 * d, damping)
            calm = 0
        prev_res = res
        x = (1.0 - d) * x + d * fx
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ConvergenceError(f"fixed-point iterate left the domain at iteration {it}")
        if record:
            history.append((it, model.residual(x), x.copy()))
    return FixedPointSolution.from_vector(x, K, residual=model.residual(x), iterations=it,
                                          converged=converged, history=history)


def asymptotic_mi(config: ScenarioConfig, phases: Optional[PhaseProfile] = None,
                  solution: Optional[FixedPointSolution] = None) -> AsymptoticMI:
    """
    Large-system ergodic mutual information at a converged fixed point.

    The fixed point is solved with default settings when ``solution`` is
    not given.

    Raises
    ------
    ConvergenceError
        If the solution is flagged as not converged.
    """
    model = ReplicaModel(config, phases)
    if solution is None:
        solution = solve_fixed_point(model)
    if not solution.converged:
        raise ConvergenceError(
            f"fixed point not converged after {solution.iterations} iterations "
            f"(residual {solution.residual:.3e})")
    return model.objective(solution.vector)


def write_trace_csv(path, solution: FixedPointSolution) -> None:
    """Dump a recorded convergence history as CSV."""
    K = len(solution.t_1)
    cols = ["iteration", "residual", "t_d", "r_d"]
    for k in range(1, K + 1):
        cols += [f"t_1{k}", f"r_1{k}", f"t_2{k}", f"r_2{k}"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for it, res, x in solution.history:
            s = FixedPointSolution.from_vector(x, K, residual=res, iterations=it,
                                               converged=False)
            vals = [s.t_d, s.r_d]
            for k in range(K):
                vals += [s.t_1[k], s.r_1[k], s.t_2[k], s.r_2[k]]
            fh.write(f"{it},{res:.12e}," + ",".join(f"{v:.12e}" for v in vals) + "\n")
