"""
Instantaneous mutual information and its Monte Carlo ergodic average.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import PhaseProfile, ScenarioConfig, assemble_total_channel, draw_sample
from .errors import DomainError

__all__ = ["MCEstimate", "instantaneous_mi", "ergodic_mi_mc", "mi_samples"]


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean (nats) and standard error of the mutual information."""

    mean_nats: float
    std_error: float
    n_samples: int
    Nt: int

    @property
    def per_antenna_mean(self) -> float:
        return self.mean_nats / self.Nt

    @property
    def per_antenna_std_error(self) -> float:
        return self.std_error / self.Nt


def _logdet_cholesky(A: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(A)
    return 2.0 * np.sum(np.log(np.real(np.diagonal(L, axis1=-2, axis2=-1))), axis=-1)


def instantaneous_mi(G: np.ndarray, Q: np.ndarray, rho: float) -> float:
    """
    ``log det(I + rho G Q G^H)`` in nats.

    Evaluated through a Cholesky factor of the Hermitian positive definite
    argument.

    Raises
    ------
    DomainError
        If ``rho < 0``, shapes disagree, or ``Q`` is not positive semi-definite.
    """
    G = np.asarray(G)
    Q = np.asarray(Q)
    if rho < 0:
        raise DomainError("SNR must be non-negative")
    if G.ndim != 2 or Q.shape != (G.shape[1], G.shape[1]):
        raise DomainError("input covariance does not match the channel")
    if np.max(np.abs(Q - Q.conj().T), initial=0.0) > 1e-9 * max(1.0, np.abs(Q).max()):
        raise DomainError("input covariance is not Hermitian")
    if Q.size and np.linalg.eigvalsh(Q)[0] < -1e-10 * max(1.0, np.trace(Q).real):
        raise DomainError("input covariance is not positive semi-definite")
    A = G @ Q @ G.conj().T
    A = np.eye(G.shape[0]) + rho * 0.5 * (A + A.conj().T)
    return max(float(_logdet_cholesky(A)), 0.0)


def _chunk_values(config: ScenarioConfig, phases: PhaseProfile, start: int, stop: int
                  ) -> np.ndarray:
    G = np.stack([assemble_total_channel(draw_sample(config, i), phases, config)
                  for i in range(start, stop)])
    A = G @ config.Q @ np.conj(np.swapaxes(G, -1, -2))
    A = np.eye(config.Nr) + config.rho * 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    return np.maximum(_logdet_cholesky(A), 0.0)


def mi_samples(config: ScenarioConfig, phases: PhaseProfile, n_samples: int,
               workers: int = 1, chunk: int = 128) -> np.ndarray:
    """
    Per-sample mutual information for sample indices ``0 .. n_samples-1``.

    The work is split into fixed-size chunks of indices regardless of
    ``workers``, so the result does not depend on the worker count.
    """
    bounds = [(s, min(s + chunk, n_samples)) for s in range(0, n_samples, chunk)]
    if workers <= 1:
        parts = [_chunk_values(config, phases, a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: _chunk_values(config, phases, *ab), bounds))
    return np.concatenate(parts) if parts else np.zeros(0)


def ergodic_mi_mc(config: ScenarioConfig, phases: PhaseProfile, n_samples: int = 2000,
                  workers: int = 1) -> MCEstimate:
    """
    Monte Carlo estimate of the ergodic mutual information.

    Deterministic for a given ``config.seed``: sample ``i`` always uses the
    stream derived from ``(seed, i)``.
    """
    if n_samples < 2:
        raise DomainError("at least two samples are needed for a standard error")
    values = mi_samples(config, phases, n_samples, workers)
    mean = float(np.sum(values) / n_samples)
    var = float(np.sum((values - mean) ** 2) / (n_samples - 1))
    return MCEstimate(mean, float(np.sqrt(var / n_samples)), n_samples, config.Nt)
