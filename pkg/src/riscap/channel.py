"""
Kronecker-correlated fading channels of an RIS-assisted MIMO link.

The end-to-end channel is

    G_tot = G_d + sum_k sqrt(gamma_k) G_r,k Phi_k G_t,k

with each block drawn as ``sqrt(1/N_t) A^{1/2} W B^{1/2}`` for its left and
right covariances ``A``, ``B`` and an i.i.d. standard complex Gaussian core
``W``. Every Monte Carlo draw owns a random stream derived from
``(seed, sample_index)``, so a sample can be regenerated in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .covariance import psd_sqrt
from .errors import DomainError

__all__ = [
    "CovarianceSet",
    "ScenarioConfig",
    "PhaseProfile",
    "ChannelSample",
    "wrap_phase",
    "sample_kronecker",
    "complex_gaussian",
    "sample_stream",
    "draw_sample",
    "assemble_total_channel",
    "phase_profile_to_matrices",
]


def _check_trace(name: str, M: np.ndarray, expected: float, rtol: float = 1e-9):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"{name} must be a square matrix")
    if np.max(np.abs(M - M.conj().T), initial=0.0) > 1e-9 * max(1.0, expected):
        raise DomainError(f"{name} is not Hermitian")
    tr = np.trace(M).real
    if abs(tr - expected) > rtol * expected:
        raise DomainError(f"trace of {name} is {tr:.12g}, expected {expected:g}")


@dataclass
class CovarianceSet:
    """
    Covariances of the direct link and of the two hops through each RIS.

    ``S_t[k]`` is the RIS-side covariance of the TX -> RIS channel (the
    incoming wave) and ``S_r[k]`` that of the RIS -> RX channel (the
    outgoing wave). Traces must equal the matching array sizes.
    """

    R_d: np.ndarray
    T_d: np.ndarray
    R: list = field(default_factory=list)
    T: list = field(default_factory=list)
    S_r: list = field(default_factory=list)
    S_t: list = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.R) == len(self.T) == len(self.S_r) == len(self.S_t)):
            raise DomainError("per-RIS covariance lists differ in length")
        n_r, n_t = np.shape(self.R_d)[0], np.shape(self.T_d)[0]
        _check_trace("R_d", self.R_d, n_r)
        _check_trace("T_d", self.T_d, n_t)
        n_s = None
        for k in range(len(self.S_t)):
            _check_trace(f"R[{k}]", self.R[k], n_r)
            _check_trace(f"T[{k}]", self.T[k], n_t)
            if np.shape(self.R[k])[0] != n_r or np.shape(self.T[k])[0] != n_t:
                raise DomainError(f"array covariances of RIS {k} have the wrong size")
            ns_k = np.shape(self.S_t[k])[0]
            if n_s is None:
                n_s = ns_k
            if ns_k != n_s or np.shape(self.S_r[k])[0] != n_s:
                raise DomainError("all RISs must have the same number of elements")
            _check_trace(f"S_t[{k}]", self.S_t[k], n_s)
            _check_trace(f"S_r[{k}]", self.S_r[k], n_s)

    @classmethod
    def uncorrelated_arrays(cls, n_r: int, n_t: int, S_r: Sequence, S_t: Sequence
                            ) -> "CovarianceSet":
        """Identity TX/RX covariances with the given RIS covariances."""
        K = len(S_t)
        return cls(np.eye(n_r), np.eye(n_t), [np.eye(n_r)] * K, [np.eye(n_t)] * K,
                   list(S_r), list(S_t))

    @property
    def K(self) -> int:
        return len(self.S_t)

    @property
    def Nr(self) -> int:
        return np.shape(self.R_d)[0]

    @property
    def Nt(self) -> int:
        return np.shape(self.T_d)[0]

    @property
    def Ns(self) -> int:
        return np.shape(self.S_t[0])[0] if self.S_t else 0


def wrap_phase(theta) -> np.ndarray:
    """Map phases into ``[-pi, pi)``."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


@dataclass
class PhaseProfile:
    """Reflection phases ``theta[k, n]`` of every RIS element, in radians."""

    theta: np.ndarray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if not np.all(np.isfinite(t)):
            raise DomainError("phases must be finite")
        self.theta = wrap_phase(t)

    @classmethod
    def zeros(cls, K: int, Ns: int) -> "PhaseProfile":
        return cls(np.zeros((K, Ns)))

    @classmethod
    def random(cls, K: int, Ns: int, seed: int) -> "PhaseProfile":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(-np.pi, np.pi, size=(K, Ns)))

    @property
    def K(self) -> int:
        return self.theta.shape[0]

    @property
    def Ns(self) -> int:
        return self.theta.shape[1]

    def reflection(self, k: int) -> np.ndarray:
        """Diagonal of ``Phi_k``."""
        return np.exp(1j * self.theta[k])

    def matrices(self) -> list:
        return phase_profile_to_matrices(self)


def phase_profile_to_matrices(phases: PhaseProfile) -> list:
    """Diagonal unit-modulus reflection matrices ``Phi_k = diag(exp(i theta_k))``."""
    return [np.diag(phases.reflection(k)) for k in range(phases.K)]


@dataclass
class ScenarioConfig:
    """
    Everything that defines the ergodic mutual information of the link.

    Parameters
    ----------
    rho : float
        Linear SNR of the direct link.
    gamma : array_like, shape (K,)
        Linear relative SNR gain of each RIS.
    covariances : CovarianceSet
    Q : ndarray, optional
        Input covariance with trace ``N_t``; identity by default.
    direct_link : bool
        Whether ``G_d`` is part of the channel.
    seed : int
        Root seed of the Monte Carlo streams.
    geometry : list, optional
        Per-RIS ``(grid, incoming_weight, outgoing_weight)`` triples the
        RIS covariances were built from, when known.
    """

    rho: float
    gamma: np.ndarray
    covariances: CovarianceSet
    Q: Optional[np.ndarray] = None
    direct_link: bool = True
    seed: int = 0
    geometry: Optional[list] = None

    def __post_init__(self):
        cov = self.covariances
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if self.gamma.shape != (cov.K,):
            raise DomainError(f"expected {cov.K} RIS gains, got {self.gamma.size}")
        if self.rho < 0 or np.any(self.gamma < 0):
            raise DomainError("SNR and RIS gains must be non-negative")
        if self.Q is None:
            self.Q = np.eye(cov.Nt)
        self.Q = np.asarray(self.Q)
        _check_trace("Q", self.Q, cov.Nt)
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def Nt(self) -> int:
        return self.covariances.Nt

    @property
    def Nr(self) -> int:
        return self.covariances.Nr

    @property
    def Ns(self) -> int:
        return self.covariances.Ns

    @property
    def K(self) -> int:
        return self.covariances.K

    @property
    def beta_r(self) -> float:
        return self.Nr / self.Nt

    @property
    def beta_s(self) -> float:
        return self.Ns / self.Nt

    @cached_property
    def roots(self) -> dict:
        """Matrix square roots used for colouring, computed once."""
        cov = self.covariances
        return {
            "R_d": psd_sqrt(cov.R_d), "T_d": psd_sqrt(cov.T_d),
            "R": [psd_sqrt(m) for m in cov.R], "T": [psd_sqrt(m) for m in cov.T],
            "S_r": [psd_sqrt(m) for m in cov.S_r], "S_t": [psd_sqrt(m) for m in cov.S_t],
        }


@dataclass
class ChannelSample:
    G_d: np.ndarray
    G_r: list
    G_t: list


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. circularly-symmetric complex Gaussian entries of unit variance."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for Monte Carlo sample ``index``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _colour(left_root, right_root, scale, W):
    return np.sqrt(scale) * (left_root @ W @ right_root)


def sample_kronecker(R: np.ndarray, T: np.ndarray, scale: float,
                     rng: np.random.Generator) -> np.ndarray:
    """
    Draw ``G = sqrt(scale) R^{1/2} W T^{1/2}``.

    Row covariance is ``scale * R`` and column covariance ``scale * T^T``,
    i.e. ``E[G_im conj(G_jn)] = scale R_ij T_nm``; the two coincide with
    ``scale R_ij T_mn`` whenever ``T`` is real.

    Raises
    ------
    DomainError
        If ``R`` or ``T`` is indefinite.
    """
    Rh, Th = psd_sqrt(R), psd_sqrt(T)
    W = complex_gaussian(rng, (Rh.shape[0], Th.shape[0]))
    return _colour(Rh, Th, scale, W)


def draw_sample(config: ScenarioConfig, index: int) -> ChannelSample:
    """
    Channel realization number ``index`` of the scenario.

    Draw order inside a stream is ``G_d`` then, per RIS, ``G_r,k`` and
    ``G_t,k``; the direct block is drawn even when the direct link is
    disabled so streams stay aligned across configurations.
    """
    rng = sample_stream(config.seed, index)
    roots = config.roots
    scale = 1.0 / config.Nt
    Nt, Nr, Ns = config.Nt, config.Nr, config.Ns
    G_d = _colour(roots["R_d"], roots["T_d"], scale, complex_gaussian(rng, (Nr, Nt)))
    G_r, G_t = [], []
    for k in range(config.K):
        # G_r,k = R^{1/2} W S_r^{1/2} keeps Sigma_k = S_t^{1/2} Phi^H S_r Phi S_t^{1/2}
        G_r.append(_colour(roots["R"][k], roots["S_r"][k], scale,
                           complex_gaussian(rng, (Nr, Ns))))
        G_t.append(_colour(roots["S_t"][k], roots["T"][k], scale,
                           complex_gaussian(rng, (Ns, Nt))))
    return ChannelSample(G_d, G_r, G_t)


def assemble_total_channel(sample: ChannelSample, phases: PhaseProfile,
                           config: ScenarioConfig) -> np.ndarray:
    """``G_tot = G_d + sum_k sqrt(gamma_k) G_r,k Phi_k G_t,k``."""
    K = len(sample.G_r)
    if K != config.K or len(sample.G_t) != K or (K and phases.K != K):
        raise DomainError("number of RISs differs between sample, phases and config")
    Nr, Nt = np.shape(sample.G_d)
    G = np.array(sample.G_d, dtype=complex) if config.direct_link \
        else np.zeros((Nr, Nt), dtype=complex)
    for k in range(K):
        Gr, Gt = sample.G_r[k], sample.G_t[k]
        if Gr.shape[0] != Nr or Gt.shape[1] != Nt or Gr.shape[1] != Gt.shape[0] \
                or Gr.shape[1] != phases.Ns:
            raise DomainError(f"dimension mismatch in RIS {k} channels")
        G += np.sqrt(config.gamma[k]) * (Gr * phases.reflection(k)) @ Gt
    return G
