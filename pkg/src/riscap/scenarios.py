"""
Scenario construction from array sizes, RIS geometry and angular parameters.

Angles are measured from the RIS normal in the xz-plane. The incoming
mean direction uses ``theta_in`` and the outgoing one ``theta_out``, so the
in-plane wave vectors coincide (geometrical optics) when the two angles
are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channel import CovarianceSet, ScenarioConfig
from .covariance import AngularWeight, PlanarGrid, build_correlation_matrix

__all__ = ["RisSpec", "SPEED_OF_LIGHT", "wavelength_from_ghz", "db_to_linear",
           "correlation_matrix", "build_scenario", "uncorrelated_baseline"]

SPEED_OF_LIGHT = 299_792_458.0


def wavelength_from_ghz(f_ghz: float) -> float:
    return SPEED_OF_LIGHT / (f_ghz * 1e9)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class RisSpec:
    """One RIS: element grid, mean angles and angle spreads (radians), gain (linear)."""

    grid: PlanarGrid
    theta_in: float
    theta_out: float
    sigma_in: float
    sigma_out: float
    gamma: float = 1.0


@lru_cache(maxsize=64)
def _cached_correlation(rows, cols, spacing, theta, sigma, wavelength):
    w = AngularWeight.from_angles(theta, sigma, wavelength)
    S = build_correlation_matrix(PlanarGrid(rows, cols, spacing), w)
    S.setflags(write=False)
    return S


def correlation_matrix(grid: PlanarGrid, theta: float, sigma: float,
                       wavelength: float) -> np.ndarray:
    """Memoised Gaussian-weight correlation matrix (read-only array)."""
    return _cached_correlation(grid.rows, grid.cols, float(grid.spacing), float(theta),
                               float(sigma), float(wavelength))


def build_scenario(Nt: int, Nr: int, ris: Sequence[RisSpec], rho: float,
                   wavelength: float, direct_link: bool = False, seed: int = 0,
                   Q=None) -> ScenarioConfig:
    """
    Scenario with uncorrelated TX/RX arrays and Gaussian-weight RIS covariances.
    """
    S_t, S_r, geometry = [], [], []
    for spec in ris:
        S_t.append(correlation_matrix(spec.grid, spec.theta_in, spec.sigma_in, wavelength))
        S_r.append(correlation_matrix(spec.grid, spec.theta_out, spec.sigma_out, wavelength))
        geometry.append((spec.grid,
                         AngularWeight.from_angles(spec.theta_in, spec.sigma_in, wavelength),
                         AngularWeight.from_angles(spec.theta_out, spec.sigma_out, wavelength)))
    cov = CovarianceSet.uncorrelated_arrays(Nr, Nt, S_r, S_t)
    return ScenarioConfig(rho=rho, gamma=[s.gamma for s in ris], covariances=cov, Q=Q,
                          direct_link=direct_link, seed=seed, geometry=geometry)


def uncorrelated_baseline(config: ScenarioConfig) -> ScenarioConfig:
    """Same scenario with every RIS covariance replaced by the identity."""
    cov = config.covariances
    eye = np.eye(cov.Ns)
    new = CovarianceSet(cov.R_d, cov.T_d, list(cov.R), list(cov.T),
                        [eye] * cov.K, [eye] * cov.K)
    return ScenarioConfig(rho=config.rho, gamma=config.gamma, covariances=new,
                          Q=config.Q, direct_link=config.direct_link, seed=config.seed)
