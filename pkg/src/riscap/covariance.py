"""
Spatial correlation matrices of planar reflecting surfaces.

A correlation matrix is the sphere integral

    S[a, b] = int w(k) exp(i k . (x_a - x_b)) dOmega_k

of an angular power density ``w`` over all propagation directions. This
module builds such matrices by deterministic quadrature, diagonalizes
them, and evaluates the large-surface Fourier-mode approximation of
their spectrum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from .errors import DomainError, QuadratureError

__all__ = [
    "PlanarGrid",
    "AngularWeight",
    "SpectralSummary",
    "direction_from_angles",
    "gaussian_weight",
    "build_correlation_matrix",
    "analytic_spectrum",
    "exact_spectrum",
    "spectral_cdf",
    "kolmogorov_distance",
    "mode_count",
    "mode_count_estimate",
    "psd_sqrt",
    "write_spectrum_csv",
]

WeightFn = Callable[[np.ndarray], np.ndarray]


# ----------------------------------------------------------------------------
# Geometry and weights
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarGrid:
    """
    Rectangular grid of reflecting elements in the xy-plane.

    Elements are numbered row-major and the grid is centred on the origin,
    so element ``n = r * cols + c`` sits at ``((c - (cols-1)/2) a,
    (r - (rows-1)/2) a, 0)``.

    Parameters
    ----------
    rows, cols : int
        Grid dimensions.
    spacing : float
        Nearest-neighbour distance ``a`` in metres.
    """

    rows: int
    cols: int
    spacing: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("grid needs at least one element")
        if not self.spacing > 0:
            raise DomainError("grid spacing must be positive")

    @classmethod
    def square(cls, side: int, spacing: float) -> "PlanarGrid":
        return cls(side, side, spacing)

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def side_length(self) -> float:
        """``L = sqrt(N_s) a`` for a square grid."""
        if not self.is_square:
            raise DomainError("side length is defined for square grids only")
        return self.rows * self.spacing

    @property
    def row_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.rows), self.cols)

    @property
    def col_index(self) -> np.ndarray:
        return np.tile(np.arange(self.cols), self.rows)

    @property
    def element_positions(self) -> np.ndarray:
        """Element coordinates, shape ``(N_s, 3)``, in metres."""
        x = (self.col_index - (self.cols - 1) / 2.0) * self.spacing
        y = (self.row_index - (self.rows - 1) / 2.0) * self.spacing
        return np.column_stack([x, y, np.zeros_like(x)])

    def check_spacing(self, wavelength: float) -> bool:
        """True when the spacing does not exceed half a wavelength."""
        return self.spacing <= wavelength / 2.0 * (1.0 + 1e-12)


def direction_from_angles(theta: float, phi: float = 0.0) -> np.ndarray:
    """Unit vector at polar angle ``theta`` from the surface normal (radians)."""
    return np.array([np.sin(theta) * np.cos(phi),
                     np.sin(theta) * np.sin(phi),
                     np.cos(theta)])


@dataclass(frozen=True)
class AngularWeight:
    """
    Gaussian angular power density around a mean direction.

    ``w(k) = c exp(-|k - s0|^2 / (2 sigma^2 k0^2))`` with ``|k| = |s0| = k0``
    and ``c`` fixed so that ``w`` integrates to one over the sphere.
    ``sigma = inf`` gives the isotropic density ``1/(4 pi)``.

    Parameters
    ----------
    mean_direction : array_like, shape (3,)
        Mean direction of arrival or departure; normalised on construction.
    sigma : float
        Angle spread in radians.
    wavelength : float
        Carrier wavelength in metres.
    """

    mean_direction: np.ndarray
    sigma: float
    wavelength: float
    normalization: float = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.mean_direction, dtype=float).reshape(3)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise DomainError("mean direction must be non-zero")
        object.__setattr__(self, "mean_direction", d / norm)
        if not self.sigma > 0:
            raise DomainError("angle spread must be positive")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        object.__setattr__(self, "normalization", _gaussian_normalization(self.sigma))

    @classmethod
    def from_angles(cls, theta: float, sigma: float, wavelength: float,
                    phi: float = 0.0) -> "AngularWeight":
        return cls(direction_from_angles(theta, phi), sigma, wavelength)

    @property
    def k0(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def s0(self) -> np.ndarray:
        """Mean wave vector, magnitude ``k0``."""
        return self.k0 * self.mean_direction

    @property
    def support_angle(self) -> float:
        """Polar radius around the mean direction beyond which ``w`` is below
        ``exp(-60)`` of its peak."""
        if not np.isfinite(self.sigma):
            return np.pi
        # 1 - cos(psi) = 60 sigma^2
        c = 1.0 - 60.0 * self.sigma ** 2
        return np.pi if c <= -1.0 else float(np.arccos(c))

    def __call__(self, directions: np.ndarray) -> np.ndarray:
        d = np.asarray(directions, dtype=float)
        if not np.isfinite(self.sigma):
            return np.full(d.shape[:-1], self.normalization)
        # |k - s0|^2 / k0^2 = |d - s0_hat|^2 = 2 (1 - d . s0_hat) for unit d;
        # the difference form avoids cancellation near the mean direction
        one_minus_cos = 0.5 * np.sum((d - self.mean_direction) ** 2, axis=-1)
        return self.normalization * np.exp(-one_minus_cos / self.sigma ** 2)


def _gaussian_normalization(sigma: float) -> float:
    # int exp(-(1 - cos psi)/sigma^2) dOmega = 2 pi sigma^2 (1 - exp(-2/sigma^2))
    if not np.isfinite(sigma):
        return 1.0 / (4.0 * np.pi)
    return 1.0 / (2.0 * np.pi * sigma ** 2 * -np.expm1(-2.0 / sigma ** 2))


def gaussian_weight(direction, weight: AngularWeight) -> float:
    """
    Evaluate the Gaussian angular density at a single unit direction.

    Raises
    ------
    DomainError
        If ``direction`` is not a unit vector.
    """
    d = np.asarray(direction, dtype=float).reshape(3)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise DomainError("direction must be a unit vector")
    return float(weight(d))


# ----------------------------------------------------------------------------
# Sphere quadrature and correlation matrices
# ----------------------------------------------------------------------------

def _rotation_to(axis: np.ndarray) -> np.ndarray:
    """Rotation matrix taking +z onto ``axis``."""
    z = np.array([0.0, 0.0, 1.0])
    a = axis / np.linalg.norm(axis)
    c = float(z @ a)
    if c > 1.0 - 1e-15:
        return np.eye(3)
    if c < -1.0 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(z, a)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def sphere_quadrature(order: int, center=(0.0, 0.0, 1.0),
                      cap_angle: float = np.pi):
    """
    Product rule on a spherical cap: Gauss-Legendre in ``cos(psi)`` times a
    uniform ``2 * order``-point rule in azimuth, about ``center``.

    Returns
    -------
    directions : ndarray, shape (P, 3)
    weights : ndarray, shape (P,)
        Solid-angle weights; they sum to the cap area.
    """
    u, wu = np.polynomial.legendre.leggauss(order)
    # nodes in t = 1 - cos(psi), which stays accurate for narrow caps
    span = 2.0 * np.sin(0.5 * cap_angle) ** 2
    t = 0.5 * span * (1.0 - u)
    wu = wu * 0.5 * span
    cos_psi = 1.0 - t
    sin_psi = np.sqrt(np.clip(t * (2.0 - t), 0.0, None))
    n_az = 2 * order
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    local = np.stack([
        np.outer(sin_psi, np.cos(phi)),
        np.outer(sin_psi, np.sin(phi)),
        np.repeat(cos_psi[:, None], n_az, axis=1),
    ], axis=-1).reshape(-1, 3)
    weights = np.repeat(wu * (2.0 * np.pi / n_az), n_az)
    rot = _rotation_to(np.asarray(center, dtype=float))
    return local @ rot.T, weights


def _offset_kernel(grid: PlanarGrid, weight: WeightFn, k0: float, order: int,
                   center, cap_angle, chunk: int = 1 << 15) -> np.ndarray:
    """``f[i, j] = int w(k) exp(i k . (j a, i a))`` for all grid offsets.

    Returned with shape ``(2 rows - 1, 2 cols - 1)``, index ``rows - 1``
    / ``cols - 1`` holding the zero offset.
    """
    dirs, wq = sphere_quadrature(order, center, cap_angle)
    coeff = wq * np.asarray(weight(dirs), dtype=float)
    keep = coeff != 0.0
    dirs, coeff = dirs[keep], coeff[keep]
    dr = np.arange(-(grid.rows - 1), grid.rows) * grid.spacing
    dc = np.arange(-(grid.cols - 1), grid.cols) * grid.spacing
    f = np.zeros((dr.size, dc.size), dtype=complex)
    # exp(i k0 (dx ux + dy uy)) factorises, so f is a weighted outer product
    for s in range(0, coeff.size, chunk):
        d, c = dirs[s:s + chunk], coeff[s:s + chunk]
        ex = np.exp(1j * k0 * np.outer(dc, d[:, 0]))
        ey = np.exp(1j * k0 * np.outer(dr, d[:, 1]))
        f += (ey * c) @ ex.T
    return f


def _initial_order(grid: PlanarGrid, k0: float, cap_angle: float) -> int:
    extent = np.hypot(grid.rows - 1, grid.cols - 1) * grid.spacing
    reach = np.sin(min(cap_angle, np.pi / 2)) * k0 * extent
    return int(max(16, np.ceil(0.6 * reach) + 16))


def build_correlation_matrix(grid: PlanarGrid, weight: Union[AngularWeight, WeightFn],
                             quadrature_order: Optional[int] = None, *,
                             wavelength: Optional[float] = None,
                             center=None, tol: float = 1e-10,
                             max_order: int = 2048, check_psd: bool = True
                             ) -> np.ndarray:
    """
    Correlation matrix of a planar grid under an angular density.

    The sphere integral is evaluated with :func:`sphere_quadrature` centred
    on the mean direction (and restricted to the weight's support for
    Gaussian weights). With ``quadrature_order=None`` the order is doubled
    until the kernel changes by less than ``tol``. The diagonal is then
    rescaled to exactly one, which makes the trace equal ``N_s``.

    Parameters
    ----------
    grid : PlanarGrid
    weight : AngularWeight or callable
        A callable receives unit directions of shape ``(P, 3)`` and must
        return densities normalised over the sphere; ``wavelength`` is then
        required.
    quadrature_order : int, optional
        Fixed number of Gauss-Legendre nodes in the polar variable.

    Returns
    -------
    ndarray, shape (N_s, N_s)
        Hermitian positive semi-definite correlation matrix.

    Raises
    ------
    QuadratureError
        If the unrescaled diagonal misses one by ``1e-3`` or more, or the
        adaptive order does not settle below ``max_order``.
    """
    if isinstance(weight, AngularWeight):
        k0 = weight.k0
        center = weight.mean_direction if center is None else center
        cap = weight.support_angle
    else:
        if wavelength is None:
            raise DomainError("a wavelength is needed for a callable weight")
        k0 = 2.0 * np.pi / wavelength
        center = (0.0, 0.0, 1.0) if center is None else center
        cap = np.pi

    def kernel(order):
        return _offset_kernel(grid, weight, k0, order, center, cap)

    if quadrature_order is not None:
        f = kernel(int(quadrature_order))
    else:
        order = _initial_order(grid, k0, cap)
        f = kernel(order)
        while True:
            if 2 * order > max_order:
                raise QuadratureError(np.inf, tol)
            order *= 2
            f_next = kernel(order)
            change = np.max(np.abs(f_next - f))
            f = f_next
            if change < tol:
                break

    r0, c0 = grid.rows - 1, grid.cols - 1
    diag = f[r0, c0].real
    if not abs(diag - 1.0) < 1e-3:
        raise QuadratureError(abs(diag - 1.0), 1e-3)
    f = f / diag

    ri, ci = grid.row_index, grid.col_index
    S = f[ri[:, None] - ri[None, :] + r0, ci[:, None] - ci[None, :] + c0]
    S = 0.5 * (S + S.conj().T)
    np.fill_diagonal(S, 1.0)
    if check_psd:
        lo = linalg.eigvalsh(S, subset_by_index=[0, 0])[0]
        if lo < -1e-8 * grid.n_elements:
            raise QuadratureError(-lo / grid.n_elements, 1e-8)
    return S


# ----------------------------------------------------------------------------
# Spectra
# ----------------------------------------------------------------------------

@dataclass
class SpectralSummary:
    """
    Eigen-decomposition of a correlation matrix.

    Attributes
    ----------
    eigenvalues : ndarray, shape (N,)
        Sorted in descending order.
    eigenvectors : ndarray, shape (N, N)
        Column ``n`` belongs to ``eigenvalues[n]``.
    fourier_labels : ndarray of int, shape (N, 2), or None
        Integer pairs ``(m1, m2)``; the in-plane wave vector is
        ``q = 2 pi (m1, m2) / L``. Only set for asymptotic spectra.
    source : {"exact", "asymptotic"}
    side_length : float or None
        ``L``, needed to turn labels into wave vectors.
    scale : float
        Factor applied to the raw asymptotic eigenvalues to reach
        ``sum = N_s`` (1.0 for exact spectra).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: str
    fourier_labels: Optional[np.ndarray] = None
    side_length: Optional[float] = None
    scale: float = 1.0

    @property
    def q_vectors(self) -> Optional[np.ndarray]:
        """In-plane wave vectors ``q_n`` in rad/m, shape ``(N, 2)``."""
        if self.fourier_labels is None:
            return None
        # labels are (m1, m2) = (column, row) frequency
        return 2.0 * np.pi * self.fourier_labels / self.side_length


def _fourier_labels(n: int) -> np.ndarray:
    return np.arange(-(n // 2), n - n // 2)


def analytic_spectrum(grid: PlanarGrid, weight: AngularWeight) -> SpectralSummary:
    """
    Large-surface spectrum: Fourier-mode eigenvectors with eigenvalues

        eta(q) = (lambda/a)^2 [w(q, k_perp) + w(q, -k_perp)] / sqrt(1 - |q|^2/k0^2)

    for ``|q| < k0`` and zero otherwise, ``k_perp = sqrt(k0^2 - |q|^2)``.
    The labels run over the full discrete Fourier set ``m in [-n/2, n/2)``
    of an ``n x n`` grid, and the eigenvalues are rescaled to sum to
    ``N_s``; the factor applied is kept in ``scale``.

    Raises
    ------
    DomainError
        For non-square grids or spacing above half a wavelength.
    """
    lam = weight.wavelength
    if not grid.is_square:
        raise DomainError("asymptotic spectrum needs a square grid")
    if not grid.check_spacing(lam):
        raise DomainError("asymptotic spectrum needs spacing <= wavelength / 2")
    n = grid.rows
    k0 = weight.k0
    L = grid.side_length

    m = _fourier_labels(n)
    m1, m2 = np.meshgrid(m, m, indexing="xy")
    labels = np.column_stack([m1.ravel(), m2.ravel()])
    q = 2.0 * np.pi * labels / L
    qn = np.hypot(q[:, 0], q[:, 1])
    inside = qn < k0

    # vanishing density along the surface, required for the Fourier limit
    horizon = np.column_stack([np.cos(np.linspace(0, 2 * np.pi, 64, endpoint=False)),
                               np.sin(np.linspace(0, 2 * np.pi, 64, endpoint=False)),
                               np.zeros(64)])
    if weight(horizon).max() > 1e-3 * weight(weight.mean_direction):
        warnings.warn("angular density is not negligible along the surface; "
                      "Fourier-mode asymptotics may be inaccurate", RuntimeWarning)

    eta = np.zeros(n * n)
    kp = np.sqrt(k0 ** 2 - qn[inside] ** 2)
    up = np.column_stack([q[inside], kp]) / k0
    down = np.column_stack([q[inside], -kp]) / k0
    eta[inside] = ((lam / grid.spacing) ** 2 * (weight(up) + weight(down))
                   / (kp / k0))
    total = eta.sum()
    scale = grid.n_elements / total
    eta = eta * scale

    order = np.lexsort((labels[:, 1], labels[:, 0], -eta))
    labels = labels[order]
    eta = eta[order]
    pos = grid.element_positions[:, :2]
    vecs = np.exp(1j * pos @ (2.0 * np.pi * labels / L).T) / np.sqrt(grid.n_elements)
    return SpectralSummary(eta, vecs, "asymptotic", labels, L, scale)


def exact_spectrum(S: np.ndarray) -> SpectralSummary:
    """
    Full eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Equal eigenvalues are ordered by the index of each eigenvector's
    largest-magnitude entry.

    Raises
    ------
    DomainError
        If ``S`` deviates from Hermitian by more than ``1e-9``.
    """
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DomainError("matrix must be square")
    if np.max(np.abs(S - S.conj().T), initial=0.0) > 1e-9:
        raise DomainError("matrix is not Hermitian")
    w, v = linalg.eigh(0.5 * (S + S.conj().T))
    peak = np.argmax(np.abs(v), axis=0)
    order = np.lexsort((peak, -w))
    return SpectralSummary(w[order], v[:, order], "exact")


def _values(spectrum) -> np.ndarray:
    if isinstance(spectrum, SpectralSummary):
        return spectrum.eigenvalues
    return np.asarray(spectrum, dtype=float)


def spectral_cdf(summary, thresholds: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF of the eigenvalues at each threshold."""
    ev = np.sort(_values(summary))
    t = np.asarray(thresholds, dtype=float)
    frac = np.searchsorted(ev, t, side="right") / ev.size
    return list(zip(t.tolist(), frac.tolist()))


def kolmogorov_distance(a, b, floor: float = 1e-2) -> float:
    """
    Sup-distance between the empirical eigenvalue CDFs of ``a`` and ``b``.

    Eigenvalues below ``floor`` times the larger spectral maximum are
    treated as zero: the comparison resolves the spectrum on a linear
    scale, where the exponentially small Gaussian tail and rounding noise
    are indistinguishable from zero.
    """
    x, y = _values(a), _values(b)
    cut = floor * max(x.max(), y.max())
    x = np.where(x < cut, 0.0, x)
    y = np.where(y < cut, 0.0, y)
    pts = np.union1d(x, y)
    fx = np.searchsorted(np.sort(x), pts, side="right") / x.size
    fy = np.searchsorted(np.sort(y), pts, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def mode_count(summary, rel: float = 0.01) -> int:
    """Number of eigenvalues above ``rel`` times the largest one."""
    ev = _values(summary)
    return int(np.count_nonzero(ev > rel * ev.max()))


def mode_count_estimate(sigma: float, side_length: float, wavelength: float) -> float:
    """Rough count of significant modes, ``sigma^2 L^2 / ((2 pi)^2 lambda^2)``."""
    return sigma ** 2 * side_length ** 2 / ((2.0 * np.pi) ** 2 * wavelength ** 2)


def psd_sqrt(S: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """
    Hermitian square root of a positive semi-definite matrix.

    Eigenvalues down to ``-tol * max(n, lambda_max)`` are clamped to zero;
    anything more negative raises :class:`DomainError`.
    """
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DomainError("matrix must be square")
    w, v = linalg.eigh(0.5 * (S + S.conj().T))
    limit = tol * max(S.shape[0], w[-1] if w.size else 0.0)
    if w.size and w[0] < -limit:
        raise DomainError(f"matrix is indefinite (eigenvalue {w[0]:.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    M = (v * root) @ v.conj().T
    return 0.5 * (M + M.conj().T)


def write_spectrum_csv(path, *summaries: SpectralSummary) -> None:
    """Write spectra as ``index,m1,m2,eigenvalue,source`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("index,m1,m2,eigenvalue,source\n")
        for s in summaries:
            for i, ev in enumerate(s.eigenvalues):
                if s.fourier_labels is None:
                    m1 = m2 = ""
                else:
                    m1, m2 = (str(int(v)) for v in s.fourier_labels[i])
                fh.write(f"{i},{m1},{m2},{ev:.12e},{s.source}\n")
