"""Compactly supported divergence-free approximation of a divergence-free field.

With a radial cutoff z_R(x) = zt(log(|x|^2 + 1) / R) and the ray moments

    Q_k(f)(x) = int_0^1 t^(m-1-k) f(t x) dt,

the approximant is f_R = z_R f + sum_i d_i z_R (x wedge Q_1 f)_i. with
(x wedge g)_ij = x_i g_j - x_j g_i.  It vanishes where z_R does and satisfies

    div f_R = z_R div f + (x . grad z_R) Q_0(div f).

Ray moments are evaluated by Gauss-Legendre quadrature in t with f sampled
off-grid by trigonometric interpolation, so fields must be centred at the
box origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb

import numpy as np

from .errors import DomainError, GeometryError
from .field_core import (
    GridSpec,
    VectorField,
    divergence_coeffs,
    fft_coeffs,
    gradient_coeffs,
    ifft_real,
    lp_norm,
)

DEFAULT_NODES = 64


@lru_cache(maxsize=16)
def _gauss_unit(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def smoothstep(x: np.ndarray, order: int) -> np.ndarray:
    """Polynomial S with S = 0 for x <= 0, S = 1 for x >= 1 and ``order`` continuous
    derivatives at both ends (degree 2*order + 1)."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    n = order
    out = np.zeros_like(x)
    for k in range(n + 1):
        out += comb(n + k, k) * comb(2 * n + 1, n - k) * (-x) ** k
    return out * x ** (n + 1)


def smoothstep_derivative(x: np.ndarray, order: int) -> np.ndarray:
    """dS/dx = c x^n (1-x)^n on [0, 1], normalised to unit integral."""
    x = np.asarray(x, dtype=float)
    n = order
    c = 1.0 / _beta_int(n)
    inside = (x > 0) & (x < 1)
    xi = np.where(inside, x, 0.0)
    return np.where(inside, c * xi**n * (1 - xi) ** n, 0.0)


def _beta_int(n: int) -> float:
    # int_0^1 x^n (1-x)^n dx
    from math import factorial

    return factorial(n) ** 2 / factorial(2 * n + 1)


@dataclass(frozen=True)
class CutoffProfile:
    """z_R(x) = zt(log(|x|^2 + 1) / R) with zt = 1 - smoothstep(s - 1) of the given order."""

    R: float
    order: int = 3

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError(f"R must be positive, got {self.R}")
        if int(self.order) != self.order or self.order < 3:
            raise DomainError(f"smoothstep order must be an integer >= 3, got {self.order}")

    def ztilde(self, s: np.ndarray) -> np.ndarray:
        return 1.0 - smoothstep(np.asarray(s) - 1.0, self.order)

    def ztilde_derivative(self, s: np.ndarray) -> np.ndarray:
        return -smoothstep_derivative(np.asarray(s) - 1.0, self.order)

    @property
    def inner_radius(self) -> float:
        """z_R = 1 for |x| <= inner_radius."""
        return float(np.sqrt(np.expm1(self.R)))

    @property
    def outer_radius(self) -> float:
        """z_R = 0 for |x| >= outer_radius."""
        return float(np.sqrt(np.expm1(2 * self.R)))

    def value(self, rho: np.ndarray) -> np.ndarray:
        return self.ztilde(np.log1p(np.asarray(rho) ** 2) / self.R)

    def radial_derivative(self, rho: np.ndarray) -> np.ndarray:
        """d z_R / d|x|; the gradient is this times x/|x|."""
        rho = np.asarray(rho, dtype=float)
        return self.ztilde_derivative(np.log1p(rho**2) / self.R) * 2 * rho / (self.R * (rho**2 + 1))

    def gradient(self, coords: tuple[np.ndarray, ...]) -> np.ndarray:
        rho2 = sum(c**2 for c in coords)
        factor = self.ztilde_derivative(np.log1p(rho2) / self.R) * 2 / (self.R * (rho2 + 1))
        return np.stack([np.broadcast_to(factor * c, np.broadcast_shapes(*(x.shape for x in coords))) for c in coords])

    @cached_property
    def max_slope(self) -> float:
        """max |zt'| (attained at the midpoint of the transition)."""
        return float(smoothstep_derivative(0.5, self.order))

    @property
    def declared_c(self) -> float:
        """c in |d_i z_R(x)| <= c R^-1 (|x| + 1)^-1, from
        2|x|(|x|+1)/(|x|^2+1) <= 1 + sqrt 2."""
        return (1 + np.sqrt(2)) * self.max_slope

    def declared_c_prime(self, m: int, p: float) -> float:
        """c' in ||f_R - f||_p <= ||(1-z_R) f||_p + c' R^-1 ||f||_p, via
        |grad z_R| |x| <= c R^-1 and the Q_1 bound (m/p' - 1)^-1 (needs p > m')."""
        pprime = np.inf if p == 1 else (1.0 if np.isinf(p) else p / (p - 1))
        gap = m / pprime - 1.0
        if not gap > 0:
            raise DomainError(f"the Q_1 bound needs p > m', got p = {p}")
        return self.declared_c / gap

    def measured_c(self, radii: np.ndarray) -> float:
        rho = np.asarray(radii, dtype=float)
        return float(np.max(np.abs(self.radial_derivative(rho)) * self.R * (rho + 1)))


# ---------------------------------------------------------------- ray moments


def _axis_matrix(grid: GridSpec, t: float) -> np.ndarray:
    """E[j, n] = exp(i k_n t x_j): evaluates a 1D trigonometric series at t * x_j."""
    k = grid.wavevector[0].ravel()
    return np.exp(1j * np.outer(t * grid.axis_coords, k))


def sample_scaled(grid: GridSpec, coeffs: np.ndarray, t: float) -> np.ndarray:
    """Real samples of the trigonometric interpolant at the scaled grid t * x_j."""
    E = _axis_matrix(grid, t)
    out = coeffs
    for ax in grid.axes:
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [ax])), 0, ax)
    return out.real


def sample_points(grid: GridSpec, coeffs: np.ndarray, points: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Real samples of the interpolant at arbitrary points, shape (P, m) -> (P, ncomp).

    ``coeffs`` may live on the full or the half lattice; on the half lattice the
    conjugate partners are accounted for by the Parseval weights, since the real
    part of a conjugate pair's contribution is twice that of either member."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if grid.modes_for(coeffs) is grid.full:
        coeffs = coeffs[..., : grid.points // 2 + 1]
    ms = grid.half
    coeffs = coeffs * ms.weights
    m = grid.dim
    ks = [ms.wavevector[a].ravel() for a in range(m)]
    ncomp = coeffs.shape[0]
    # last axis first: (n_last, ncomp * N^(m-1))
    flat = np.moveaxis(coeffs, -1, 0).reshape(ks[-1].size, -1)
    out = np.empty((len(points), ncomp))
    for start in range(0, len(points), chunk):
        pts = points[start : start + chunk]
        P = len(pts)
        acc = (np.exp(1j * np.outer(pts[:, -1], ks[-1])) @ flat).reshape((P, ncomp) + (grid.points,) * (m - 1))
        for a in range(m - 2, -1, -1):
            phase = np.exp(1j * np.outer(pts[:, a], ks[a]))
            acc = np.einsum("pn,pc...n->pc...", phase, acc)
        out[start : start + P] = acc.real
    return out


def _check_inside(grid: GridSpec, points: np.ndarray):
    if np.any(np.abs(points) > 0.5 * grid.length * (1 + 1e-12)):
        raise DomainError("ray leaves the fundamental box; centre the data at the origin")


def ray_moment(k: int, f: VectorField, x, quadrature_nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Q_k(f)(x) = int_0^1 t^(m-1-k) f(t x) dt at a single point x."""
    if k not in (0, 1):
        raise DomainError(f"moment order must be 0 or 1, got {k}")
    grid = f.grid
    x = np.asarray(x, dtype=float).reshape(grid.dim)
    _check_inside(grid, x)
    t, w = _gauss_unit(quadrature_nodes)
    coeffs = fft_coeffs(grid, f.components)
    vals = sample_points(grid, coeffs, np.outer(t, x))
    return (w * t ** (grid.dim - 1 - k)) @ vals


def ray_moment_field_coeffs(grid: GridSpec, coeffs: np.ndarray, k: int, nodes: int = DEFAULT_NODES) -> np.ndarray:
    t, w = _gauss_unit(nodes)
    out = np.zeros(coeffs.shape[:1] + grid.shape)
    for tq, wq in zip(t, w):
        out += wq * tq ** (grid.dim - 1 - k) * sample_scaled(grid, coeffs, tq)
    return out


def ray_moment_field(k: int, f: VectorField, quadrature_nodes: int = DEFAULT_NODES) -> VectorField:
    """Q_k(f) at every grid point."""
    if k not in (0, 1):
        raise DomainError(f"moment order must be 0 or 1, got {k}")
    coeffs = fft_coeffs(f.grid, f.components)
    return VectorField(f.grid, ray_moment_field_coeffs(f.grid, coeffs, k, quadrature_nodes))


# ---------------------------------------------------------------- approximation


def _check_geometry(grid: GridSpec, profile: CutoffProfile):
    half = 0.5 * grid.length
    if not np.expm1(2 * profile.R) < half**2:
        raise GeometryError(
            f"support radius {profile.outer_radius:.3f} does not fit inside the box half-width {half:.3f}"
        )


def _wedge_term(grid: GridSpec, gz: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """sum_i d_i z (x_i g_j - x_j g_i) for each j."""
    x = [np.broadcast_to(c, grid.shape) for c in grid.coords]
    gz_dot_x = sum(gz[i] * x[i] for i in range(grid.dim))
    gz_dot_g = sum(gz[i] * q1[i] for i in range(grid.dim))
    return np.stack([gz_dot_x * q1[j] - x[j] * gz_dot_g for j in range(grid.dim)])


def kato_approximate(
    f: VectorField, R: float, profile: CutoffProfile | None = None, quadrature_nodes: int = DEFAULT_NODES
) -> VectorField:
    """f_R = z_R f + sum_i d_i z_R (x wedge Q_1 f)_i, set to hard zeros wherever z_R vanishes."""
    profile = CutoffProfile(R) if profile is None else CutoffProfile(R, profile.order)
    grid = f.grid
    if f.ncomp != grid.dim:
        raise DomainError("Kato approximation needs a vector field with m components")
    _check_geometry(grid, profile)
    z = profile.value(grid.radius)
    gz = profile.gradient(grid.coords)
    q1 = ray_moment_field_coeffs(grid, fft_coeffs(grid, f.components), 1, quadrature_nodes)
    out = z * f.components + _wedge_term(grid, gz, q1)
    out[:, grid.radius >= profile.outer_radius] = 0.0
    return VectorField(grid, out)


@dataclass(frozen=True)
class DivergenceIdentity:
    residual: float
    scale: float
    div_fR_max: float
    lhs: np.ndarray
    rhs: np.ndarray


def _point_moments(grid: GridSpec, coeffs: np.ndarray, points: np.ndarray, k: int, nodes: int) -> np.ndarray:
    """Q_k of the interpolant at each point, shape (P, ncomp)."""
    _check_inside(grid, points)
    t, w = _gauss_unit(nodes)
    m = grid.dim
    vals = sample_points(grid, coeffs, (t[:, None, None] * points[None]).reshape(-1, m))
    vals = vals.reshape(len(t), len(points), -1)
    return np.einsum("q,qpc->pc", w * t ** (m - 1 - k), vals)


def kato_pointwise(
    f: VectorField, R: float, points: np.ndarray, profile: CutoffProfile | None = None, quadrature_nodes: int = DEFAULT_NODES
) -> np.ndarray:
    """f_R at arbitrary points: exact cutoff, interpolated f, quadrature Q_1. Shape (P, m)."""
    profile = CutoffProfile(R) if profile is None else CutoffProfile(R, profile.order)
    grid = f.grid
    _check_geometry(grid, profile)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = fft_coeffs(grid, f.components)
    rho = np.sqrt((points**2).sum(axis=1))
    fx = sample_points(grid, coeffs, points)
    q1 = _point_moments(grid, coeffs, points, 1, quadrature_nodes)
    gz = profile.radial_derivative(rho)[:, None] * points / np.where(rho > 0, rho, 1.0)[:, None]
    wedge = (gz * points).sum(axis=1)[:, None] * q1 - points * (gz * q1).sum(axis=1)[:, None]
    out = profile.value(rho)[:, None] * fx + wedge
    out[rho >= profile.outer_radius] = 0.0
    return out


def identity_sample_points(profile: CutoffProfile, directions: int = 12, radii: int = 10, seed: int = 0) -> np.ndarray:
    """Points on random rays at radii spread over [0, 1.1 * outer radius], densest in the
    transition shell where the wedge term lives."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((directions, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rad = np.concatenate([
        np.linspace(0.2, 0.95, 3) * profile.inner_radius,
        np.linspace(profile.inner_radius, profile.outer_radius, max(radii - 4, 2)),
        [1.1 * profile.outer_radius],
    ])
    return (dirs[:, None, :] * rad[None, :, None]).reshape(-1, 3)


def divergence_identity(
    f: VectorField,
    R: float,
    profile: CutoffProfile | None = None,
    quadrature_nodes: int = DEFAULT_NODES,
    method: str = "pointwise",
    points: np.ndarray | None = None,
    step: float = 2e-3,
) -> DivergenceIdentity:
    """Both sides of div f_R = z_R div f + (x . grad z_R) Q_0(div f).

    ``method="pointwise"`` evaluates f_R exactly at sample points and takes its
    divergence by a five-point central difference; the right side uses the
    spectral divergence of f carried along the ray by Q_0.  ``method="spectral"``
    differentiates the grid samples of f_R with the FFT instead, which is
    limited by how well the grid resolves the cutoff transition.

    The residual is normalised by the largest entry of grad f_R.
    """
    profile = CutoffProfile(R) if profile is None else CutoffProfile(R, profile.order)
    grid = f.grid
    if grid.dim != 3 and method == "pointwise" and points is None:
        raise DomainError("default sample points are generated for m = 3")
    if method == "spectral":
        return _identity_on_grid(f, profile, quadrature_nodes)
    if method != "pointwise":
        raise DomainError(f"unknown method {method!r}")
    _check_geometry(grid, profile)
    pts = identity_sample_points(profile) if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    m = grid.dim
    offsets = np.array([-2, -1, 1, 2], dtype=float) * step
    weights = np.array([1, -8, 8, -1], dtype=float) / (12 * step)
    shifted = []
    for i in range(m):
        for o in offsets:
            q = pts.copy()
            q[:, i] += o
            shifted.append(q)
    vals = kato_pointwise(f, R, np.concatenate(shifted), profile, quadrature_nodes)
    vals = vals.reshape(m, len(offsets), len(pts), m)
    grad = np.einsum("o,iopj->pij", weights, vals)  # d_i (f_R)_j
    lhs = np.einsum("pii->p", grad)
    coeffs = fft_coeffs(grid, f.components)
    divc = divergence_coeffs(grid, coeffs)[None]
    div_f = sample_points(grid, divc, pts)[:, 0]
    q0 = _point_moments(grid, divc, pts, 0, quadrature_nodes)[:, 0]
    rho = np.sqrt((pts**2).sum(axis=1))
    rhs = profile.value(rho) * div_f + rho * profile.radial_derivative(rho) * q0
    scale = float(np.abs(grad).max())
    if scale == 0.0:
        return DivergenceIdentity(0.0, 0.0, 0.0, lhs, rhs)
    return DivergenceIdentity(float(np.abs(lhs - rhs).max()) / scale, scale, float(np.abs(lhs).max()), lhs, rhs)


def _identity_on_grid(f: VectorField, profile: CutoffProfile, quadrature_nodes: int) -> DivergenceIdentity:
    grid = f.grid
    fR = kato_approximate(f, profile.R, profile, quadrature_nodes)
    cR = fft_coeffs(grid, fR.components)
    lhs = ifft_real(grid, divergence_coeffs(grid, cR)[None])[0]
    cf = fft_coeffs(grid, f.components)
    divc = divergence_coeffs(grid, cf)[None]
    div_f = ifft_real(grid, divc)[0]
    q0 = ray_moment_field_coeffs(grid, divc, 0, quadrature_nodes)[0]
    gz = profile.gradient(grid.coords)
    x_dot_gz = sum(gz[i] * grid.coords[i] for i in range(grid.dim))
    rhs = profile.value(grid.radius) * div_f + x_dot_gz * q0
    scale = float(np.abs(ifft_real(grid, gradient_coeffs(grid, cR).reshape((-1,) + grid.shape))).max())
    if scale == 0.0:
        return DivergenceIdentity(0.0, 0.0, 0.0, lhs, rhs)
    return DivergenceIdentity(float(np.abs(lhs - rhs).max()) / scale, scale, float(np.abs(lhs).max()), lhs, rhs)


def divergence_identity_residual(
    f: VectorField, R: float, profile: CutoffProfile | None = None, quadrature_nodes: int = DEFAULT_NODES,
    method: str = "pointwise",
) -> float:
    return divergence_identity(f, R, profile, quadrature_nodes, method).residual


@dataclass(frozen=True)
class KatoError:
    R: float
    p: float
    error: float
    tail: float
    f_norm: float

    @property
    def fitted_c_prime(self) -> float:
        """Smallest c' with error <= tail + c' R^-1 ||f||_p."""
        return max(0.0, (self.error - self.tail) * self.R / self.f_norm) if self.f_norm > 0 else 0.0


def approximation_error(
    f: VectorField, R: float, p: float, profile: CutoffProfile | None = None, quadrature_nodes: int = DEFAULT_NODES
) -> KatoError:
    """||f_R - f||_p together with ||(1 - z_R) f||_p and ||f||_p."""
    profile = CutoffProfile(R) if profile is None else CutoffProfile(R, profile.order)
    fR = kato_approximate(f, R, profile, quadrature_nodes)
    tail = VectorField(f.grid, (1.0 - profile.value(f.grid.radius)) * f.components)
    return KatoError(R, p, lp_norm(fR - f, p), lp_norm(tail, p), lp_norm(f, p))


def q_bound(m: int, k: int, p: float) -> float:
    """(m/p' - k)^-1 for the ray-moment bound ||Q_k f||_p <= (m/p' - k)^-1 ||f||_p."""
    pprime = 1.0 if np.isinf(p) else (np.inf if p == 1 else p / (p - 1))
    gap = m / pprime - k
    if not gap > 0:
        raise DomainError(f"bound undefined for m={m}, k={k}, p={p}")
    return 1.0 / gap


def derivative_commutation_gap(
    f: VectorField, points: np.ndarray, step: float = 1e-3, quadrature_nodes: int = DEFAULT_NODES
) -> float:
    """max |d_i Q_1(f)_a - Q_0(d_i f)_a| over points, i and a, with d_i Q_1 taken by a
    five-point central difference.  Relative to max |Q_0(d_i f)|."""
    grid = f.grid
    points = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = fft_coeffs(grid, f.components)
    grad = gradient_coeffs(grid, coeffs)  # (a, i, ...)
    m = grid.dim

    def q(cf, pts, k):
        return _point_moments(grid, cf, pts, k, quadrature_nodes)

    worst, scale = 0.0, 0.0
    for i in range(m):
        e = np.zeros(m)
        e[i] = step
        fd = (
            -q(coeffs, points + 2 * e, 1)
            + 8 * q(coeffs, points + e, 1)
            - 8 * q(coeffs, points - e, 1)
            + q(coeffs, points - 2 * e, 1)
        ) / (12 * step)
        exact = q(grad[:, i], points, 0)
        worst = max(worst, float(np.abs(fd - exact).max()))
        scale = max(scale, float(np.abs(exact).max()))
    return worst / scale if scale > 0 else worst
