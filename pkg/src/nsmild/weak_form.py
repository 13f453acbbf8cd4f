"""Divergence-free space-time test functions and the weak (integrated) form

    int_0^t [-(u, d_s phi) + (grad u, grad phi) + (u.grad u, phi)] ds
        = (u0, phi(0)) - (u(t), phi(t))

evaluated along a stored trajectory.  All pairings are computed from Fourier
coefficients on the half lattice.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .field_core import (
    GridSpec,
    Trajectory,
    VectorField,
    curl_coeffs,
    divergence_coeffs,
    gradient_coeffs,
    ifft_real,
    rfft_coeffs,
)
from .operators import (
    advection_coeffs,
    chi_symbol,
    leray_coeffs,
    translation_symbol,
    translation_symbol_derivative,
)

CLASSES = ("product_class", "T1", "T_chi")
SUPPORT_MARGIN = 0.05  # temporal support ends at (1 - margin) T


def parse_class(tag: str) -> tuple[str, float | None]:
    """'product_class', 'T1' or 'T_chi(r)' -> (name, r)."""
    tag = tag.strip()
    if tag in ("product_class", "T1"):
        return tag, None
    m = re.fullmatch(r"T_chi\(\s*([0-9.eE+-]+)\s*\)", tag)
    if m:
        r = float(m.group(1))
        if not r > 0:
            raise DomainError(f"chi cutoff needs r > 0, got {r}")
        return "T_chi", r
    raise DomainError(f"unknown test-function class {tag!r}; use product_class, T1 or T_chi(r)")


# ---------------------------------------------------------------- pairings


def pair(grid: GridSpec, a: np.ndarray, b: np.ndarray) -> float:
    """L^2 pairing of two real fields given by half-lattice coefficients."""
    w = grid.half.weights
    return float(grid.length**grid.dim * (w * (a * b.conj()).real).sum())


def gradient_pair(grid: GridSpec, a: np.ndarray, b: np.ndarray) -> float:
    """(grad f, grad g) from half-lattice coefficients."""
    ms = grid.half
    return float(grid.length**grid.dim * (ms.weights * ms.ksq * (a * b.conj()).real).sum())


# ---------------------------------------------------------------- test functions


def bump(s: np.ndarray, center: float, width: float, order: int) -> np.ndarray:
    """(1 - tau^2)^order on |tau| < 1 with tau = (s - center)/width, zero outside."""
    tau = (np.asarray(s, dtype=float) - center) / width
    return np.where(np.abs(tau) < 1, np.clip(1 - tau**2, 0, None) ** order, 0.0)


def bump_derivative(s: np.ndarray, center: float, width: float, order: int) -> np.ndarray:
    tau = (np.asarray(s, dtype=float) - center) / width
    inner = np.clip(1 - tau**2, 0, None)
    return np.where(np.abs(tau) < 1, -2 * order * tau * inner ** (order - 1) / width, 0.0)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """phi(s, x) = alpha(s) phi0(x - s v) with a polynomial bump alpha.

    ``drift`` v is zero for the separable classes; the T1 class uses a nonzero
    drift so that phi is not a product of a time and a space factor."""

    __test__ = False  # not a pytest class

    test_id: str
    cls: str
    center: float
    width: float
    order: int
    horizon: float
    spatial: VectorField
    drift: tuple[float, ...] = ()
    chi_r: float | None = None
    _coeffs: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise DomainError(f"unknown class {self.cls!r}")
        if not (self.width > 0 and self.horizon > 0) or self.order < 2:
            raise DomainError("bump needs positive width and horizon and order >= 2")
        if self.center + self.width > (1 - SUPPORT_MARGIN) * self.horizon * (1 + 1e-12):
            raise DomainError("temporal support must end strictly before the horizon")
        drift = tuple(float(v) for v in self.drift) or (0.0,) * self.spatial.grid.dim
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "_coeffs", rfft_coeffs(self.spatial.grid, self.spatial.components))

    @property
    def grid(self) -> GridSpec:
        return self.spatial.grid

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.width, self.center + self.width

    @property
    def label(self) -> str:
        return f"T_chi({self.chi_r:g})" if self.cls == "T_chi" else self.cls

    def alpha(self, s):
        return bump(s, self.center, self.width, self.order)

    def alpha_dt(self, s):
        return bump_derivative(s, self.center, self.width, self.order)

    def _shifted(self, s: float) -> np.ndarray:
        if not any(self.drift):
            return self._coeffs
        sym = translation_symbol(self.grid, -s * np.asarray(self.drift), self.grid.half)
        return self._coeffs * sym

    def coeffs(self, s: float) -> np.ndarray:
        """Half-lattice coefficients of phi(s, .)."""
        return float(self.alpha(s)) * self._shifted(s)

    def coeffs_dt(self, s: float) -> np.ndarray:
        """Half-lattice coefficients of d_s phi(s, .), exact in s."""
        out = float(self.alpha_dt(s)) * self._shifted(s)
        if any(self.drift):
            v = -np.asarray(self.drift)
            dsym = translation_symbol_derivative(self.grid, s * v, v, self.grid.half)
            out = out + float(self.alpha(s)) * self._coeffs * dsym
        return out

    def at(self, s: float) -> VectorField:
        return VectorField(self.grid, ifft_real(self.grid, self.coeffs(s)))

    def divergence_ratio(self) -> float:
        """max |div phi0| / max |grad phi0| on the grid (translation and alpha preserve it)."""
        grid = self.grid
        div = np.abs(ifft_real(grid, divergence_coeffs(grid, self._coeffs)[None])).max()
        grad = np.abs(_gradient_samples(grid, self._coeffs)).max()
        return float(div / grad) if grad > 0 else 0.0


def _gradient_samples(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Physical samples of d_k f_a with shape (ncomp, dim, ...)."""
    g = gradient_coeffs(grid, coeffs)
    flat = ifft_real(grid, g.reshape((-1,) + coeffs.shape[1:]))
    return flat.reshape(g.shape[:2] + grid.shape)


def periodic_bump(grid: GridSpec, center: np.ndarray, sigma: float) -> np.ndarray:
    """Product of von Mises profiles exp(kappa (cos k0(x - c) - 1)), kappa = (k0 sigma)^-2:
    an analytic periodic stand-in for a Gaussian of width sigma."""
    k0 = 2 * np.pi / grid.length
    kappa = 1.0 / (k0 * sigma) ** 2
    out = np.ones(grid.shape)
    for c, x in zip(center, grid.coords):
        out = out * np.exp(kappa * (np.cos(k0 * (x - c)) - 1.0))
    return out


def _random_bumps(grid: GridSpec, rng: np.random.Generator, count: int = 3) -> np.ndarray:
    """Sum of ``count`` periodic bumps with random vector amplitudes near the origin."""
    L = grid.length
    out = np.zeros((grid.dim,) + grid.shape)
    for _ in range(count):
        center = rng.uniform(-L / 8, L / 8, grid.dim)
        sigma = rng.uniform(L / 14, L / 10)
        amp = rng.standard_normal(grid.dim)
        g = periodic_bump(grid, center, sigma)
        out += amp.reshape((grid.dim,) + (1,) * grid.dim) * g
    return out


def generate_test_function(seed: int, cls: str, grid: GridSpec, T: float, chi_r: float | None = None) -> TestFunction:
    """Seeded test function of the requested class.

    product_class: alpha(s) curl(psi) for a random bump potential psi.
    T1: the same spatial profile carried along a random drift, phi0(x - s v).
    T_chi(r): alpha(s) P chi_r(f) for a random non-solenoidal bump field f.

    The spatial data are analytic periodic functions sampled on the grid, so the
    same seed describes the same continuous test function at every resolution."""
    if not T > 0:
        raise DomainError(f"horizon must be positive, got {T}")
    name, r = ("T_chi", chi_r) if cls == "T_chi" else parse_class(cls)
    if name in ("product_class", "T1") and grid.dim != 3:
        raise DomainError(f"class {name} builds phi as a curl and needs m = 3")
    if name == "T_chi" and not (r is not None and r > 0):
        raise DomainError("T_chi needs a cutoff parameter r > 0")
    rng = np.random.default_rng(seed)
    end = (1 - SUPPORT_MARGIN) * T
    center = rng.uniform(0.15, 0.5) * T
    width = min(rng.uniform(0.3, 0.6) * T, end - center)
    order = int(rng.integers(3, 6))
    raw = rfft_coeffs(grid, _random_bumps(grid, rng))
    drift = ()
    if name == "T_chi":
        coeffs = leray_coeffs(grid, raw * chi_symbol(grid, r, grid.half))
    else:
        coeffs = curl_coeffs(grid, raw)
        if name == "T1":
            v = rng.standard_normal(grid.dim)
            drift = tuple(0.5 * v / np.linalg.norm(v))
    spatial = VectorField(grid, ifft_real(grid, coeffs))
    tag = name if name != "T_chi" else f"T_chi({r:g})"
    return TestFunction(f"{tag}#{seed}", name, center, width, order, T, spatial, drift, r if name == "T_chi" else None)


# ---------------------------------------------------------------- weak residual


@dataclass(frozen=True)
class WeakResidualReport:
    test_id: str
    t: float
    lhs: float
    rhs: float
    gap: float
    scale: float
    terms: dict = field(default_factory=dict)

    @property
    def relative_gap(self) -> float:
        return self.gap / self.scale if self.scale > 0 else 0.0


def _quadrature_times(traj: Trajectory, t: float) -> tuple[list[float], np.ndarray]:
    """Stored times up to t (with t appended) and their trapezoid weights."""
    times = [float(s) for s in traj.times if s < t - 1e-12] + [float(t)]
    if len(times) == 1:
        return times, np.zeros(1)
    dt = np.diff(times)
    w = np.zeros(len(times))
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return times, w


def weak_residuals(
    traj: Trajectory, tests: list[TestFunction], t: float, nonlinear: bool = True
) -> list[WeakResidualReport]:
    """Weak-form gaps for several test functions sharing one pass over the trajectory.

    The time integral is the trapezoid rule on the stored times; d_s phi is exact."""
    grid = traj.grid
    if t < traj.times[0] - 1e-12 or t > traj.final_time + 1e-12:
        raise DomainError(f"time {t} outside trajectory range")
    for phi in tests:
        if phi.grid != grid:
            raise DomainError(f"test function {phi.test_id} lives on a different grid")
        if phi.support[1] > traj.final_time * (1 + 1e-12):
            raise DomainError(f"temporal support of {phi.test_id} extends past the trajectory horizon")
    times, weights = _quadrature_times(traj, t)
    acc = np.zeros((len(tests), 3))
    for s, w in zip(times, weights):
        if w == 0.0:
            continue
        uc = rfft_coeffs(grid, traj.components_at(s))
        nc = advection_coeffs(grid, uc) if nonlinear else None
        for i, phi in enumerate(tests):
            if phi.alpha(s) == 0.0 and phi.alpha_dt(s) == 0.0:
                continue
            pc = phi.coeffs(s)
            acc[i, 0] -= w * pair(grid, uc, phi.coeffs_dt(s))
            acc[i, 1] += w * gradient_pair(grid, uc, pc)
            if nonlinear:
                acc[i, 2] += w * pair(grid, nc, pc)
    u0 = rfft_coeffs(grid, traj.initial.components)
    ut = rfft_coeffs(grid, traj.components_at(t))
    out = []
    for i, phi in enumerate(tests):
        a0 = pair(grid, u0, phi.coeffs(0.0))
        at = pair(grid, ut, phi.coeffs(t))
        lhs = float(acc[i].sum())
        rhs = a0 - at
        scale = float(np.abs(acc[i]).sum() + abs(rhs))
        terms = {"time": acc[i, 0], "viscous": acc[i, 1], "nonlinear": acc[i, 2], "initial": a0, "final": at}
        out.append(WeakResidualReport(phi.test_id, float(t), lhs, rhs, abs(lhs - rhs), scale, terms))
    return out


def weak_residual(traj: Trajectory, phi: TestFunction, t: float, nonlinear: bool = True) -> WeakResidualReport:
    """Weak-form gap |LHS - RHS| for one test function at time t."""
    return weak_residuals(traj, [phi], t, nonlinear)[0]


def weak_continuity_probe(traj: Trajectory, f: VectorField, t: float, approach) -> list[float]:
    """(u(t_n) - u(t), f) for each t_n in ``approach``."""
    grid = traj.grid
    ut = traj.components_at(t)
    out = []
    for tn in approach:
        diff = traj.components_at(float(tn)) - ut
        out.append(float((diff * f.components).sum() * grid.cell_volume))
    return out


def integration_by_parts_gap(u: VectorField, phi: VectorField) -> tuple[float, float]:
    """(u.grad u, phi) against -sum_k (u_k u_a, d_k phi_a); returns (gap, scale).

    Needs div u = 0.  The spectral derivative is skew on the grid, so the two
    sides differ only by aliasing of the quadratic products, which is negligible
    for resolved fields."""
    grid = u.grid
    uc = rfft_coeffs(grid, u.components)
    grad_u = _gradient_samples(grid, uc)  # (a, k, ...)
    grad_phi = _gradient_samples(grid, rfft_coeffs(grid, phi.components))
    adv = np.einsum("k...,ak...->a...", u.components, grad_u)
    left = float((adv * phi.components).sum() * grid.cell_volume)
    flux = u.components[:, None] * u.components[None, :]  # (k, a, ...)
    right = -float((flux * grad_phi.swapaxes(0, 1)).sum() * grid.cell_volume)
    scale = abs(left) + abs(right)
    return abs(left - right), scale
