"""Fields on a periodic box standing in for R^m, their Fourier coefficients and norms.

Grid points sit at ``x_j = -L/2 + j*L/N`` so the origin is a grid point at the
centre of the box.  Coefficients are taken with respect to these physical
coordinates::

    c_k = N^-m * sum_j f(x_j) exp(-i k.x_j),     f(x) = sum_k c_k exp(i k.x)

with ``k = 2*pi*n/L`` and integer ``n`` in ``[-N/2, N/2)``.  With this choice
``cos(k.x)`` has coefficient 1/2 at both ``k`` and ``-k`` and the physical L2
norm equals ``L^m * sum |c_k|^2``.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, InvalidFieldError, SymmetryError

HERMITIAN_TOL = 1e-10
DIVERGENCE_TOL = 1e-10


def fft_workers() -> int:
    """Thread count for FFTs, capped by ``NSMILD_THREADS`` (default 1)."""
    raw = os.environ.get("NSMILD_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid of ``points**dim`` samples on a box of side ``length``."""

    points: int = 32
    length: float = 2 * np.pi
    dim: int = 3

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.dim}")
        if int(self.points) != self.points or self.points < 8 or self.points % 2:
            raise DomainError(f"points per axis must be an even integer >= 8, got {self.points}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise DomainError(f"box length must be positive, got {self.length}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "length", float(self.length))

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes of a component-first array."""
        return tuple(range(1, self.dim + 1))

    @cached_property
    def axis_coords(self) -> np.ndarray:
        return -0.5 * self.length + self.spacing * np.arange(self.points)

    def _broadcast(self, vec: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = self.points
        return vec.reshape(shape)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        return tuple(self._broadcast(self.axis_coords, a) for a in range(self.dim))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def full(self) -> "ModeSet":
        """Wavevector data for the full FFT lattice."""
        return ModeSet.build(self, half=False)

    @cached_property
    def half(self) -> "ModeSet":
        """Wavevector data for the real-FFT half lattice (last axis n >= 0)."""
        return ModeSet.build(self, half=True)

    def modes_for(self, coeffs: np.ndarray) -> "ModeSet":
        return self.full if coeffs.shape[-1] == self.points else self.half

    @property
    def mode_numbers(self) -> tuple[np.ndarray, ...]:
        return self.full.mode_numbers

    @property
    def wavevector(self) -> tuple[np.ndarray, ...]:
        return self.full.wavevector

    @property
    def derivative_wavevector(self) -> tuple[np.ndarray, ...]:
        """Wavevector used for first derivatives: the Nyquist entry is zeroed so
        odd derivatives of real fields stay real."""
        return self.full.derivative_wavevector

    @property
    def ksq(self) -> np.ndarray:
        return self.full.ksq

    @property
    def dksq(self) -> np.ndarray:
        return self.full.dksq

    @property
    def parity(self) -> np.ndarray:
        return self.full.parity

    @property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule (every |n_i| < N/3)."""
        return self.full.dealias_mask

    @property
    def top_third_mask(self) -> np.ndarray:
        return ~self.full.dealias_mask


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Broadcastable wavevector arrays for either the full or the half lattice."""

    mode_numbers: tuple[np.ndarray, ...]
    wavevector: tuple[np.ndarray, ...]
    derivative_wavevector: tuple[np.ndarray, ...]
    ksq: np.ndarray
    dksq: np.ndarray
    parity: np.ndarray
    dealias_mask: np.ndarray
    weights: np.ndarray  # multiplicity of each stored mode in Parseval sums

    @classmethod
    def build(cls, grid: GridSpec, half: bool) -> "ModeSet":
        N, m = grid.points, grid.dim
        n_full = np.fft.fftfreq(N, d=1.0 / N).round().astype(int)
        n_half = np.arange(N // 2 + 1)
        numbers = []
        for a in range(m):
            vec = n_half if (half and a == m - 1) else n_full
            shape = [1] * m
            shape[a] = vec.size
            numbers.append(vec.reshape(shape))
        shape = np.broadcast_shapes(*(n.shape for n in numbers))
        k = tuple(2 * np.pi / grid.length * n.astype(float) for n in numbers)
        dk = tuple(np.where(np.abs(n) == N // 2, 0.0, ka) for n, ka in zip(numbers, k))
        ksq = sum(ka**2 for ka in k) + np.zeros(shape)
        dksq = sum(ka**2 for ka in dk) + np.zeros(shape)
        total = sum(numbers) + np.zeros(shape, dtype=int)
        parity = np.where(total % 2 == 0, 1.0, -1.0)
        keep = np.ones(shape, dtype=bool)
        for n in numbers:
            keep = keep & (3 * np.abs(n) < N)
        weights = np.ones(shape)
        if half:
            last = numbers[-1] + np.zeros(shape, dtype=int)
            weights = np.where((last > 0) & (last < N // 2), 2.0, 1.0)
        return cls(tuple(numbers), k, dk, ksq, dksq, parity, keep, weights)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class VectorField:
    """Real field with ``components.shape == (ncomp, N, ..., N)``.

    A scalar field is a VectorField with one component.
    """

    grid: GridSpec
    components: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.components)
        if np.iscomplexobj(arr):
            raise InvalidFieldError("physical fields must be real")
        arr = arr.astype(float)
        if arr.ndim == self.grid.dim:
            arr = arr[None]
        if arr.shape[1:] != self.grid.shape:
            raise InvalidFieldError(f"component shape {arr.shape[1:]} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidFieldError("field contains non-finite samples")
        object.__setattr__(self, "components", _freeze(arr))

    @classmethod
    def zeros(cls, grid: GridSpec, ncomp: int | None = None) -> "VectorField":
        return cls(grid, np.zeros((grid.dim if ncomp is None else ncomp,) + grid.shape))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[..., Sequence[np.ndarray]]) -> "VectorField":
        """Sample ``fn(x_1, ..., x_m)`` (returning a sequence of components) on the grid."""
        comps = fn(*grid.coords)
        return cls(grid, np.stack([np.broadcast_to(c, grid.shape) for c in comps]))

    @property
    def ncomp(self) -> int:
        return self.components.shape[0]

    def _check(self, other: "VectorField"):
        if other.grid != self.grid or other.ncomp != self.ncomp:
            raise InvalidFieldError("fields live on different grids or have different component counts")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.grid, self.components + other.components)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.grid, self.components - other.components)

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(self.grid, self.components * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.components)

    def max_modulus(self) -> float:
        return float(np.sqrt((self.components**2).sum(axis=0)).max())

    def divergence_defect(self) -> float:
        """max|div| / max|grad| measured on the spectral coefficients."""
        coeffs = fft_coeffs(self.grid, self.components)
        div = divergence_coeffs(self.grid, coeffs)
        grad_scale = max(float(np.abs(k * coeffs).max()) for k in self.grid.derivative_wavevector)
        if grad_scale == 0.0:
            return 0.0
        return float(np.abs(div).max()) / grad_scale

    def is_divergence_free(self, tol: float = DIVERGENCE_TOL) -> bool:
        return self.divergence_defect() <= tol


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a field, ``coefficients.shape == (ncomp, N, ..., N)``."""

    grid: GridSpec
    coefficients: np.ndarray
    hermitian: bool | None = None

    def __post_init__(self):
        arr = np.asarray(self.coefficients, dtype=complex)
        if arr.ndim == self.grid.dim:
            arr = arr[None]
        if arr.shape[1:] != self.grid.shape:
            raise InvalidFieldError(f"coefficient shape {arr.shape[1:]} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidFieldError("coefficients contain non-finite values")
        object.__setattr__(self, "coefficients", _freeze(arr))
        if self.hermitian is None:
            object.__setattr__(self, "hermitian", hermitian_defect(self.grid, arr) <= HERMITIAN_TOL)

    @property
    def ncomp(self) -> int:
        return self.coefficients.shape[0]

    def at_mode(self, n: Sequence[int]) -> np.ndarray:
        """Coefficient vector at integer mode ``n`` (each entry in [-N/2, N/2))."""
        idx = tuple(int(v) % self.grid.points for v in n)
        return self.coefficients[(slice(None),) + idx]

    def l2_norm(self) -> float:
        """Spectral l2 norm with the lattice measure, equal to the physical L2 norm."""
        return float(np.sqrt(self.grid.volume * (np.abs(self.coefficients) ** 2).sum()))


# ---------------------------------------------------------------- raw arrays


def fft_coeffs(grid: GridSpec, arr: np.ndarray) -> np.ndarray:
    """Physical samples (component-first) -> centred Fourier coefficients."""
    scale = grid.parity / grid.points**grid.dim
    return sfft.fftn(arr, axes=grid.axes, workers=fft_workers()) * scale


def ifft_coeffs(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Centred Fourier coefficients -> complex physical samples."""
    scale = grid.parity * grid.points**grid.dim
    return sfft.ifftn(coeffs * scale, axes=grid.axes, workers=fft_workers())


def rfft_coeffs(grid: GridSpec, arr: np.ndarray) -> np.ndarray:
    """Real samples -> centred coefficients on the half lattice."""
    scale = grid.half.parity / grid.points**grid.dim
    return sfft.rfftn(arr, axes=grid.axes, workers=fft_workers()) * scale


def ifft_real(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Coefficients on either lattice -> real samples."""
    if coeffs.shape[-1] == grid.points:
        return ifft_coeffs(grid, coeffs).real
    scale = grid.half.parity * grid.points**grid.dim
    return sfft.irfftn(coeffs * scale, s=grid.shape, axes=grid.axes, workers=fft_workers())


def coeff_norm(grid: GridSpec, coeffs: np.ndarray) -> float:
    """sqrt(sum |c|^2) over the full lattice, for coefficients on either lattice."""
    w = grid.modes_for(coeffs).weights
    return float(np.sqrt((w * np.abs(coeffs) ** 2).sum()))


def reflect_modes(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Array whose entry at mode n is the input entry at mode -n."""
    out = np.flip(coeffs, axis=grid.axes)
    return np.roll(out, 1, axis=grid.axes)


def hermitian_defect(grid: GridSpec, coeffs: np.ndarray) -> float:
    scale = float(np.abs(coeffs).max()) if coeffs.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.abs(coeffs - np.conj(reflect_modes(grid, coeffs))).max()) / scale


def divergence_coeffs(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    dk = grid.modes_for(coeffs).derivative_wavevector
    return sum(1j * k * coeffs[a] for a, k in enumerate(dk))


def gradient_coeffs(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """d_j f_a with shape (ncomp, dim, ...)."""
    dk = grid.modes_for(coeffs).derivative_wavevector
    return np.stack([np.stack([1j * k * c for k in dk]) for c in coeffs])


def curl_coeffs(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    if grid.dim != 3 or coeffs.shape[0] != 3:
        raise DomainError("curl is only defined for 3-component fields in dimension 3")
    k1, k2, k3 = grid.modes_for(coeffs).derivative_wavevector
    a1, a2, a3 = coeffs
    return 1j * np.stack([k2 * a3 - k3 * a2, k3 * a1 - k1 * a3, k1 * a2 - k2 * a1])


# ---------------------------------------------------------------- operations


def forward_transform(f: VectorField) -> SpectralField:
    if not np.all(np.isfinite(f.components)):
        raise InvalidFieldError("field contains non-finite samples")
    return SpectralField(f.grid, fft_coeffs(f.grid, f.components), hermitian=True)


def inverse_transform(F: SpectralField, tol: float = HERMITIAN_TOL) -> VectorField:
    defect = hermitian_defect(F.grid, F.coefficients)
    if defect > tol:
        raise SymmetryError(f"coefficients violate Hermitian symmetry (defect {defect:.2e})")
    values = ifft_coeffs(F.grid, F.coefficients)
    scale = float(np.abs(values).max())
    residue = float(np.abs(values.imag).max())
    if scale > 0 and residue > tol * scale:
        raise SymmetryError(f"imaginary residue {residue:.2e} exceeds tolerance")
    return VectorField(F.grid, values.real)


def pointwise_modulus(f: VectorField) -> np.ndarray:
    return np.sqrt((f.components**2).sum(axis=0))


def lp_norm(f: VectorField, p: float) -> float:
    """Riemann-sum L^p norm of the Euclidean modulus; ``p = inf`` gives the max."""
    if p < 1:
        raise DomainError(f"L^p norm requires p >= 1, got {p}")
    mod = pointwise_modulus(f)
    if np.isinf(p):
        return float(mod.max())
    if p == 1:
        return float(mod.sum() * f.grid.cell_volume)
    if p == 2:
        return float(np.sqrt((f.components**2).sum() * f.grid.cell_volume))
    peak = float(mod.max())
    if peak == 0.0:
        return 0.0
    # scale first so large p cannot overflow
    return peak * float(((mod / peak) ** p).sum() * f.grid.cell_volume) ** (1.0 / p)


def upsample(f: VectorField, factor: int = 4) -> VectorField:
    """Trigonometric interpolant of ``f`` sampled on a grid ``factor`` times finer."""
    if int(factor) != factor or factor < 1:
        raise DomainError(f"upsampling factor must be a positive integer, got {factor}")
    grid = f.grid
    fine = GridSpec(grid.points * int(factor), grid.length, grid.dim)
    coeffs = fft_coeffs(grid, f.components)
    idx = np.mod(np.fft.fftfreq(grid.points, 1.0 / grid.points).astype(int), fine.points)
    out = np.zeros((f.ncomp,) + fine.shape, dtype=complex)
    out[(slice(None),) + np.ix_(*([idx] * grid.dim))] = coeffs
    return VectorField(fine, ifft_real(fine, out))


def sup_norm(f: VectorField, factor: int = 4) -> float:
    """max |f| over the interpolant, estimated on a grid ``factor`` times finer."""
    return lp_norm(upsample(f, factor), np.inf)


def spectral_divergence(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, divergence_coeffs(F.grid, F.coefficients)[None], hermitian=F.hermitian)


def inner_product(f: VectorField, g: VectorField) -> float:
    f._check(g)
    return float((f.components * g.components).sum() * f.grid.cell_volume)


def gradient_inner_product(f: VectorField, g: VectorField) -> float:
    """(grad f, grad g) = sum_ij (d_i f_j, d_i g_j), evaluated with the |k|^2 symbol."""
    f._check(g)
    cf = fft_coeffs(f.grid, f.components)
    cg = fft_coeffs(g.grid, g.components)
    return float(f.grid.volume * (f.grid.ksq * (cf * np.conj(cg)).real).sum())


def gradient(f: VectorField) -> VectorField:
    """Spectral gradient; component ``a*dim + j`` holds d_j f_a."""
    g = gradient_coeffs(f.grid, fft_coeffs(f.grid, f.components))
    return VectorField(f.grid, ifft_real(f.grid, g.reshape((-1,) + f.grid.shape)))


def curl(f: VectorField) -> VectorField:
    return VectorField(f.grid, ifft_real(f.grid, curl_coeffs(f.grid, fft_coeffs(f.grid, f.components))))


def divergence(f: VectorField) -> VectorField:
    return VectorField(f.grid, ifft_real(f.grid, divergence_coeffs(f.grid, fft_coeffs(f.grid, f.components))[None]))


def sobolev_norm(f: VectorField, order: int) -> float:
    """H^k norm with symbol sum_{|alpha| <= k} xi^(2 alpha)."""
    grid = f.grid
    coeffs = fft_coeffs(grid, f.components)
    weight = np.zeros(grid.shape)
    for alpha in itertools.product(range(order + 1), repeat=grid.dim):
        if sum(alpha) <= order:
            term = np.ones(grid.shape)
            for k, a in zip(grid.wavevector, alpha):
                term = term * k ** (2 * a)
            weight += term
    return float(np.sqrt(grid.volume * (weight * (np.abs(coeffs) ** 2).sum(axis=0)).sum()))


def mean_mode(f: VectorField) -> np.ndarray:
    return f.components.mean(axis=f.grid.axes)


def central_mass_fraction(f: VectorField) -> float:
    """Share of the squared L2 norm inside the central half-box |x_i| < L/4."""
    total = float((f.components**2).sum())
    if total == 0.0:
        return 1.0
    inside = np.ones(f.grid.shape, dtype=bool)
    for c in f.grid.coords:
        inside = inside & (np.abs(c) < f.grid.length / 4)
    return float((f.components**2 * inside).sum()) / total


def random_smooth_field(
    grid: GridSpec,
    rng: np.random.Generator,
    ncomp: int | None = None,
    bandwidth: float | None = None,
    mean_free: bool = True,
) -> VectorField:
    """Band-limited random real field: Gaussian coefficients on modes |n| <= bandwidth
    with a smooth spectral envelope."""
    ncomp = grid.dim if ncomp is None else ncomp
    bandwidth = grid.points / 4 if bandwidth is None else bandwidth
    nsq = sum(n.astype(float) ** 2 for n in grid.mode_numbers) + np.zeros(grid.shape)
    envelope = np.exp(-nsq / (2 * (bandwidth / 2) ** 2)) * (nsq <= bandwidth**2)
    noise = rng.standard_normal((ncomp,) + grid.shape)
    coeffs = fft_coeffs(grid, noise) * envelope
    if mean_free:
        coeffs[(slice(None),) + (0,) * grid.dim] = 0.0
    return VectorField(grid, ifft_real(grid, coeffs))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States u(t_n) at strictly increasing times, all on one grid."""

    grid: GridSpec
    times: np.ndarray
    states: tuple[VectorField, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or len(times) != len(self.states) or len(times) == 0:
            raise InvalidFieldError("need one state per time")
        if np.any(np.diff(times) <= 0):
            raise InvalidFieldError("trajectory times must be strictly increasing")
        if any(s.grid != self.grid for s in self.states):
            raise InvalidFieldError("all states must live on the trajectory grid")
        object.__setattr__(self, "times", _freeze(times))
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def initial(self) -> VectorField:
        return self.states[0]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def index_of(self, t: float, atol: float = 1e-12) -> int | None:
        i = int(np.searchsorted(self.times, t))
        for j in (i - 1, i):
            if 0 <= j < len(self.times) and abs(self.times[j] - t) <= atol * max(1.0, abs(t)):
                return j
        return None

    def state_at(self, t: float) -> VectorField:
        """State at ``t``; linear interpolation between stored times."""
        return VectorField(self.grid, self.components_at(t))

    def components_at(self, t: float) -> np.ndarray:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise DomainError(f"time {t} outside trajectory range [{self.times[0]}, {self.times[-1]}]")
        j = self.index_of(t)
        if j is not None:
            return self.states[j].components
        i = int(np.searchsorted(self.times, t))
        t0, t1 = self.times[i - 1], self.times[i]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.states[i - 1].components + w * self.states[i].components

    def relabel(self, **metadata) -> "Trajectory":
        return Trajectory(self.grid, self.times, self.states, {**self.metadata, **metadata})
