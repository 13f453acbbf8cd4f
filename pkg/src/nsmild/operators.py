"""Fourier multipliers (heat flow, Leray projection, Bessel potentials, the chi_r
cutoff, translations) and the pseudo-spectral advection term."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, SolenoidalWarning
from .field_core import (
    GridSpec,
    ModeSet,
    VectorField,
    fft_coeffs,
    gradient_coeffs,
    ifft_real,
    rfft_coeffs,
)

SOLENOIDAL_WARN_TOL = 1e-6


# ---------------------------------------------------------------- symbols


def _modes(grid: GridSpec, modes: ModeSet | None) -> ModeSet:
    return grid.full if modes is None else modes


def heat_symbol(grid: GridSpec, t: float, modes: ModeSet | None = None) -> np.ndarray:
    if t < 0:
        raise DomainError(f"heat semigroup needs t >= 0, got {t}")
    return np.exp(-t * _modes(grid, modes).ksq)


def bessel_symbol(grid: GridSpec, r: float, sign: int = 1, modes: ModeSet | None = None) -> np.ndarray:
    if r < 0:
        raise DomainError(f"Bessel potential order must be >= 0, got {r}")
    if sign not in (1, -1):
        raise DomainError(f"Bessel potential sign must be +1 or -1, got {sign}")
    return (1.0 + _modes(grid, modes).ksq) ** (sign * r / 2.0)


def chi_symbol(grid: GridSpec, r: float, modes: ModeSet | None = None) -> np.ndarray:
    """exp(-r/|k|^2), set to 0 at k = 0."""
    if r <= 0:
        raise DomainError(f"chi cutoff needs r > 0, got {r}")
    ksq = _modes(grid, modes).ksq
    out = np.zeros(ksq.shape)
    nz = ksq > 0
    out[nz] = np.exp(-r / ksq[nz])
    return out


def translation_symbol(grid: GridSpec, h: Sequence[float], modes: ModeSet | None = None) -> np.ndarray:
    """exp(i k.h); Nyquist modes use cos(k h) so real fields stay real."""
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != grid.dim:
        raise DomainError(f"displacement needs {grid.dim} entries, got {h.size}")
    ms = _modes(grid, modes)
    out = np.ones(ms.ksq.shape, dtype=complex)
    for n, k, ha in zip(ms.mode_numbers, ms.wavevector, h):
        factor = np.where(np.abs(n) == grid.points // 2, np.cos(k * ha), np.exp(1j * k * ha))
        out = out * factor
    return out


def translation_symbol_derivative(
    grid: GridSpec, h: Sequence[float], direction: Sequence[float], modes: ModeSet | None = None
) -> np.ndarray:
    """Derivative of ``translation_symbol(h)`` along ``direction`` (same Nyquist rule)."""
    h = np.asarray(h, dtype=float).reshape(-1)
    direction = np.asarray(direction, dtype=float).reshape(-1)
    if h.size != grid.dim or direction.size != grid.dim:
        raise DomainError(f"displacements need {grid.dim} entries")
    ms = _modes(grid, modes)
    factors, derivs = [], []
    for n, k, ha, da in zip(ms.mode_numbers, ms.wavevector, h, direction):
        nyq = np.abs(n) == grid.points // 2
        factors.append(np.where(nyq, np.cos(k * ha), np.exp(1j * k * ha)))
        derivs.append(da * np.where(nyq, -k * np.sin(k * ha), 1j * k * np.exp(1j * k * ha)))
    out = np.zeros(ms.ksq.shape, dtype=complex)
    for a in range(grid.dim):
        term = derivs[a]
        for b in range(grid.dim):
            if b != a:
                term = term * factors[b]
        out = out + term
    return out


def leray_coeffs(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """(I - k k^T/|k|^2) on every mode with |k| > 0; the k = 0 mode is left alone."""
    ms = grid.modes_for(coeffs)
    k = ms.derivative_wavevector
    ksq = ms.dksq
    inv = np.zeros(ksq.shape)
    nz = ksq > 0
    inv[nz] = 1.0 / ksq[nz]
    kdotc = sum(ka * coeffs[a] for a, ka in enumerate(k)) * inv
    return np.stack([coeffs[a] - ka * kdotc for a, ka in enumerate(k)])


# ---------------------------------------------------------------- MultiplierSpec


@dataclass(frozen=True)
class MultiplierSpec:
    """A named Fourier multiplier: heat(t), leray, bessel(r, sign), chi(r), translate(h)."""

    kind: str
    t: float = 0.0
    r: float = 0.0
    sign: int = 1
    h: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("heat", "leray", "bessel", "chi", "translate"):
            raise DomainError(f"unknown multiplier kind {self.kind!r}")
        if self.kind == "heat" and self.t < 0:
            raise DomainError("heat(t) requires t >= 0")
        if self.kind == "bessel" and (self.r < 0 or self.sign not in (1, -1)):
            raise DomainError("bessel(r, sign) requires r >= 0 and sign in {+1, -1}")
        if self.kind == "chi" and self.r <= 0:
            raise DomainError("chi(r) requires r > 0")
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))

    def apply_coeffs(self, grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
        if self.kind == "leray":
            return leray_coeffs(grid, coeffs)
        ms = grid.modes_for(coeffs)
        if self.kind == "heat":
            sym = heat_symbol(grid, self.t, ms)
        elif self.kind == "bessel":
            sym = bessel_symbol(grid, self.r, self.sign, ms)
        elif self.kind == "chi":
            sym = chi_symbol(grid, self.r, ms)
        else:
            sym = translation_symbol(grid, self.h, ms)
        return coeffs * sym

    def __call__(self, f: VectorField) -> VectorField:
        return apply_multipliers(f, self)


def apply_multipliers(f: VectorField, *specs: MultiplierSpec) -> VectorField:
    """Apply a chain of multipliers (rightmost first) with one transform pair."""
    coeffs = rfft_coeffs(f.grid, f.components)
    for spec in reversed(specs):
        coeffs = spec.apply_coeffs(f.grid, coeffs)
    return VectorField(f.grid, ifft_real(f.grid, coeffs))


# ---------------------------------------------------------------- operations


def heat_semigroup(t: float, f: VectorField) -> VectorField:
    return apply_multipliers(f, MultiplierSpec("heat", t=t))


def leray_project(f: VectorField) -> VectorField:
    return apply_multipliers(f, MultiplierSpec("leray"))


def bessel_potential(r: float, sign: int, f: VectorField) -> VectorField:
    """(I - Delta)^(sign*r/2) f."""
    return apply_multipliers(f, MultiplierSpec("bessel", r=r, sign=sign))


def chi_mollify(r: float, f: VectorField) -> VectorField:
    return apply_multipliers(f, MultiplierSpec("chi", r=r))


def translate(h: Sequence[float], f: VectorField) -> VectorField:
    """(U(h) f)(x) = f(x + h) with periodic wrap; spectral interpolation off-grid."""
    return apply_multipliers(f, MultiplierSpec("translate", h=tuple(np.ravel(h))))


def dealias(f: VectorField) -> VectorField:
    coeffs = rfft_coeffs(f.grid, f.components) * f.grid.half.dealias_mask
    return VectorField(f.grid, ifft_real(f.grid, coeffs))


# ---------------------------------------------------------------- advection


def advection_coeffs(grid: GridSpec, uc: np.ndarray, dealiased: bool = True) -> np.ndarray:
    """Coefficients of u.grad u (advective form) from the coefficients of u,
    returned on the same lattice (full or half) as ``uc``."""
    m = grid.dim
    ms = grid.modes_for(uc)
    u = ifft_real(grid, uc)
    grads = ifft_real(grid, gradient_coeffs(grid, uc).reshape((m * m,) + uc.shape[1:]))
    grads = grads.reshape((m, m) + grid.shape)
    prod = np.einsum("j...,aj...->a...", u, grads)
    out = _forward_like(grid, prod, ms)
    if dealiased:
        out *= ms.dealias_mask
    return out


def _forward_like(grid: GridSpec, arr: np.ndarray, ms: ModeSet) -> np.ndarray:
    return fft_coeffs(grid, arr) if ms is grid.full else rfft_coeffs(grid, arr)


def advection_divergence_form_coeffs(grid: GridSpec, uc: np.ndarray, dealiased: bool = True) -> np.ndarray:
    """Coefficients of sum_k d_k(u_k u_a)."""
    m = grid.dim
    ms = grid.modes_for(uc)
    u = ifft_real(grid, uc)
    out = np.zeros_like(uc)
    k = ms.derivative_wavevector
    for a in range(m):
        flux = _forward_like(grid, u * u[a], ms)
        out[a] = sum(1j * k[j] * flux[j] for j in range(m))
    if dealiased:
        out *= ms.dealias_mask
    return out


def _warn_if_not_solenoidal(u: VectorField):
    defect = u.divergence_defect()
    if defect > SOLENOIDAL_WARN_TOL:
        warnings.warn(
            f"advection input is not divergence-free (defect {defect:.2e}); "
            "advective and divergence forms differ",
            SolenoidalWarning,
            stacklevel=3,
        )
    return defect


def nonlinear_term(u: VectorField, form: str = "advective", dealiased: bool = True) -> VectorField:
    """u.grad u, pseudo-spectrally with 2/3-rule dealiasing of the product.

    ``form="divergence"`` evaluates sum_k d_k(u_k u_a) instead; the two agree
    for divergence-free, dealiased ``u``.
    """
    _warn_if_not_solenoidal(u)
    uc = rfft_coeffs(u.grid, u.components)
    if form == "advective":
        out = advection_coeffs(u.grid, uc, dealiased)
    elif form == "divergence":
        out = advection_divergence_form_coeffs(u.grid, uc, dealiased)
    else:
        raise DomainError(f"unknown form {form!r}")
    return VectorField(u.grid, ifft_real(u.grid, out))


def advection_pointwise(u: VectorField) -> VectorField:
    """u.grad u as a plain grid product of u and its spectral gradient (no dealiasing)."""
    uc = rfft_coeffs(u.grid, u.components)
    m = u.grid.dim
    grads = ifft_real(u.grid, gradient_coeffs(u.grid, uc).reshape((m * m,) + uc.shape[1:]))
    grads = grads.reshape((m, m) + u.grid.shape)
    return VectorField(u.grid, np.einsum("j...,aj...->a...", u.components, grads))

