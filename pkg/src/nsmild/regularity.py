"""Regularity of the fluctuation v(t) = u(t) - e^{t Delta} u0: Bessel-potential
L^1 norms, temporal and spatial Hoelder fits, the smoothing-difference bound and
the L^1-L^2 interpolation inequality."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .errors import DomainError, FitError
from .field_core import Trajectory, VectorField, lp_norm
from .operators import MultiplierSpec, apply_multipliers, bessel_potential, heat_semigroup, translate


# differences below this fraction of the state norm are round-off, not signal
ROUNDOFF_FLOOR = 1e-12


def _floor(norms, scale: float) -> np.ndarray:
    norms = np.asarray(norms, dtype=float)
    return np.where(norms <= ROUNDOFF_FLOOR * scale, 0.0, norms)


def compute_fluctuation(traj: Trajectory, t: float) -> VectorField:
    """v(t) = u(t) - e^{t Delta} u0 (linear interpolation between stored times)."""
    if t < traj.times[0] - 1e-12 or t > traj.final_time + 1e-12:
        raise DomainError(f"time {t} outside trajectory range [{traj.times[0]}, {traj.final_time}]")
    t = min(max(float(t), float(traj.times[0])), traj.final_time)
    return traj.state_at(t) - heat_semigroup(t - float(traj.times[0]), traj.initial)


def _check_r(r: float):
    if not 0 <= r < 1:
        raise DomainError(f"smoothness index must lie in [0, 1), got {r}")


def bessel_lp_norm(v: VectorField, p: float, r: float) -> float:
    """||(I - Delta)^{r/2} v||_p."""
    if r == 0:
        return lp_norm(v, p)
    return lp_norm(bessel_potential(r, +1, v), p)


def l1r_norm(v: VectorField, r: float) -> float:
    """||(I - Delta)^{r/2} v||_1 for r in [0, 1)."""
    _check_r(r)
    return bessel_lp_norm(v, 1, r)


def fluctuation_norms(traj: Trajectory, r: float, times=None) -> np.ndarray:
    """||v(t)||_{L^1_r} at the given (default: all stored) times."""
    _check_r(r)
    times = traj.times if times is None else times
    out = []
    for t in times:
        norm = l1r_norm(compute_fluctuation(traj, float(t)), r)
        out.append(float(_floor(norm, l1r_norm(traj.state_at(float(t)), r))))
    return np.array(out)


# ---------------------------------------------------------------- Hoelder fits


@dataclass(frozen=True)
class HolderFit:
    offsets: np.ndarray
    norms: np.ndarray
    slope: float
    residual: float
    p: float
    r: float
    kind: str
    intercept: float = float("nan")
    degenerate: bool = False
    ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def constant(self) -> float:
        """Largest ratio norm / (|h|^r ||v||) (spatial fits); nan when not recorded."""
        return float(self.ratios.max()) if self.ratios.size else float("nan")


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line through (log x, log y); returns (slope, intercept, rms residual)."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2)))


def _fit(offsets, norms, p, r, kind, ratios=None) -> HolderFit:
    offsets = np.asarray(offsets, dtype=float)
    norms = np.asarray(norms, dtype=float)
    order = np.argsort(-offsets, kind="stable")
    offsets, norms = offsets[order], norms[order]
    ratios = np.zeros(0) if ratios is None else np.asarray(ratios, dtype=float)[order]
    if np.any(np.diff(offsets) >= 0):
        raise FitError("offsets must be distinct")
    nz = norms > 0
    if nz.sum() < 3:
        return HolderFit(offsets, norms, float("nan"), float("nan"), p, r, kind, degenerate=True, ratios=ratios)
    slope, intercept, resid = loglog_fit(offsets[nz], norms[nz])
    return HolderFit(offsets, norms, slope, resid, p, r, kind, intercept, False, ratios)


def temporal_holder_fit(traj: Trajectory, t: float, r: float, offsets) -> HolderFit:
    """Fit ||v(t+h) - v(t)||_{L^1_r} ~ c h^alpha over the offsets with t + h in range."""
    _check_r(r)
    valid = [float(h) for h in offsets if h > 0 and t + h <= traj.final_time + 1e-12]
    if len(valid) < 3:
        raise FitError(f"need at least 3 offsets inside the trajectory, got {len(valid)}")
    vt = compute_fluctuation(traj, t)
    scale = l1r_norm(traj.state_at(t), r)
    norms = _floor([l1r_norm(compute_fluctuation(traj, t + h) - vt, r) for h in valid], scale)
    return _fit(valid, norms, 1.0, r, "temporal")


def _displacements(offsets, dim: int) -> np.ndarray:
    arr = np.asarray(offsets, dtype=float)
    if arr.ndim == 1:
        # scalar offsets act along the first axis
        out = np.zeros((arr.size, dim))
        out[:, 0] = arr
        return out
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DomainError(f"displacements must be scalars or {dim}-vectors")
    return arr


def admissible_p_limit(m: int, r: float) -> float:
    """Upper end m/(m-1+r) of the exponent range for the spatial estimate (excluded)."""
    return m / (m - 1 + r)


def spatial_holder_fit(v: VectorField, p: float, r: float, offsets) -> HolderFit:
    """||v(. + h) - v||_p against |h|^r ||v||_{L^p_r}; the ratios and their max c(r) are reported."""
    _check_r(r)
    m = v.grid.dim
    if not 1 <= p < admissible_p_limit(m, r):
        raise DomainError(f"p must lie in [1, {admissible_p_limit(m, r):.4f}) for r = {r}")
    hs = _displacements(offsets, m)
    mags = np.linalg.norm(hs, axis=1)
    if np.any(mags > 1 + 1e-12) or np.any(mags <= 0):
        raise DomainError("displacements must satisfy 0 < |h| <= 1")
    base = bessel_lp_norm(v, p, r)
    norms = np.array([lp_norm(translate(h, v) - v, p) for h in hs])
    ratios = norms / (mags**r * base) if base > 0 else np.zeros_like(norms)
    return _fit(mags, norms, p, r, "spatial", ratios)


# ---------------------------------------------------------------- bounds


def smoothing_difference_bound(epsilon: float, h: float) -> float:
    """2 h^eps / Gamma(1 + eps)."""
    return 2.0 * h**epsilon / gamma(1.0 + epsilon)


def smoothing_difference_check(f: VectorField, epsilon: float, h_values) -> list[float]:
    """||(I - e^{h Delta})(I - Delta)^{-eps} f||_1 / ||f||_1 for each h."""
    if not 0 < epsilon <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    base = lp_norm(f, 1)
    if base == 0:
        raise DomainError("smoothing-difference ratio needs f != 0")
    smooth = apply_multipliers(f, MultiplierSpec("bessel", r=2 * epsilon, sign=-1))
    out = []
    for h in h_values:
        if h < 0:
            raise DomainError(f"h must be >= 0, got {h}")
        diff = smooth - heat_semigroup(float(h), smooth)
        out.append(lp_norm(diff, 1) / base)
    return out


@dataclass(frozen=True)
class InterpolationRecord:
    lp: float
    bound: float
    ratio: float
    theta: float
    degenerate: bool = False


def interpolation_check(v: VectorField, p: float) -> InterpolationRecord:
    """||v||_p against ||v||_1^theta ||v||_2^(1-theta) with theta = 2(1/p - 1/2)."""
    if not 1 < p < 2:
        raise DomainError(f"p must lie in (1, 2), got {p}")
    theta = 2 * (1 / p - 0.5)
    lp = lp_norm(v, p)
    bound = lp_norm(v, 1) ** theta * lp_norm(v, 2) ** (1 - theta)
    if bound == 0:
        return InterpolationRecord(lp, bound, float("nan"), theta, True)
    return InterpolationRecord(lp, bound, lp / bound, theta)
