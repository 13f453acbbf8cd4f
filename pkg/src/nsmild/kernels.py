"""Scalar radial kernels: the sine-form kernel g and its derivatives, the cosine-form
kernel h, the Bessel-potential kernel k_w, the projected heat kernel assembled from
g, and two one-dimensional integrals that control translations.

Everything runs on a small vectorised adaptive Gauss-Kronrod (7/15) engine.
Angular integrals over lambda in [0, 1] use lambda = sin(theta), which turns the
weight (1 - lambda^2)^((m-3)/2) d lambda into the smooth cos(theta)^(m-2) d theta,
and are done with a Gauss-Legendre rule sized to the largest frequency present.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma

from .errors import DomainError, QuadratureError

# Kronrod 15-point nodes (positive half, decreasing) and weights; every other
# node is a 7-point Gauss node.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_W = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_W = np.zeros(15)
GAUSS_W[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def adaptive_quad(
    func: Callable[[np.ndarray], np.ndarray],
    breaks: Sequence[float],
    atol: float = 1e-12,
    rtol: float = 1e-12,
    max_intervals: int = 20000,
) -> tuple[np.ndarray | float, float]:
    """Globally adaptive G7/K15 quadrature of ``func`` over [breaks[0], breaks[-1]].

    ``func`` maps a 1D array of abscissae to an array whose leading axis matches;
    trailing axes are integrated componentwise.  Interior ``breaks`` seed the
    initial panels.  Returns (integral, error estimate).
    """
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
        raise DomainError("breakpoints must be strictly increasing with at least two entries")
    lo, hi = breaks[:-1], breaks[1:]

    def panels(lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
        fx = np.asarray(func(x), dtype=float)
        fx = fx.reshape((lo.size, 15) + fx.shape[1:])
        shape = (1, 15) + (1,) * (fx.ndim - 2)
        hk = half.reshape((-1,) + (1,) * (fx.ndim - 2))
        kron = (fx * KRONROD_W.reshape(shape)).sum(axis=1) * hk
        gauss = (fx * GAUSS_W.reshape(shape)).sum(axis=1) * hk
        diff = np.abs(kron - gauss)
        err = diff.reshape(lo.size, -1).max(axis=1) if diff.ndim > 1 else diff
        return kron, err

    vals, errs = panels(lo, hi)
    while True:
        total = vals.sum(axis=0)
        err = float(errs.sum())
        target = max(atol, rtol * float(np.max(np.abs(total))))
        if err <= target:
            return (float(total) if np.ndim(total) == 0 else total), err
        if lo.size >= max_intervals:
            raise QuadratureError(f"no convergence within {max_intervals} panels", err)
        split = errs > target / (2 * lo.size)
        if not split.any():
            split = errs >= errs.max()
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        nv, ne = panels(new_lo, new_hi)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class KernelQuery:
    """Parameters of a radial kernel evaluation at w = |x|/sqrt(t)."""

    m: int = 3
    r: float = 0.0
    t: float = 0.0
    n: int = 0
    w: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.m}")
        if self.r < 0 or self.t < 0 or self.w < 0:
            raise DomainError("r, t and w must be non-negative")
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"derivative order must be a non-negative integer, got {self.n}")


@dataclass(frozen=True)
class KernelResult:
    value: float
    error: float
    s_max: float


# ---------------------------------------------------------------- angular rules


@lru_cache(maxsize=64)
def _theta_rule(nq: int) -> tuple[np.ndarray, np.ndarray]:
    x, wt = np.polynomial.legendre.leggauss(nq)
    theta = 0.25 * np.pi * (x + 1.0)
    return theta, 0.25 * np.pi * wt


def _theta_nodes(amax: float, refine: int = 1) -> int:
    return refine * (48 + 8 * int(np.ceil(amax / 8.0)))


def angular_sine(a: np.ndarray, m: int, n: int = 0, refine: int = 1) -> np.ndarray:
    """2 int_0^1 lambda^(1+n) (1-lambda^2)^((m-3)/2) sin(a lambda + n pi/2) d lambda,
    i.e. the n-th a-derivative of the n = 0 integral."""
    a = np.asarray(a, dtype=float)
    theta, wt = _theta_rule(_theta_nodes(float(np.max(np.abs(a), initial=0.0)), refine))
    lam = np.sin(theta)
    weight = wt * lam ** (1 + n) * np.cos(theta) ** (m - 2)
    return 2.0 * np.sin(np.multiply.outer(a, lam) + 0.5 * n * np.pi) @ weight


def angular_cosine(a: np.ndarray, m: int, refine: int = 1) -> np.ndarray:
    """int_{-1}^1 cos(a lambda) (1-lambda^2)^((m-3)/2) d lambda."""
    a = np.asarray(a, dtype=float)
    theta, wt = _theta_rule(_theta_nodes(float(np.max(np.abs(a), initial=0.0)), refine))
    weight = wt * np.cos(theta) ** (m - 2)
    return 2.0 * np.cos(np.multiply.outer(a, np.sin(theta))) @ weight


# ---------------------------------------------------------------- g and h


def _radial_weight(s: np.ndarray, r: float, t: float, power: float) -> np.ndarray:
    return (t + s * s) ** (0.5 * r) * s**power * np.exp(-s * s)


def truncation_radius(q: KernelQuery, tol: float, power: float) -> float:
    """Smallest s_max >= max(6, sqrt(log(1/tol))) whose Gaussian tail bound
    (integrand envelope times 2, since the angular factor is bounded by 2) is below tol/10."""
    s = max(6.0, float(np.sqrt(np.log(1.0 / tol))))
    expo = power + q.r
    while True:
        denom = 2 * s - max(expo, 0.0) / s
        bound = 2.0 * (q.t + s * s) ** (0.5 * q.r) * s**power * np.exp(-s * s) / denom if denom > 0 else np.inf
        if bound < 0.1 * tol:
            return s
        s += 0.5


def _panel_breaks(s_max: float, w: float) -> np.ndarray:
    # about one panel per oscillation once s*w is large
    npan = max(4, int(np.ceil(s_max * w / 6.0)))
    return np.linspace(0.0, s_max, npan + 1)


def eval_g(q: KernelQuery, tol: float = 1e-10, refine: int = 1) -> KernelResult:
    """Real sine-form kernel and its w-derivatives,

        g(w) = int_0^inf (t+s^2)^(r/2) s^(m-2) e^(-s^2) 2 int_0^1 sin(s w l) l (1-l^2)^((m-3)/2) dl ds,

    with the n-th derivative taken under the integral.  ``refine`` multiplies
    the angular node count and halves the initial panel width (used for
    invariance checks)."""
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    s_max = truncation_radius(q, tol, q.m - 2 + q.n) * refine
    if q.w == 0 and q.n % 2 == 0:
        return KernelResult(0.0, 0.0, s_max)

    def integrand(s):
        return _radial_weight(s, q.r, q.t, q.m - 2 + q.n) * angular_sine(s * q.w, q.m, q.n, refine)

    breaks = _panel_breaks(s_max, q.w * refine)
    value, err = adaptive_quad(integrand, breaks, atol=0.5 * tol, rtol=0.0)
    return KernelResult(float(value), err, s_max)


def eval_h(q: KernelQuery, tol: float = 1e-10, refine: int = 1) -> KernelResult:
    """Real cosine-form kernel

        h(w) = int_0^inf (t+s^2)^(r/2) s^(m-1) e^(-s^2) int_{-1}^1 cos(s w l) (1-l^2)^((m-3)/2) dl ds.
    """
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    if q.n != 0:
        raise DomainError("h is only defined for derivative order 0")
    s_max = truncation_radius(q, tol, q.m - 1) * refine

    def integrand(s):
        return _radial_weight(s, q.r, q.t, q.m - 1) * angular_cosine(s * q.w, q.m, refine)

    breaks = _panel_breaks(s_max, q.w * refine)
    value, err = adaptive_quad(integrand, breaks, atol=0.5 * tol, rtol=0.0)
    return KernelResult(float(value), err, s_max)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^d in R^(d+1)."""
    return float(2 * np.pi ** ((d + 1) / 2) / gamma((d + 1) / 2))


def ipk_prefactor(m: int) -> float:
    """Constant c with (I-P)_ij (I-Delta)^(r/2) K_t(x) = c t^(-(m+r)/2) [bracket], for
    the Fourier convention f(x) = (2 pi)^-m int e^(i x.xi) F(xi) d xi."""
    return sphere_area(m - 2) / (2 * np.pi) ** m


def assemble_ipk_kernel(
    i: int, j: int, q: KernelQuery, tol: float = 1e-10, direction: Sequence[float] | None = None
) -> KernelResult:
    """w_i w_j g'(w) + w^-1 (delta_ij - w_i w_j) g(w) for the unit direction
    ``direction`` (default e_1); indices are 0-based."""
    if q.w <= 0:
        raise DomainError("the assembled kernel needs w > 0 (direction undefined at the origin)")
    if not (0 <= i < q.m and 0 <= j < q.m):
        raise DomainError(f"indices must lie in [0, {q.m})")
    omega = np.zeros(q.m)
    omega[0] = 1.0
    if direction is not None:
        omega = np.asarray(direction, dtype=float)
        if omega.shape != (q.m,) or not np.linalg.norm(omega) > 0:
            raise DomainError("direction must be a nonzero vector of length m")
        omega = omega / np.linalg.norm(omega)
    oo = omega[i] * omega[j]
    delta = 1.0 if i == j else 0.0
    value, err = 0.0, 0.0
    s_max = 0.0
    if oo != 0.0:
        d1 = eval_g(KernelQuery(q.m, q.r, q.t, 1, q.w), tol)
        value += oo * d1.value
        err += abs(oo) * d1.error
        s_max = d1.s_max
    if delta - oo != 0.0:
        g0 = eval_g(KernelQuery(q.m, q.r, q.t, 0, q.w), tol)
        value += (delta - oo) * g0.value / q.w
        err += abs(delta - oo) * g0.error / q.w
        s_max = max(s_max, g0.s_max)
    return KernelResult(float(value), float(err), s_max)


# ---------------------------------------------------------------- Bessel kernel


def eval_bessel_kernel(m: int, w_order: float, x_radius: float, tol: float = 1e-10) -> KernelResult:
    """k_w(x) = Gamma(w/2)^-1 int_0^inf e^-t t^((w-2)/2) K_t(x) dt at |x| = x_radius.

    With t = tau^2 the weight becomes 2 tau^(w-1) d tau; a further tau = e^u
    turns the integrand into a smooth bump, integrated to relative ``tol``.
    """
    if int(m) != m or m < 3:
        raise DomainError("dimension must be an integer >= 3")
    if not 0 < w_order < 1:
        raise DomainError(f"order must lie in (0, 1), got {w_order}")
    if not x_radius > 0:
        raise DomainError("radius must be positive")
    rho = float(x_radius)

    def integrand(u):
        tau = np.exp(u)
        tsq = tau * tau
        return 2.0 * tau ** (w_order - m) * np.exp(-tsq - rho * rho / (4.0 * tsq))

    peak = 0.5 * np.log(max(rho / 2.0, 1e-300))
    lo = np.log(rho / 2.0) - 4.0
    hi = max(np.log(8.0), peak + 3.0)
    breaks = np.unique(np.clip([lo, min(peak, np.log(rho)) - 1.0, peak, peak + 1.0, hi], lo, hi))
    value, err = adaptive_quad(integrand, breaks, atol=1e-300, rtol=tol)
    scale = (4 * np.pi) ** (-m / 2) / gamma(w_order / 2)
    return KernelResult(float(value * scale), float(err * scale), float(np.exp(hi)))


def bessel_kernel_mass(m: int, w_order: float, tol: float = 1e-8) -> tuple[float, float]:
    """|S^(m-1)| int_0^inf k_w(rho) rho^(m-1) d rho, with rho = e^v."""
    kernel_tol = 0.1 * tol

    def integrand(v):
        rho = np.exp(v)
        vals = np.array([eval_bessel_kernel(m, w_order, x, kernel_tol).value for x in rho])
        return vals * rho**m

    v_lo = np.log(tol * 1e-2) / w_order
    value, err = adaptive_quad(integrand, [v_lo, -2.0, 0.0, 2.0, np.log(60.0)], atol=0.1 * tol, rtol=0.0)
    area = sphere_area(m - 1)
    return float(value * area), float(err * area)


def bessel_bound_ratio(m: int, w_order: float, radii: Sequence[float], tol: float = 1e-10) -> np.ndarray:
    """k_w(x) e^(|x|/2) |x|^(m-w) at each radius; its maximum is the fitted C_w."""
    radii = np.asarray(radii, dtype=float)
    vals = np.array([eval_bessel_kernel(m, w_order, x, tol).value for x in radii])
    return vals * np.exp(radii / 2) * radii ** (m - w_order)


# ---------------------------------------------------------------- translation integrals


def heat_shift_l1(t: float, lam: float, tol: float = 1e-12) -> KernelResult:
    """int |K_t(x+h) - K_t(x)| dx for |h| = lam, via its one-dimensional reduction

        pi^(-1/2) int |exp(-(s+w/2)^2) - exp(-(s-w/2)^2)| ds,   w = lam / (2 sqrt t).

    The integrand is odd about s = 0, with the first Gaussian dominating for
    s < 0, so the value is twice the signed integral over s < 0."""
    if not t > 0:
        raise DomainError("t must be positive")
    if lam < 0:
        raise DomainError("shift length must be non-negative")
    w = lam / (2.0 * np.sqrt(t))
    if w == 0:
        return KernelResult(0.0, 0.0, 0.0)
    reach = 0.5 * w + 9.0

    def integrand(s):
        return np.exp(-((s + 0.5 * w) ** 2)) - np.exp(-((s - 0.5 * w) ** 2))

    breaks = np.unique(np.clip([-reach, -0.5 * w - 3, -0.5 * w, -0.5 * w + 3, 0.0], -reach, 0.0))
    value, err = adaptive_quad(integrand, breaks, atol=0.25 * tol * np.sqrt(np.pi), rtol=0.0)
    scale = 2.0 / np.sqrt(np.pi)
    return KernelResult(float(scale * value), float(scale * err), reach)


def translation_bound_integral(r: float, lam: float, tol: float = 1e-12) -> KernelResult:
    """int_0^inf e^-t t^(r/2) [a / (1 + a)] dt / t with a = lam / (2 sqrt t).

    With t = tau^2 this is 2 int e^(-tau^2) tau^(r-1) lam / (2 tau + lam) d tau,
    integrated in u = log(tau) where the integrand is smooth and decays like
    tau^r at the lower end."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if not 0 < lam <= 1:
        raise DomainError(f"lambda must lie in (0, 1], got {lam}")

    def integrand(u):
        tau = np.exp(u)
        return 2.0 * np.exp(-tau * tau) * tau**r * lam / (2.0 * tau + lam)

    lo = np.log(0.01 * tol * min(r, 1.0)) / r + np.log(lam)
    hi = np.log(7.0)
    knee = np.log(0.5 * lam)
    breaks = np.unique(np.clip([lo, knee - 2, knee, knee + 2, 0.0, hi], lo, hi))
    value, err = adaptive_quad(integrand, breaks, atol=0.5 * tol, rtol=0.0)
    return KernelResult(float(value), float(err), 7.0)


# ---------------------------------------------------------------- sweeps


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def g_decay_profile(m: int, n: int, r: float, t: float, ws: Sequence[float], tol: float = 1e-10) -> np.ndarray:
    """(1 + w)^(m+n-1) |g^(n)(w)| on the given w-grid."""
    ws = np.asarray(ws, dtype=float)
    vals = np.array([eval_g(KernelQuery(m, r, t, n, w), tol).value for w in ws])
    return (1.0 + ws) ** (m + n - 1) * np.abs(vals)


def h_decay_constant(m: int, r: float, t: float, ws: Sequence[float], eps: float, tol: float = 1e-10) -> float:
    """Fitted C in |h(w)| <= C (1 + w)^-(m + eps) over the sampled w."""
    ws = np.asarray(ws, dtype=float)
    vals = np.array([eval_h(KernelQuery(m, r, t, 0, w), tol).value for w in ws])
    return float(np.max(np.abs(vals) * (1.0 + ws) ** (m + eps)))


def translation_regime(r: float, lams: Sequence[float], tol: float = 1e-12) -> dict:
    """Values of the translation integral and the normalised ratios for each regime."""
    lams = np.asarray(lams, dtype=float)
    vals = np.array([translation_bound_integral(r, x, tol).value for x in lams])
    if r < 1:
        ratio, slope = vals / lams**r, loglog_slope(lams, vals)
    elif r == 1:
        ratio = vals / (lams * np.log(1.0 / lams))
        slope = loglog_slope(lams, vals / np.log(1.0 / lams))
    else:
        ratio, slope = vals / lams, loglog_slope(lams, vals)
    expected = min(r, 1.0)
    return {"values": vals, "ratio": ratio, "slope": slope, "expected_slope": expected}
