"""Calderon-Zygmund kernels, their dyadic pieces, smooth cutoffs and the mollifier.

Points are arrays of shape ``(..., n)``; for ``n == 1`` a bare array of
scalars is also accepted wherever ``n`` is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lattice import LatticeFunction, ball_points

# Largest exponent e allowed in a cutoff rescaling xi -> 2^e xi.
MAX_CUTOFF_EXPONENT = 4096.0

# Recorded bound for 2^{jn}|K_j| and 2^{j(n+1)}|grad K_j| (built-in kernels, n <= 2, j <= 14).
# Measured maxima: odd_power 2.0 / 4.83, riesz 15.97 / 127.7 (j = 1, inner cut at |x| = 1/4).
PIECE_CONSTANT = 160.0


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != n:
        raise ValueError(f"expected points with trailing axis {n}, got shape {x.shape}")
    return x


def _radius(x, n: int) -> np.ndarray:
    return np.sqrt(np.sum(_as_points(x, n) ** 2, axis=-1))


# --- smooth profiles -------------------------------------------------------

def _bump_ratio(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 1 for t <= 0, 0 for t >= 1, built from exp(-1/t)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f_up = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
        f_dn = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
    return f_up / (f_up + f_dn)


def radial_profile(r, plateau: float, support: float) -> np.ndarray:
    """Smooth radial function: 1 on r <= plateau, 0 on r >= support, values in [0, 1]."""
    return _bump_ratio((np.asarray(r, dtype=float) - plateau) / (support - plateau))


def chi(r) -> np.ndarray:
    """Cutoff equal to 1 on |xi| <= 1/4 and supported in |xi| <= 1/2."""
    return radial_profile(r, 0.25, 0.5)


def chi_tilde(r) -> np.ndarray:
    """Cutoff equal to 1 on |xi| <= 1/2 and supported in |xi| <= 1."""
    return radial_profile(r, 0.5, 1.0)


@dataclass(frozen=True)
class SmoothCutoff:
    profile: str  # "chi" or "chi_tilde"
    log2_scale: float = 0.0  # evaluates profile(2^log2_scale |xi|)
    n: int = 1

    def __post_init__(self):
        if self.profile not in ("chi", "chi_tilde"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.log2_scale > MAX_CUTOFF_EXPONENT:
            raise OverflowError(f"cutoff scale 2^{self.log2_scale} out of range")

    @property
    def plateau_radius(self) -> float:
        return (0.25 if self.profile == "chi" else 0.5) * 2.0 ** (-self.log2_scale)

    @property
    def support_radius(self) -> float:
        return (0.5 if self.profile == "chi" else 1.0) * 2.0 ** (-self.log2_scale)

    def __call__(self, xi) -> np.ndarray:
        r = _radius(xi, self.n)
        base = chi if self.profile == "chi" else chi_tilde
        with np.errstate(divide="ignore"):
            lr = np.log2(r) + self.log2_scale
        scaled = np.where(lr > 4.0, 4.0, np.exp2(np.minimum(lr, 4.0)))
        return np.where(r == 0, 1.0, base(scaled))


def cutoff_exponent(s: int, M: float) -> float:
    """e = 4 s 2^{s/(2M)}, the log2 scale of chi_{s,M}."""
    if s < 1 or M <= 0:
        raise ValueError("need s >= 1 and M > 0")
    e = 4.0 * s * 2.0 ** (s / (2.0 * M))
    if e > MAX_CUTOFF_EXPONENT:
        raise OverflowError(f"cutoff exponent {e:.1f} for s={s}, M={M} out of range")
    return e


def chi_sM(s: int, M: float, n: int = 1) -> SmoothCutoff:
    return SmoothCutoff("chi", cutoff_exponent(s, M), n)


def chi_tilde_sM(s: int, M: float, n: int = 1) -> SmoothCutoff:
    return SmoothCutoff("chi_tilde", cutoff_exponent(s, M), n)


def cutoff_chi_sM(s: int, M: float, xi, n: int = 1) -> np.ndarray:
    return chi_sM(s, M, n)(xi)


# --- kernels ------------------------------------------------------------------

@dataclass(frozen=True)
class CZKernel:
    """Rule-based Calderon-Zygmund kernel with declared size and smoothness constants."""

    name: str
    n: int
    rule: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    size_constant: float = 1.0  # |K(x)| <= A |x|^{-n}
    smooth_constant: float = 1.0  # |grad K(x)| <= B |x|^{-n-1}
    odd: bool = False

    def __call__(self, x) -> np.ndarray:
        """K(x) for x != 0; the value 0 is returned at the origin."""
        pts = _as_points(x, self.n)
        r = np.sqrt(np.sum(pts**2, axis=-1))
        safe = np.where(r[..., None] == 0, 1.0, pts)
        return np.where(r == 0, 0.0, self.rule(safe))


def _odd_power(pts):
    return 1.0 / pts[..., 0]


def _riesz(i: int, n: int):
    def rule(pts):
        r = np.sqrt(np.sum(pts**2, axis=-1))
        return pts[..., i] / r ** (n + 1)
    return rule


def builtin_kernel(name: str, n: int = 1, *, rule=None, size_constant: float | None = None,
                   smooth_constant: float | None = None, samples: int = 2000, seed: int = 0) -> CZKernel:
    """``odd_power`` (1/y, n = 1), ``riesz_i`` (x_i / |x|^{n+1}) or ``truncated_custom``.

    ``truncated_custom`` wraps a user rule with declared constants; the size
    bound is checked on random samples and a ValueError is raised if it fails.
    """
    if name == "odd_power":
        if n != 1:
            raise ValueError("odd_power is one-dimensional")
        return CZKernel("odd_power", 1, _odd_power, 1.0, 1.0, odd=True)
    if name.startswith("riesz_"):
        i = int(name.split("_", 1)[1])
        if not 1 <= i <= n:
            raise ValueError(f"riesz index {i} out of range for n={n}")
        return CZKernel(name, n, _riesz(i - 1, n), 1.0, float(n + 2), odd=True)
    if name == "truncated_custom":
        if rule is None or size_constant is None:
            raise ValueError("truncated_custom needs rule= and size_constant=")
        k = CZKernel(name, n, rule, float(size_constant),
                     float(smooth_constant if smooth_constant is not None else size_constant))
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((samples, n)) * np.exp(rng.uniform(-3, 6, (samples, 1)))
        r = np.sqrt(np.sum(pts**2, axis=-1))
        if np.any(np.abs(k(pts)) > k.size_constant * r ** (-n) * (1 + 1e-12)):
            raise ValueError("declared size constant violated on samples")
        return k
    raise ValueError(f"unknown kernel {name!r}")


def partition_weight(j: int, r) -> np.ndarray:
    """psi_j(|x|): smooth dyadic partition of unity with sum_{j<=J} psi_j = 1 on 1/2 <= |x| <= 2^J.

    psi_1 = chi_tilde(|x|/4) - chi_tilde(2|x|) and psi_j = chi_tilde(|x|/2^{j+1}) - chi_tilde(|x|/2^j);
    the inner cut of psi_1 only acts on |x| < 1/2 so lattice values are unaffected.
    """
    if j < 1:
        raise ValueError("j must be positive")
    r = np.asarray(r, dtype=float)
    if j == 1:
        return chi_tilde(r / 4.0) - chi_tilde(2.0 * r)
    return chi_tilde(r / 2.0 ** (j + 1)) - chi_tilde(r / 2.0**j)


def piece_support(j: int) -> tuple[float, float]:
    """(inner, outer) radii with K_j = 0 for |x| <= inner or |x| >= outer."""
    return (0.25 if j == 1 else 2.0 ** (j - 1), 2.0 ** (j + 1))


@dataclass(frozen=True)
class DyadicKernel:
    """K = sum_{j>=1} K_j with K_j = K * psi_j."""

    base: CZKernel

    @property
    def n(self) -> int:
        return self.base.n

    def piece(self, j: int, x) -> np.ndarray:
        pts = _as_points(x, self.n)
        r = np.sqrt(np.sum(pts**2, axis=-1))
        return self.base(pts) * partition_weight(j, r)

    def partial_sum(self, a: int, b: int, x) -> np.ndarray:
        """K^{a,b} = sum_{a <= j < b} K_j."""
        pts = _as_points(x, self.n)
        return sum((self.piece(j, pts) for j in range(max(a, 1), b)), np.zeros(pts.shape[:-1]))

    def lattice_support(self, j: int) -> np.ndarray:
        """Lattice points (m, n) in the closed support annulus of K_j, origin excluded."""
        inner, outer = piece_support(j)
        return ball_points(outer, self.n, inner=max(inner, 0.5))

    def lattice_piece(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        pts = self.lattice_support(j)
        return pts, self.piece(j, pts)

    def piece_function(self, j: int) -> LatticeFunction:
        R = 2 ** (j + 1)
        lo = [-R] * self.n
        return LatticeFunction.from_points(lambda p: self.piece(j, p), lo, [R] * self.n)


def dyadic_piece(K: CZKernel, j: int, x) -> np.ndarray:
    return DyadicKernel(K).piece(j, x)


# --- mollifier ---------------------------------------------------------------------

def mollifier_bandwidth(n: int) -> float:
    """Per-axis Fejer parameter a; the transform of the profile lives in |xi_i| <= 2a."""
    return 0.9 / (4.0 * math.sqrt(n))


def mollifier(J: int, x, n: int = 1) -> np.ndarray:
    """phi_J(x) = 2^{-Jn} phi(2^{-J} x).

    phi is a product of squared Fejer kernels 1.5 a sinc(a t)^4: it is
    non-negative, has integral 1, and its transform is supported in
    |xi| <= 2a sqrt(n) = 0.45.
    """
    if J < 0:
        raise ValueError("J must be non-negative")
    pts = _as_points(x, n) * 2.0 ** (-J)
    a = mollifier_bandwidth(n)
    vals = np.prod(1.5 * a * np.sinc(a * pts) ** 4, axis=-1)
    return vals * 2.0 ** (-J * n)
