"""Finite models of Z^n and of the torus.

Two function models are used throughout the package:

* ``box``   -- a finitely supported function on Z^n, stored as a dense array on
  an axis-aligned box ``origin + [0, shape)``; values outside are zero.
* ``torus`` -- a function on Z/N_1 x ... x Z/N_n.

The Fourier transform on a torus uses the kernel ``e(-x.xi)`` with
``xi = k / N`` and is unnormalized in the forward direction, so that
``dft(delta_0) == 1`` and Parseval reads ``N * ||f||^2 == ||dft(f)||^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Largest padded array (number of complex entries) that convolve will allocate.
MAX_PADDED_ENTRIES = 1 << 26

# Fractional bits kept in the exact (integer) part of a split phase coefficient.
_SPLIT_BITS = 26

# frac_products reduces coefficients mod this integer (exactly) so coef * 2^26 fits in int64
_WRAP = float(1 << 30)


class DimensionMismatch(ValueError):
    pass


def expi(theta) -> np.ndarray:
    """e(theta) = exp(2 pi i theta) after reducing theta mod 1."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(1j * TWO_PI * (theta - np.floor(theta)))


def frac_product(coef, ints) -> np.ndarray:
    """Return ``coef * ints mod 1`` for a real coefficient and integer array.

    ``ints`` must hold exact integers (|ints| < 2**62).  Rational coefficients
    are reduced with integer arithmetic and are exact.  A float coefficient is
    split as ``hi + lo`` with ``hi`` a dyadic rational with 26 fractional bits;
    the ``hi`` part is reduced exactly and only ``lo * ints`` (with
    ``|lo| < 2**-27``) goes through floating point multiplication.
    """
    ints = np.asarray(ints, dtype=np.int64)
    if isinstance(coef, Rational) and not isinstance(coef, bool):
        c = Fraction(coef)
        q = c.denominator
        a = c.numerator % q
        if q < (1 << 31):
            res = (np.mod(ints, q) * a) % q
            return res.astype(float) / q
        vals = [(int(k) * a) % q for k in ints.ravel()]
        return (np.array([float(Fraction(v, q)) for v in vals])
                .reshape(ints.shape))
    c = float(coef)
    scale = 1 << _SPLIT_BITS
    hi_num = int(math.floor(c * scale))
    lo = c - hi_num / scale
    hi = (np.mod(ints, scale) * (hi_num % scale)) % scale
    out = hi.astype(float) / scale + lo * ints.astype(float)
    return out - np.floor(out)


def frac_products(coefs, ints) -> np.ndarray:
    """Elementwise ``coefs * ints mod 1`` for float arrays, with the same hi/lo split."""
    ints = np.asarray(ints, dtype=np.int64)
    c = np.asarray(coefs, dtype=float)
    c = np.fmod(c, _WRAP)
    scale = 1 << _SPLIT_BITS
    hi_num = np.floor(c * scale).astype(np.int64)
    lo = c - hi_num / scale
    hi = (np.mod(ints, scale) * np.mod(hi_num, scale)) % scale
    out = hi.astype(float) / scale + lo * ints.astype(float)
    return out - np.floor(out)


def phase(coef, ints) -> np.ndarray:
    """e(coef * ints) with the product reduced mod 1 first (see frac_product)."""
    return np.exp(1j * TWO_PI * frac_product(coef, ints))


@dataclass(frozen=True)
class LatticeFunction:
    """Complex-valued function on a finite box of Z^n or on a finite torus."""

    values: np.ndarray
    origin: tuple[int, ...] = ()
    torus: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 0:
            raise ValueError("LatticeFunction needs at least one axis")
        if any(s <= 0 for s in vals.shape):
            raise ValueError("support sizes must be positive")
        origin = tuple(int(o) for o in self.origin) if self.origin else (0,) * vals.ndim
        if len(origin) != vals.ndim:
            raise DimensionMismatch("origin has wrong length")
        if self.torus and any(origin):
            raise ValueError("torus functions have origin 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @classmethod
    def delta(cls, shape: Sequence[int], at: Sequence[int] | None = None, torus: bool = False):
        """Unit mass at ``at`` (defaults to the origin)."""
        shape = tuple(shape)
        at = tuple(at) if at is not None else (0,) * len(shape)
        vals = np.zeros(shape, dtype=complex)
        if torus:
            vals[tuple(a % s for a, s in zip(at, shape))] = 1.0
            return cls(vals, torus=True)
        vals[(0,) * len(shape)] = 1.0
        return cls(vals, origin=at)

    @classmethod
    def from_points(cls, func, lo: Sequence[int], hi: Sequence[int]):
        """Sample ``func`` on the box ``lo <= x <= hi``; ``func`` gets an (..., n) int array."""
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(np.asarray(func(pts), dtype=complex), origin=tuple(lo))

    def coords(self) -> np.ndarray:
        """Integer coordinates of every stored entry, shape ``shape + (n,)``."""
        axes = [np.arange(o, o + s) for o, s in zip(self.origin, self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def translate(self, shift: Sequence[int]) -> "LatticeFunction":
        shift = tuple(int(s) for s in shift)
        if len(shift) != self.dim:
            raise DimensionMismatch("shift has wrong length")
        if self.torus:
            return LatticeFunction(np.roll(self.values, shift, axis=tuple(range(self.dim))), torus=True)
        return LatticeFunction(self.values, origin=tuple(o + s for o, s in zip(self.origin, shift)))

    def to_torus(self, shape: Sequence[int] | None = None) -> "LatticeFunction":
        """Wrap a box function onto a torus.

        Without ``shape`` each axis gets the next power of two that is at least
        twice the box extent, which keeps convolutions of two such functions
        free of wrap-around.
        """
        if self.torus:
            return self
        if shape is None:
            shape = tuple(1 << max(0, (2 * s - 1).bit_length()) for s in self.shape)
        out = np.zeros(tuple(shape), dtype=complex)
        idx = np.ix_(*[np.arange(o, o + s) % N for o, s, N in zip(self.origin, self.shape, shape)])
        np.add.at(out, idx, self.values)
        return LatticeFunction(out, torus=True)

    def at(self, x: Sequence[int]) -> complex:
        x = tuple(int(v) for v in x)
        if self.torus:
            return complex(self.values[tuple(v % s for v, s in zip(x, self.shape))])
        rel = tuple(v - o for v, o in zip(x, self.origin))
        if all(0 <= r < s for r, s in zip(rel, self.shape)):
            return complex(self.values[rel])
        return 0j

    def to_record(self) -> dict:
        return {
            "format": "carleson_lab.LatticeFunction/1",
            "dim": self.dim,
            "model": "torus" if self.torus else "box",
            "origin": list(self.origin),
            "shape": list(self.shape),
            "values": [[float(v.real), float(v.imag)] for v in self.values.ravel()],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "LatticeFunction":
        if rec.get("format") != "carleson_lab.LatticeFunction/1":
            raise ValueError("not a LatticeFunction record")
        shape = tuple(rec["shape"])
        if len(shape) != rec["dim"]:
            raise DimensionMismatch("dim does not match shape")
        pairs = np.asarray(rec["values"], dtype=float).reshape(-1, 2)
        vals = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(shape)
        return cls(vals, origin=tuple(rec["origin"]), torus=rec["model"] == "torus")

    def dumps(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "LatticeFunction":
        return cls.from_record(json.loads(text))


def _require_torus(f: LatticeFunction):
    if not f.torus:
        raise ValueError("operation needs a torus function; use to_torus()")


def dft(f: LatticeFunction) -> LatticeFunction:
    """Forward transform F(k) = sum_x f(x) e(-x.k/N)."""
    _require_torus(f)
    return LatticeFunction(np.fft.fftn(f.values), torus=True)


def idft(F: LatticeFunction) -> LatticeFunction:
    """Inverse of :func:`dft`."""
    _require_torus(F)
    return LatticeFunction(np.fft.ifftn(F.values), torus=True)


def lp_norm(f: LatticeFunction | np.ndarray, p: float) -> float:
    vals = np.abs(f.values if isinstance(f, LatticeFunction) else np.asarray(f)).ravel()
    if p == math.inf:
        return float(vals.max(initial=0.0))
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    if vals.size == 0:
        return 0.0
    top = vals.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((vals / top) ** p) ** (1.0 / p))


def _direct_convolve_torus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(a.shape, dtype=complex)
    for idx in zip(*np.nonzero(b)):
        out += b[idx] * np.roll(a, idx, axis=tuple(range(a.ndim)))
    return out


def convolve(f: LatticeFunction, g: LatticeFunction, method: str = "fft") -> LatticeFunction:
    """(f * g)(x) = sum_y f(x - y) g(y).

    Two torus functions of equal shape convolve cyclically; two box functions
    convolve exactly on Z^n, with the FFT path padding to powers of two so no
    wrap-around occurs.  ``method`` is ``"fft"`` or ``"direct"``.
    """
    if f.dim != g.dim:
        raise DimensionMismatch(f"dimensions {f.dim} and {g.dim} differ")
    if f.torus != g.torus:
        raise ValueError("cannot mix box and torus functions")
    if f.torus:
        if f.shape != g.shape:
            raise DimensionMismatch("torus shapes differ")
        if method == "direct":
            return LatticeFunction(_direct_convolve_torus(f.values, g.values), torus=True)
        axes = tuple(range(f.dim))
        return LatticeFunction(np.fft.ifftn(np.fft.fftn(f.values, axes=axes) * np.fft.fftn(g.values, axes=axes)),
                               torus=True)
    out_shape = tuple(a + b - 1 for a, b in zip(f.shape, g.shape))
    origin = tuple(a + b for a, b in zip(f.origin, g.origin))
    if method == "direct":
        out = np.zeros(out_shape, dtype=complex)
        for idx in zip(*np.nonzero(g.values)):
            sl = tuple(slice(i, i + s) for i, s in zip(idx, f.shape))
            out[sl] += g.values[idx] * f.values
        return LatticeFunction(out, origin=origin)
    padded = tuple(1 << max(0, (s - 1).bit_length()) for s in out_shape)
    if math.prod(padded) > MAX_PADDED_ENTRIES:
        raise OverflowError(f"padded box {padded} exceeds {MAX_PADDED_ENTRIES} entries")
    axes = tuple(range(f.dim))
    F = np.fft.fftn(f.values, s=padded, axes=axes)
    G = np.fft.fftn(g.values, s=padded, axes=axes)
    out = np.fft.ifftn(F * G, axes=axes)[tuple(slice(0, s) for s in out_shape)]
    return LatticeFunction(out, origin=origin)


def torus_frequencies(shape: Sequence[int]) -> np.ndarray:
    """Frequencies k/N in [0, 1) for every torus index, shape ``shape + (n,)``."""
    axes = [np.arange(N) / N for N in shape]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def ball_points(radius: float, n: int, inner: float = 0.0) -> np.ndarray:
    """Integer points y in Z^n with inner < |y| <= radius (Euclidean), shape (m, n).

    Rows are in lexicographic order.
    """
    R = int(math.floor(radius))
    axes = [np.arange(-R, R + 1)] * n
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    r2 = np.sum(pts.astype(np.int64) ** 2, axis=1)
    keep = (r2 <= radius * radius) & (r2 > inner * inner) if inner > 0 else (r2 <= radius * radius)
    return pts[keep]


def norm_sq(pts) -> np.ndarray:
    """|y|^2 as exact int64 for integer points of shape (..., n)."""
    pts = np.asarray(pts, dtype=np.int64)
    return np.sum(pts * pts, axis=-1)
