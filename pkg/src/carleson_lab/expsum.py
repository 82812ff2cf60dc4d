"""Complete exponential sums S(a/q, b/q), Weyl sums S_R, and decay probes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .arithmetic import convergents
from .lattice import frac_product
from .tables import DecayTable

COMPLETE_SUM_GUARD = 10**8
WEYL_SUM_GUARD = 10**8


class GuardExceeded(ValueError):
    pass


@dataclass(frozen=True)
class CompleteSumSpec:
    a: int
    b: tuple[int, ...]
    q: int
    d: int = 1

    def __post_init__(self):
        b = (self.b,) if isinstance(self.b, int) else tuple(int(v) for v in self.b)
        object.__setattr__(self, "b", b)
        if self.q < 1 or self.d < 1:
            raise ValueError("need q >= 1 and d >= 1")
        if math.gcd(self.a, *b, self.q) != 1:
            raise ValueError(f"(a, b, q) = ({self.a}, {b}, {self.q}) is not normalized")

    @property
    def n(self) -> int:
        return len(self.b)


def residue_counts(spec: CompleteSumSpec) -> np.ndarray:
    """c[k] = #{r in [q]^n : a|r|^{2d} + b.r = k (mod q)}, computed in exact integers."""
    q, n = spec.q, spec.n
    if q**n > COMPLETE_SUM_GUARD:
        raise GuardExceeded(f"q^n = {q**n} exceeds {COMPLETE_SUM_GUARD}")
    if q == 1:
        return np.array([1], dtype=np.int64)
    r = np.arange(q, dtype=np.int64)
    grids = np.meshgrid(*([r] * n), indexing="ij")
    sq = sum((g * g) % q for g in grids) % q
    pw = np.ones_like(sq)
    for _ in range(spec.d):
        pw = (pw * sq) % q
    lin = sum((bi % q) * g for bi, g in zip(spec.b, grids)) % q
    res = ((spec.a % q) * pw + lin) % q
    return np.bincount(res.ravel(), minlength=q)


def complete_sum(spec: CompleteSumSpec) -> complex:
    """S(a/q, b/q) = q^{-n} sum_{r in [q]^n} e(a|r|^{2d}/q + b.r/q)."""
    counts = residue_counts(spec)
    q = spec.q
    roots = np.exp(2j * np.pi * np.arange(q) / q)
    return complex(np.dot(counts.astype(float), roots) / float(q) ** spec.n)


def gauss_sum(a: int, b, q: int, d: int = 1) -> complex:
    return complete_sum(CompleteSumSpec(a, b, q, d))


def complete_sum_direct(a: int, b: Sequence[int], q: int, d: int = 1) -> complex:
    """Oracle: term-by-term float summation of e(theta) over [q]^n, no residue bookkeeping."""
    n = len(b)
    total = 0j
    for r in itertools.product(range(q), repeat=n):
        r2 = sum(v * v for v in r)
        theta = ((a * r2**d + sum(bi * ri for bi, ri in zip(b, r))) % q) / q
        total += complex(math.cos(2 * math.pi * theta), math.sin(2 * math.pi * theta))
    return total / q**n


# --- Weyl sums -------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexRegion:
    """Intersection of half-spaces {x : h.x <= c} with the ball |x| <= radius."""

    radius: float
    halfspaces: tuple[tuple[tuple[float, ...], float], ...] = ()

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "ConvexRegion":
        n = len(lo)
        hs = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            hs.append((tuple(e), hi[i]))
            e = [0] * n
            e[i] = -1
            hs.append((tuple(e), -lo[i]))
        rad = math.sqrt(sum(max(abs(a), abs(b)) ** 2 for a, b in zip(lo, hi)))
        return cls(rad, tuple(hs))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts)
        ok = np.sum(pts.astype(float) ** 2, axis=-1) <= self.radius**2 + 1e-9
        for h, c in self.halfspaces:
            if all(isinstance(v, (int, Fraction)) for v in (*h, c)):
                lhs = sum(Fraction(hv) * pts[..., i].astype(object) for i, hv in enumerate(h))
                ok &= np.asarray(lhs <= Fraction(c), dtype=bool)
            else:
                ok &= pts.astype(float) @ np.asarray(h, dtype=float) <= c
        return ok

    def lattice_points(self, n: int) -> np.ndarray:
        R = int(math.floor(self.radius))
        count = (2 * R + 1) ** n
        if count > WEYL_SUM_GUARD:
            raise GuardExceeded(f"{count} candidate lattice points exceed {WEYL_SUM_GUARD}")
        axes = [np.arange(-R, R + 1, dtype=np.int64)] * n
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        return pts[self.contains(pts)]


@dataclass(frozen=True)
class WeylSumSpec:
    """S_R = sum_{x in Z^n cap omega} e(P(xi; x)) phi(x), P = sum_alpha xi_alpha x^alpha."""

    coefficients: Mapping[tuple[int, ...], float]
    region: ConvexRegion
    R: float
    weight: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    c0: float = 1.0

    @property
    def n(self) -> int:
        return len(next(iter(self.coefficients)))

    @property
    def degree(self) -> int:
        return max(sum(a) for a in self.coefficients)

    def check(self, samples: int = 512, seed: int = 0) -> None:
        if self.R < 2:
            raise ValueError("R must be at least 2")
        if self.region.radius > self.c0 * self.R * (1 + 1e-12):
            raise ValueError("region is not contained in the ball of radius c0 R")
        if self.weight is not None:
            rng = np.random.default_rng(seed)
            x = rng.uniform(-self.c0 * self.R, self.c0 * self.R, (samples, self.n))
            w = np.asarray(self.weight(x))
            if np.any(np.abs(w) > 1 + 1e-12):
                raise ValueError("weight exceeds 1 in modulus")
            h = 1e-5 * (1 + np.abs(x))
            for i in range(self.n):
                e = np.zeros(self.n)
                e[i] = 1.0
                dw = (np.asarray(self.weight(x + h[:, i:i + 1] * e)) - np.asarray(self.weight(x - h[:, i:i + 1] * e))) / (2 * h[:, i])
                if np.any(np.abs(dw) > (1 + np.sqrt(np.sum(x**2, axis=1))) ** -1 * (1 + 1e-4) + 1e-9):
                    raise ValueError("weight gradient bound violated")


def polynomial_phase(coefficients: Mapping[tuple[int, ...], float], pts: np.ndarray) -> np.ndarray:
    """P(xi; x) mod 1, each monomial reduced mod 1 separately (frac_product)."""
    pts = np.asarray(pts, dtype=np.int64)
    theta = np.zeros(pts.shape[0])
    for alpha, c in coefficients.items():
        mono = np.ones(pts.shape[0], dtype=np.int64)
        for i, p in enumerate(alpha):
            for _ in range(p):
                mono = mono * pts[:, i]
        theta += frac_product(c, mono)
    return theta - np.floor(theta)


def _compensated_sum(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


def weyl_sum(spec: WeylSumSpec, check: bool = True) -> complex:
    if check:
        spec.check()
    pts = spec.region.lattice_points(spec.n)
    if pts.shape[0] == 0:
        return 0j
    z = np.exp(2j * np.pi * polynomial_phase(spec.coefficients, pts))
    if spec.weight is not None:
        z = z * np.asarray(spec.weight(pts.astype(float)))
    return _compensated_sum(z)


def lattice_count(spec: WeylSumSpec) -> int:
    return int(spec.region.lattice_points(spec.n).shape[0])


# --- decay probes ------------------------------------------------------------------

def window_denominator(xi, lo: float, hi: float) -> Fraction | None:
    """A convergent a/q of xi (so |xi - a/q| <= 1/q^2) with lo <= q <= hi, if any."""
    for c in convergents(xi):
        if c.denominator > hi:
            return None
        if c.denominator >= lo:
            return c
    return None


def _probe_sum(xi_target, order: int, R: int, n: int) -> complex:
    alpha = (order,) + (0,) * (n - 1)
    lo, hi = [1] + [0] * (n - 1), [R] * n
    spec = WeylSumSpec({alpha: xi_target}, ConvexRegion.box(lo, hi), R=R, c0=math.sqrt(n))
    return weyl_sum(spec, check=False)


def decay_probe_power(xi_target, order: int, j_range: Sequence[int], eps: float, n: int = 1) -> DecayTable:
    """|S_R| / R^n over R = 2^j for the monomial phase xi x_1^order on [1, R] x [0, R]^{n-1}.

    Rows whose R lacks a convergent with R^eps <= q <= R^{order - eps} are flagged.
    The fitted rate is the exponent delta in |S_R|/R^n ~ C R^{-delta}.
    """
    rows = []
    for j in j_range:
        R = 2**j
        S = _probe_sum(xi_target, order, R, n)
        cert = window_denominator(xi_target, R**eps, R ** (order - eps))
        rows.append((float(R), abs(S), abs(S) / R**n, cert is None,
                     "" if cert is None else f"{cert.numerator}/{cert.denominator}"))
    return DecayTable.from_rows(rows, model="power", x_label="R", meta={
        "probe": "power", "order": order, "eps": eps, "n": n, "xi": repr(xi_target)})


def decay_probe_log(xi_target, order: int, j_range: Sequence[int], gamma: float, delta: float = 1.0,
                    n: int = 1) -> DecayTable:
    """As decay_probe_power with the window (log R)^delta <= q <= R^order (log R)^{-delta}.

    The normalized column is |S_R| / R^n * (log R)^gamma; the fitted rate is the
    log-power exponent g in |S_R| / R^n ~ C (log R)^{-g}.
    """
    rows = []
    for j in j_range:
        R = 2**j
        S = _probe_sum(xi_target, order, R, n)
        L = math.log(R)
        cert = window_denominator(xi_target, L**delta, R**order * L ** (-delta))
        rows.append((float(R), abs(S), abs(S) / R**n * L**gamma, cert is None,
                     "" if cert is None else f"{cert.numerator}/{cert.denominator}"))
    table = DecayTable.from_rows(rows, model="log_power", x_label="R", meta={
        "probe": "log", "order": order, "gamma": gamma, "delta": delta, "n": n, "xi": repr(xi_target)})
    # fit against the raw normalized size |S_R|/R^n, not the gamma-weighted column
    raw_norm = [r.raw / r.param**n for r in table.rows]
    return table.refit(raw_norm)
