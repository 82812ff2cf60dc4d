"""The maximal operator, its certified lambda search, H_v, the TT* kernel and norm probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Sequence

import numpy as np

from .arithmetic import continued_fraction_approx
from .kernels import CZKernel, DyadicKernel, builtin_kernel
from .lattice import (LatticeFunction, ball_points, convolve, frac_products, lp_norm,
                      norm_sq, phase)
from .tables import DecayTable

TWO_PI = 2.0 * math.pi

# Entries (rows x lambda points) the uniform search may allocate.
UNIFORM_GRID_BUDGET = 1 << 28

# Largest j for ttstar_kernel and exceptional_set.
TTSTAR_GUARD_J = 12
EXCEPTIONAL_GUARD_J = 8

_BISECTION_DEPTH = 48


class GridBudgetError(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"lambda grid needs {required} entries, budget is {budget}")
        self.required = required
        self.budget = budget


# --- lambda grids ----------------------------------------------------------------

def truncated_support(kernel: CZKernel, J_trunc: int) -> tuple[np.ndarray, np.ndarray]:
    """Lattice points with 0 < |y| <= 2^J and the kernel values there."""
    pts = ball_points(2.0**J_trunc, kernel.n, inner=0.5)
    return pts, kernel(pts)


def phase_degree(n: int, J_trunc: int, d: int) -> int:
    """D_phase = max |y|^{2d} over the lattice points of the Euclidean ball of radius 2^J."""
    R = 2**J_trunc
    r2 = max(int(v) for v in norm_sq(ball_points(R, n)))
    return r2**d


@dataclass(frozen=True)
class LambdaGrid:
    """Uniform grid {offset + l/size} over one period; spacing <= eps/(2 pi D B)."""

    size: int
    D_phase: int
    eps: float
    B: float
    offset: float = 0.0

    @property
    def spacing(self) -> float:
        return 1.0 / self.size

    def points(self) -> np.ndarray:
        return self.offset + np.arange(self.size) / self.size


def lambda_grid(kernel: CZKernel, J_trunc: int, d: int, eps: float) -> LambdaGrid:
    if eps <= 0:
        raise ValueError("eps must be positive")
    _, kv = truncated_support(kernel, J_trunc)
    B = float(np.sum(np.abs(kv)))
    D = phase_degree(kernel.n, J_trunc, d)
    need = max(D + 1, math.ceil(TWO_PI * D * B / eps))
    return LambdaGrid(1 << (need - 1).bit_length(), D, eps, B)


# --- the maximal operator --------------------------------------------------------

def _output_domain(f: LatticeFunction, R: int):
    if f.torus:
        return f.shape, (0,) * f.dim
    return tuple(s + 2 * R for s in f.shape), tuple(o - R for o in f.origin)


def _shifted_values(f: LatticeFunction, y: np.ndarray, out_shape, R: int) -> np.ndarray:
    """f(x - y) for every x of the output domain."""
    if f.torus:
        return np.roll(f.values, tuple(int(v) for v in y), axis=tuple(range(f.dim)))
    pad = np.pad(f.values, [(2 * R, 2 * R)] * f.dim)
    sl = tuple(slice(R - int(v), R - int(v) + s) for v, s in zip(y, out_shape))
    return pad[sl]


def frequency_coefficients(f: LatticeFunction, kernel: CZKernel, J_trunc: int, d: int):
    """Rows a[x, k] with sum_y f(x-y) K(y) e(lam |y|^{2d}) = sum_k a[x, k] e(lam * freqs[k]).

    Accumulation runs over y in a fixed order with one array operation per y,
    so each row depends only on f near x (translations act exactly).
    """
    if f.dim != kernel.n:
        raise ValueError("dimension of f and kernel differ")
    R = 2**J_trunc
    pts, kv = truncated_support(kernel, J_trunc)
    ks = norm_sq(pts) ** d
    freqs, inv = np.unique(ks, return_inverse=True)
    out_shape, origin = _output_domain(f, R)
    A = np.zeros(out_shape + (freqs.size,), dtype=complex)
    for y, k, idx in zip(pts, kv, inv):
        A[..., idx] += _shifted_values(f, y, out_shape, R) * k
    return A.reshape(-1, freqs.size), freqs, out_shape, origin


def _eval_rows(coef: np.ndarray, freqs: np.ndarray, num: np.ndarray, bits: int):
    """P, P', P'' for rows coef (m, K) at dyadic points lam = num / 2^bits (one point per row).

    lam * k mod 1 is reduced in exact integer arithmetic when it fits in 62
    bits, otherwise through frac_products.
    """
    if bits + int(freqs.max()).bit_length() <= 62:
        mask = (1 << bits) - 1
        th = ((num[:, None] * freqs[None, :]) & mask).astype(float) / float(1 << bits)
    else:
        lam = num.astype(float) / 2.0**bits
        th = frac_products(np.repeat(lam[:, None], freqs.size, axis=1), np.broadcast_to(freqs, (num.size, freqs.size)))
    e = np.exp(1j * TWO_PI * th) * coef
    w = 1j * TWO_PI * freqs
    return e.sum(axis=1), e @ w, e @ (w * w)


def _grid_values(coef: np.ndarray, freqs: np.ndarray, L: int):
    """P, P', P'' at l/L for every row, via FFTs along the rows (needs L > max freq)."""
    m = coef.shape[0]
    w = 1j * TWO_PI * freqs
    out = []
    for c_k in (coef, coef * w, coef * w * w):
        c = np.zeros((m, L), dtype=complex)
        c[:, freqs] = c_k
        out.append(np.fft.ifft(c, axis=1) * L)
    return out


def _cell_bound(P, dP, d2P, rem3, w):
    """Upper bound of |P| on [c - w, c + w] from the Taylor data at c.

    |q(t)|^2 for q = P + P't + P''t^2/2 is a quartic; its quadratic part is
    maximised exactly and the cubic and quartic terms are bounded by size.
    The Taylor remainder is rem3 w^3 / 6 with rem3 = sum |(2 pi k)^3 a_k|.
    """
    a0 = np.abs(P) ** 2
    a1 = 2 * np.real(np.conj(P) * dP)
    a2 = np.abs(dP) ** 2 + np.real(np.conj(P) * d2P)
    a3 = np.abs(np.real(np.conj(dP) * d2P))
    a4 = 0.25 * np.abs(d2P) ** 2
    edge = a0 + np.abs(a1) * w + a2 * w * w
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -a1 / (2 * a2)
    inside = (a2 < 0) & (np.abs(t) < w)
    peak = np.where(inside, a0 - a1 * a1 / np.where(a2 < 0, 4 * a2, -1.0), edge)
    quad = np.maximum(edge, peak)
    return np.sqrt(np.maximum(quad + a3 * w**3 + a4 * w**4, 0.0)) + rem3 * w**3 / 6.0


def _certified_rows(coef: np.ndarray, freqs: np.ndarray, eps: float, L: int) -> np.ndarray:
    """max over lam of |P_row(lam)| from below, within eps, for rows with >= 2 terms.

    Grid cells are screened with |P| + w|P'| + w^2 sum|(2 pi k)^2 a_k| / 2,
    then with the sharper _cell_bound; survivors are bisected.
    """
    P, dP, d2P = _grid_values(coef, freqs, L)
    best = np.abs(P).max(axis=1)
    rem2 = np.sum(np.abs(coef) * (TWO_PI * freqs) ** 2, axis=1)
    rem3 = np.sum(np.abs(coef) * (TWO_PI * freqs) ** 3, axis=1)
    w = 0.5 / L
    screen = np.abs(P) + w * np.abs(dP) + 0.5 * w * w * rem2[:, None]
    rows, cols = np.nonzero(screen > (best + eps)[:, None])
    keep = _cell_bound(P[rows, cols], dP[rows, cols], d2P[rows, cols], rem3[rows], w) > best[rows] + eps
    rows, cols = rows[keep], cols[keep]
    del P, dP, d2P, screen
    # cell centres are num / 2^bits, half-width w = 2^-bits
    bits = (L - 1).bit_length() + 1
    num = 2 * cols.astype(np.int64)
    step = max(1, (1 << 20) // freqs.size)
    for depth in range(_BISECTION_DEPTH):
        if not rows.size:
            return best
        rows = np.repeat(rows, 2)
        num = 2 * np.repeat(num, 2) + np.tile(np.array([-1, 1], dtype=np.int64), num.size)
        w *= 0.5
        bits += 1
        vals = np.empty((3, rows.size), dtype=complex)
        for i in range(0, rows.size, step):
            sl = slice(i, i + step)
            vals[0, sl], vals[1, sl], vals[2, sl] = _eval_rows(coef[rows[sl]], freqs, num[sl], bits)
        np.maximum.at(best, rows, np.abs(vals[0]))
        keep = _cell_bound(vals[0], vals[1], vals[2], rem3[rows], w) > best[rows] + eps
        rows, num = rows[keep], num[keep]
    raise RuntimeError("lambda bisection did not converge")


def carleson_apply(f: LatticeFunction, kernel: CZKernel, d: int, J_trunc: int, eps: float,
                   method: str = "adaptive", grid_factor: int = 2, lambda_offset=0,
                   budget: int = UNIFORM_GRID_BUDGET) -> LatticeFunction:
    """C f(x) = sup_lam |sum_{0<|y|<=2^J} f(x-y) e(lam |y|^{2d}) K(y)| to additive accuracy eps.

    The sum is a trigonometric polynomial in lam with integer frequencies
    |y|^{2d} <= D, hence 1-periodic.  ``adaptive`` samples it on grid_factor
    times the next power of two above D and then bisects every cell whose
    Taylor bound (second-order model plus third-order remainder, see
    _cell_bound) could still exceed the best value by more than eps.  ``uniform`` samples
    the LambdaGrid for eps/||f||_inf and stops there.  Results are lower
    bounds of the true supremum.  meta carries the truncation and the tail
    bound ||f||_1 sup_{|y|>2^J} |K(y)|.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    A, freqs, out_shape, origin = frequency_coefficients(f, kernel, J_trunc, d)
    if isinstance(lambda_offset, Rational):
        frac = Fraction(lambda_offset) % 1
        shift = phase(frac, freqs) if frac else None
    else:
        frac = math.fmod(float(lambda_offset), 1.0) % 1.0
        shift = phase(frac, freqs) if frac else None
    if shift is not None:
        A = A * shift
    D = int(freqs.max())
    base = 1 << (D).bit_length()
    out = np.zeros(A.shape[0])
    nnz = np.count_nonzero(A, axis=1)
    single = nnz == 1
    out[single] = np.abs(A[single]).max(axis=1)
    multi = np.nonzero(nnz > 1)[0]
    fmax = lp_norm(f, math.inf)
    if method == "adaptive":
        if grid_factor < 1 or grid_factor & (grid_factor - 1):
            raise ValueError("grid_factor must be a power of two")
        L = base * grid_factor
        chunk = max(1, (1 << 22) // L)
        for i in range(0, multi.size, chunk):
            r = multi[i:i + chunk]
            out[r] = _certified_rows(A[r], freqs, eps, L)
        grid_size = L
    elif method == "uniform":
        grid = lambda_grid(kernel, J_trunc, d, eps / max(fmax, 1e-300))
        L = max(grid.size, base)
        if L * max(1, multi.size) > budget:
            raise GridBudgetError(L * max(1, multi.size), budget)
        chunk = max(1, (1 << 22) // L)
        for i in range(0, multi.size, chunk):
            r = multi[i:i + chunk]
            c = np.zeros((r.size, L), dtype=complex)
            c[:, freqs] = A[r]
            out[r] = np.abs(np.fft.ifft(c, axis=1) * L).max(axis=1)
        grid_size = L
    else:
        raise ValueError(f"unknown method {method!r}")
    tail = lp_norm(f, 1) * kernel.size_constant * 2.0 ** (-J_trunc * kernel.n)
    meta = {"J_trunc": J_trunc, "d": d, "eps": eps, "method": method, "grid_size": grid_size,
            "D_phase": D, "tail_bound": tail}
    vals = out.reshape(out_shape).astype(complex)
    if f.torus:
        return LatticeFunction(vals, torus=True, meta=meta)
    return LatticeFunction(vals, origin=origin, meta=meta)


def single_lambda_apply(f: LatticeFunction, kernel: CZKernel, d: int, J_trunc: int, lam) -> LatticeFunction:
    """sum_{0<|y|<=2^J} f(x-y) e(lam |y|^{2d}) K(y), by FFT convolution."""
    g = modulated_kernel(kernel, J_trunc, d, lam)
    if f.torus:
        g = g.to_torus(f.shape)
    return convolve(f, g)


def modulated_kernel(kernel: CZKernel, J_trunc: int, d: int, lam) -> LatticeFunction:
    R = 2**J_trunc
    pts, kv = truncated_support(kernel, J_trunc)
    vals = np.zeros((2 * R + 1,) * kernel.n, dtype=complex)
    vals[tuple((pts + R).T)] = kv * phase(lam, norm_sq(pts) ** d)
    return LatticeFunction(vals, origin=(-R,) * kernel.n)


# --- modulation fields ---------------------------------------------------------

@dataclass(frozen=True)
class ModulationField:
    """lambda: Z^n -> R, either a constant or an array on origin + [0, shape)."""

    values: np.ndarray | None = None
    origin: tuple[int, ...] = ()
    constant_value: float | Fraction | None = None
    x1_only: bool = False

    def __post_init__(self):
        if (self.values is None) == (self.constant_value is None):
            raise ValueError("give exactly one of values and constant_value")
        if self.values is not None:
            v = np.asarray(self.values)
            if not np.all(np.isfinite(v.astype(float))):
                raise ValueError("field values must be finite")
            object.__setattr__(self, "origin", tuple(self.origin) or (0,) * v.ndim)

    @classmethod
    def constant(cls, lam) -> "ModulationField":
        return cls(constant_value=lam)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], lo: Sequence[int], hi: Sequence[int],
                      x1_only: bool = False) -> "ModulationField":
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(np.asarray(func(pts)), tuple(lo), x1_only=x1_only)

    @property
    def is_constant(self) -> bool:
        return self.constant_value is not None

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64)
        if self.is_constant:
            return np.full(pts.shape[:-1], float(self.constant_value))
        rel = pts - np.asarray(self.origin)
        if np.any(rel < 0) or np.any(rel >= np.asarray(self.values.shape)):
            raise IndexError("point outside the stored field")
        return np.asarray(self.values)[tuple(np.moveaxis(rel, -1, 0))]

    def phases(self, pts, ints) -> np.ndarray:
        """e(lambda(pts) * ints), exact for rational constants."""
        if self.is_constant:
            return phase(self.constant_value, ints)
        return np.exp(1j * TWO_PI * frac_products(self(pts), ints))


# --- H_v -----------------------------------------------------------------------

def variable_parabola(f: LatticeFunction, v: np.ndarray, J_trunc: int) -> LatticeFunction:
    """H_v f(x) = sum_{0<|y|<=2^J} f(x_1 - y, x_2 - v(x) y^2) / y on a 2-d torus."""
    if not f.torus or f.dim != 2:
        raise ValueError("variable_parabola needs a 2-d torus function")
    v = np.asarray(v, dtype=np.int64)
    if v.shape != f.shape:
        raise ValueError("v must be given on the same torus")
    N1, N2 = f.shape
    X1, X2 = np.meshgrid(np.arange(N1), np.arange(N2), indexing="ij")
    out = np.zeros(f.shape, dtype=complex)
    R = 2**J_trunc
    for y in [t for t in range(-R, R + 1) if t]:
        out += f.values[(X1 - y) % N1, (X2 - v * (y * y)) % N2] / y
    return LatticeFunction(out, torus=True)


def parabola_fourier_side(f: LatticeFunction, v_row: np.ndarray, J_trunc: int) -> np.ndarray:
    """G(x_1, k) = sum_y F_2 f(x_1 - y, k) e(-k v(x_1) y^2 / N_2) / y, F_2 the x_2-transform."""
    N1, N2 = f.shape
    F = np.fft.fft(f.values, axis=1)
    v_row = np.asarray(v_row, dtype=np.int64)
    k = np.arange(N2, dtype=np.int64)
    out = np.zeros(f.shape, dtype=complex)
    R = 2**J_trunc
    for y in [t for t in range(-R, R + 1) if t]:
        rot = np.roll(F, y, axis=0)
        ex = (np.outer(v_row * (y * y) % N2, k) % N2).astype(float) / N2
        out += rot * np.exp(-1j * TWO_PI * ex) / y
    return out


# --- TT* ---------------------------------------------------------------------------

def ball_indicator(pts, j: int) -> np.ndarray:
    """1_{B_j}: closed Euclidean ball of radius 2^j."""
    return norm_sq(pts) <= 4**j


def ttstar_kernel(j: int, lam: ModulationField, x, y, dk: DyadicKernel, d: int = 1) -> complex:
    """K#_{j,lam}(x, y) = sum_z e(lam(x)|z|^{2d} - lam(y)|y-x+z|^{2d}) K_j(z) conj K_j(y-x+z) 1_{B_j}(x-z)."""
    if j > TTSTAR_GUARD_J:
        raise ValueError(f"j = {j} exceeds the guard {TTSTAR_GUARD_J}")
    x = np.asarray(x, dtype=np.int64).reshape(dk.n)
    y = np.asarray(y, dtype=np.int64).reshape(dk.n)
    z, kz = dk.lattice_piece(j)
    keep = ball_indicator(x - z, j) & (kz != 0)
    z, kz = z[keep], kz[keep]
    w = y - x + z
    kw = dk.piece(j, w)
    live = kw != 0
    if not np.any(live):
        return 0j
    z, kz, w, kw = z[live], kz[live], w[live], kw[live]
    xs = np.broadcast_to(x, z.shape)
    ys = np.broadcast_to(y, z.shape)
    ph = lam.phases(xs, norm_sq(z) ** d) * np.conj(lam.phases(ys, norm_sq(w) ** d))
    return complex(np.sum(ph * kz * np.conj(kw)))


def single_scale_matrix(j: int, lam: ModulationField, dk: DyadicKernel, d: int = 1,
                        radius_power: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """T[x, u] = e(lam(x)|x-u|^{2d}) K_j(x-u) for x in B_{j+radius_power}, u in B_j."""
    xs = ball_points(2.0 ** (j + radius_power), dk.n)
    us = ball_points(2.0**j, dk.n)
    diff = xs[:, None, :] - us[None, :, :]
    kv = dk.piece(j, diff)
    ph = lam.phases(np.broadcast_to(xs[:, None, :], diff.shape), norm_sq(diff) ** d)
    return xs, us, ph * kv


def ttstar_matrix(j: int, lam: ModulationField, dk: DyadicKernel, d: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(points of B_{j+2}, K# restricted to B_{j+2} x B_{j+2}) computed as T T^*."""
    xs, _, T = single_scale_matrix(j, lam, dk, d)
    return xs, T @ T.conj().T


@dataclass(frozen=True)
class ExceptionalSet:
    j: int
    kappa: float
    c0: float
    threshold: float
    members: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    certificates: tuple = field(default=(), repr=False)
    flagged: bool = False

    @property
    def cardinality(self) -> int:
        return len(self.members)

    def to_records(self) -> list[dict]:
        out = []
        for (x, y), cert in zip(self.members, self.certificates):
            out.append({"x": list(x), "y": list(y),
                        "certificate": None if cert is None else {"a": cert[0], "q": cert[1], "ok": cert[2]}})
        return out


def exceptional_threshold(j: int, n: int, kappa: float, c0: float, scaling: str = "dual") -> float:
    """c0 2^{-2jn} j^{-2kappa} ("dual") or c0 2^{-jn} j^{-2kappa} ("diagonal")."""
    if scaling == "dual":
        return c0 * 2.0 ** (-2 * j * n) * float(j) ** (-2 * kappa)
    if scaling == "diagonal":
        return c0 * 2.0 ** (-j * n) * float(j) ** (-2 * kappa)
    raise ValueError(f"unknown scaling {scaling!r}")


def exceptional_set(j: int, lam: ModulationField, kappa: float, c0: float, dk: DyadicKernel, d: int = 1,
                    delta0: float | None = None, scaling: str = "dual") -> ExceptionalSet:
    """Pairs (x, y) in B_{j+2}^2 with |K#_{j,lam}(x, y)| >= threshold, with Dirichlet data.

    For each member the last convergent a/q of 2d(x_1 - y_1) lam(y) with
    q <= Q = floor(2^{j(2d-1)} j^{-delta0}) is recorded along with whether
    q <= 2d j^{delta0}.  The set is flagged when Q < 1 or some member fails.
    """
    if j > EXCEPTIONAL_GUARD_J:
        raise ValueError(f"j = {j} exceeds the guard {EXCEPTIONAL_GUARD_J}")
    delta0 = 4 * kappa + 1 if delta0 is None else delta0
    thr = exceptional_threshold(j, dk.n, kappa, c0, scaling)
    xs, K = ttstar_matrix(j, lam, dk, d)
    ii, jj = np.nonzero(np.abs(K) >= thr)
    Q = math.floor(2.0 ** (j * (2 * d - 1)) * float(j) ** (-delta0))
    qcap = 2 * d * float(j) ** delta0
    members, certs, flagged = [], [], Q < 1
    for a, b in zip(ii, jj):
        x, y = tuple(int(v) for v in xs[a]), tuple(int(v) for v in xs[b])
        members.append((x, y))
        if Q < 1:
            certs.append(None)
            continue
        if lam.is_constant and isinstance(lam.constant_value, Rational):
            theta = 2 * d * (x[0] - y[0]) * Fraction(lam.constant_value)
        else:
            theta = 2 * d * (x[0] - y[0]) * float(lam(np.asarray(y)))
        r = continued_fraction_approx(theta, Q)
        ok = r.q <= qcap
        flagged |= not ok
        certs.append((r.a, r.q, ok))
    return ExceptionalSet(j, kappa, c0, thr, tuple(members), tuple(certs), flagged)


# --- Rademacher-Menshov ---------------------------------------------------------

def rademacher_menshov_rhs(a: Sequence[complex], r: float, j: int, j0: int) -> float:
    """|a_{j0}| + 2^{1/r'} sum_{l=0}^{s} (sum_k |a_{k 2^l} - a_{(k+1) 2^l}|^r)^{1/r}."""
    a = np.asarray(a, dtype=complex)
    s = (a.size - 1).bit_length() - 1
    if a.size < 2 or a.size != 2**s + 1:
        raise ValueError("sequence length must be 2^s + 1")
    if r < 1:
        raise ValueError("r must be at least 1")
    if not (0 <= j <= 2**s and 0 <= j0 <= 2**s):
        raise IndexError("index out of range")
    total = 0.0
    for l in range(s + 1):
        step = 2**l
        diffs = np.abs(a[0:-1:step][: 2 ** (s - l)] - a[step::step][: 2 ** (s - l)])
        total += float(np.sum(diffs**r) ** (1.0 / r))
    inv_rp = 1.0 - 1.0 / r
    return float(abs(a[j0])) + 2.0**inv_rp * total


# --- empirical norms --------------------------------------------------------------

OPERATORS = ("carleson", "variable_parabola", "single_lambda")


def random_box_function(rng: np.random.Generator, N: int, n: int) -> LatticeFunction:
    shape = (2 * N + 1,) * n
    vals = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    return LatticeFunction(vals, origin=(-N,) * n)


def _apply_op(op_id: str, f: LatticeFunction, rng: np.random.Generator, kernel: CZKernel, d: int,
              J_trunc: int, eps: float, lam) -> LatticeFunction:
    if op_id == "carleson":
        return carleson_apply(f, kernel, d, J_trunc, eps)
    if op_id == "single_lambda":
        return single_lambda_apply(f, kernel, d, J_trunc, lam)
    if op_id == "variable_parabola":
        N1 = f.shape[0] + 2 ** (J_trunc + 1)
        tor = f.to_torus((1 << (N1 - 1).bit_length(),) * 2)
        v_row = rng.integers(-2, 3, tor.shape[0])
        v = np.repeat(v_row[:, None], tor.shape[1], axis=1)
        return variable_parabola(tor, v, J_trunc)
    raise ValueError(f"unknown operator {op_id!r}")


def empirical_norm_ratio(op_id: str, Ns: Sequence[int], p: float, trials: int, seed: int,
                         kernel: CZKernel | None = None, d: int = 1, J_trunc: int = 6, eps: float = 1e-3,
                         lam=None) -> DecayTable:
    """max over seeded complex Gaussian f on [-N, N]^n of ||op f||_p / ||f||_p, one row per N.

    Each N draws from its own stream SeedSequence([seed, N]), so rows do not
    depend on which other N are in the sweep.  The note column holds the
    growth factor against the previous row.
    """
    if op_id not in OPERATORS:
        raise ValueError(f"op_id must be one of {OPERATORS}")
    if kernel is None:
        kernel = builtin_kernel("odd_power")
    if lam is None:
        lam = (math.sqrt(5.0) - 1.0) / 2.0
    n = 2 if op_id == "variable_parabola" else kernel.n
    rows, prev = [], None
    for N in Ns:
        if N < 1 or N & (N - 1):
            raise ValueError("N must be a power of two")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(N)]))
        best = 0.0
        for _ in range(trials):
            f = random_box_function(rng, N, n)
            g = _apply_op(op_id, f, rng, kernel, d, J_trunc, eps, lam)
            best = max(best, lp_norm(g, p) / lp_norm(f, p))
        note = "" if prev is None else f"growth={best / prev!r}"
        rows.append((float(N), best, best, False, note))
        prev = best
    return DecayTable.from_rows(rows, model="power", x_label="N", y_label="norm_ratio", meta={
        "op": op_id, "p": p, "trials": trials, "seed": int(seed), "d": d, "J_trunc": J_trunc, "eps": eps})
