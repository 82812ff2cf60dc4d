"""Periodic symbols, oscillatory integrals and the major-arc multiplier assembly.

Sign convention: every symbol here is a sum or integral against ``e(+xi.y)``,
e.g. ``m_{j,lam}(xi) = sum_y e(lam|y|^{2d} + xi.y) K_j(y)``; the matching
inverse transform integrates against ``e(-xi.y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable

import numpy as np

from . import arithmetic as ar
from .expsum import CompleteSumSpec, complete_sum
from .kernels import DyadicKernel, SmoothCutoff, _as_points, chi_sM, chi_tilde_sM, cutoff_exponent, piece_support
from .lattice import norm_sq, phase

# Largest j for which discrete_symbol enumerates the support of K_j.
SYMBOL_GUARD_J = 14

# Gauss-Legendre nodes per panel and the largest node count per quadrature pass.
GL_ORDER = 6
QUAD_NODE_BUDGET = 1 << 24


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, achieved: float):
        super().__init__(f"{msg} (achieved error {achieved:.3e})")
        self.achieved = achieved


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class MultiplierSample:
    value: complex
    xi: tuple[float, ...]
    kind: str
    params: dict = field(default_factory=dict)

    KINDS = ("m", "Phi", "Phi_trunc", "L_arc", "L_sharp", "L_piece", "E", "band")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown sample kind {self.kind!r}")


def _freqs(xi, n: int) -> tuple[np.ndarray, tuple]:
    """Frequencies as (m, n) array plus the original batch shape."""
    pts = _as_points(xi, n)
    shape = pts.shape[:-1]
    return pts.reshape(-1, n), shape


def _reduce_exact(x):
    """x mod 1, exactly (Fraction stays Fraction, float uses fmod)."""
    if isinstance(x, Rational):
        return Fraction(x) % 1
    return math.fmod(float(x), 1.0) % 1.0


# --- discrete symbol --------------------------------------------------------------

def modulated_coefficients(dk: DyadicKernel, j: int, lam, d: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Support points y of K_j and the coefficients e(lam |y|^{2d}) K_j(y)."""
    if j > SYMBOL_GUARD_J:
        raise ValueError(f"j = {j} exceeds the enumeration guard {SYMBOL_GUARD_J}")
    pts, kv = dk.lattice_piece(j)
    keep = kv != 0
    pts, kv = pts[keep], kv[keep]
    k = norm_sq(pts) ** d
    return pts, kv * phase(_reduce_exact(lam), k)


def discrete_symbol(dk: DyadicKernel, j: int, lam, xi, d: int = 1, chunk: int = 1 << 22) -> np.ndarray:
    """m_{j,lam}(xi) by direct summation over the support of K_j."""
    n = dk.n
    pts, c = modulated_coefficients(dk, j, lam, d)
    xs, shape = _freqs(xi, n)
    xs = np.mod(xs, 1.0)
    out = np.empty(xs.shape[0], dtype=complex)
    step = max(1, chunk // max(1, pts.shape[0]))
    for i in range(0, xs.shape[0], step):
        th = xs[i:i + step] @ pts.T.astype(float)
        out[i:i + step] = np.exp(2j * np.pi * (th - np.floor(th))) @ c
    return out.reshape(shape)


def discrete_symbol_grid(dk: DyadicKernel, j: int, lam, N: int, d: int = 1) -> np.ndarray:
    """m_{j,lam}(k/N) for every k in [N]^n (FFT of the coefficients folded onto Z/N)."""
    n = dk.n
    pts, c = modulated_coefficients(dk, j, lam, d)
    tor = np.zeros((N,) * n, dtype=complex)
    np.add.at(tor, tuple(np.mod(pts[:, i], N) for i in range(n)), c)
    return np.fft.ifftn(tor) * float(N) ** n


def symbol_l1_bound(dk: DyadicKernel, j: int) -> float:
    return float(np.sum(np.abs(dk.lattice_piece(j)[1])))


# --- oscillatory integrals -------------------------------------------------------

def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_nodes(a: float, b: float, panels: int, order: int = GL_ORDER):
    x, w = _gl(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _max_phase_speed(j: int, nu: float, xmax: float, d: int) -> float:
    _, outer = piece_support(j)
    return 2 * d * abs(nu) * outer ** (2 * d - 1) + xmax


def _quad_1d(dk: DyadicKernel, j: int, nu: float, xs: np.ndarray, d: int, panel_width: float) -> np.ndarray:
    inner, outer = piece_support(j)
    span = outer - inner
    panels = max(1, int(math.ceil(span / panel_width)))
    if 2 * panels * GL_ORDER > QUAD_NODE_BUDGET:
        raise QuadratureError("panel count exceeds the node budget", math.inf)
    y_pos, w = _panel_nodes(inner, outer, panels)
    y = np.concatenate([-y_pos[::-1], y_pos])
    w = np.concatenate([w[::-1], w])
    base = dk.piece(j, y) * w * np.exp(2j * np.pi * nu * y ** (2 * d))
    out = np.empty(xs.shape[0], dtype=complex)
    step = max(1, (1 << 22) // y.size)
    for i in range(0, xs.shape[0], step):
        out[i:i + step] = np.exp(2j * np.pi * np.outer(xs[i:i + step, 0], y)) @ base
    return out


def _quad_nd(dk: DyadicKernel, j: int, nu: float, xs: np.ndarray, d: int, panel_width: float) -> np.ndarray:
    n = dk.n
    _, outer = piece_support(j)
    panels = max(1, int(math.ceil(2 * outer / panel_width)))
    if (panels * GL_ORDER) ** n > QUAD_NODE_BUDGET:
        raise QuadratureError("tensor grid exceeds the node budget", math.inf)
    t, w1 = _panel_nodes(-outer, outer, panels)
    grids = np.meshgrid(*([t] * n), indexing="ij")
    wg = np.meshgrid(*([w1] * n), indexing="ij")
    y = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in wg], axis=-1), axis=-1)
    r2 = np.sum(y**2, axis=-1)
    base = dk.piece(j, y) * w * np.exp(2j * np.pi * nu * r2**d)
    keep = base != 0
    y, base = y[keep], base[keep]
    out = np.empty(xs.shape[0], dtype=complex)
    step = max(1, (1 << 22) // max(1, y.shape[0]))
    for i in range(0, xs.shape[0], step):
        out[i:i + step] = np.exp(2j * np.pi * (xs[i:i + step] @ y.T)) @ base
    return out


def oscillatory_integral(dk: DyadicKernel, j: int, nu, xi, d: int = 1, tol: float = 1e-10,
                         max_halvings: int = 6) -> np.ndarray:
    """Phi_{j,nu}(xi) = int e(nu|y|^{2d} + xi.y) K_j(y) dy.

    Composite Gauss-Legendre on panels no wider than 1/8 of the shortest local
    wavelength (and 1/32 of the inner radius of the piece, to resolve the
    cutoff).  The panel width is halved until two successive passes agree to
    ``tol``; QuadratureError reports the achieved difference otherwise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = dk.n
    nu = float(nu)
    xs, shape = _freqs(xi, n)
    if xs.shape[0] == 0:
        return np.zeros(shape, dtype=complex)
    inner, outer = piece_support(j)
    speed = _max_phase_speed(j, nu, float(np.max(np.sqrt(np.sum(xs**2, axis=1)))), d)
    h = min(1.0 / (8.0 * speed) if speed > 0 else math.inf, max(inner, 0.25) / 8.0)
    quad = _quad_1d if n == 1 else _quad_nd
    prev = quad(dk, j, nu, xs, d, h)
    err = math.inf
    for _ in range(max_halvings):
        h /= 2
        cur = quad(dk, j, nu, xs, d, h)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol:
            return cur.reshape(shape)
        prev = cur
    raise QuadratureError(f"Phi_{j} did not reach tol={tol:g}", err)


def truncation_bound(j: int, M: float, d: int) -> float:
    return ar.arc_width(j, M, d)


def truncated_phi(dk: DyadicKernel, j: int, nu, xi, M: float, d: int = 1, tol: float = 1e-10) -> np.ndarray:
    """Phi_{j,nu,M} = Phi_{j,nu} 1_{|nu| <= 2^{-2dj} j^M} (closed inequality)."""
    xs, shape = _freqs(xi, dk.n)
    if abs(float(nu)) > truncation_bound(j, M, d):
        return np.zeros(shape, dtype=complex)
    return oscillatory_integral(dk, j, nu, xi, d, tol)


# --- arc multipliers -------------------------------------------------------------

def _sum_table(alpha: ar.ReducedRational, n: int, d: int) -> np.ndarray:
    """S(alpha, b/q) for every b in [q]^n."""
    q = alpha.q
    out = np.empty((q,) * n, dtype=complex)
    for idx in np.ndindex(*out.shape):
        out[idx] = complete_sum(CompleteSumSpec(alpha.a, idx, q, d))
    return out


def _check_class(s: int, alpha: ar.ReducedRational):
    if ar.denominator_class(alpha) != s:
        raise ValueError(f"{alpha} is not in A_{s}")


SymbolRule = Callable[[np.ndarray], np.ndarray]


def arc_multiplier(s: int, alpha: ar.ReducedRational, M: float, m: SymbolRule | float, xi,
                   n: int = 1, d: int = 1) -> np.ndarray:
    """L_{s,alpha,M}[m](xi) = sum_{beta in Z^n/q} S(alpha, beta) m(xi - beta) chi_{s,M}(xi - beta).

    The chi_{s,M} bumps around distinct beta are disjoint (support radius
    below 1/(2q)), so only beta = round(q xi)/q can contribute.  ``m`` is
    called with an (k, n) array of offsets xi - beta; a number means a constant.
    """
    _check_class(s, alpha)
    q = alpha.q
    xs, shape = _freqs(xi, n)
    b = np.rint(xs * q).astype(np.int64)
    eta = xs - b / q
    cut = chi_sM(s, M, n)(eta)
    out = np.zeros(xs.shape[0], dtype=complex)
    live = cut > 0
    if np.any(live):
        table = _sum_table(alpha, n, d)
        S = table[tuple(np.mod(b[live, i], q) for i in range(n))]
        mv = np.full(int(live.sum()), complex(m)) if not callable(m) else np.asarray(m(eta[live]), dtype=complex)
        out[live] = S * mv * cut[live]
    return out.reshape(shape)


def nearest_iw_element(s: int, xi: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """For each row of xi, the element beta of U_{2^s} + Z^n with |xi - beta| < radius.

    Returns (found mask, offsets xi - beta).  Elements of B_{2^s} are at
    least 2^{-2s} apart, so for radius <= 2^{-2s-1} the match is unique.
    """
    found = np.zeros(xi.shape[0], dtype=bool)
    eta = np.zeros_like(xi)
    for q in range(1, 2**s + 1):
        off = xi - np.rint(xi * q) / q
        hit = (~found) & (np.sqrt(np.sum(off**2, axis=1)) < radius)
        eta[hit] = off[hit]
        found |= hit
    return found, eta


def sharp_multiplier(s: int, m: SymbolRule | float, xi, M: float, n: int = 1) -> np.ndarray:
    """L^sharp_s[m](xi) = sum_{beta in U_{2^s}} m(xi - beta) chi~_s(xi - beta)."""
    cut_fn = chi_tilde_sM(s, M, n)
    xs, shape = _freqs(xi, n)
    found, eta = nearest_iw_element(s, xs, cut_fn.support_radius)
    out = np.zeros(xs.shape[0], dtype=complex)
    if np.any(found):
        cut = cut_fn(eta[found])
        mv = np.full(int(found.sum()), complex(m)) if not callable(m) else np.asarray(m(eta[found]), dtype=complex)
        out[found] = mv * cut
    return out.reshape(shape)


def class_representative(s: int, lam, M: float) -> ar.ReducedRational | None:
    """The unique alpha in A_s with |lam - alpha| <= 2^{-4s 2^{s/(2M)}}, if any."""
    x = Fraction(lam) if isinstance(lam, Rational) else Fraction(float(lam))
    cand = x.limit_denominator(2**s - 1)
    if cand.denominator < 2 ** (s - 1):
        return None
    if float(abs(x - cand)) > 2.0 ** (-cutoff_exponent(s, M)):
        return None
    return ar.ReducedRational.of(cand)


def _offset(lam, alpha: ar.ReducedRational) -> float:
    x = Fraction(lam) if isinstance(lam, Rational) else Fraction(float(lam))
    return float(x - alpha.fraction)


def piece_L(s: int, j: int, lam, M: float, xi, dk: DyadicKernel, d: int = 1, tol: float = 1e-10) -> np.ndarray:
    """L^s_{j,lam,M} = L_{s,alpha,M}[Phi_{j,lam-alpha,M}]; zero when A_s has no alpha near lam."""
    alpha = class_representative(s, lam, M)
    xs, shape = _freqs(xi, dk.n)
    if alpha is None:
        return np.zeros(shape, dtype=complex)
    nu = _offset(lam, alpha)
    if abs(nu) > truncation_bound(j, M, d):
        return np.zeros(shape, dtype=complex)
    rule = lambda eta: oscillatory_integral(dk, j, nu, eta, d, tol)
    return arc_multiplier(s, alpha, M, rule, xs, dk.n, d).reshape(shape)


def active_classes(j: int, M: float) -> list[int]:
    """All s >= 1 with 2^s <= j^M (real comparison)."""
    out = []
    s = 1
    while 2.0**s <= float(j) ** M:
        out.append(s)
        s += 1
    return out


def error_term(j: int, lam, M: float, xi, dk: DyadicKernel, d: int = 1, tol: float = 1e-10,
               symbol_values: np.ndarray | None = None) -> np.ndarray:
    """E_{j,lam,M} = m_{j,lam} 1_{X_{j,M}}(lam) - sum_{s: 2^s <= j^M} L^s_{j,lam,M}."""
    xs, shape = _freqs(xi, dk.n)
    in_arc = ar.major_arc_membership(lam, j, M, d) is not None
    if in_arc:
        first = (discrete_symbol(dk, j, lam, xs, d) if symbol_values is None
                 else np.asarray(symbol_values, dtype=complex).reshape(-1))
    else:
        first = np.zeros(xs.shape[0], dtype=complex)
    total = first.copy()
    for s in active_classes(j, M):
        total -= piece_L(s, j, lam, M, xs, dk, d, tol)
    return total.reshape(shape)


def approx_residual(dk: DyadicKernel, j: int, lam, xi, a: int, b, q: int, delta: float,
                    d: int = 1, tol: float = 1e-10) -> tuple[float, float]:
    """(|m_{j,lam}(xi) - S(a/q,b/q) Phi_{j,lam-a/q}(xi-b/q)|, q*delta) under the stated hypotheses."""
    b = (b,) if np.isscalar(b) else tuple(b)
    xv = np.atleast_1d(np.asarray(xi, dtype=float))
    if q > 2 ** (j - 2):
        raise PreconditionError(f"q <= 2^(j-2) violated: q={q}, j={j}")
    if not 2.0**-j < delta < 1:
        raise PreconditionError(f"2^-j < delta < 1 violated: delta={delta}")
    if math.gcd(a, *b, q) != 1:
        raise PreconditionError("(a, b, q) = 1 violated")
    nu = _offset(lam, ar.ReducedRational.of(Fraction(a, q)))
    if abs(nu) > delta * 2.0 ** (-(2 * d - 1) * j):
        raise PreconditionError("|lam - a/q| <= delta 2^{-(2d-1)j} violated")
    eta = xv - np.asarray(b, dtype=float) / q
    if np.sqrt(np.sum(eta**2)) > delta:
        raise PreconditionError("|xi - b/q| <= delta violated")
    m = discrete_symbol(dk, j, lam, xv[None, :], d)[0]
    S = complete_sum(CompleteSumSpec(a, tuple(v % q for v in b), q, d))
    phi = oscillatory_integral(dk, j, nu, eta[None, :], d, tol)[0]
    return float(abs(m - S * phi)), q * delta


# --- frequency bands -------------------------------------------------------------

def band_indices(ell: int, mu, s: int, M: float, d: int = 1) -> list[int]:
    """J_{ell,mu} = {j : 2^s <= j^M, 2^{ell-1} <= |mu| 2^{2dj} <= 2^{ell+1}}, enumerated exactly."""
    if mu == 0:
        return []
    amu = abs(Fraction(mu) if isinstance(mu, Rational) else Fraction(float(mu)))
    centre = (ell - math.log2(amu)) / (2 * d)
    out = []
    for j in range(max(1, math.floor(centre - 1) - 1), math.ceil(centre + 1) + 2):
        if 2.0**s > float(j) ** M:
            continue
        v = amu * Fraction(2) ** (2 * d * j)
        if Fraction(2) ** (ell - 1) <= v <= Fraction(2) ** (ell + 1):
            out.append(j)
    return out


def band_multiplier(ell: int, mu, s: int, M: float, xi, dk: DyadicKernel, d: int = 1,
                    tol: float = 1e-10) -> np.ndarray:
    """Phi~_{ell,mu}(xi) = sum_{j in J_{ell,mu}} Phi_{j,mu}(xi)."""
    xs, shape = _freqs(xi, dk.n)
    total = np.zeros(xs.shape[0], dtype=complex)
    for j in band_indices(ell, mu, s, M, d):
        total += oscillatory_integral(dk, j, float(mu), xs, d, tol)
    return total.reshape(shape)


def low_frequency_gap(s: int, mu, M: float, dk: DyadicKernel, d: int = 1) -> tuple[float, list[int]]:
    """sum_{J_- <= j <= J_+} sum_y |e(mu|y|^{2d}) - 1| |K_j(y)| over the lattice.

    J_- is the least j with 2^s <= j^M and J_+ the largest j with
    |mu| 2^{2dj} < 2^{-s+1}.  Returns the gap and the j range used.
    """
    if mu == 0:
        return 0.0, []
    J_minus = 1
    while 2.0**s > float(J_minus) ** M:
        J_minus += 1
    amu = abs(float(mu))
    J_plus = math.floor((-s + 1 - math.log2(amu)) / (2 * d))
    while amu * 2.0 ** (2 * d * J_plus) >= 2.0 ** (-s + 1):
        J_plus -= 1
    while amu * 2.0 ** (2 * d * (J_plus + 1)) < 2.0 ** (-s + 1):
        J_plus += 1
    js = list(range(J_minus, J_plus + 1))
    gap = 0.0
    for j in js:
        pts, kv = dk.lattice_piece(j)
        ph = phase(_reduce_exact(mu), norm_sq(pts) ** d)
        gap += float(np.sum(np.abs(ph - 1.0) * np.abs(kv)))
    return gap, js


# --- transforms used by the kernel identity -----------------------------------

def lattice_inverse_transform(values_on_grid: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """int_{[0,1)} L(xi) e(y xi) d xi from samples L(k/N) (trapezoid on the circle), n = 1."""
    N = values_on_grid.shape[0]
    return np.fft.ifft(values_on_grid)[np.mod(np.asarray(ys, dtype=np.int64), N)]


def continuum_inverse_transform(rule: SymbolRule, cutoff: SmoothCutoff, ys: np.ndarray,
                                panels: int = 512) -> np.ndarray:
    """int_R e(y eta) m(eta) chi(eta) d eta by Gauss-Legendre over the cutoff support, n = 1."""
    r = cutoff.support_radius
    nodes, w = _panel_nodes(-r, r, panels, 8)
    vals = np.asarray(rule(nodes[:, None]), dtype=complex) * cutoff(nodes) * w
    return np.exp(2j * np.pi * np.outer(np.asarray(ys, dtype=float), nodes)) @ vals
