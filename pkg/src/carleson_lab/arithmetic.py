"""Rational arithmetic: continued fractions, Farey sets, major arcs, denominator classes."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterator, Sequence

# Absolute slack for |lambda - alpha| <= width when lambda is a float.
ARC_SLACK = 1e-15

# iw_set refuses to enumerate more than this many candidate vectors (N^n * N^2).
IW_ENUMERATION_GUARD = 10**7


@dataclass(frozen=True, order=False)
class ReducedRational:
    a: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"denominator must be positive, got {self.q}")
        if math.gcd(self.a, self.q) != 1:
            raise ValueError(f"{self.a}/{self.q} is not reduced")

    @classmethod
    def of(cls, x) -> "ReducedRational":
        x = Fraction(x)
        return cls(x.numerator, x.denominator)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.a, self.q)

    def __float__(self) -> float:
        return self.a / self.q

    def __lt__(self, other: "ReducedRational") -> bool:
        return self.fraction < other.fraction

    def __str__(self) -> str:
        return f"{self.a}/{self.q}"


@dataclass(frozen=True)
class RationalVector:
    """b/q in Q^n with a shared denominator; ``reduced`` iff gcd(b_1..b_n, q) == 1."""

    b: tuple[int, ...]
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("denominator must be positive")
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))

    @property
    def reduced(self) -> bool:
        return math.gcd(*self.b, self.q) == 1

    def as_floats(self) -> tuple[float, ...]:
        return tuple(v / self.q for v in self.b)

    def as_fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(v, self.q) for v in self.b)


@dataclass(frozen=True)
class MajorArcCertificate:
    alpha: ReducedRational
    distance: float
    q_bound: float  # j^M
    width: float  # 2^{-2dj} j^M

    def to_dict(self) -> dict:
        return {"alpha": str(self.alpha), "distance": self.distance,
                "q_bound": self.q_bound, "width": self.width}


def _exact(x) -> Fraction:
    return Fraction(x) if isinstance(x, Rational) else Fraction(float(x))


def convergents(x) -> Iterator[Fraction]:
    """Continued-fraction convergents of x (a float is expanded as its exact binary value)."""
    x = _exact(x)
    p0, q0, p1, q1 = 0, 1, 1, 0
    num, den = x.numerator, x.denominator
    while den:
        a, r = divmod(num, den)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield Fraction(p1, q1)
        num, den = den, r


def continued_fraction_approx(lam, Q: int) -> ReducedRational:
    """Last convergent a/q of lam with q <= Q.

    Satisfies Dirichlet's bound |lam - a/q| <= 1/(q (Q+1)), since the next
    convergent has denominator above Q.
    """
    if Q < 1:
        raise ValueError("Q must be at least 1")
    best = None
    for c in convergents(lam):
        if c.denominator > Q:
            break
        best = c
    return ReducedRational.of(best)


def nearest_rational(lam, N: int) -> Fraction:
    """Closest fraction to lam with denominator <= N (ties go to the smaller denominator)."""
    return _exact(lam).limit_denominator(int(N))


def farey_set(N: Real) -> list[ReducedRational]:
    """All a/q in [0, 1) with (a, q) = 1 and 1 <= q <= N, ascending."""
    if N < 1:
        raise ValueError("farey_set needs N >= 1")
    top = int(math.floor(N))
    out = [ReducedRational(a, q) for q in range(1, top + 1) for a in range(q) if math.gcd(a, q) == 1]
    return sorted(out, key=lambda r: r.fraction)


def arc_width(j: int, M: float, d: int) -> float:
    return 2.0 ** (-2 * d * j) * float(j) ** M


def _arc_qmax(j: int, M: float) -> int:
    if float(M).is_integer():
        return j ** int(M)
    return math.floor(float(j) ** M)


def _within_arc(lam, dist: Fraction, j: int, M: float, d: int) -> bool:
    if float(M).is_integer() and isinstance(lam, Rational):
        return dist <= Fraction(j ** int(M), 2 ** (2 * d * j))
    slack = 0.0 if isinstance(lam, Rational) else ARC_SLACK
    return float(dist) <= arc_width(j, M, d) + slack


def major_arc_membership(lam, j: int, M: float, d: int) -> MajorArcCertificate | None:
    """Certificate that lam lies within 2^{-2dj} j^M of a reduced a/q with q <= j^M, else None.

    The closest fraction with denominator <= floor(j^M) is found exactly
    (Farey neighbours via ``Fraction.limit_denominator``); if it misses the
    arc no other admissible fraction can hit it.
    """
    if j < 1:
        raise ValueError("j must be positive")
    qmax = _arc_qmax(j, M)
    if qmax < 1:
        return None
    x = _exact(lam)
    alpha = x.limit_denominator(qmax)
    dist = abs(x - alpha)
    if not _within_arc(lam, dist, j, M, d):
        return None
    return MajorArcCertificate(ReducedRational.of(alpha), float(dist), float(j) ** M, arc_width(j, M, d))


def major_arc_membership_bruteforce(lam, j: int, M: float, d: int) -> MajorArcCertificate | None:
    """Reference implementation: scan every a/q with q <= j^M next to lam."""
    x = _exact(lam)
    best = None
    for q in range(1, _arc_qmax(j, M) + 1):
        base = math.floor(x * q)
        for a in (base, base + 1):
            if math.gcd(a, q) != 1:
                continue
            dist = abs(x - Fraction(a, q))
            if best is None or dist < best[0]:
                best = (dist, Fraction(a, q))
    if best is None or not _within_arc(lam, best[0], j, M, d):
        return None
    return MajorArcCertificate(ReducedRational.of(best[1]), float(best[0]), float(j) ** M, arc_width(j, M, d))


def denominator_class(alpha) -> int:
    """The s >= 1 with 2^{s-1} <= q < 2^s (accepts a ReducedRational, Fraction or an int q)."""
    q = alpha if isinstance(alpha, int) else Fraction(alpha.fraction if isinstance(alpha, ReducedRational) else alpha).denominator
    if q < 1:
        raise ValueError("denominator must be positive")
    return q.bit_length()


def class_members(s: int) -> list[ReducedRational]:
    """A_s intersected with [0, 1)."""
    return [r for r in farey_set(2**s - 1) if 2 ** (s - 1) <= r.q]


def lcm_ladder(s: int, max_bits: int = 128) -> int:
    """Q_s = lcm(1, 2, ..., 2^s - 1); raises OverflowError if Q_s needs more than ``max_bits`` bits."""
    if s < 1:
        raise ValueError("s must be positive")
    Q = math.lcm(*range(1, 2**s))
    if Q.bit_length() > max_bits:
        raise OverflowError(f"Q_{s} has {Q.bit_length()} bits (limit {max_bits})")
    return Q


def iw_set(N: int, rho: float = 1.0, n: int = 1) -> list[RationalVector]:
    """Desk-scale Ionescu-Wainger set U_N := B_N restricted to [0, 1)^n.

    B_N is the set of b/q with gcd(b, q) = 1 and q <= N (common denominator).
    ``rho`` only enters through the trivial sandwich B_N c U_N c B_{2^{N^rho}}.
    """
    if N < 2:
        raise ValueError("iw_set needs N >= 2")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if N**n * N**2 > IW_ENUMERATION_GUARD:
        raise OverflowError(f"iw_set({N}, n={n}) exceeds the enumeration guard")
    out = []
    for q in range(1, N + 1):
        for b in itertools.product(range(q), repeat=n):
            if math.gcd(*b, q) == 1:
                out.append(RationalVector(b, q))
    out.sort(key=lambda v: v.as_fractions())
    return out


def in_iw_set(point: Sequence[Fraction], N: int) -> bool:
    """Membership of a rational vector in the periodic set U_N = B_N + Z^n."""
    den = math.lcm(*(Fraction(p).denominator for p in point))
    return den <= N


def rationals_csv(rs: Sequence[ReducedRational]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "q", "value"])
    for r in rs:
        w.writerow([r.a, r.q, repr(float(r))])
    return buf.getvalue()


def certificate_json(cert: MajorArcCertificate | None) -> str:
    return json.dumps(None if cert is None else cert.to_dict(), sort_keys=True)
