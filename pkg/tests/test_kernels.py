import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carleson_lab.kernels import (PIECE_CONSTANT, DyadicKernel, SmoothCutoff, builtin_kernel, chi, chi_sM,
                                  chi_tilde, chi_tilde_sM, cutoff_chi_sM, cutoff_exponent, dyadic_piece,
                                  mollifier, partition_weight, piece_support)

odd = builtin_kernel("odd_power")
riesz = builtin_kernel("riesz_1", 2)


def test_builtin_examples():
    assert odd(2.0) == 0.5
    assert riesz(np.array([1.0, 0.0])) == pytest.approx(1.0, abs=1e-15)
    x = np.random.default_rng(0).uniform(-100, 100, 1000)
    assert np.array_equal(odd(-x), -odd(x))
    with pytest.raises(ValueError):
        builtin_kernel("nope")
    with pytest.raises(ValueError):
        builtin_kernel("odd_power", 2)
    with pytest.raises(ValueError):
        builtin_kernel("riesz_3", 2)


def test_truncated_custom_checks_size_constant():
    k = builtin_kernel("truncated_custom", 1, rule=lambda p: 0.5 / p[..., 0], size_constant=0.5)
    assert k(4.0) == 0.125
    with pytest.raises(ValueError):
        builtin_kernel("truncated_custom", 1, rule=lambda p: 3 / p[..., 0], size_constant=1.0)
    with pytest.raises(ValueError):
        builtin_kernel("truncated_custom", 1, rule=lambda p: 1 / p[..., 0])


@pytest.mark.parametrize("kernel", [odd, riesz, builtin_kernel("riesz_2", 2)])
def test_size_bound_on_samples(kernel):
    r = np.random.default_rng(1)
    pts = r.standard_normal((2000, kernel.n)) * np.exp(r.uniform(-4, 8, (2000, 1)))
    rad = np.sqrt(np.sum(pts**2, axis=-1))
    assert np.all(np.abs(kernel(pts)) <= kernel.size_constant * rad ** (-kernel.n) * (1 + 1e-12))


def test_cancellation_over_dyadic_annuli():
    for kernel, n in [(odd, 1), (riesz, 2)]:
        from carleson_lab.lattice import ball_points
        for k in range(1, 6):
            pts = ball_points(2.0 ** (k + 1), n, inner=2.0**k)
            assert abs(np.sum(kernel(pts))) < 1e-10


def test_piece_supports():
    dk = DyadicKernel(odd)
    for j in range(1, 9):
        inner, outer = piece_support(j)
        x = np.arange(-2 ** (j + 3), 2 ** (j + 3) + 1)
        v = dk.piece(j, x)
        assert np.all(v[np.abs(x) >= outer] == 0)
        if j >= 2:
            assert np.all(v[np.abs(x) <= inner] == 0)
    assert dyadic_piece(odd, 3, 17.0) == 0
    assert dyadic_piece(odd, 3, 3.0) == 0


def test_telescoping_at_17():
    parts = sum(dyadic_piece(odd, j, 17.0) for j in range(1, 11))
    assert parts == pytest.approx(1 / 17, abs=1e-15)


@given(st.integers(2, 12))
def test_telescoping_exact_in_range(J):
    dk = DyadicKernel(odd)
    x = np.arange(2, 2 ** (J - 1) + 1)
    assert np.max(np.abs(dk.partial_sum(1, J + 1, x) - odd(x))) < 1e-15
    x = np.arange(1, 2 ** (J - 1) + 1)
    assert np.max(np.abs(dk.partial_sum(1, J + 1, x) - odd(x))) < 1e-15


def test_partition_of_unity_in_two_dimensions():
    dk = DyadicKernel(riesz)
    r = np.random.default_rng(2)
    pts = r.uniform(-60, 60, (500, 2))
    rad = np.sqrt(np.sum(pts**2, axis=1))
    pts = pts[(rad >= 0.5) & (rad <= 2**5)]
    assert np.max(np.abs(dk.partial_sum(1, 7, pts) - riesz(pts))) < 1e-14


@pytest.mark.parametrize("name,n,jmax", [("odd_power", 1, 14), ("riesz_1", 2, 9)])
def test_piece_size_and_gradient_constant(name, n, jmax):
    dk = DyadicKernel(builtin_kernel(name, n))
    r = np.random.default_rng(3)
    for j in range(1, jmax + 1):
        pts = dk.lattice_support(j).astype(float)
        if n == 2 and len(pts) > 4000:
            pts = pts[r.choice(len(pts), 4000, replace=False)]
        size = np.max(np.abs(dk.piece(j, pts))) * 2.0 ** (j * n)
        h = 1e-5 * 2.0**j
        g2 = 0.0
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            g2 = g2 + ((dk.piece(j, pts + e) - dk.piece(j, pts - e)) / (2 * h)) ** 2
        grad = np.max(np.sqrt(g2)) * 2.0 ** (j * (n + 1))
        assert size <= PIECE_CONSTANT and grad <= PIECE_CONSTANT


def test_mean_zero_pieces():
    dk = DyadicKernel(odd)
    for j in range(1, 15):
        _, v = dk.lattice_piece(j)
        assert np.array_equal(v, -v[::-1])
        assert math.fsum(v.tolist()) == 0.0
    dk2 = DyadicKernel(riesz)
    for j in range(1, 8):
        _, v = dk2.lattice_piece(j)
        assert abs(np.sum(v)) <= 1e-10


def test_partition_weight_rejects_j():
    with pytest.raises(ValueError):
        partition_weight(0, 1.0)


def test_piece_function_record():
    f = DyadicKernel(odd).piece_function(3)
    assert f.origin == (-16,) and f.shape == (33,)
    assert f.at((5,)) == pytest.approx(complex(dyadic_piece(odd, 3, 5.0)))


def test_cutoff_examples():
    for s in (1, 2, 3):
        c = chi_sM(s, 2.0)
        assert c(0.0) == 1.0
        e = cutoff_exponent(s, 2.0)
        assert c.support_radius == pytest.approx(2.0 ** (-e) / 2)
        assert cutoff_chi_sM(s, 2.0, 2.0 ** (-e - 1)) == 0.0
        assert cutoff_chi_sM(s, 2.0, 2.0 ** (-e - 1) * 1.0001) == 0.0
        assert c(2.0 ** (-e) / 4) == 1.0


@given(st.integers(1, 3), st.floats(0.5, 4.0), st.floats(-1, 1))
def test_chi_nesting(s, M, u):
    c, ct = chi_sM(s, M), chi_tilde_sM(s, M)
    xi = u * ct.support_radius
    assert c(xi) * ct(xi) == pytest.approx(float(c(xi)), abs=0)
    assert 0 <= float(c(xi)) <= 1 and 0 <= float(ct(xi)) <= 1


def test_profiles_radial_and_bounded():
    r = np.random.default_rng(5)
    pts = r.uniform(-1, 1, (1000, 2))
    c = SmoothCutoff("chi", 0.0, 2)
    rot = pts @ np.array([[0.6, -0.8], [0.8, 0.6]])
    assert np.allclose(c(pts), c(rot), atol=1e-13)
    t = np.linspace(0, 1.2, 2001)
    assert np.all((chi(t) >= 0) & (chi(t) <= 1))
    assert np.all(np.diff(chi(t)) <= 0) and np.all(np.diff(chi_tilde(t)) <= 0)
    assert np.array_equal(chi(t) * chi_tilde(t), chi(t))


def test_profile_is_smooth_at_plateau_edges():
    assert chi(0.25 + 1e-3) == 1.0 and 0 < chi(0.5 - 1e-3) < 1e-100


def test_cutoff_scale_guard():
    with pytest.raises(OverflowError):
        chi_sM(12, 0.2)
    with pytest.raises(ValueError):
        cutoff_exponent(0, 1.0)
    with pytest.raises(ValueError):
        SmoothCutoff("box")


@pytest.mark.parametrize("J", [1, 3, 5])
def test_mollifier_integral_and_positivity(J):
    x = np.linspace(-2.0 ** (J + 10), 2.0 ** (J + 10), 2**20 + 1)
    v = mollifier(J, x)
    assert np.all(v >= 0)
    integral = np.sum(v) * (x[1] - x[0])
    assert integral == pytest.approx(1.0, abs=1e-6)


def test_mollifier_band_limited():
    N = 2**16
    h = 1 / 16
    x = (np.arange(N) - N // 2) * h
    v = mollifier(0, x) * h
    F = np.abs(np.fft.fft(np.fft.ifftshift(v)))
    freqs = np.fft.fftfreq(N, d=h)
    assert np.max(F[np.abs(freqs) >= 0.5]) < 1e-8
    assert F[0] == pytest.approx(1.0, abs=1e-6)


def test_mollifier_two_dimensional_normalization():
    g = np.linspace(-400, 400, 1601)
    X, Y = np.meshgrid(g, g, indexing="ij")
    v = mollifier(1, np.stack([X, Y], -1), n=2)
    assert np.sum(v) * (g[1] - g[0]) ** 2 == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(ValueError):
        mollifier(-1, 0.0)
