import math

import numpy as np
import pytest

from maxstein.quadrature import (QuadratureError, QuadratureSpec, adaptive, gauss_legendre, gauss_legendre_table,
                                 radial_full, radial_tail)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=0)


def test_adaptive_basic():
    v, e = adaptive(math.sin, 0, math.pi)
    assert v == pytest.approx(2.0, abs=1e-12)
    assert adaptive(math.sin, 1.0, 1.0) == (0.0, 0.0)


def test_adaptive_reports_failure():
    with pytest.raises(QuadratureError) as info:
        adaptive(lambda x: 1 / x, 0.0, 1.0, QuadratureSpec(1e-12, 1e-12, 5))
    assert info.value.abserr > 0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.5])
def test_radial_tail_mass(alpha):
    # int_b^inf alpha r^{-alpha-1} dr = b^{-alpha}
    v, _ = radial_tail(lambda r: 1.0, 0.7, alpha)
    assert v == pytest.approx(0.7 ** -alpha, rel=1e-10)


def test_radial_tail_with_kink():
    alpha = 1.5
    v, _ = radial_tail(lambda r: min(r, 2.0), 1.0, alpha, points=[2.0])
    # int_1^2 r alpha r^{-alpha-1} dr + 2 * 2^{-alpha}
    exact = alpha / (alpha - 1) * (1 - 2 ** (1 - alpha)) + 2 * 2 ** -alpha
    assert v == pytest.approx(exact, rel=1e-10)


def test_radial_tail_needs_positive_limit():
    with pytest.raises(ValueError):
        radial_tail(lambda r: 1.0, 0.0, 1.0)


@pytest.mark.parametrize("alpha", [0.7, 2.0, 5.0])
def test_radial_full_against_gamma(alpha):
    # int_0^inf exp(-r^-alpha) ... is the Frechet mass; with g(r) = exp(-r^{-alpha}) * r^{-alpha}... use
    # int_0^inf exp(-r^{-alpha}) alpha r^{-alpha-1} dr = 1
    v, _ = radial_full(lambda r: math.exp(-r ** -alpha), alpha, points=[1.0])
    assert v == pytest.approx(1.0, rel=1e-10)


def test_radial_full_slowly_decaying():
    # with u = r^{-alpha} the integrand exp(-u^{0.1}) decays slowly in u; the integral is Gamma(10)
    alpha = 1.0
    v, _ = radial_full(lambda r: math.exp(-r ** -0.1), alpha)
    assert v == pytest.approx(math.gamma(11), rel=1e-8)


def test_gauss_legendre():
    x, w = gauss_legendre(7)
    assert w.sum() == pytest.approx(1.0)
    assert np.sum(w * x ** 13) == pytest.approx(1 / 14)
    tx, tw = gauss_legendre_table(5)
    np.testing.assert_array_equal(tx[3, :3], gauss_legendre(3)[0])
    assert np.all(tw[3, 3:] == 0)
