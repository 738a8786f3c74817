import numpy as np
import pytest

from maxstein.testfunctions import (LIP1, LIP2, BoxIndicator, CallableFunction, CappedSoftmin, CertificationError,
                                    ClipCoordinate, ClipMean, Constant, SmoothBox, TestFunctionBank, certify,
                                    get_bank, smooth_bank)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_default_bank(d):
    bank = smooth_bank(d)
    assert len(bank) == 14
    assert len(set(bank.names())) == 14
    assert bank.level == LIP2
    assert max(bank.ratios.values()) <= 1 + 1e-6


def test_bank_lookup():
    bank = get_bank("smooth", 2)
    assert bank.get("clip1_c2").c == 2.0
    with pytest.raises(KeyError):
        bank.get("nope")
    with pytest.raises(KeyError):
        get_bank("rough", 2)


def test_clip_limits():
    h = ClipCoordinate(1, 2.0, 0.25)
    x = np.array([[5.0, 100.0], [5.0, 1e-3]])
    # softplus rounding costs at most tau * exp(-|c - x| / tau)
    np.testing.assert_allclose(h.value(x), [2.0, 1e-3], atol=0.25 * np.exp(-1.999 / 0.25))


def test_softmin_and_box_shapes():
    x = np.random.default_rng(0).uniform(0.1, 3, (4, 5, 3))
    for h in (ClipMean(1.0), CappedSoftmin(2.0, 0.5), SmoothBox(1.0, 0.25)):
        assert h.value(x).shape == (4, 5)
        assert h.gradient(x).shape == (4, 5, 3)


def test_softmin_below_min():
    h = CappedSoftmin(2.0, 0.5)
    x = np.array([0.7, 1.3])
    assert h.value(x) <= min(x.min(), 2.0)


def test_certification_rejects_steep_function():
    steep = CallableFunction(lambda x: 2 * x[..., 0], lambda x: np.stack([2 + 0 * x[..., 0], 0 * x[..., 0]], -1),
                             name="steep")
    with pytest.raises(CertificationError):
        certify(steep, 2, LIP1)


def test_certification_rejects_curved_gradient():
    # value 1-Lipschitz but the partial derivative is not
    h = CallableFunction(lambda x: np.sin(4 * x[..., 0]) / 4, lambda x: np.stack([np.cos(4 * x[..., 0]), 0 * x[..., 0]], -1),
                         name="wiggle")
    assert certify(h, 2, LIP1) <= 1 + 1e-6
    with pytest.raises(CertificationError):
        certify(h, 2, LIP2)


def test_certification_checks_gradients():
    wrong = CallableFunction(lambda x: 0.5 * x[..., 0], lambda x: np.zeros_like(x), name="wrong")
    with pytest.raises(CertificationError, match="finite differences"):
        certify(wrong, 2, LIP1)


def test_bank_certifies_on_construction():
    with pytest.raises(CertificationError):
        TestFunctionBank("bad", [ClipCoordinate(0, 1.0, 0.01)], 1, LIP2)


def test_indicator_and_constant():
    z = np.array([1.0, 2.0])
    h = BoxIndicator(z)
    np.testing.assert_array_equal(h.value([[1.0, 2.0], [1.1, 0.0]]), [1.0, 0.0])
    np.testing.assert_allclose(h.ray_breaks(None, np.array([0.5, 0.0])), [2.0])
    assert Constant(3.0).value(np.ones((2, 4))).tolist() == [3.0, 3.0]


def test_kernel_codes():
    codes, params = smooth_bank(2).codes()
    assert codes.shape == (14,) and params.shape == (14, 3)
    with pytest.raises(ValueError):
        TestFunctionBank("ind", [Constant(1.0)], 1, LIP1).codes()
