import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sp

from metasir.errors import AccuracyLossWarning, PoleError
from metasir.special import (
    dawson,
    erf_real,
    erfc_real,
    erfi_real,
    hyp2f2_11_3half2,
    log_gamma_complex,
)


def _stirling(z):
    # log Gamma(z) for large |z| from the Stirling series, independent of Lanczos
    s = (z - 0.5) * np.log(z) - z + 0.5 * math.log(2 * math.pi)
    return s + 1 / (12 * z) - 1 / (360 * z**3) + 1 / (1260 * z**5) - 1 / (1680 * z**7)


@given(st.floats(0.01, 60), st.floats(-100, 100))
def test_log_gamma_matches_mpmath(re, im):
    z = complex(re, im)
    ref = complex(mpmath.loggamma(mpmath.mpc(re, im)))
    got = log_gamma_complex(z)
    # compare modulo 2 pi i: only exp(loggamma) matters downstream
    diff = got - ref
    k = round(diff.imag / (2 * math.pi))
    assert abs(diff - 2j * math.pi * k) < 1e-11 * max(1.0, abs(ref))


@pytest.mark.parametrize("z", [30 + 0j, 50 + 20j, 40 - 70j, 100 + 5j])
def test_log_gamma_against_stirling(z):
    got = log_gamma_complex(z)
    ref = _stirling(z)
    diff = got - ref
    k = round(diff.imag / (2 * math.pi))
    assert abs(diff - 2j * math.pi * k) < 1e-10


def test_log_gamma_known_values():
    assert abs(log_gamma_complex(1.0)) < 1e-14
    assert abs(log_gamma_complex(0.5) - 0.5 * math.log(math.pi)) < 1e-14
    assert abs(log_gamma_complex(5.0) - math.log(24)) < 1e-13


@pytest.mark.parametrize("z", [0, -1, -7])
def test_log_gamma_poles(z):
    with pytest.raises(PoleError):
        log_gamma_complex(z)


def test_log_gamma_recurrence_small_real_part():
    z = complex(0.1, 0.3)
    lhs = log_gamma_complex(z + 1)
    rhs = log_gamma_complex(z) + np.log(z)
    assert abs(np.exp(lhs - rhs) - 1) < 1e-12


@given(st.floats(-8, 8))
def test_erf_pair_matches_scipy(x):
    assert abs(erf_real(x) - sp.erf(x)) < 2e-15
    assert abs(erfc_real(x) - sp.erfc(x)) <= 4e-15 * max(1.0, sp.erfc(x))


@pytest.mark.parametrize("x", [5.0, 10.0, 26.0])
def test_erfc_relative_accuracy_in_tail(x):
    assert erfc_real(x) == pytest.approx(sp.erfc(x), rel=1e-13)


def test_erf_array_and_scalar():
    xs = np.array([-1.0, 0.0, 0.5, 2.0])
    assert isinstance(erf_real(0.3), float)
    np.testing.assert_allclose(erf_real(xs), sp.erf(xs), atol=2e-15)
    np.testing.assert_allclose(erf_real(xs) + erfc_real(xs), 1.0, atol=2e-15)


@given(st.floats(-50, 50))
def test_dawson_matches_scipy(x):
    assert dawson(x) == pytest.approx(sp.dawsn(x), rel=1e-13, abs=1e-300)


@given(st.floats(-5, 5))
def test_erfi_matches_scipy(x):
    assert erfi_real(x) == pytest.approx(sp.erfi(x), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("z", [0.0, 0.1, 1.0, 5.0, 19.9])
def test_hyp2f2_matches_mpmath(z):
    ref = float(mpmath.hyp2f2(1, 1, 1.5, 2, z))
    assert hyp2f2_11_3half2(z) == pytest.approx(ref, rel=1e-14)


def test_hyp2f2_warns_beyond_reliable_range():
    with pytest.warns(AccuracyLossWarning):
        hyp2f2_11_3half2(48.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        hyp2f2_11_3half2(20.0)


def test_log_gamma_against_shifted_stirling():
    # shift 2+3i up by 40 with the recurrence, then apply Stirling
    z = 2 + 3j
    shift = sum(np.log(z + k) for k in range(40))
    ref = _stirling(z + 40) - shift
    diff = log_gamma_complex(z) - ref
    k = round(diff.imag / (2 * math.pi))
    assert abs(diff - 2j * math.pi * k) < 1e-12


def test_error_function_spot_values():
    assert erfc_real(0.0) == 1.0
    assert dawson(0.0) == 0.0
    assert erfc_real(1.0) == pytest.approx(0.157299207050285, rel=1e-14)
    assert erfc_real(0.696) == pytest.approx(0.325, abs=5e-4)


def test_hyp2f2_series_values():
    from fractions import Fraction

    assert hyp2f2_11_3half2(0.0) == 1.0
    assert hyp2f2_11_3half2(1e-6) == pytest.approx(1 + 1e-6 / 3, abs=1e-12)
    # exact rational partial sum at z = 1
    term, total = Fraction(1), Fraction(1)
    for n in range(500):
        term *= Fraction(n + 1, 1) / ((Fraction(2 * n + 3, 2)) * (n + 2))
        total += term
    assert hyp2f2_11_3half2(1.0) == pytest.approx(float(total), rel=1e-15)
