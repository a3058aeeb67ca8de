"""Special functions used by the analytic results.

Scalar implementations built on :mod:`math`/:mod:`cmath`; the error-function
family also accepts numpy arrays and maps elementwise.
"""

from __future__ import annotations

import cmath
import functools
import math
import warnings

import numpy as np

from .errors import AccuracyLossWarning, PoleError

__all__ = [
    "log_gamma_complex",
    "erf_real",
    "erfc_real",
    "dawson",
    "erfi_real",
    "hyp2f2_11_3half2",
    "EULER_GAMMA",
]

EULER_GAMMA = 0.57721566490153286061

# Lanczos coefficients, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_log_gamma(z: complex) -> complex:
    # valid for Re(z) >= 0.5
    z = z - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)


def log_gamma_complex(z: complex) -> complex:
    """Log-gamma of a complex argument.

    Returns the branch that is real on the positive real axis and continuous
    in the plane slit along the non-positive real axis (the branch satisfying
    ``log_gamma(z + 1) = log_gamma(z) + log(z)``).  Arguments with
    ``Re(z) < 0.5`` are shifted up by the recurrence before the Lanczos sum is
    applied, which keeps the branch consistent without reflection-formula
    bookkeeping.

    Raises
    ------
    PoleError
        If ``z`` is a non-positive integer.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise PoleError(f"log-gamma pole at z={z.real:g}")
    if z.real >= 0.5:
        return _lanczos_log_gamma(z)
    shift = int(math.ceil(0.5 - z.real))
    acc = 0j
    w = z
    for _ in range(shift):
        acc += cmath.log(w)
        w += 1.0
    return _lanczos_log_gamma(w) - acc


def _elementwise(fn):
    """Let a scalar float function accept numpy arrays."""

    vec = np.vectorize(fn, otypes=[float])

    @functools.wraps(fn)
    def wrapper(x):
        if np.ndim(x) == 0:
            return fn(float(x))
        return vec(np.asarray(x, dtype=float))

    return wrapper


_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_SERIES_CUTOFF = 3.0


def _erf_series(x: float) -> float:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!  (all terms positive)
    x2 = x * x
    term = x
    total = x
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term <= 1e-17 * total:
            break
    return _TWO_OVER_SQRT_PI * math.exp(-x2) * total


def _erfc_contfrac(x: float) -> float:
    # x > 0; modified Lentz on erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    for n in range(1, 500):
        a = 0.5 * n
        d = x + a * d
        d = tiny if d == 0.0 else d
        c = x + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x * x) / (math.sqrt(math.pi) * f)


def _erfc_scalar(x: float) -> float:
    if math.isnan(x):
        return math.nan
    if x < 0.0:
        return 2.0 - _erfc_scalar(-x)
    if x == 0.0:
        return 1.0
    if x < _SERIES_CUTOFF:
        return 1.0 - _erf_series(x)
    return _erfc_contfrac(x)


def _erf_scalar(x: float) -> float:
    if math.isnan(x):
        return math.nan
    ax = abs(x)
    if ax == 0.0:
        return x
    if ax < _SERIES_CUTOFF:
        value = _erf_series(ax)
    else:
        value = 1.0 - _erfc_contfrac(ax)
    return math.copysign(value, x)


_DAWSON_SERIES_MAX = 6.0


def _dawson_scalar(x: float) -> float:
    if math.isnan(x):
        return math.nan
    ax = abs(x)
    if ax == 0.0:
        return x
    if ax <= _DAWSON_SERIES_MAX:
        # exp(-x^2) sum_n x^(2n+1) / (n! (2n+1)), positive terms
        x2 = ax * ax
        power = ax
        total = ax
        n = 0
        while True:
            n += 1
            power *= x2 / n
            term = power / (2 * n + 1)
            total += term
            if term <= 1e-17 * total:
                break
        value = math.exp(-x2) * total
    else:
        # asymptotic: 1/(2x) sum_n (2n-1)!! / (2x^2)^n, stop at the smallest term
        inv = 1.0 / (2.0 * ax * ax)
        term = 1.0
        total = 1.0
        n = 0
        while True:
            n += 1
            nxt = term * (2 * n - 1) * inv
            if nxt >= term or nxt < 1e-17 * total:
                break
            term = nxt
            total += term
        value = total / (2.0 * ax)
    return math.copysign(value, x)


erfc_real = _elementwise(_erfc_scalar)
erfc_real.__doc__ = "Complementary error function for real arguments (absolute error below 1e-14)."

erf_real = _elementwise(_erf_scalar)
erf_real.__doc__ = "Error function for real arguments."

dawson = _elementwise(_dawson_scalar)
dawson.__doc__ = "Dawson's integral F(x) = exp(-x^2) * int_0^x exp(t^2) dt."


def erfi_real(x):
    """Imaginary error function, erfi(x) = 2 exp(x^2) F(x) / sqrt(pi)."""
    x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    return _TWO_OVER_SQRT_PI * np.exp(np.square(x)) * dawson(x)


HYP2F2_RELIABLE_MAX = 20.0


def hyp2f2_11_3half2(z: float) -> float:
    """Power series for 2F2([1, 1], [3/2, 2], z).

    Term ratio is ``(n + 1) z / ((n + 3/2)(n + 2))``.  For ``z > 20`` the
    series itself converges but the callers that subtract it from an
    exponentially large erfi term lose all precision, so an
    :class:`AccuracyLossWarning` is raised.
    """
    z = float(z)
    if z > HYP2F2_RELIABLE_MAX:
        warnings.warn(
            f"2F2 evaluated at z={z:g} > {HYP2F2_RELIABLE_MAX:g}; downstream cancellation likely",
            AccuracyLossWarning,
            stacklevel=2,
        )
    term = 1.0
    total = 1.0
    n = 0
    while True:
        term *= (n + 1) * z / ((n + 1.5) * (n + 2))
        total += term
        n += 1
        if abs(term) < 1e-16 * abs(total) or n > 10_000:
            break
    return total
