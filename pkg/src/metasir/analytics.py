"""Closed-form and semi-analytic results for the Poisson bipolar network.

Moments of the conditional success probability, reconstruction of its
distribution (Gil-Pelaez and binomial mixtures), the interference law for
alpha = 4, threshold distributions under rate control, and throughput
densities.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import (
    AsymptoticRegimeWarning,
    CancellationError,
    CancellationFallbackWarning,
    QuadratureFailure,
    UnsupportedExponent,
)
from .model import NetworkParams, ReliabilityTarget
from .special import (
    EULER_GAMMA,
    HYP2F2_RELIABLE_MAX,
    erf_real,
    erfc_real,
    erfi_real,
    hyp2f2_11_3half2,
    log_gamma_complex,
)

__all__ = [
    "DistributionCurve",
    "ThroughputDensities",
    "standard_success_probability",
    "sir_moment",
    "md_gil_pelaez",
    "md_gil_pelaez_curve",
    "binomial_mixture_weights",
    "md_binomial_mixture",
    "md_binomial_mixture_curve",
    "levy_interference_ccdf",
    "threshold_ccdf_exact",
    "threshold_ccdf_ultrareliable",
    "threshold_ccdf_partial_info",
    "log_rate_constant",
    "expected_log_rate",
    "expected_log_rate_closed_form",
    "throughput_rate_control",
    "throughput_deterministic",
]


@dataclass
class DistributionCurve:
    """A ccdf sampled on an ascending grid.

    ``quantity`` names what is tabulated, e.g. ``"md"`` (reliability ccdf at
    fixed theta), ``"threshold"`` (threshold ccdf at fixed nu) or
    ``"interference"``.  Monte Carlo curves also carry per-point standard
    errors; quadrature curves carry the values before clamping to [0, 1].
    """

    abscissa: np.ndarray
    values: np.ndarray
    quantity: str
    std_errors: np.ndarray | None = None
    pre_clamp: np.ndarray | None = None
    n: int | None = None
    resample_count: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.abscissa.shape != self.values.shape:
            raise ValueError("abscissa and values must have equal length")
        if self.std_errors is not None:
            self.std_errors = np.asarray(self.std_errors, dtype=float)


@dataclass(frozen=True)
class ThroughputDensities:
    """Throughput density over all links and over reliable links (nats per unit area)."""

    S: float
    S_rel: float


def _require_alpha4(params: NetworkParams, what: str):
    if params.path_loss_exponent != 4:
        raise UnsupportedExponent(
            f"{what} is only available for path_loss_exponent = 4, "
            f"got {params.path_loss_exponent}"
        )


def _scale(params: NetworkParams, theta: float) -> float:
    # lam pi R^2 theta^delta
    return params.density * math.pi * params.link_distance**2 * theta**params.delta


def standard_success_probability(params: NetworkParams, theta: float) -> float:
    """Mean success probability exp(-lam pi R^2 theta^d Gamma(1+d) Gamma(1-d))."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    d = params.delta
    return math.exp(-_scale(params, theta) * math.gamma(1 + d) * math.gamma(1 - d))


def _log_moment(params: NetworkParams, theta: float, b: complex) -> complex:
    d = params.delta
    ratio = cmath.exp(log_gamma_complex(b + d) - log_gamma_complex(b))
    return -_scale(params, theta) * math.gamma(1 - d) * ratio


def sir_moment(params: NetworkParams, theta: float, b: complex) -> complex:
    """E[P_s(theta)^b] = exp(-lam pi R^2 theta^d Gamma(1-d) Gamma(b+d) / Gamma(b)).

    Follows from the probability generating functional of the PPP applied to
    the product form of the conditional success probability.  Valid for
    ``Re(b) >= 0``; ``b = 0`` returns 1.
    """
    b = complex(b)
    if b == 0:
        return 1 + 0j
    return cmath.exp(_log_moment(params, theta, b))


_GP_ENVELOPE = 1e-12
_GP_ABS_TARGET = 1e-9
_GP_FAIL = 1e-4
_GP_PLAIN_PERIODS = 50
_GP_HEAD_PERIODS = 20


def _gil_pelaez(params: NetworkParams, theta: float, x: float) -> tuple[float, float]:
    """Unclamped ccdf of P_s(theta) at x and the absolute error estimate."""
    d = params.delta
    K = _scale(params, theta)
    omega = -math.log(x)
    # derivative of the log-moment at b = 0 is E[log P_s] = -K Gamma(d) Gamma(1-d)
    limit0 = omega - K * math.pi / math.sin(math.pi * d)

    def integrand(u: float) -> float:
        if u < 1e-12:
            return limit0
        m = sir_moment(params, theta, 1j * u)
        return (m.real * math.sin(u * omega) + m.imag * math.cos(u * omega)) / u

    def re_over_u(u):
        return sir_moment(params, theta, 1j * u).real / u

    def im_over_u(u):
        return sir_moment(params, theta, 1j * u).imag / u

    decay = K * math.gamma(1 - d) * math.cos(math.pi * d / 2)
    upper = (math.log(1 / _GP_ENVELOPE) / decay) ** (1 / d)
    period = 2 * math.pi / omega

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if upper <= _GP_PLAIN_PERIODS * period:
            val, err = integrate.quad(
                integrand, 0.0, upper, epsabs=_GP_ABS_TARGET, epsrel=1e-10, limit=2000
            )
        else:
            head = _GP_HEAD_PERIODS * period
            val, err = integrate.quad(
                integrand, 0.0, head, epsabs=_GP_ABS_TARGET, epsrel=1e-10, limit=2000
            )
            tail_s, err_s = integrate.quad(
                re_over_u, head, np.inf, weight="sin", wvar=omega,
                epsabs=_GP_ABS_TARGET, limlst=200, limit=2000,
            )
            tail_c, err_c = integrate.quad(
                im_over_u, head, np.inf, weight="cos", wvar=omega,
                epsabs=_GP_ABS_TARGET, limlst=200, limit=2000,
            )
            val += tail_s + tail_c
            err += err_s + err_c
    return 0.5 + val / math.pi, err / math.pi


def md_gil_pelaez(params: NetworkParams, theta: float, x: float) -> float:
    """P(P_s(theta) > x) by Gil-Pelaez inversion of the imaginary moments.

    Raises
    ------
    QuadratureFailure
        When the quadrature error estimate exceeds 1e-4.
    """
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    if not theta > 0:
        raise ValueError("theta must be positive")
    value, err = _gil_pelaez(params, theta, x)
    if not err <= _GP_FAIL or not math.isfinite(value):
        raise QuadratureFailure(f"Gil-Pelaez error estimate {err:.3g} at x={x}, theta={theta}")
    return min(1.0, max(0.0, value))


def md_gil_pelaez_curve(params: NetworkParams, theta: float, x_grid) -> DistributionCurve:
    xs = np.asarray(x_grid, dtype=float)
    raw = np.empty_like(xs)
    for i, x in enumerate(xs):
        if not 0 < x < 1:
            raise ValueError("x must lie in (0, 1)")
        raw[i], err = _gil_pelaez(params, theta, float(x))
        if not err <= _GP_FAIL:
            raise QuadratureFailure(f"Gil-Pelaez error estimate {err:.3g} at x={x}")
    return DistributionCurve(
        xs, np.clip(raw, 0.0, 1.0), "md", pre_clamp=raw, meta={"theta": theta}
    )


BINOMIAL_DEFAULT_N = 20
BINOMIAL_MAX_N = 30


def binomial_mixture_weights(params: NetworkParams, theta: float, n: int) -> np.ndarray:
    """Weights ``E[C(n,k) P_s^k (1-P_s)^(n-k)]`` for k = 0..n from integer moments.

    Raises
    ------
    CancellationError
        If a weight drops below -1e-6 or the weights fail to sum to one.
    """
    if not 1 <= n <= BINOMIAL_MAX_N:
        raise ValueError(f"n must lie in [1, {BINOMIAL_MAX_N}]")
    moments = [1.0] + [sir_moment(params, theta, k).real for k in range(1, n + 1)]
    beta = np.empty(n + 1)
    for k in range(n + 1):
        terms = [(-1) ** j * math.comb(n - k, j) * moments[k + j] for j in range(n - k + 1)]
        beta[k] = math.comb(n, k) * math.fsum(terms)
    if beta.min() < -1e-6 or abs(math.fsum(beta) - 1.0) > 1e-6:
        raise CancellationError(
            f"binomial mixture weights unstable (min {beta.min():.3g}, sum {math.fsum(beta):.12g})"
        )
    return beta


def _mixture_tail(beta: np.ndarray, x: float) -> float:
    n = beta.size - 1
    nx = n * x
    k_tie = round(nx)
    tie = abs(nx - k_tie) < 1e-9
    total = math.fsum(beta[k] for k in range(n + 1) if k > nx and not (tie and k == k_tie))
    if tie:
        # x sits on a jump of the staircase: take the midpoint of the jump
        total += 0.5 * beta[k_tie]
    return total


def md_binomial_mixture(
    params: NetworkParams, theta: float, x: float, n: int = BINOMIAL_DEFAULT_N
) -> float:
    """P(P_s(theta) > x) approximated as P(B > n x) with B binomial(n, P_s).

    At the jump points ``x = k / n`` the midpoint of the jump is returned.
    """
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    return min(1.0, max(0.0, _mixture_tail(binomial_mixture_weights(params, theta, n), x)))


def md_binomial_mixture_curve(
    params: NetworkParams, theta: float, x_grid, n: int = BINOMIAL_DEFAULT_N
) -> DistributionCurve:
    xs = np.asarray(x_grid, dtype=float)
    beta = binomial_mixture_weights(params, theta, n)
    raw = np.array([_mixture_tail(beta, float(x)) for x in xs])
    return DistributionCurve(
        xs, np.clip(raw, 0.0, 1.0), "md", pre_clamp=raw, meta={"theta": theta, "n": n}
    )


def levy_interference_ccdf(density: float, x, alpha: float = 4.0):
    """P(I > x) for the fading-free interference of a planar PPP, alpha = 4.

    ``erf(pi^(3/2) lam / (2 sqrt(x)))``.
    """
    if alpha != 4:
        raise UnsupportedExponent(f"interference law needs alpha = 4, got {alpha}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    out = erf_real(math.pi**1.5 * density / (2 * np.sqrt(x)))
    return float(out) if np.ndim(out) == 0 else out


def threshold_ccdf_exact(params: NetworkParams, target: ReliabilityTarget, t_grid) -> DistributionCurve:
    """P(T(nu) > t) as P(P_s(t) > nu) through Gil-Pelaez, one inversion per t."""
    ts = np.asarray(t_grid, dtype=float)
    raw = np.empty_like(ts)
    for i, t in enumerate(ts):
        raw[i], err = _gil_pelaez(params, float(t), target.nu)
        if not err <= _GP_FAIL:
            raise QuadratureFailure(f"Gil-Pelaez error estimate {err:.3g} at t={t}")
    return DistributionCurve(
        ts, np.clip(raw, 0.0, 1.0), "threshold", pre_clamp=raw, meta={"nu": target.nu}
    )


def _erfc_threshold(params: NetworkParams, t, scale: float):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    lam, R = params.density, params.link_distance
    out = erfc_real(np.sqrt(t / scale) * math.pi**1.5 * lam * R**2 / 2)
    return float(out) if np.ndim(out) == 0 else out


def threshold_ccdf_ultrareliable(params: NetworkParams, target: ReliabilityTarget, t):
    """Small-outage asymptote of P(T > t): erfc(sqrt(t/eps) pi^(3/2) lam R^2 / 2)."""
    _require_alpha4(params, "the ultrareliable threshold law")
    if target.epsilon > 0.1:
        warnings.warn(
            f"epsilon={target.epsilon:g} is outside the small-outage regime",
            AsymptoticRegimeWarning,
            stacklevel=2,
        )
    return _erfc_threshold(params, t, target.epsilon)


def threshold_ccdf_partial_info(params: NetworkParams, target: ReliabilityTarget, t):
    """Approximate P(T > t) with eps replaced by log(1/(1-eps))."""
    _require_alpha4(params, "the partial-information threshold law")
    return _erfc_threshold(params, t, target.outage_log)


def log_rate_constant(params: NetworkParams, target: ReliabilityTarget) -> float:
    """C = pi^3 lam^2 R^4 / (4 log(1/(1-eps)))."""
    lam, R = params.density, params.link_distance
    return math.pi**3 * lam**2 * R**4 / (4 * target.outage_log)


def _log_rate_quadrature(C: float) -> float:
    # (1/sqrt(pi)) int u^-1/2 e^-u log(1+u/C) du with u = v^2
    val, err = integrate.quad(
        lambda v: math.exp(-v * v) * math.log1p(v * v / C), 0.0, np.inf,
        epsabs=1e-13, epsrel=1e-12, limit=500,
    )
    if err > 1e-10:
        raise QuadratureFailure(f"log-rate quadrature error {err:.3g}")
    return 2 * val / math.sqrt(math.pi)


def expected_log_rate_closed_form(C: float) -> float:
    """-2C 2F2([1,1],[3/2,2],C) + pi erfi(sqrt C) - (gamma + 2 log 2 + log C).

    Two terms grow like exp(C) and cancel; beyond C = 20 the result is
    meaningless in double precision (an AccuracyLossWarning is raised).
    """
    return (
        -2 * C * hyp2f2_11_3half2(C)
        + math.pi * float(erfi_real(math.sqrt(C)))
        - (EULER_GAMMA + 2 * math.log(2) + math.log(C))
    )


def expected_log_rate(
    params: NetworkParams, target: ReliabilityTarget, method: str = "quadrature"
) -> float:
    """E[log(1 + T)] under the partial-information threshold law (alpha = 4).

    ``method="quadrature"`` integrates directly; ``"closed_form"`` uses the
    hypergeometric expression when ``C <= 20`` and otherwise falls back to
    quadrature with a :class:`CancellationFallbackWarning`.
    """
    _require_alpha4(params, "the expected log-rate")
    C = log_rate_constant(params, target)
    if method == "quadrature":
        return _log_rate_quadrature(C)
    if method == "closed_form":
        if C <= HYP2F2_RELIABLE_MAX:
            return expected_log_rate_closed_form(C)
        warnings.warn(
            f"closed form cancels catastrophically at C={C:.4g}; using quadrature",
            CancellationFallbackWarning,
            stacklevel=2,
        )
        return _log_rate_quadrature(C)
    raise ValueError(f"unknown method {method!r}")


def throughput_rate_control(
    params: NetworkParams, target: ReliabilityTarget, mean_log_rate: float | None = None
) -> ThroughputDensities:
    """Densities when every link runs at its own threshold T.

    ``S_rel = lam E[log(1+T)]`` and ``S = (1 - eps) S_rel``.  Without an
    explicit ``mean_log_rate`` the alpha = 4 quadrature is used.
    """
    if mean_log_rate is None:
        mean_log_rate = expected_log_rate(params, target)
    s_rel = params.density * mean_log_rate
    return ThroughputDensities(S=s_rel * target.nu, S_rel=s_rel)


def throughput_deterministic(
    params: NetworkParams, theta: float, target: ReliabilityTarget
) -> ThroughputDensities:
    """Densities when every link uses the same threshold theta.

    ``S = lam log(1+theta) p_s(theta)``; ``S_rel`` replaces ``p_s`` with the
    fraction of links whose reliability is at least ``1 - eps``.
    """
    if theta < 0:
        raise ValueError("theta must be non-negative")
    if theta == 0:
        return ThroughputDensities(0.0, 0.0)
    rate = params.density * math.log1p(theta)
    return ThroughputDensities(
        S=rate * standard_success_probability(params, theta),
        S_rel=rate * md_gil_pelaez(params, theta, target.nu),
    )
