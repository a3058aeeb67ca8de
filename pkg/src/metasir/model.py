"""Domain types and per-realization computations for the typical link.

The typical receiver sits at the origin and its transmitter at distance
``R``.  With Rayleigh fading averaged out, everything about the link in a
fixed realization is a function of the interferer distances only.

Scalar quantities (SIR thresholds, interference power, probabilities) are
plain floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRealization, InsufficientInterferers, ZeroInterference

__all__ = [
    "NetworkParams",
    "ReliabilityTarget",
    "Realization",
    "LinkRecord",
    "conditional_success",
    "threshold_for_reliability",
    "interference_no_fading",
    "threshold_lower_bound_k",
    "threshold_partial_info",
    "link_rate",
]


@dataclass(frozen=True)
class NetworkParams:
    """Poisson bipolar network: transmitter density, path-loss exponent, link distance."""

    density: float
    path_loss_exponent: float
    link_distance: float

    def __post_init__(self):
        if not (math.isfinite(self.density) and self.density > 0):
            raise ValueError(f"density must be positive, got {self.density}")
        if not (math.isfinite(self.path_loss_exponent) and self.path_loss_exponent > 2):
            raise ValueError(
                f"path_loss_exponent must exceed 2, got {self.path_loss_exponent}"
            )
        if not (math.isfinite(self.link_distance) and self.link_distance > 0):
            raise ValueError(f"link_distance must be positive, got {self.link_distance}")

    @property
    def delta(self) -> float:
        return 2.0 / self.path_loss_exponent

    def with_density(self, density: float) -> "NetworkParams":
        return NetworkParams(density, self.path_loss_exponent, self.link_distance)


@dataclass(frozen=True)
class ReliabilityTarget:
    """Target reliability ``nu`` and outage ``epsilon = 1 - nu``.

    Both are stored so that tiny outages (``epsilon = 1e-9``) keep full
    relative precision; use :meth:`from_nu` or :meth:`from_epsilon`.
    """

    nu: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if abs((self.nu + self.epsilon) - 1.0) > 4e-16:
            raise ValueError("nu and epsilon must sum to one")

    @classmethod
    def from_nu(cls, nu: float) -> "ReliabilityTarget":
        return cls(nu=nu, epsilon=1.0 - nu)

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "ReliabilityTarget":
        return cls(nu=1.0 - epsilon, epsilon=epsilon)

    @property
    def outage_log(self) -> float:
        """log(1 / (1 - epsilon)), computed without cancellation."""
        return -math.log1p(-self.epsilon)


def _readonly(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Realization:
    """One interferer configuration seen from the typical receiver at the origin.

    ``distances`` / ``angles`` describe the explicitly sampled interferers,
    sorted by distance.  Optionally the outer annulus of the window is kept
    in aggregated form: ``far_counts[j]`` interferers all placed at the
    representative distance ``far_distances[j]`` (chosen so that the ring's
    mean path gain is exact).  Aggregated rings lie beyond every explicit point.
    """

    distances: np.ndarray
    angles: np.ndarray
    window_radius: float
    far_distances: np.ndarray = field(default_factory=lambda: np.empty(0))
    far_counts: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        d = _readonly(self.distances, float)
        a = _readonly(self.angles, float)
        fd = _readonly(self.far_distances, float)
        fc = _readonly(self.far_counts, np.int64)
        if d.ndim != 1 or a.shape != d.shape:
            raise ValueError("distances and angles must be 1-D arrays of equal length")
        if fd.shape != fc.shape:
            raise ValueError("far_distances and far_counts must have equal length")
        if d.size:
            if d[0] <= 0:
                raise ValueError("interferer distances must be positive")
            if np.any(np.diff(d) < 0):
                raise ValueError("distances must be sorted ascending")
            if d[-1] > self.window_radius * (1 + 1e-12):
                raise ValueError("interferer outside the window")
        if fd.size and (np.any(fd <= (d[-1] if d.size else 0.0)) or np.any(fc < 0)):
            raise ValueError("aggregated rings must lie beyond explicit points")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "far_distances", fd)
        object.__setattr__(self, "far_counts", fc)

    @classmethod
    def from_points(cls, points, window_radius: float | None = None) -> "Realization":
        """Build from explicit 2-D interferer coordinates (receiver at origin)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        r = np.hypot(pts[:, 0], pts[:, 1])
        order = np.argsort(r, kind="stable")
        r = r[order]
        phi = np.arctan2(pts[order, 1], pts[order, 0])
        if window_radius is None:
            window_radius = float(r[-1]) if r.size else 1.0
        return cls(r, phi, float(window_radius))

    @classmethod
    def from_distances(cls, distances, window_radius: float | None = None) -> "Realization":
        r = np.sort(np.asarray(distances, dtype=float))
        if window_radius is None:
            window_radius = float(r[-1]) if r.size else 1.0
        return cls(r, np.zeros_like(r), float(window_radius))

    @property
    def sorted_distances(self) -> np.ndarray:
        return self.distances

    @property
    def interferer_points(self) -> np.ndarray:
        """Explicit interferer coordinates, shape ``(n, 2)``."""
        return np.column_stack(
            (self.distances * np.cos(self.angles), self.distances * np.sin(self.angles))
        )

    @property
    def n_explicit(self) -> int:
        return int(self.distances.size)

    @property
    def point_count(self) -> int:
        return self.n_explicit + int(self.far_counts.sum())

    def scaled(self, c: float) -> "Realization":
        """Every distance multiplied by ``c``."""
        return Realization(
            self.distances * c,
            self.angles,
            self.window_radius * c,
            self.far_distances * c,
            self.far_counts,
        )


@dataclass(frozen=True)
class LinkRecord:
    tx: tuple[float, float]
    rx: tuple[float, float]
    reliability: float
    threshold: float


def _gains(realization: Realization, params: NetworkParams):
    """Normalized path gains (R / r)^alpha, explicit (descending) and aggregated."""
    alpha = params.path_loss_exponent
    R = params.link_distance
    explicit = (R / realization.distances) ** alpha
    far = (R / realization.far_distances) ** alpha
    return explicit, far, realization.far_counts.astype(float)


def conditional_success(realization: Realization, params: NetworkParams, t):
    """Success probability of the typical link given the realization.

    ``prod_n 1 / (1 + t (R / r_n)^alpha)``, evaluated as ``exp(-sum log1p(...))``.
    ``t`` may be a scalar or an array of thresholds.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("SIR threshold must be non-negative")
    a, af, cf = _gains(realization, params)
    flat = t_arr.reshape(-1, 1)
    log_sum = np.log1p(flat * a).sum(axis=1)
    if af.size:
        log_sum = log_sum + np.log1p(flat * af) @ cf
    out = np.exp(-log_sum).reshape(t_arr.shape)
    return float(out) if out.ndim == 0 else out


# Beyond this value of t * gain, log1p is replaced by its 5-term series.
_SERIES_SPLIT = 1e-3
_SERIES_ORDER = 5
_BISECTION_RTOL = 1e-12


def threshold_for_reliability(
    realization: Realization, params: NetworkParams, target: ReliabilityTarget
) -> float:
    """SIR threshold at which the typical link is exactly ``target.nu`` reliable.

    Solves ``sum_n log1p(t a_n) = log(1/(1-eps))`` by bisection.  The bracket
    is analytic: ``log1p(x) <= x`` gives the lower end ``L / sum(a)`` and the
    nearest interferer alone gives the upper end ``expm1(L) / max(a)``.  On
    that bracket every far term has ``t a_n <= 1e-3`` and is evaluated through
    precomputed power sums, so each bisection step only touches near terms.
    """
    if realization.point_count == 0:
        raise EmptyRealization("no interferers: threshold is unbounded")
    a, af, cf = _gains(realization, params)
    L = target.outage_log
    gains = np.concatenate((a, af))
    weights = np.concatenate((np.ones_like(a), cf))
    keep = weights > 0
    gains, weights = gains[keep], weights[keep]

    lo = L / float(gains @ weights)
    hi = math.expm1(L) / float(gains.max())
    if hi <= lo:
        return hi

    near = gains * hi > _SERIES_SPLIT
    g_near, w_near = gains[near], weights[near]
    g_far, w_far = gains[~near], weights[~near]
    # coefficients of sum_far w log1p(t a) = sum_p c_p t^p, highest order first
    coef = []
    power = np.ones_like(g_far)
    for p in range(1, _SERIES_ORDER + 1):
        power = power * g_far
        coef.append((-1) ** (p + 1) * float(power @ w_far) / p)
    coef.reverse()

    if g_near.size <= 64:
        near_terms = list(zip(g_near.tolist(), w_near.tolist()))

        def near_sum(t: float) -> float:
            return math.fsum(w * math.log1p(t * g) for g, w in near_terms)

    else:

        def near_sum(t: float) -> float:
            return float(np.log1p(t * g_near) @ w_near)

    def excess(t: float) -> float:
        series = 0.0
        for c in coef:
            series = series * t + c
        return near_sum(t) + series * t - L

    while hi - lo > _BISECTION_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def interference_no_fading(realization: Realization, params: NetworkParams) -> float:
    """Sum of r^-alpha over interferers, accumulated from the farthest inward."""
    alpha = params.path_loss_exponent
    far = realization.far_counts[::-1] * realization.far_distances[::-1] ** -alpha
    near = realization.distances[::-1] ** -alpha
    return float(np.sum(np.concatenate((far, near))))


def threshold_lower_bound_k(
    realization: Realization, params: NetworkParams, target: ReliabilityTarget, k: int
) -> float:
    """k-nearest AM-GM threshold estimate ``k R^-a ((1/(1-eps))^(1/k) - 1) / sum_{n<=k} R_n^-a``.

    This is the exact threshold that would hold if only the ``k`` nearest
    interferers existed and all had the same path gain (their mean).  It is
    not a lower bound on the full-information threshold: for ``k = 1`` it
    equals the nearest-interferer-only threshold and so is never below it.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if realization.n_explicit < k:
        raise InsufficientInterferers(
            f"need {k} interferers, realization has {realization.n_explicit}"
        )
    alpha = params.path_loss_exponent
    R = params.link_distance
    near_sum = float(np.sum(realization.distances[:k][::-1] ** -alpha))
    return k * R**-alpha * math.expm1(target.outage_log / k) / near_sum


def threshold_partial_info(
    interference: float, params: NetworkParams, target: ReliabilityTarget
) -> float:
    """Threshold approximation ``log(1/(1-eps)) R^-alpha / I``."""
    if interference <= 0:
        raise ZeroInterference("interference must be positive")
    return target.outage_log * params.link_distance**-params.path_loss_exponent / interference


def link_rate(t: float) -> float:
    """Spectral efficiency log(1 + t) in nats per channel use."""
    if t < 0:
        raise ValueError("SIR threshold must be non-negative")
    return math.log1p(t)
