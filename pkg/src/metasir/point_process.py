"""Sampling Poisson bipolar realizations around the typical link."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InsufficientInterferers
from .model import NetworkParams, Realization
from .rng import stream

__all__ = [
    "SamplingConfig",
    "required_window_radius",
    "sample_realization",
    "sample_bipolar_links",
    "nearest_k_distances",
    "DEFAULT_TRUNCATION_TOL",
    "ULTRARELIABLE_TRUNCATION_TOL",
]

DEFAULT_TRUNCATION_TOL = 1e-4
ULTRARELIABLE_TRUNCATION_TOL = 1e-6
# Geometric ring ratio used for the aggregated annulus.
RING_RATIO = 1.005


def required_window_radius(params: NetworkParams, truncation_tol: float) -> float:
    """Disk radius whose outside carries mean interference ``tol * R^-alpha``.

    By Campbell's formula the mean interference from beyond radius ``Rw`` is
    ``2 pi lam Rw^(2-alpha) / (alpha-2)``.
    """
    if truncation_tol <= 0:
        raise ValueError("truncation_tol must be positive")
    a = params.path_loss_exponent
    lam, R = params.density, params.link_distance
    return (2 * math.pi * lam * R**a / ((a - 2) * truncation_tol)) ** (1 / (a - 2))


@dataclass(frozen=True)
class SamplingConfig:
    """Window and seed for sampling realizations.

    Points inside ``aggregate_radius`` are sampled individually; the annulus
    out to ``window_radius`` is represented by Poisson counts on thin
    geometric rings.  ``aggregate_radius=None`` keeps every point explicit.
    """

    window_radius: float
    truncation_tol: float = DEFAULT_TRUNCATION_TOL
    seed: int = 0
    aggregate_radius: float | None = None

    def __post_init__(self):
        if not self.window_radius > 0:
            raise ValueError("window_radius must be positive")
        if not self.truncation_tol > 0:
            raise ValueError("truncation_tol must be positive")
        if self.aggregate_radius is not None and not self.aggregate_radius > 0:
            raise ValueError("aggregate_radius must be positive")

    @classmethod
    def for_network(
        cls,
        params: NetworkParams,
        truncation_tol: float = DEFAULT_TRUNCATION_TOL,
        seed: int = 0,
    ) -> "SamplingConfig":
        """Window sized from ``truncation_tol``.

        Tolerances tighter than the default keep the default-tolerance disk
        explicit and aggregate the remaining annulus.
        """
        radius = required_window_radius(params, truncation_tol)
        explicit = required_window_radius(params, DEFAULT_TRUNCATION_TOL)
        aggregate = explicit if explicit < radius else None
        return cls(radius, truncation_tol, seed, aggregate)

    def with_seed(self, seed: int) -> "SamplingConfig":
        return replace(self, seed=seed)


def _arrival_radii(rng: np.random.Generator, mean_count: float, radius: float) -> np.ndarray:
    # Arrivals of a unit-rate Poisson process on [0, mean_count] are the
    # values lam*pi*r^2 of the PPP points, already sorted.
    chunk = int(mean_count + 8.0 * math.sqrt(mean_count) + 16)
    arrivals = np.cumsum(rng.standard_exponential(chunk))
    while arrivals[-1] <= mean_count:
        more = np.cumsum(rng.standard_exponential(chunk)) + arrivals[-1]
        arrivals = np.concatenate((arrivals, more))
    arrivals = arrivals[: np.searchsorted(arrivals, mean_count, side="right")]
    return radius * np.sqrt(arrivals / mean_count)


def _far_rings(rng, params: NetworkParams, inner: float, outer: float):
    n_rings = max(1, math.ceil(math.log(outer / inner) / math.log(RING_RATIO)))
    edges = inner * RING_RATIO ** np.arange(n_rings + 1)
    edges[-1] = outer
    lam, alpha = params.density, params.path_loss_exponent
    counts = rng.poisson(lam * math.pi * np.diff(edges**2))
    r0, r1 = edges[:-1], edges[1:]
    # mean of r^-alpha for a point uniform (in area) on the ring
    mean_gain = 2 * (r0 ** (2 - alpha) - r1 ** (2 - alpha)) / ((alpha - 2) * (r1**2 - r0**2))
    rep = mean_gain ** (-1 / alpha)
    keep = counts > 0
    return rep[keep], counts[keep]


def sample_realization(
    params: NetworkParams, config: SamplingConfig, index: int = 0, attempt: int = 0
) -> Realization:
    """Interferers of the typical link: a PPP of density ``lam`` in the window disk.

    The disk is centred on the typical receiver; the typical transmitter at
    ``(R, 0)`` is not part of the returned set.  The result is a pure
    function of ``(params, config, index, attempt)``.
    """
    rng = stream(config.seed, index, attempt)
    lam = params.density
    outer = config.window_radius
    inner = outer if config.aggregate_radius is None else min(config.aggregate_radius, outer)
    radii = _arrival_radii(rng, lam * math.pi * inner**2, inner)
    angles = rng.uniform(0.0, 2 * math.pi, radii.size)
    if inner < outer:
        far_d, far_c = _far_rings(rng, params, inner, outer)
    else:
        far_d, far_c = np.empty(0), np.empty(0, dtype=np.int64)
    return Realization(radii, angles, outer, far_d, far_c)


def sample_bipolar_links(
    params: NetworkParams,
    config: SamplingConfig,
    index: int = 0,
    rectangle: tuple[float, float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """All links of a bipolar network in the window.

    Transmitters form a PPP on the disk of radius ``config.window_radius``
    (or on the centred ``width x height`` rectangle); each receiver sits at
    distance ``R`` in an independent uniform direction.  Returns ``(tx, rx)``
    arrays of shape ``(n, 2)``.
    """
    rng = stream(config.seed, index)
    lam, R = params.density, params.link_distance
    if rectangle is None:
        Rw = config.window_radius
        n = rng.poisson(lam * math.pi * Rw**2)
        r = Rw * np.sqrt(rng.random(n))
        phi = rng.uniform(0.0, 2 * math.pi, n)
        tx = np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    else:
        width, height = rectangle
        n = rng.poisson(lam * width * height)
        tx = (rng.random((n, 2)) - 0.5) * np.array([width, height])
    direction = rng.uniform(0.0, 2 * math.pi, n)
    rx = tx + R * np.column_stack((np.cos(direction), np.sin(direction)))
    return tx, rx


def nearest_k_distances(realization: Realization, k: int) -> np.ndarray:
    """Distances of the ``k`` nearest interferers, ascending."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if realization.n_explicit < k:
        raise InsufficientInterferers(
            f"need {k} interferers, realization has {realization.n_explicit}"
        )
    return realization.distances[:k].copy()
