"""Seeded Monte Carlo experiments on the typical link.

Each realization index owns a counter-based random stream, so per-index
results do not depend on how indices are spread over worker processes.
Results are gathered in index order and reduced in the parent process;
every estimator is therefore bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .analytics import DistributionCurve
from .errors import EmptyRealization
from .model import (
    LinkRecord,
    NetworkParams,
    Realization,
    ReliabilityTarget,
    conditional_success,
    interference_no_fading,
    threshold_for_reliability,
    threshold_lower_bound_k,
    threshold_partial_info,
)
from .point_process import (
    DEFAULT_TRUNCATION_TOL,
    SamplingConfig,
    sample_bipolar_links,
    sample_realization,
)

__all__ = [
    "McConfig",
    "McEstimate",
    "ResultTable",
    "DualityReport",
    "ThresholdSamples",
    "ThroughputEstimate",
    "success_samples",
    "estimate_success_probability",
    "estimate_md",
    "threshold_samples",
    "estimate_threshold_ccdf",
    "verify_duality",
    "verify_duality_grid",
    "estimate_throughput",
    "interference_samples",
    "estimate_interference_ccdf",
    "realization_report",
    "figure2_data",
    "figure3_data",
    "resolve_workers",
]

DUALITY_GUARD = 1e-9
WORKERS_ENV = "METASIR_WORKERS"


@dataclass(frozen=True)
class McConfig:
    n_realizations: int
    master_seed: int = 0
    truncation_tol: float = DEFAULT_TRUNCATION_TOL
    worker_hint: int | None = None

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be at least 1")
        if self.worker_hint is not None and self.worker_hint < 1:
            raise ValueError("worker_hint must be a positive integer")

    def sampling(self, params: NetworkParams) -> SamplingConfig:
        return SamplingConfig.for_network(params, self.truncation_tol, self.master_seed)


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int
    resample_count: int = 0

    @classmethod
    def from_samples(cls, samples: np.ndarray, resample_count: int = 0) -> "McEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(samples.mean()), se, n, resample_count)


@dataclass
class ResultTable:
    """Rectangular result: column names and rows of floats."""

    columns: list[str]
    rows: list[list[float]]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)


def resolve_workers(hint: int | None) -> int:
    if hint is not None:
        return int(hint)
    env = os.environ.get(WORKERS_ENV)
    if env:
        value = int(env)
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer")
        return value
    return 1


def _typical(params, sampling, index: int, need: int) -> tuple[Realization, int]:
    """Realization with at least ``need`` explicit interferers, resampling on the next attempt counter."""
    attempt = 0
    while True:
        r = sample_realization(params, sampling, index, attempt)
        if r.n_explicit >= need:
            return r, attempt
        attempt += 1


@dataclass(frozen=True)
class _Kernel:
    params: NetworkParams
    sampling: SamplingConfig
    need: int = 0

    def __call__(self, index: int) -> tuple[np.ndarray, int]:
        r, resamples = _typical(self.params, self.sampling, index, self.need)
        return self.statistics(r), resamples

    def statistics(self, r: Realization) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class _SuccessKernel(_Kernel):
    thetas: tuple[float, ...] = ()

    def statistics(self, r):
        return np.atleast_1d(conditional_success(r, self.params, np.array(self.thetas)))


@dataclass(frozen=True)
class _ThresholdKernel(_Kernel):
    target: ReliabilityTarget | None = None
    ks: tuple[int, ...] = ()

    def statistics(self, r):
        p, tg = self.params, self.target
        out = [
            threshold_for_reliability(r, p, tg),
            threshold_partial_info(interference_no_fading(r, p), p, tg),
        ]
        out.extend(threshold_lower_bound_k(r, p, tg, k) for k in self.ks)
        return np.array(out)


@dataclass(frozen=True)
class _DualityKernel(_Kernel):
    thetas: tuple[float, ...] = ()
    targets: tuple[ReliabilityTarget, ...] = ()

    def statistics(self, r):
        ps = np.atleast_1d(conditional_success(r, self.params, np.array(self.thetas)))
        ts = [threshold_for_reliability(r, self.params, tg) for tg in self.targets]
        return np.concatenate((ps, ts))


@dataclass(frozen=True)
class _ThroughputKernel(_Kernel):
    target: ReliabilityTarget | None = None
    thetas: tuple[float, ...] = ()

    def statistics(self, r):
        t = threshold_for_reliability(r, self.params, self.target)
        ps_t = conditional_success(r, self.params, t)
        ps = np.atleast_1d(conditional_success(r, self.params, np.array(self.thetas)))
        return np.concatenate(([t, ps_t], ps))


@dataclass(frozen=True)
class _InterferenceKernel(_Kernel):
    def statistics(self, r):
        return np.array([interference_no_fading(r, self.params)])


def _run_block(kernel: _Kernel, start: int, stop: int) -> tuple[np.ndarray, int]:
    rows, resamples = [], 0
    for i in range(start, stop):
        row, extra = kernel(i)
        rows.append(row)
        resamples += extra
    return np.vstack(rows), resamples


def _run(kernel: _Kernel, cfg: McConfig) -> tuple[np.ndarray, int]:
    n = cfg.n_realizations
    workers = resolve_workers(cfg.worker_hint)
    if workers == 1 or n < 2 * workers:
        return _run_block(kernel, 0, n)
    n_blocks = workers * 4
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    spans = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(
            pool.map(_run_block, [kernel] * len(spans), [a for a, _ in spans], [b for _, b in spans])
        )
    return np.vstack([p for p, _ in parts]), sum(r for _, r in parts)


def _ccdf_curve(samples: np.ndarray, grid, quantity: str, resamples: int, **meta) -> DistributionCurve:
    grid = np.asarray(grid, dtype=float)
    indicators = samples[:, None] > grid[None, :]
    n = samples.size
    values = indicators.mean(axis=0)
    se = indicators.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(values)
    return DistributionCurve(grid, values, quantity, std_errors=se, n=n, resample_count=resamples, meta=meta)


def success_samples(params: NetworkParams, thetas, cfg: McConfig) -> np.ndarray:
    """P_s(theta) of the typical link, shape ``(n_realizations, len(thetas))``."""
    thetas = tuple(float(t) for t in np.atleast_1d(thetas))
    kernel = _SuccessKernel(params, cfg.sampling(params), 0, thetas)
    values, _ = _run(kernel, cfg)
    return values


def estimate_success_probability(params: NetworkParams, theta: float, cfg: McConfig) -> McEstimate:
    """Monte Carlo mean of P_s(theta), i.e. the standard success probability."""
    return McEstimate.from_samples(success_samples(params, [theta], cfg)[:, 0])


def estimate_md(params: NetworkParams, theta: float, x_grid, cfg: McConfig) -> DistributionCurve:
    """Fraction of realizations with P_s(theta) > x, for each x in the grid."""
    ps = success_samples(params, [theta], cfg)[:, 0]
    return _ccdf_curve(ps, x_grid, "md", 0, theta=theta)


@dataclass
class ThresholdSamples:
    """Paired per-realization thresholds from one set of realizations."""

    exact: np.ndarray
    partial: np.ndarray
    k_nearest: dict[int, np.ndarray]
    resample_count: int


def threshold_samples(
    params: NetworkParams, target: ReliabilityTarget, cfg: McConfig, ks=()
) -> ThresholdSamples:
    """Exact, partial-information and k-nearest thresholds on shared realizations.

    Realizations with fewer explicit interferers than ``max(ks, 1)`` are
    resampled on the next attempt counter of the same index.
    """
    ks = tuple(int(k) for k in ks)
    need = max((1,) + ks)
    kernel = _ThresholdKernel(params, cfg.sampling(params), need, target, ks)
    values, resamples = _run(kernel, cfg)
    return ThresholdSamples(
        exact=values[:, 0],
        partial=values[:, 1],
        k_nearest={k: values[:, 2 + i] for i, k in enumerate(ks)},
        resample_count=resamples,
    )


def estimate_threshold_ccdf(
    params: NetworkParams,
    target: ReliabilityTarget,
    t_grid,
    cfg: McConfig,
    info: str = "full",
    k: int | None = None,
) -> DistributionCurve:
    """Empirical P(T > t) for the chosen threshold estimator.

    ``info`` is ``"full"`` (root of the exact equation), ``"k_nearest"``
    (AM-GM estimate from the ``k`` nearest interferers) or
    ``"partial_info_limit"`` (``log(1/(1-eps)) R^-alpha / I``).
    """
    if info == "k_nearest":
        if k is None:
            raise ValueError("k_nearest needs k")
        ts = threshold_samples(params, target, cfg, ks=(k,))
        samples = ts.k_nearest[k]
    elif info in ("full", "partial_info_limit"):
        ts = threshold_samples(params, target, cfg)
        samples = ts.exact if info == "full" else ts.partial
    else:
        raise ValueError(f"unknown info mode {info!r}")
    return _ccdf_curve(samples, t_grid, "threshold", ts.resample_count, nu=target.nu, info=info, k=k)


@dataclass(frozen=True)
class DualityReport:
    n: int
    violations: int
    guard_excluded: int
    theta: float
    nu: float
    resample_count: int = 0


def verify_duality(
    params: NetworkParams, theta: float, target: ReliabilityTarget, cfg: McConfig
) -> DualityReport:
    """Count realizations where 1{P_s(theta) > nu} and 1{T(nu) > theta} disagree.

    Realizations with ``|P_s(theta) - nu| < 1e-9`` are excluded as being
    inside the root solver's resolution.
    """
    return verify_duality_grid(params, [theta], [target], cfg)[0]


def verify_duality_grid(params: NetworkParams, thetas, targets, cfg: McConfig) -> list[DualityReport]:
    """:func:`verify_duality` for every (theta, target) pair on shared realizations.

    Reports are ordered theta-major.
    """
    thetas = tuple(float(t) for t in thetas)
    targets = tuple(targets)
    kernel = _DualityKernel(params, cfg.sampling(params), 1, thetas, targets)
    values, resamples = _run(kernel, cfg)
    ps, ts = values[:, : len(thetas)], values[:, len(thetas):]
    reports = []
    for i, theta in enumerate(thetas):
        for j, target in enumerate(targets):
            guard = np.abs(ps[:, i] - target.nu) < DUALITY_GUARD
            disagree = (ps[:, i] > target.nu) != (ts[:, j] > theta)
            reports.append(
                DualityReport(
                    n=int(values.shape[0]),
                    violations=int(np.count_nonzero(disagree & ~guard)),
                    guard_excluded=int(np.count_nonzero(guard)),
                    theta=theta,
                    nu=target.nu,
                    resample_count=resamples,
                )
            )
    return reports


@dataclass
class ThroughputEstimate:
    """Monte Carlo throughput densities.

    Rate control: one pair for all theta.  Deterministic threshold: one
    pair per grid theta.
    """

    thetas: np.ndarray
    rate_control_S: McEstimate
    rate_control_S_rel: McEstimate
    deterministic_S: list[McEstimate]
    deterministic_S_rel: list[McEstimate]
    max_reliability_error: float


def estimate_throughput(
    params: NetworkParams, target: ReliabilityTarget, theta_grid, cfg: McConfig
) -> ThroughputEstimate:
    """Sample means of ``lam log(1+T) P_s(T)`` and ``lam log(1+T) 1(P_s(T) >= 1-eps)``.

    With rate control ``T`` is the per-realization threshold, so
    ``P_s(T) = 1 - eps`` up to the solver tolerance; that indicator counts
    realizations within 1e-9 of the target as reliable.  For the
    deterministic approach ``T`` is replaced by each grid theta.
    """
    thetas = tuple(float(t) for t in np.atleast_1d(theta_grid))
    kernel = _ThroughputKernel(params, cfg.sampling(params), 1, target, thetas)
    values, resamples = _run(kernel, cfg)
    lam = params.density
    t, ps_t, ps = values[:, 0], values[:, 1], values[:, 2:]
    max_err = float(np.max(np.abs(ps_t - target.nu)))
    if max_err > 1e-9:
        raise RuntimeError(f"rate-control reliability off target by {max_err:.3g}")
    rate = lam * np.log1p(t)
    reliable = ps_t >= target.nu - DUALITY_GUARD
    det_S, det_rel = [], []
    for j, th in enumerate(thetas):
        r = lam * math.log1p(th)
        det_S.append(McEstimate.from_samples(r * ps[:, j], resamples))
        det_rel.append(McEstimate.from_samples(r * (ps[:, j] >= target.nu), resamples))
    return ThroughputEstimate(
        thetas=np.array(thetas),
        rate_control_S=McEstimate.from_samples(rate * ps_t, resamples),
        rate_control_S_rel=McEstimate.from_samples(rate * reliable, resamples),
        deterministic_S=det_S,
        deterministic_S_rel=det_rel,
        max_reliability_error=max_err,
    )


def interference_samples(params: NetworkParams, cfg: McConfig) -> np.ndarray:
    """Fading-free interference at the typical receiver, one value per realization."""
    kernel = _InterferenceKernel(params, cfg.sampling(params), 0)
    values, _ = _run(kernel, cfg)
    return values[:, 0]


def estimate_interference_ccdf(params: NetworkParams, x_grid, cfg: McConfig) -> DistributionCurve:
    return _ccdf_curve(interference_samples(params, cfg), x_grid, "interference", 0)


def realization_report(
    params: NetworkParams,
    theta: float,
    target: ReliabilityTarget,
    window: tuple[float, float],
    cfg: McConfig,
) -> list[LinkRecord]:
    """Per-link reliability at ``theta`` and rate-control threshold at ``nu``.

    Every other transmitter in the rectangle acts as an interferer.  Links
    near the border see truncated interference and look more reliable.  A
    link with no interferer at all gets ``threshold = inf``.
    """
    width, height = window
    sampling = SamplingConfig(window_radius=math.hypot(width, height), seed=cfg.master_seed)
    tx, rx = sample_bipolar_links(params, sampling, rectangle=(width, height))
    records = []
    for i in range(tx.shape[0]):
        others = np.delete(tx, i, axis=0) - rx[i]
        r = Realization.from_points(others, window_radius=2 * math.hypot(width, height))
        reliability = conditional_success(r, params, theta)
        try:
            threshold = threshold_for_reliability(r, params, target)
        except EmptyRealization:
            threshold = math.inf
        records.append(
            LinkRecord(tuple(tx[i].tolist()), tuple(rx[i].tolist()), reliability, threshold)
        )
    return records


def figure2_data(
    params: NetworkParams,
    target: ReliabilityTarget,
    density_list,
    k_list,
    t_grid,
    cfg: McConfig,
) -> ResultTable:
    """Threshold ccdf curves per density.

    Columns: density, t, exact (Gil-Pelaez), approx (erfc law with
    log(1/(1-eps))), mc_full with its standard error, then ``k<k>`` and
    ``k<k>_se`` for each k-nearest estimate.  Monte Carlo columns come from
    shared realizations.
    """
    analytics._require_alpha4(params, "figure 2 data")
    t_grid = np.asarray(t_grid, dtype=float)
    k_list = tuple(int(k) for k in k_list)
    columns = ["density", "t", "exact", "approx", "mc_full", "mc_full_se"]
    for k in k_list:
        columns += [f"k{k}", f"k{k}_se"]
    rows = []
    for lam in density_list:
        p = params.with_density(float(lam))
        exact = analytics.threshold_ccdf_exact(p, target, t_grid).values
        approx = analytics.threshold_ccdf_partial_info(p, target, t_grid)
        ts = threshold_samples(p, target, cfg, ks=k_list)
        full = _ccdf_curve(ts.exact, t_grid, "threshold", ts.resample_count)
        kc = {k: _ccdf_curve(ts.k_nearest[k], t_grid, "threshold", ts.resample_count) for k in k_list}
        for i, t in enumerate(t_grid):
            row = [float(lam), float(t), exact[i], float(approx[i]), full.values[i], full.std_errors[i]]
            for k in k_list:
                row += [kc[k].values[i], kc[k].std_errors[i]]
            rows.append([float(v) for v in row])
    return ResultTable(columns, rows, meta={"nu": target.nu})


def figure3_data(
    params: NetworkParams,
    target: ReliabilityTarget,
    theta_grid,
    cfg: McConfig | None = None,
) -> ResultTable:
    """Throughput densities against theta, rate control vs. fixed threshold.

    Analytic columns: theta, S_rc, Srel_rc, S_det, Srel_det.  With a Monte
    Carlo config the same four quantities follow with ``_mc`` and ``_se``
    suffixes.
    """
    analytics._require_alpha4(params, "figure 3 data")
    thetas = np.asarray(theta_grid, dtype=float)
    rc = analytics.throughput_rate_control(params, target)
    columns = ["theta", "S_rc", "Srel_rc", "S_det", "Srel_det"]
    mc = None
    if cfg is not None:
        mc = estimate_throughput(params, target, thetas, cfg)
        columns += [
            "S_rc_mc", "S_rc_se", "Srel_rc_mc", "Srel_rc_se",
            "S_det_mc", "S_det_se", "Srel_det_mc", "Srel_det_se",
        ]
    rows = []
    for j, th in enumerate(thetas):
        det = analytics.throughput_deterministic(params, float(th), target)
        row = [float(th), rc.S, rc.S_rel, det.S, det.S_rel]
        if mc is not None:
            row += [
                mc.rate_control_S.value, mc.rate_control_S.std_error,
                mc.rate_control_S_rel.value, mc.rate_control_S_rel.std_error,
                mc.deterministic_S[j].value, mc.deterministic_S[j].std_error,
                mc.deterministic_S_rel[j].value, mc.deterministic_S_rel[j].std_error,
            ]
        rows.append([float(v) for v in row])
    return ResultTable(columns, rows, meta={"epsilon": target.epsilon})
