"""Seeded, worker-count-independent Monte Carlo engine and sweeps.

Trials are partitioned into fixed 2^16-trial chunks; each chunk draws
from its own counter-based stream keyed by (master seed, chunk index), so
results are bit-identical no matter how many workers execute the chunks.
Chunk results are merged in chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .analysis import (
    NakagamiFit,
    asep_hqam_closed,
    asep_qam_quadrature,
    conditioned_ee,
    fit_cascade,
    PowerModel,
)
from .channel import ChannelParams, LinkBudget, average_snr, path_loss, sample_cascade_gain
from .constellation import Constellation, build_hqam, build_qam
from .detector import DetectorIndex, build_detector, detect_many, mld_detect_many

CHUNK_TRIALS = 1 << 16

SeedLike = int | tuple[int, ...]


@dataclass(frozen=True)
class SerEstimate:
    """Symbol-error count with its binomial standard error."""

    errors: int
    trials: int

    def __post_init__(self) -> None:
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if not 0 <= self.errors <= self.trials:
            raise ValueError("errors must lie in [0, trials]")

    @property
    def ser(self) -> float:
        return self.errors / self.trials

    @property
    def stderr(self) -> float:
        p = self.ser
        return math.sqrt(p * (1.0 - p) / self.trials)


@dataclass(frozen=True)
class SweepSpec:
    """One parameter sweep: either over N (RIS link) or over SNR (AWGN)."""

    scheme: str
    M: int
    q: int
    trials: int
    seed: SeedLike
    workers: int = 1
    n_grid: tuple[int, ...] | None = None
    gamma_db_grid: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.scheme not in ("HQAM", "QAM"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.trials < 1000:
            raise ValueError("trials must be at least 1000")
        if (self.n_grid is None) == (self.gamma_db_grid is None):
            raise ValueError("exactly one of n_grid / gamma_db_grid is required")
        grid = self.n_grid if self.n_grid is not None else self.gamma_db_grid
        if len(grid) == 0:
            raise ValueError("sweep grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sweep grid must be strictly ascending")


@dataclass(frozen=True)
class CurvePoint:
    """One sweep sample: analytic value, simulated estimate, extras."""

    scheme: str
    M: int
    q: int
    est: SerEstimate
    low_confidence: bool
    N: int | None = None
    gamma_bar: float | None = None
    gamma_db: float | None = None
    m_t: float | None = None
    omega_t: float | None = None
    asep_analytic: float | None = None
    ee_analytic: float | None = None
    ee_sim: float | None = None
    est_mld: SerEstimate | None = None
    max_candidates: int | None = None
    mean_distance_ops: float | None = None


def chunk_generator(seed: SeedLike, chunk_index: int) -> np.random.Generator:
    """Counter-based stream for one chunk, derived from the master seed."""
    key = seed if isinstance(seed, tuple) else (seed,)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key + (chunk_index,))))


def _chunks(trials: int) -> list[tuple[int, int]]:
    return [
        (i, min(CHUNK_TRIALS, trials - i * CHUNK_TRIALS))
        for i in range((trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS)
    ]


# Worker-side task dispatch: the task object is shipped once per worker
# through the pool initializer, chunks only carry their index.
_WORKER_TASK = None


def _init_worker(task) -> None:
    global _WORKER_TASK
    _WORKER_TASK = task


def _run_worker_chunk(args: tuple[int, int]):
    return _WORKER_TASK.run_chunk(*args)


def _map_chunks(task, trials: int, workers: int) -> Iterable:
    parts = _chunks(trials)
    if workers <= 1:
        return [task.run_chunk(i, n) for i, n in parts]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(task,)
    ) as pool:
        return list(pool.map(_run_worker_chunk, parts))


@dataclass(frozen=True)
class _AwgnTask:
    symbols: np.ndarray
    sigma: float
    seed: tuple[int, ...]
    index: DetectorIndex | None  # None -> MLD only
    constellation: Constellation
    kind: str  # "proposed" | "mld" | "both"

    def run_chunk(self, chunk_index: int, count: int):
        rng = chunk_generator(self.seed, chunk_index)
        tx = rng.integers(0, len(self.symbols), count)
        wr = rng.standard_normal(count)
        wi = rng.standard_normal(count)
        r = self.symbols[tx] + self.sigma * (wr + 1j * wi)
        err_prop = err_mld = 0
        max_ops = 0
        ops_sum = 0
        fallbacks = 0
        if self.kind in ("proposed", "both"):
            dec, stats = detect_many(self.index, r, with_stats=True)
            err_prop = int((dec != tx).sum())
            main = stats.distance_ops[~stats.fallback]
            max_ops = int(main.max()) if main.size else 0
            ops_sum = int(stats.distance_ops.sum())
            fallbacks = int(stats.fallback.sum())
        if self.kind in ("mld", "both"):
            dec = mld_detect_many(self.constellation, r)
            err_mld = int((dec != tx).sum())
        return err_prop, err_mld, max_ops, ops_sum, fallbacks


@dataclass(frozen=True)
class _RisTask:
    symbols: np.ndarray
    amp: float
    sigma_n: float
    cp: ChannelParams
    seed: tuple[int, ...]
    index: DetectorIndex | None
    constellation: Constellation
    kind: str  # "proposed" | "mld"

    def run_chunk(self, chunk_index: int, count: int):
        rng = chunk_generator(self.seed, chunk_index)
        tx = rng.integers(0, len(self.symbols), count)
        h = sample_cascade_gain(self.cp, rng, size=count)
        resampled = 0
        zero = h == 0
        while zero.any():
            resampled += int(zero.sum())
            h[zero] = sample_cascade_gain(self.cp, rng, size=int(zero.sum()))
            zero = h == 0
        wr = rng.standard_normal(count)
        wi = rng.standard_normal(count)
        w = (self.sigma_n / math.sqrt(2.0)) * (wr + 1j * wi)
        scale = self.amp * h
        y = scale * self.symbols[tx] + w
        r = y / scale
        if self.kind == "proposed":
            dec = detect_many(self.index, r)
        else:
            dec = mld_detect_many(self.constellation, r)
        return int((dec != tx).sum()), resampled


def _as_seed_tuple(seed: SeedLike) -> tuple[int, ...]:
    return seed if isinstance(seed, tuple) else (seed,)


def simulate_ser_awgn(
    c: Constellation,
    detector_kind: str,
    gamma_r: float,
    trials: int,
    seed: SeedLike,
    workers: int = 1,
    index: DetectorIndex | None = None,
) -> SerEstimate:
    """Simulated symbol error rate over AWGN at received SNR gamma_r.

    Uniform symbols plus circular complex Gaussian noise with
    per-component variance E_s / (2 gamma_r).
    """
    if detector_kind not in ("proposed", "mld"):
        raise ValueError("detector_kind must be 'proposed' or 'mld'")
    if gamma_r <= 0.0:
        raise ValueError("gamma_r must be positive to define the noise variance")
    if detector_kind == "proposed" and index is None:
        index = build_detector(c)
    sigma = math.sqrt(c.E_s / (2.0 * gamma_r))
    task = _AwgnTask(
        symbols=c.symbols,
        sigma=sigma,
        seed=_as_seed_tuple(seed),
        index=index,
        constellation=c,
        kind=detector_kind,
    )
    results = _map_chunks(task, trials, workers)
    errors = sum(r[0] if detector_kind == "proposed" else r[1] for r in results)
    return SerEstimate(errors=errors, trials=trials)


def detect_bench_point(
    c: Constellation,
    index: DetectorIndex,
    gamma_r: float,
    trials: int,
    seed: SeedLike,
    workers: int = 1,
) -> tuple[SerEstimate, SerEstimate, int, float]:
    """Paired proposed/MLD SER on identical noise, with instrumentation.

    Returns (proposed, mld, max main-path distance ops, mean distance ops).
    """
    if gamma_r <= 0.0:
        raise ValueError("gamma_r must be positive")
    sigma = math.sqrt(c.E_s / (2.0 * gamma_r))
    task = _AwgnTask(
        symbols=c.symbols,
        sigma=sigma,
        seed=_as_seed_tuple(seed),
        index=index,
        constellation=c,
        kind="both",
    )
    results = _map_chunks(task, trials, workers)
    err_p = sum(r[0] for r in results)
    err_m = sum(r[1] for r in results)
    max_ops = max(r[2] for r in results)
    mean_ops = sum(r[3] for r in results) / trials
    return (
        SerEstimate(err_p, trials),
        SerEstimate(err_m, trials),
        max_ops,
        mean_ops,
    )


def simulate_asep_ris(
    c: Constellation,
    lb: LinkBudget,
    cp: ChannelParams,
    trials: int,
    seed: SeedLike,
    workers: int = 1,
    detector_kind: str | None = None,
    index: DetectorIndex | None = None,
) -> SerEstimate:
    """Simulated average SEP of the RIS link with channel inversion.

    Per trial: y = sqrt(P_t G l_p) h s + w, then r = y / (sqrt(P_t G l_p) h)
    under perfect CSI; exact zeros of h are resampled.
    """
    if detector_kind is None:
        detector_kind = "proposed" if c.scheme == "HQAM" else "mld"
    if detector_kind == "proposed" and index is None:
        index = build_detector(c)
    amp = math.sqrt(lb.P_t * lb.G * path_loss(lb))
    task = _RisTask(
        symbols=c.symbols,
        amp=amp,
        sigma_n=math.sqrt(lb.sigma_n2),
        cp=cp,
        seed=_as_seed_tuple(seed),
        index=index,
        constellation=c,
        kind=detector_kind,
    )
    results = _map_chunks(task, trials, workers)
    errors = sum(r[0] for r in results)
    return SerEstimate(errors=errors, trials=trials)


def run_sweep(
    spec: SweepSpec,
    lb: LinkBudget,
    pm: PowerModel | None = None,
    fading_m: float = 3.0,
    fading_omega: float = 1.0,
) -> list[CurvePoint]:
    """Run one sweep: RIS ASEP over N, or paired-detector SER over SNR."""
    c = build_hqam(spec.M) if spec.scheme == "HQAM" else build_qam(spec.M)
    index = build_detector(c) if spec.scheme == "HQAM" else None
    base_seed = _as_seed_tuple(spec.seed)
    points: list[CurvePoint] = []
    if spec.n_grid is not None:
        gamma_bar = average_snr(lb)
        for i, n in enumerate(spec.n_grid):
            cp = ChannelParams(N=n, m=fading_m, omega=fading_omega, q=spec.q)
            fit = fit_cascade(cp)
            if spec.scheme == "HQAM":
                analytic = asep_hqam_closed(gamma_bar, fit, c)
            else:
                analytic = asep_qam_quadrature(gamma_bar, fit, spec.M)
            est = simulate_asep_ris(
                c, lb, cp, spec.trials, base_seed + (i,), spec.workers, index=index
            )
            ee_analytic = ee_sim = None
            if pm is not None:
                pm_point = replace(pm, q=spec.q, N=n)
                ee_analytic = conditioned_ee(analytic, spec.M, pm_point)
                ee_sim = conditioned_ee(est.ser, spec.M, pm_point)
            points.append(
                CurvePoint(
                    scheme=spec.scheme,
                    M=spec.M,
                    q=spec.q,
                    est=est,
                    low_confidence=est.errors < 10,
                    N=n,
                    gamma_bar=gamma_bar,
                    m_t=fit.m_t,
                    omega_t=fit.omega_t,
                    asep_analytic=analytic,
                    ee_analytic=ee_analytic,
                    ee_sim=ee_sim,
                )
            )
    else:
        if spec.scheme != "HQAM":
            raise ValueError("SNR sweeps benchmark the HQAM detector only")
        for i, g_db in enumerate(spec.gamma_db_grid):
            gamma_r = 10.0 ** (g_db / 10.0)
            prop, mld, max_ops, mean_ops = detect_bench_point(
                c, index, gamma_r, spec.trials, base_seed + (i,), spec.workers
            )
            points.append(
                CurvePoint(
                    scheme=spec.scheme,
                    M=spec.M,
                    q=spec.q,
                    est=prop,
                    low_confidence=prop.errors < 10,
                    gamma_db=g_db,
                    est_mld=mld,
                    max_candidates=max_ops,
                    mean_distance_ops=mean_ops,
                )
            )
    return points


def combined_stderr(a: SerEstimate, b: SerEstimate) -> float:
    """Standard error of the difference of two SER estimates."""
    return math.sqrt(a.stderr**2 + b.stderr**2)
