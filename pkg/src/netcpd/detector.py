"""End-to-end change-point detection over a stream of snapshots.

The pipeline samples the tracked dyads once, folds the snapshot stream into
per-window transition counts, estimates each window's edge probabilities,
scores consecutive windows, and flags the windows whose score exceeds an
upper-quantile threshold of the whole score series.  Windows are numbered
from 1; a pair ``(i, i + 1)`` scoring above the threshold flags window
``i + 1``.

Everything is deterministic given the configuration seed: random streams for
dyad sampling, per-pair scoring, and threshold bootstrapping are derived from
fixed spawn keys, so results are bit-identical at any parallelism degree.
"""

from __future__ import annotations

import itertools
import math
import time
import tracemalloc
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .chains import (
    DyadSample,
    WindowConfig,
    iter_keyed_window_counts,
    iter_window_counts,
    sample_dyads,
)
from .dissimilarity import MEASURES, GroupPartition, score_pair
from .estimators import WindowEstimate, estimate_window
from .models import Snapshot

__all__ = [
    "DetectorConfig",
    "DetectionResult",
    "compute_threshold",
    "flag_changes",
    "flag_changes_online",
    "run_pipeline",
    "write_scores",
    "write_flagged",
    "write_manifest",
]

_SAMPLE_STREAM = 0
_SCORE_STREAM = 1
_THRESHOLD_STREAM = 2


@dataclass(frozen=True)
class DetectorConfig:
    """All pipeline parameters; defaults follow the standard experiment setup."""

    window: WindowConfig = field(default_factory=lambda: WindowConfig(20, 20))
    tracked_dyads: int = 250
    strategy: str = "uniform-dyads"
    estimator: str = "frequency"
    measure: str = "kl"
    groups: int = 25
    significance: float = 0.05
    weight_exponent: float = math.inf
    ks_samples: int = 100_000
    threshold_resamples: int = 0
    kl_direction: str = "prev-curr"
    grouping: str = "fixed"
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.tracked_dyads < 1:
            raise ValueError("tracked_dyads must be at least 1")
        if not 1 <= self.groups <= self.tracked_dyads:
            raise ValueError("groups must be in [1, tracked_dyads]")
        if not 0.0 < self.significance < 1.0:
            raise ValueError("significance must be in (0, 1)")
        if self.estimator not in ("frequency", "mle"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.strategy not in ("uniform-dyads", "observed-dyads"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.grouping not in ("fixed", "by-key"):
            raise ValueError(f"unknown grouping {self.grouping!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.threshold_resamples < 0:
            raise ValueError("threshold_resamples must be non-negative")


@dataclass(frozen=True)
class DetectionResult:
    """Score series, threshold, flagged windows, and the configuration echo."""

    scores: np.ndarray
    window_labels: tuple
    threshold: float
    flagged: tuple[int, ...]
    config: DetectorConfig
    wall_seconds: float = 0.0
    peak_memory: int | None = None

    @property
    def n_windows(self) -> int:
        return len(self.window_labels)


def upper_quantile(scores: np.ndarray, significance: float) -> float:
    """Empirical upper quantile: the ``ceil((1 - a) * n)``-th order statistic."""
    n = scores.size
    rank = math.ceil((1.0 - significance) * n)
    return float(np.sort(scores)[rank - 1])


def compute_threshold(
    scores,
    significance: float,
    resamples: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Upper-quantile threshold of the score series.

    With ``resamples > 0``, draws that many bootstrap resamples of the scores
    and averages their empirical upper quantiles; ``resamples = 0`` is the
    plain empirical quantile of the original series.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise ValueError("need at least 2 scores to set a threshold")
    if not 0.0 < significance < 1.0:
        raise ValueError("significance must be in (0, 1)")
    if resamples == 0:
        return upper_quantile(scores, significance)
    if rng is None:
        raise ValueError("bootstrap thresholding needs a random source")
    picks = rng.integers(0, scores.size, size=(resamples, scores.size))
    rank = math.ceil((1.0 - significance) * scores.size)
    resampled = np.sort(scores[picks], axis=1)[:, rank - 1]
    return float(resampled.mean())


def flag_changes(scores, threshold: float) -> tuple[int, ...]:
    """Windows whose incoming pair score strictly exceeds the threshold.

    ``scores[j]`` compares windows ``j + 1`` and ``j + 2`` (1-based), so a
    high score flags window ``j + 2``.
    """
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    scores = np.asarray(scores, dtype=np.float64)
    return tuple(int(j) + 2 for j in np.flatnonzero(scores > threshold))


def flag_changes_online(scores, significance: float, trailing: int) -> tuple[int, ...]:
    """Rolling-threshold variant: each score is judged against its own past.

    Score ``j`` is compared with the upper quantile of the ``trailing`` most
    recent earlier scores (skipped until at least two exist).  This is an
    extension for stream-at-arrival use; the standard procedure computes one
    retrospective threshold over the whole series.
    """
    if trailing < 2:
        raise ValueError("trailing must be at least 2")
    scores = np.asarray(scores, dtype=np.float64)
    flagged = []
    for j in range(len(scores)):
        past = scores[max(0, j - trailing) : j]
        if past.size < 2:
            continue
        if scores[j] > upper_quantile(past, significance):
            flagged.append(j + 2)
    return tuple(flagged)


def _pair_rng(seed: int, pair_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_SCORE_STREAM, pair_index))
    )


def score_estimate_pair(
    pair_index: int,
    est_prev: WindowEstimate,
    est_curr: WindowEstimate,
    config: DetectorConfig,
    partition: GroupPartition,
) -> float:
    """Score one consecutive-window pair with its own derived random stream."""
    return score_pair(
        est_prev,
        est_curr,
        config.measure,
        partition,
        _pair_rng(config.seed, pair_index),
        ks_samples=config.ks_samples,
        kl_direction=config.kl_direction,
    )


def score_estimates(estimates: list[WindowEstimate], config: DetectorConfig) -> np.ndarray:
    """Scores of all consecutive pairs; parallel degree does not change values."""
    if len(estimates) < 2:
        raise ValueError("need at least 2 windows to score")
    partition = GroupPartition(estimates[0].k, config.groups)
    tasks = zip(itertools.count(), estimates[:-1], estimates[1:])
    if config.workers == 1:
        scores = [
            score_estimate_pair(i, a, b, config, partition) for i, a, b in tasks
        ]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            scores = list(
                pool.map(lambda t: score_estimate_pair(t[0], t[1], t[2], config, partition), tasks)
            )
    return np.asarray(scores, dtype=np.float64)


def _window_counts(snapshots, sample, config) -> Iterator[tuple[object, object]]:
    if config.grouping == "by-key":
        return iter_keyed_window_counts(snapshots, sample)
    return iter_window_counts(snapshots, sample, config.window)


def run_pipeline(
    snapshots: Iterable[Snapshot],
    config: DetectorConfig,
    measure_memory: bool = False,
) -> DetectionResult:
    """Single pass over the snapshot stream; returns the detection result.

    The dyad sample is drawn once up front (buffering the first window when
    the observed-dyads strategy needs priming).  Peak memory is bounded by
    the tracked-dyad buffers and the score series, independent of network
    size and stream length.
    """
    started = time.perf_counter()
    if measure_memory:
        tracemalloc.start()

    stream = iter(snapshots)
    first = next(stream, None)
    if first is None:
        raise ValueError("empty snapshot source")
    stream = itertools.chain([first], stream)

    sample_rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(_SAMPLE_STREAM,))
    )
    if config.strategy == "observed-dyads":
        priming = list(itertools.islice(stream, config.window.size))
        sample = sample_dyads(
            first.n_nodes,
            config.tracked_dyads,
            config.strategy,
            seed=config.seed,
            rng=sample_rng,
            priming=priming,
        )
        stream = itertools.chain(priming, stream)
    else:
        sample = sample_dyads(
            first.n_nodes,
            config.tracked_dyads,
            config.strategy,
            seed=config.seed,
            rng=sample_rng,
        )

    partition = GroupPartition(sample.k, config.groups)
    labels: list = []
    scores: list[float] = []

    if config.workers == 1:
        # Streaming path: only the previous window's estimate is retained.
        prev: WindowEstimate | None = None
        for label, counts in _window_counts(stream, sample, config):
            est = estimate_window(counts, config.estimator, config.weight_exponent)
            labels.append(label)
            if prev is not None:
                scores.append(score_estimate_pair(len(scores), prev, est, config, partition))
            prev = est
        score_arr = np.asarray(scores, dtype=np.float64)
    else:
        estimates: list[WindowEstimate] = []
        for label, counts in _window_counts(stream, sample, config):
            labels.append(label)
            estimates.append(estimate_window(counts, config.estimator, config.weight_exponent))
        score_arr = score_estimates(estimates, config)

    if len(labels) < 2:
        raise ValueError("the stream yielded fewer than 2 windows")

    threshold_rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(_THRESHOLD_STREAM,))
    )
    threshold = compute_threshold(
        score_arr, config.significance, config.threshold_resamples, threshold_rng
    )
    flagged = flag_changes(score_arr, threshold)

    peak = None
    if measure_memory:
        peak = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()
    return DetectionResult(
        scores=score_arr,
        window_labels=tuple(labels),
        threshold=threshold,
        flagged=flagged,
        config=config,
        wall_seconds=time.perf_counter() - started,
        peak_memory=peak,
    )


# --------------------------------------------------------------------------
# Result files


def write_scores(path, result: DetectionResult) -> None:
    """One line per window pair: the later window's 1-based index and the score."""
    with open(path, "w", encoding="utf-8") as fh:
        for j, score in enumerate(result.scores):
            fh.write(f"{j + 2}\t{float(score)!r}\n")


def write_flagged(path, result: DetectionResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for idx in result.flagged:
            fh.write(f"{idx}\n")


def write_manifest(path, result: DetectionResult, extra: dict | None = None) -> None:
    """Plain ``key=value`` run manifest: configuration, threshold, resource use."""
    cfg = result.config
    entries: dict[str, object] = {
        "window_size": cfg.window.size,
        "window_step": cfg.window.step,
        "tracked_dyads": cfg.tracked_dyads,
        "strategy": cfg.strategy,
        "estimator": cfg.estimator,
        "measure": cfg.measure,
        "groups": cfg.groups,
        "significance": cfg.significance,
        "weight_exponent": cfg.weight_exponent,
        "ks_samples": cfg.ks_samples,
        "threshold_resamples": cfg.threshold_resamples,
        "kl_direction": cfg.kl_direction,
        "grouping": cfg.grouping,
        "workers": cfg.workers,
        "seed": cfg.seed,
        "n_windows": result.n_windows,
        "threshold": repr(float(result.threshold)),
        "flagged": ",".join(map(str, result.flagged)),
        "wall_seconds": f"{result.wall_seconds:.3f}",
        "peak_memory_bytes": result.peak_memory if result.peak_memory is not None else "",
    }
    if extra:
        entries.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")
