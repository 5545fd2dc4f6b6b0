"""
Monte Carlo harness: many independent protocol runs, aggregated.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from qsdc.adversary.attacks import AttackKind, AttackSpec
from qsdc.errors import ConfigurationError, ExperimentError
from qsdc.protocol.engine import (
    MAX_SEED,
    ProtocolConfig,
    RunStatus,
    RunStreams,
    Variant,
    run_protocol,
)

logger = logging.getLogger(__name__)

_MASK = MAX_SEED
_GOLDEN = 0x9E3779B97F4A7C15
CHUNKS_PER_WORKER = 4


def derive_seed(base_seed: int, index: int) -> int:
    """
    Seed of trial ``index``: the splitmix64 output for ``base_seed + (index+1)*golden``.
    """
    z = (base_seed + (index + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Sweep:
    key: str
    values: Tuple[Any, ...]

    def __post_init__(self):
        if not self.values:
            raise ConfigurationError("sweep.values is empty", key="sweep.values")


@dataclass(frozen=True)
class ExperimentSpec:
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    attack: AttackSpec = field(default_factory=AttackSpec)
    n_trials: int = 10000
    base_seed: int = 0
    sweep: Optional[Sweep] = None
    threads: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigurationError(f"n_trials must be at least 1, got {self.n_trials}", key="n_trials")
        if not 0 <= self.base_seed <= MAX_SEED:
            raise ConfigurationError(
                f"seed must be an unsigned 64-bit integer, got {self.base_seed}", key="seed"
            )
        if self.threads < 1:
            raise ConfigurationError(f"threads must be at least 1, got {self.threads}", key="threads")

    @property
    def param(self) -> Optional[float]:
        return self.attack.param()


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    status: RunStatus
    c_set_error_rate: Optional[float]
    multiphoton_rate: Optional[float]
    recovery: float
    bit_recovery: float

    @property
    def detected(self) -> bool:
        return self.status.aborted


@dataclass(frozen=True)
class AggregateResult:
    """
    Statistics of one experiment.

    ``recovery`` is conditional on the run completing undetected and is None
    when no run completed. ``unconditional_recovery`` counts aborted runs as 0.
    """

    variant: str
    attack: str
    n_pairs: int
    param: Optional[float]
    n_trials: int
    detection: float
    detection_se: float
    recovery: Optional[float]
    recovery_se: Optional[float]
    unconditional_recovery: float
    unconditional_recovery_se: float
    c_set_error: Optional[float]
    pns_aborts: int = 0
    bell_aborts: int = 0
    records: Tuple[TrialRecord, ...] = ()


def run_trial(spec: ExperimentSpec, seed: int) -> TrialRecord:
    """One protocol run with an honest uniformly random message."""
    cfg = replace(spec.protocol, seed=seed)
    streams = RunStreams(seed)
    attack = spec.attack.build()

    def message(length: int) -> List[int]:
        return streams.message.integers(2, size=length).tolist()

    result = run_protocol(cfg, message, attack, streams)
    report = attack.report(result, cfg.bit_mapping)
    logger.debug(f"trial seed={seed} attack={attack.describe()}: {result.status.value}")
    return TrialRecord(
        seed=seed,
        status=result.status,
        c_set_error_rate=result.c_set_error_rate,
        multiphoton_rate=result.multiphoton_rate,
        recovery=report.recovery_fraction if not report.detected else 0.0,
        bit_recovery=report.bit_recovery_fraction if not report.detected else 0.0,
    )


def _guarded_trial(spec: ExperimentSpec, seed: int) -> TrialRecord:
    try:
        return run_trial(spec, seed)
    except ConfigurationError:
        raise
    except Exception as e:
        logger.error(f"trial with seed {seed} failed: {e}")
        raise ExperimentError(str(e), seed) from e


def _run_chunk(spec: ExperimentSpec, seeds: Sequence[int]) -> List[TrialRecord]:
    return [_guarded_trial(spec, seed) for seed in seeds]


def _chunk_seeds(seeds: List[int], workers: int) -> List[List[int]]:
    size = max(1, math.ceil(len(seeds) / (workers * CHUNKS_PER_WORKER)))
    return [seeds[i : i + size] for i in range(0, len(seeds), size)]


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)


def _mean_se(values: Sequence[float]) -> Tuple[float, float]:
    array = np.asarray(values, dtype=float)
    mean = float(array.mean())
    if len(array) < 2:
        return mean, 0.0
    return mean, float(array.std(ddof=1) / math.sqrt(len(array)))


def aggregate(spec: ExperimentSpec, records: Sequence[TrialRecord], keep_records: bool = False) -> AggregateResult:
    n = len(records)
    detections = sum(1 for r in records if r.detected)
    detection = detections / n

    completed = [r.recovery for r in records if not r.detected]
    recovery, recovery_se = _mean_se(completed) if completed else (None, None)
    unconditional, unconditional_se = _mean_se([r.recovery for r in records])

    errors = [r.c_set_error_rate for r in records if r.c_set_error_rate is not None]
    c_set_error = float(np.mean(errors)) if errors else None

    return AggregateResult(
        variant=spec.protocol.variant.value,
        attack=spec.attack.kind.value,
        n_pairs=spec.protocol.n_pairs,
        param=spec.param,
        n_trials=n,
        detection=detection,
        detection_se=_binomial_se(detection, n),
        recovery=recovery,
        recovery_se=recovery_se,
        unconditional_recovery=unconditional,
        unconditional_recovery_se=unconditional_se,
        c_set_error=c_set_error,
        pns_aborts=sum(1 for r in records if r.status is RunStatus.ABORTED_AT_PNS_CHECK),
        bell_aborts=sum(1 for r in records if r.status is RunStatus.ABORTED_AT_BELL_CHECK),
        records=tuple(records) if keep_records else (),
    )


def run_trials(
    spec: ExperimentSpec, threads: Optional[int] = None, keep_records: bool = False
) -> AggregateResult:
    """
    Run ``spec.n_trials`` independent trials and aggregate them.

    Trial ``i`` is seeded with ``derive_seed(spec.base_seed, i)``. With more than one
    worker the seeds are split into contiguous chunks, each chunk runs in a worker
    process and the chunks are collected in trial order, so the outcome does not
    depend on ``threads``.

    Args:
        spec: Experiment to run
        threads: Worker process cap, defaults to ``spec.threads``
        keep_records: Keep per-trial records on the result
    """
    threads = threads or spec.threads
    seeds = [derive_seed(spec.base_seed, i) for i in range(spec.n_trials)]
    logger.info(
        f"running {spec.n_trials} trial(s): variant={spec.protocol.variant.value} "
        f"attack={spec.attack.kind.value} n_pairs={spec.protocol.n_pairs} workers={threads}"
    )

    if threads == 1 or len(seeds) == 1:
        records = _run_chunk(spec, seeds)
    else:
        chunks = _chunk_seeds(seeds, threads)
        with ProcessPoolExecutor(max_workers=min(threads, len(chunks))) as pool:
            records = [record for chunk in pool.map(partial(_run_chunk, spec), chunks) for record in chunk]

    result = aggregate(spec, records, keep_records)
    logger.info(
        f"{result.variant}/{result.attack}: detection={result.detection:.4f}"
        f"±{result.detection_se:.4f} recovery={result.recovery} "
        f"unconditional_recovery={result.unconditional_recovery:.4f} "
        f"aborted={result.pns_aborts + result.bell_aborts}"
    )
    return result


# Keys a sweep may walk and where each one lives.
_SWEEP_TARGETS = {
    "n_pairs": ("protocol", "n_pairs", int),
    "check_fraction": ("protocol", "check_fraction", float),
    "error_threshold": ("protocol", "error_threshold", float),
    "multiphoton_threshold": ("protocol", "multiphoton_threshold", float),
    "pns_sample_fraction": ("device", "pns_sample_fraction", float),
    "lambda_legit_nm": ("device", "lambda_legit", float),
    "time_window_ns": ("device", "time_window", float),
    "fidelity_sigma_nm": ("device", "fidelity_sigma", float),
    "filter_passband_nm": ("device", "filter_passband", float),
    "ipe_detuning": ("attack", "ipe_detuning", float),
    "delay_ns": ("attack", "delay", float),
    "n_trials": ("experiment", "n_trials", int),
}

SWEEPABLE_KEYS = tuple(_SWEEP_TARGETS)


def with_value(spec: ExperimentSpec, key: str, value: Any) -> ExperimentSpec:
    """Copy of ``spec`` with one numeric configuration key changed."""
    if key not in _SWEEP_TARGETS:
        raise ConfigurationError(
            f"cannot sweep {key!r}; sweepable keys are {', '.join(SWEEPABLE_KEYS)}", key="sweep.key"
        )
    where, attr, cast = _SWEEP_TARGETS[key]
    try:
        value = cast(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"sweep value {value!r} is not valid for {key}", key="sweep.values") from None

    if where == "experiment":
        return replace(spec, **{attr: value})
    if where == "attack":
        return replace(spec, attack=replace(spec.attack, **{attr: value}))
    device = spec.protocol.device
    protocol = spec.protocol
    if where == "device":
        device = replace(device, **{attr: value})
        protocol = replace(protocol, device=device)
    else:
        protocol = replace(protocol, **{attr: value})
    return replace(spec, protocol=protocol, attack=replace(spec.attack, device=device))


def run_sweep(spec: ExperimentSpec, threads: Optional[int] = None) -> List[AggregateResult]:
    """One experiment per sweep value; ``param`` on each row is the swept value."""
    if spec.sweep is None:
        raise ConfigurationError("sweep needs sweep.key and sweep.values", key="sweep.key")
    rows = []
    for value in spec.sweep.values:
        point = replace(with_value(spec, spec.sweep.key, value), sweep=None)
        logger.info(f"sweep point {spec.sweep.key}={value}")
        result = run_trials(point, threads)
        rows.append(replace(result, param=float(value)))
    return rows


def compare_matrix(spec: ExperimentSpec, threads: Optional[int] = None) -> List[AggregateResult]:
    """Every attack kind against both protocol variants, same base settings."""
    rows = []
    for variant in Variant:
        for kind in AttackKind:
            point = replace(
                spec,
                protocol=replace(spec.protocol, variant=variant),
                attack=replace(spec.attack, kind=kind),
                sweep=None,
            )
            rows.append(run_trials(point, threads))
    return rows
