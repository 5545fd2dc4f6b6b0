"""
Fixed self-check suite: the symbolic Bell algebra against the numpy oracle,
plus a handful of honest runs end to end.
"""

import itertools
import logging
from typing import Callable, List, NamedTuple

import numpy as np

from qsdc.experiment.analytic import (
    StorageCost,
    StorageScheme,
    intercept_exposure,
    storage_cost,
)
from qsdc.protocol.engine import ProtocolConfig, RunStatus, Variant, run_protocol
from qsdc.quantum.bell import (
    BellLabel,
    BitMapping,
    EncodeOp,
    Pure,
    ZCollapsed,
    bell_apply,
    bell_measure,
    decode_op,
    z_measure_travel,
)
from qsdc.quantum.oracle import oracle_table, product_bell_probabilities, travel_projection

logger = logging.getLogger(__name__)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str = ""


def check_bell_table() -> CheckResult:
    table = oracle_table()
    wrong = [key for key, label in table.items() if bell_apply(*key) is not label]
    return CheckResult("bell-apply-oracle", not wrong, f"{len(table) - len(wrong)}/{len(table)} entries agree")


def check_decode_inverse() -> CheckResult:
    wrong = [
        (state, op)
        for state, op in itertools.product(BellLabel, EncodeOp)
        if decode_op(state, bell_apply(state, op)) is not op
    ]
    return CheckResult("decode-inverts-encode", not wrong, f"{len(wrong)} mismatch(es)")


def check_collapsed_measurement() -> CheckResult:
    rng = np.random.default_rng(0)
    for home, travel in itertools.product((0, 1), repeat=2):
        support = {label for label, p in product_bell_probabilities(home, travel).items() if p > 1e-12}
        seen = {bell_measure(ZCollapsed(home, travel), rng) for _ in range(64)}
        if seen != support:
            return CheckResult("collapsed-bell-measurement", False, f"|{home}{travel}>: {seen} vs {support}")
    return CheckResult("collapsed-bell-measurement", True, "parity classes agree")


def check_z_collapse() -> CheckResult:
    rng = np.random.default_rng(1)
    for label in BellLabel:
        for _ in range(16):
            travel, state = z_measure_travel(Pure(label), rng)
            probability, home = travel_projection(label, travel)
            if abs(probability - 0.5) > 1e-12 or state != ZCollapsed(home, travel):
                return CheckResult("z-measurement-collapse", False, f"{label.short_name} travel={travel}")
    return CheckResult("z-measurement-collapse", True, "home bits agree")


def check_bit_mapping() -> CheckResult:
    mapping = BitMapping.default()
    bits = [0, 0, 1, 1, 1, 0, 0, 1]
    ok = mapping.decode(mapping.encode(bits)) == bits and BitMapping.parse(mapping.to_text()) == mapping
    return CheckResult("bit-mapping-round-trip", ok)


def check_honest_runs(runs: int = 16) -> CheckResult:
    for variant, seed in itertools.product(Variant, range(runs)):
        cfg = ProtocolConfig(n_pairs=8 + seed, variant=variant, seed=seed)
        result = run_protocol(cfg, lambda n: [(i * 7 + seed) % 2 for i in range(n)])
        if result.status is not RunStatus.COMPLETED or result.alice_bits != result.bob_message:
            return CheckResult("honest-runs", False, f"{variant.value} seed={seed}: {result.status.value}")
    return CheckResult("honest-runs", True, f"{2 * runs} runs decoded")


def check_storage_table() -> CheckResult:
    ok = all(
        storage_cost(StorageScheme.ONE_WAY, n, 1.0) == StorageCost(StorageScheme.ONE_WAY, 2 * n, 4.0)
        and storage_cost(StorageScheme.TWO_STEP, n, 1.0) == StorageCost(StorageScheme.TWO_STEP, n, 2.0)
        and all(intercept_exposure(s, n) == 2 * n for s in StorageScheme)
        for n in (1, 2, 50, 100)
    )
    return CheckResult("storage-table", ok)


SELFTEST_CHECKS: List[Callable[[], CheckResult]] = [
    check_bell_table,
    check_decode_inverse,
    check_collapsed_measurement,
    check_z_collapse,
    check_bit_mapping,
    check_honest_runs,
    check_storage_table,
]


def run_selftest() -> List[CheckResult]:
    results = []
    for check in SELFTEST_CHECKS:
        try:
            result = check()
        except Exception as e:
            logger.error(f"selftest check {check.__name__} raised: {e}")
            result = CheckResult(check.__name__, False, str(e))
        if not result.passed:
            logger.error(f"selftest {result.name} failed: {result.detail}")
        results.append(result)
    return results
