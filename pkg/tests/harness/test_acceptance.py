"""Trend checks on full-scale experiment runs.

Each master seed runs the default experiment once; the runs are shared by
every test of the module. Expect hours of computation per seed.
"""
import dataclasses
import pathlib
from collections import defaultdict
from typing import Dict, List, Tuple

import pytest

from shadowpolicy.harness import load_config
from shadowpolicy.harness.pipeline import exit_code, run_pipeline
from shadowpolicy.harness.reports import read_report

SEEDS = range(5)
# trends must hold in at least this many of the seeded runs
TREND_QUORUM = 4

pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def experiment_runs(tmp_path_factory):
    """Lazily run the default experiment once per master seed."""
    runs: Dict[int, pathlib.Path] = {}

    def run(seed: int) -> pathlib.Path:
        if seed not in runs:
            output_dir = tmp_path_factory.mktemp("experiment-{}".format(seed))
            cfg = dataclasses.replace(
                load_config(), master_seed=seed, output_dir=str(output_dir)
            )
            assert exit_code(run_pipeline(cfg)) == 0
            runs[seed] = output_dir
        return runs[seed]

    return run


def summary(run_dir: pathlib.Path, name: str) -> List[Dict[str, str]]:
    return read_report(run_dir / "reports" / name)


def by_cell(rows: List[Dict[str, str]], column: str) -> Dict[Tuple[str, int], float]:
    return {
        (row["victim_id"], int(row["demo_count"])): float(row[column]) for row in rows
    }


def seeds_holding(experiment_runs, name: str, column: str, holds) -> Dict[str, int]:
    """Per victim, the number of seeds whose cells satisfy `holds`."""
    counts: Dict[str, int] = defaultdict(int)

    for seed in SEEDS:
        cells = by_cell(summary(experiment_runs(seed), name), column)
        for victim_id in {victim_id for victim_id, _ in cells}:
            values = {
                count: value
                for (other, count), value in cells.items()
                if other == victim_id
            }
            counts[victim_id] += bool(holds(values))

    return counts


def test_every_victim_balances(experiment_runs):
    rows = summary(experiment_runs(0), "victim_summary.csv")

    assert len(rows) == 3
    for row in rows:
        assert float(row["mean_return"]) >= 475, row["victim_id"]


def test_imitation_agreement(experiment_runs):
    agreement = by_cell(
        summary(experiment_runs(0), "imitation_summary.csv"), "agreement"
    )
    for (victim_id, count), value in agreement.items():
        if count == 5000:
            assert value >= 0.85, victim_id

    counts = seeds_holding(
        experiment_runs,
        "imitation_summary.csv",
        "agreement",
        lambda values: values[5000] >= values[1000],
    )
    assert all(count >= TREND_QUORUM for count in counts.values()), counts


def test_attack_efficacy(experiment_runs):
    run_dir = experiment_runs(0)
    regret = by_cell(summary(run_dir, "attack_summary.csv"), "mean_regret")
    perturbations = by_cell(
        summary(run_dir, "attack_summary.csv"), "mean_perturbations"
    )
    for cell, value in regret.items():
        if cell[1] == 5000:
            assert value >= 450, cell
            assert perturbations[cell] <= 20, cell

    holding: Dict[str, int] = defaultdict(int)
    for seed in SEEDS:
        rows = summary(experiment_runs(seed), "attack_summary.csv")
        regret = by_cell(rows, "mean_regret")
        perturbations = by_cell(rows, "mean_perturbations")
        for victim_id in {victim_id for victim_id, _ in regret}:
            few, many = (victim_id, 1000), (victim_id, 5000)
            holding[victim_id] += (
                regret[few] <= regret[many]
                or perturbations[few] >= perturbations[many]
            )
    assert all(count >= TREND_QUORUM for count in holding.values()), holding


def test_transfers_grow_with_demonstrations(experiment_runs):
    for seed in SEEDS:
        rows = summary(experiment_runs(seed), "transfer_summary.csv")
        assert all(float(row["mean_transferred"]) > 0 for row in rows)

    counts = seeds_holding(
        experiment_runs,
        "transfer_summary.csv",
        "mean_transferred",
        lambda values: values[1000] <= values[2500] <= values[5000],
    )
    assert all(count >= TREND_QUORUM for count in counts.values()), counts


def test_crop_lowers_imitation_agreement(experiment_runs):
    holding: Dict[str, int] = defaultdict(int)

    for seed in SEEDS:
        victims_dir = experiment_runs(seed) / "victims"
        for crop_report in sorted(victims_dir.glob("*/crop.csv")):
            rows = read_report(crop_report)
            agreement = {
                float(row["omega"]): float(row["imitation_agreement"]) for row in rows
            }
            holding[crop_report.parent.name] += (
                agreement[max(agreement)] <= agreement[0.0]
            )

    assert len(holding) == 3
    assert all(count >= TREND_QUORUM for count in holding.values()), holding
