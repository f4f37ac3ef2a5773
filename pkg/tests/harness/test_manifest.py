import pathlib

import pytest

from shadowpolicy import __version__
from shadowpolicy.exceptions import ShadowPolicyException
from shadowpolicy.harness import (
    RunLayout,
    RunManifest,
    Stage,
    StageRecord,
    StageStatus,
)
from shadowpolicy.harness.manifest import cell_id


def test_layout_paths(tmp_path):
    layout = RunLayout(tmp_path)

    assert layout.manifest_path == tmp_path / "manifest.json"
    assert layout.reports_dir == tmp_path / "reports"
    assert layout.victim_dir("dqn-a") == tmp_path / "victims" / "dqn-a"
    assert layout.cell_dir("dqn-a", 1000) == tmp_path / "cells" / "dqn-a-1000"
    assert layout.relative(layout.cell_dir("dqn-a", 5) / "x.csv") == (
        "cells/dqn-a-5/x.csv"
    )


def test_cell_id():
    assert cell_id("dqn-b", 2500) == "dqn-b-2500"


@pytest.mark.parametrize(
    "status,succeeded",
    [
        (StageStatus.completed, True),
        (StageStatus.skipped, True),
        (StageStatus.failed, False),
        (StageStatus.blocked, False),
    ],
)
def test_record_succeeded(status, succeeded):
    record = StageRecord(stage=Stage.imitate, cell_id="v-1", status=status)

    assert record.succeeded is succeeded
    assert record.key == ("imitate", "v-1")


def sample_manifest() -> RunManifest:
    return RunManifest(
        config_hash="abc",
        stages=[
            StageRecord(
                stage=Stage.train_target,
                cell_id="v",
                status=StageStatus.completed,
                stage_hash="h1",
                seconds=1.5,
                artifacts=["victims/v/victim.mlab"],
            ),
            StageRecord(
                stage=Stage.collect_demos,
                cell_id="v-10",
                status=StageStatus.failed,
                stage_hash="h2",
                error="RuntimeError: boom",
            ),
            StageRecord(
                stage=Stage.imitate,
                cell_id="v-10",
                status=StageStatus.blocked,
                error="blocked by collect-demos:v-10",
            ),
        ],
        reports=["reports/victim_summary.csv"],
    )


def test_manifest_round_trip(tmp_path):
    manifest = sample_manifest()
    path = tmp_path / "run" / "manifest.json"
    manifest.save(path)

    loaded = RunManifest.load(path)

    assert loaded == manifest
    assert loaded.version == __version__
    assert loaded.stages[0].stage is Stage.train_target
    assert loaded.stages[1].status is StageStatus.failed


def test_manifest_queries():
    manifest = sample_manifest()

    assert manifest.failed_count == 1
    assert manifest.get(Stage.collect_demos, "v-10").stage_hash == "h2"
    assert manifest.get(Stage.collect_demos, "v-20") is None
    assert set(manifest.records_by_key()) == {
        ("train-target", "v"),
        ("collect-demos", "v-10"),
        ("imitate", "v-10"),
    }


@pytest.mark.parametrize(
    "content", [b"not json", b'{"stages": []}', b'{"config_hash": "x", "stages": 3}']
)
def test_unreadable_manifest(tmp_path: pathlib.Path, content):
    path = tmp_path / "manifest.json"
    path.write_bytes(content)

    with pytest.raises(ShadowPolicyException):
        RunManifest.load(path)
