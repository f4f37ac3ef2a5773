"""End-to-end experiment: victims, imitation cells, attacks and the CRoP sweep.

Every stage writes its artifacts below the run directory and is recorded in
the run manifest with a hash of everything it depends on. A stage whose hash
is unchanged and whose artifacts still exist is skipped on the next run.
"""
import dataclasses
import pathlib
import time
from multiprocessing.pool import Pool
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import sentry_sdk
from sentry_sdk import capture_exception

from shadowpolicy import settings
from shadowpolicy.utils import file_digest, get_logger, load_json
from shadowpolicy.utils.seeding import derive_seed

from . import stages
from ._enum import ReportKind, Stage, StageStatus
from .config import ExperimentConfig, config_hash, digest
from .manifest import RunLayout, RunManifest, StageRecord, cell_id
from .reports import emit_report

if settings.SENTRY_DSN:
    sentry_sdk.init(settings.SENTRY_DSN)

logger = get_logger(__name__)

STAGE_DEPENDENCIES: Dict[Stage, Tuple[Stage, ...]] = {
    Stage.train_target: (),
    Stage.collect_demos: (Stage.train_target,),
    Stage.imitate: (Stage.collect_demos,),
    Stage.attack_train: (Stage.imitate,),
    Stage.attack_eval: (Stage.attack_train,),
    Stage.transfer_eval: (Stage.imitate,),
    Stage.crop_eval: (Stage.train_target,),
}

# Exit codes stop growing past this many failed stages
MAX_EXIT_CODE = 100


def required_stages(targets: Optional[Iterable[Stage]] = None) -> FrozenSet[Stage]:
    """`targets` and everything they transitively depend on; all stages if None."""
    if targets is None:
        return frozenset(Stage)

    required = set()
    pending = list(targets)
    while pending:
        stage = pending.pop()
        if stage not in required:
            required.add(stage)
            pending.extend(STAGE_DEPENDENCIES[stage])

    return frozenset(required)


Key = Tuple[str, str]


class StageRunner:
    """Run stages of one victim chain and record their outcome."""

    def __init__(self, cfg: ExperimentConfig, previous: Dict[Key, StageRecord]):
        self.cfg = cfg
        self.layout = RunLayout(pathlib.Path(cfg.output_dir))
        self.previous = previous
        self.records: List[StageRecord] = []
        self._outcomes: Dict[Key, StageRecord] = {}

    def succeeded(self, stage: Stage, cell: str) -> bool:
        record = self._outcomes.get((stage.value, cell))
        return record is not None and record.succeeded

    def run(
        self,
        stage: Stage,
        cell: str,
        dependencies: Sequence[Tuple[Stage, str]],
        fingerprint: Callable[[], Dict],
        outputs: Sequence[pathlib.Path],
        body: Callable[[], None],
    ) -> bool:
        blockers = [
            "{}:{}".format(dep.value, dep_cell)
            for dep, dep_cell in dependencies
            if not self.succeeded(dep, dep_cell)
        ]
        if blockers:
            logger.warning(
                "Stage {} of {} blocked by {}".format(
                    stage.value, cell, ", ".join(blockers)
                )
            )
            return self._record(
                StageRecord(
                    stage=stage,
                    cell_id=cell,
                    status=StageStatus.blocked,
                    error="blocked by {}".format(", ".join(blockers)),
                )
            )

        stage_hash = digest({"stage": stage.value, "cell": cell, **fingerprint()})
        artifacts = [self.layout.relative(path) for path in outputs]
        previous = self.previous.get((stage.value, cell))

        if (
            previous is not None
            and previous.succeeded
            and previous.stage_hash == stage_hash
            and all(path.exists() for path in outputs)
        ):
            logger.info("Stage {} of {} is up to date".format(stage.value, cell))
            return self._record(
                StageRecord(
                    stage=stage,
                    cell_id=cell,
                    status=StageStatus.skipped,
                    stage_hash=stage_hash,
                    artifacts=artifacts,
                )
            )

        logger.info("Running stage {} of {}".format(stage.value, cell))
        start_time = time.monotonic()

        try:
            body()
        except Exception as e:
            logger.exception("Stage {} of {} failed".format(stage.value, cell))
            capture_exception(e)
            return self._record(
                StageRecord(
                    stage=stage,
                    cell_id=cell,
                    status=StageStatus.failed,
                    stage_hash=stage_hash,
                    seconds=time.monotonic() - start_time,
                    error="{}: {}".format(type(e).__name__, e),
                )
            )

        seconds = time.monotonic() - start_time
        logger.info(
            "Stage {} of {} completed in {:.1f}s".format(stage.value, cell, seconds)
        )
        return self._record(
            StageRecord(
                stage=stage,
                cell_id=cell,
                status=StageStatus.completed,
                stage_hash=stage_hash,
                seconds=seconds,
                artifacts=artifacts,
            )
        )

    def _record(self, record: StageRecord) -> bool:
        self.records.append(record)
        self._outcomes[record.key] = record
        return record.succeeded


def _digest_of(path: pathlib.Path) -> str:
    return file_digest(path) if path.exists() else ""


def run_victim_chain(
    cfg: ExperimentConfig,
    victim_id: str,
    selected: FrozenSet[Stage],
    previous: Dict[Key, StageRecord],
) -> List[StageRecord]:
    """Run the selected stages of one victim and of all its cells."""
    runner = StageRunner(cfg, previous)
    layout = runner.layout
    spec = cfg.get_victim(victim_id)
    master = cfg.master_seed
    victim_dir = layout.victim_dir(victim_id)
    victim_path = victim_dir / settings.VICTIM_CHECKPOINT_NAME
    target_dep = [(Stage.train_target, victim_id)]

    if Stage.train_target in selected:
        train_seed = derive_seed(
            master, Stage.train_target.value, "{}:{}".format(victim_id, spec.seed)
        )
        eval_seed = derive_seed(master, "victim-eval", victim_id)
        runner.run(
            Stage.train_target,
            victim_id,
            [],
            lambda: {
                "victim": dataclasses.asdict(spec),
                "seed": train_seed,
                "eval_seed": eval_seed,
                "episodes": cfg.evaluation.victim_episodes,
            },
            [
                victim_path,
                victim_dir / settings.VICTIM_CURVE_NAME,
                victim_dir / settings.VICTIM_STATS_NAME,
            ],
            lambda: stages.train_target(
                spec, train_seed, cfg.evaluation.victim_episodes, eval_seed, victim_dir
            ),
        )

    for demo_count in cfg.demo_counts:
        _run_cell(runner, cfg, victim_id, demo_count, selected)

    if Stage.crop_eval in selected and cfg.crop.enabled:
        crop_seed = derive_seed(master, Stage.crop_eval.value, victim_id)
        runner.run(
            Stage.crop_eval,
            victim_id,
            target_dep,
            lambda: {
                "crop": dataclasses.asdict(cfg.crop),
                "dqfd": dataclasses.asdict(cfg.dqfd),
                "fgsm": dataclasses.asdict(cfg.fgsm),
                "seed": crop_seed,
                "victim": _digest_of(victim_path),
            },
            [
                victim_dir / settings.CROP_REPORT_NAME,
                victim_dir / settings.CROP_STATS_NAME,
            ],
            lambda: stages.crop_eval(
                victim_path, cfg.crop, cfg.dqfd, cfg.fgsm, crop_seed, victim_dir
            ),
        )

    return runner.records


def _run_cell(
    runner: StageRunner,
    cfg: ExperimentConfig,
    victim_id: str,
    demo_count: int,
    selected: FrozenSet[Stage],
) -> None:
    layout = runner.layout
    cell = cell_id(victim_id, demo_count)
    cell_dir = layout.cell_dir(victim_id, demo_count)
    victim_path = layout.victim_dir(victim_id) / settings.VICTIM_CHECKPOINT_NAME
    demos_path = cell_dir / settings.DEMONSTRATIONS_NAME
    imitation_path = cell_dir / settings.IMITATION_CHECKPOINT_NAME
    adversary_path = cell_dir / settings.ADVERSARY_CHECKPOINT_NAME

    def seed_of(stage: Stage) -> int:
        return derive_seed(cfg.master_seed, stage.value, cell)

    if Stage.collect_demos in selected:
        seed = seed_of(Stage.collect_demos)
        runner.run(
            Stage.collect_demos,
            cell,
            [(Stage.train_target, victim_id)],
            lambda: {
                "count": demo_count,
                "seed": seed,
                "victim": _digest_of(victim_path),
            },
            [demos_path],
            lambda: stages.collect_demos(victim_path, demo_count, seed, demos_path),
        )

    if Stage.imitate in selected:
        seed = seed_of(Stage.imitate)
        runner.run(
            Stage.imitate,
            cell,
            [(Stage.collect_demos, cell)],
            lambda: {
                "dqfd": dataclasses.asdict(cfg.dqfd),
                "seed": seed,
                "demos": _digest_of(demos_path),
            },
            [
                imitation_path,
                cell_dir / settings.IMITATION_LOG_NAME,
                cell_dir / settings.IMITATION_CURVE_NAME,
                cell_dir / settings.IMITATION_STATS_NAME,
            ],
            lambda: stages.imitate(
                victim_id, demo_count, demos_path, cfg.dqfd, seed, cell_dir
            ),
        )

    if Stage.attack_train in selected:
        seed = seed_of(Stage.attack_train)
        runner.run(
            Stage.attack_train,
            cell,
            [(Stage.imitate, cell)],
            lambda: {
                "adversary": dataclasses.asdict(cfg.adversary),
                "seed": seed,
                "victim": _digest_of(victim_path),
                "imitation": _digest_of(imitation_path),
            },
            [adversary_path, cell_dir / settings.ADVERSARY_CURVE_NAME],
            lambda: stages.attack_train(
                victim_path, imitation_path, cfg.adversary, seed, cell_dir
            ),
        )

    if Stage.attack_eval in selected:
        seed = seed_of(Stage.attack_eval)
        runner.run(
            Stage.attack_eval,
            cell,
            [(Stage.attack_train, cell)],
            lambda: {
                "cost": cfg.adversary.cost,
                "r_max": cfg.adversary.r_max,
                "episodes": cfg.evaluation.attack_episodes,
                "seed": seed,
                "victim": _digest_of(victim_path),
                "imitation": _digest_of(imitation_path),
                "adversary": _digest_of(adversary_path),
            },
            [
                cell_dir / settings.ATTACK_REPORT_NAME,
                cell_dir / settings.ATTACK_STATS_NAME,
            ],
            lambda: stages.attack_eval(
                victim_id,
                demo_count,
                victim_path,
                imitation_path,
                adversary_path,
                cfg.adversary,
                cfg.evaluation.attack_episodes,
                seed,
                cell_dir,
            ),
        )

    if Stage.transfer_eval in selected:
        seed = seed_of(Stage.transfer_eval)
        runner.run(
            Stage.transfer_eval,
            cell,
            [(Stage.imitate, cell)],
            lambda: {
                "fgsm": dataclasses.asdict(cfg.fgsm),
                "episodes": cfg.evaluation.transfer_episodes,
                "seed": seed,
                "victim": _digest_of(victim_path),
                "imitation": _digest_of(imitation_path),
            },
            [
                cell_dir / settings.TRANSFER_REPORT_NAME,
                cell_dir / settings.TRANSFER_STATS_NAME,
            ],
            lambda: stages.transfer_eval(
                victim_id,
                demo_count,
                victim_path,
                imitation_path,
                cfg.fgsm,
                cfg.evaluation.transfer_episodes,
                seed,
                cell_dir,
            ),
        )


def _load_previous(layout: RunLayout) -> Dict[Key, StageRecord]:
    if not layout.manifest_path.exists():
        return {}

    try:
        return RunManifest.load(layout.manifest_path).records_by_key()
    except Exception:
        logger.warning(
            "Ignoring unreadable manifest {}".format(layout.manifest_path),
            exc_info=True,
        )
        return {}


def merge_records(
    layout: RunLayout,
    previous: Dict[Key, StageRecord],
    records: Iterable[StageRecord],
) -> List[StageRecord]:
    """Previous outcomes still on disk, overridden by the stages run now.

    Failed and blocked outcomes of earlier runs are dropped, so the exit code
    only reflects the stages of this run.
    """
    merged = {
        key: record
        for key, record in previous.items()
        if record.succeeded
        and all((layout.root / artifact).exists() for artifact in record.artifacts)
    }
    for record in records:
        merged[record.key] = record
    return list(merged.values())


def run_pipeline(
    cfg: ExperimentConfig, targets: Optional[Iterable[Stage]] = None
) -> RunManifest:
    """Run `targets` (all stages by default) and what they depend on.

    The saved manifest keeps the earlier outcomes of stages not run now, so a
    partial run does not make the next full run start over.
    """
    cfg.validate()
    layout = RunLayout(pathlib.Path(cfg.output_dir))
    layout.root.mkdir(parents=True, exist_ok=True)
    selected = required_stages(targets)
    previous = _load_previous(layout)
    manifest = RunManifest(config_hash=config_hash(cfg))
    chain_args = [(cfg, victim_id, selected, previous) for victim_id in cfg.victim_ids]

    if cfg.workers > 1 and len(chain_args) > 1:
        logger.info(
            "Running {} victim chains on {} workers".format(
                len(chain_args), cfg.workers
            )
        )
        with Pool(min(cfg.workers, len(chain_args))) as pool:
            chains = pool.starmap(run_victim_chain, chain_args)
    else:
        chains = [run_victim_chain(*args) for args in chain_args]

    manifest.stages = merge_records(
        layout,
        previous,
        (record for records in chains for record in records),
    )

    manifest.reports = write_reports(layout, manifest)

    if cfg.render_plots:
        render_plots(layout, manifest)

    manifest.save(layout.manifest_path)
    logger.info(
        "Pipeline finished: {} stages, {} failed".format(
            len(manifest.stages), manifest.failed_count
        )
    )
    return manifest


def _concat_reports(
    kind: ReportKind, sources: List[pathlib.Path], path: pathlib.Path
) -> None:
    """Concatenate per-cell CSVs of one kind below a single header."""
    lines: List[str] = []

    for source in sources:
        with source.open("r", encoding="utf-8", newline="") as f:
            lines.extend(f.readlines()[1:])

    emit_report(kind, [], path)
    with path.open("a", encoding="utf-8", newline="") as f:
        f.writelines(lines)


def _artifact(
    layout: RunLayout, record: StageRecord, name: str
) -> Optional[pathlib.Path]:
    for artifact in record.artifacts:
        if pathlib.PurePosixPath(artifact).name == name:
            return layout.root / artifact
    return None


def _row_order(row: Dict) -> Tuple[str, int]:
    return row["victim_id"], row.get("demo_count", 0)


def write_reports(layout: RunLayout, manifest: RunManifest) -> List[str]:
    """Aggregate the per-cell outputs of succeeded stages into run reports.

    Rows are ordered by victim id, then by demonstration count.
    """
    reports_dir = layout.reports_dir
    summary_artifacts = {
        Stage.train_target: (ReportKind.victim_summary, settings.VICTIM_STATS_NAME),
        Stage.imitate: (ReportKind.imitation_summary, settings.IMITATION_STATS_NAME),
        Stage.attack_eval: (ReportKind.attack_summary, settings.ATTACK_STATS_NAME),
        Stage.transfer_eval: (
            ReportKind.transfer_summary,
            settings.TRANSFER_STATS_NAME,
        ),
    }
    cell_reports = {
        Stage.attack_eval: (ReportKind.attack, settings.ATTACK_REPORT_NAME),
        Stage.transfer_eval: (ReportKind.transfer, settings.TRANSFER_REPORT_NAME),
    }
    summaries: Dict[ReportKind, List[Dict]] = {
        kind: [] for kind, _ in summary_artifacts.values()
    }
    sources: Dict[ReportKind, List[Tuple[Tuple[str, int], pathlib.Path]]] = {
        kind: [] for kind, _ in cell_reports.values()
    }

    for record in manifest.stages:
        if not record.succeeded or record.stage not in summary_artifacts:
            continue

        kind, stats_name = summary_artifacts[record.stage]
        stats_path = _artifact(layout, record, stats_name)
        if stats_path is None:
            continue

        row = load_json(stats_path)
        summaries[kind].append(row)

        if record.stage in cell_reports:
            report_kind, report_name = cell_reports[record.stage]
            report_path = _artifact(layout, record, report_name)
            if report_path is not None:
                sources[report_kind].append((_row_order(row), report_path))

    written: List[pathlib.Path] = []

    for kind, name in cell_reports.values():
        if sources[kind]:
            path = reports_dir / name
            ordered = sorted(sources[kind], key=lambda item: item[0])
            _concat_reports(kind, [source for _, source in ordered], path)
            written.append(path)

    summary_names = {
        ReportKind.victim_summary: settings.VICTIM_SUMMARY_NAME,
        ReportKind.imitation_summary: settings.IMITATION_SUMMARY_NAME,
        ReportKind.attack_summary: settings.ATTACK_SUMMARY_NAME,
        ReportKind.transfer_summary: settings.TRANSFER_SUMMARY_NAME,
    }
    for kind, rows in summaries.items():
        if rows:
            rows = sorted(rows, key=_row_order)
            written.append(emit_report(kind, rows, reports_dir / summary_names[kind]))

    return [layout.relative(path) for path in written]


def render_plots(layout: RunLayout, manifest: RunManifest) -> None:
    from .plots import plot_report

    curves = {
        settings.VICTIM_CURVE_NAME: 20,
        settings.IMITATION_CURVE_NAME: 20,
        settings.ADVERSARY_CURVE_NAME: 20,
        settings.IMITATION_LOG_NAME: 1,
    }

    for record in manifest.stages:
        if not record.succeeded:
            continue

        for artifact in record.artifacts:
            window = curves.get(pathlib.PurePosixPath(artifact).name)
            if window is None:
                continue

            path = layout.root / artifact
            try:
                plot_report(
                    path,
                    layout.plots_dir / "{}-{}.png".format(record.cell_id, path.stem),
                    window=window,
                    title="{} {}".format(record.cell_id, path.stem),
                )
            except ValueError:
                logger.warning("Nothing to plot in {}".format(path))


def exit_code(manifest: RunManifest) -> int:
    return min(manifest.failed_count, MAX_EXIT_CODE)
