"""Bodies of the pipeline stages: load inputs, compute, write artifacts."""
import dataclasses
import pathlib

from shadowpolicy import settings
from shadowpolicy.agents import (
    DqfdConfig,
    DqnConfig,
    GreedyPolicy,
    collect_demonstrations,
    load_demonstrations,
    save_demonstrations,
    split_demonstrations,
)
from shadowpolicy.agents.dqfd import demonstration_agreement, dqfd_train
from shadowpolicy.agents.dqn import evaluate_policy, train_dqn
from shadowpolicy.attacks import (
    AdversaryConfig,
    FgsmConfig,
    evaluate_attack,
    run_transfer_eval,
    train_adversary,
)
from shadowpolicy.defenses import evaluate_crop
from shadowpolicy.ml.approximator import load_checkpoint, save_checkpoint
from shadowpolicy.utils import dump_json, get_logger

from ._enum import ReportKind
from .config import CropSweepConfig, VictimSpec
from .reports import (
    attack_rows,
    attack_summary_row,
    crop_rows,
    curve_rows,
    emit_report,
    imitation_log_rows,
    imitation_summary_row,
    transfer_rows,
    transfer_summary_row,
    victim_summary_row,
)

logger = get_logger(__name__)


def reseed_dqn(cfg: DqnConfig, seed: int) -> DqnConfig:
    return dataclasses.replace(
        cfg, seed=seed, network=dataclasses.replace(cfg.network, seed=seed)
    )


def reseed_dqfd(cfg: DqfdConfig, seed: int) -> DqfdConfig:
    return dataclasses.replace(
        cfg, seed=seed, network=dataclasses.replace(cfg.network, seed=seed)
    )


def reseed_adversary(cfg: AdversaryConfig, seed: int) -> AdversaryConfig:
    return dataclasses.replace(cfg, seed=seed, dqn=reseed_dqn(cfg.dqn, seed))


def train_target(
    spec: VictimSpec,
    seed: int,
    eval_episodes: int,
    eval_seed: int,
    victim_dir: pathlib.Path,
) -> None:
    victim_dir.mkdir(parents=True, exist_ok=True)
    network, curve = train_dqn(reseed_dqn(spec.dqn, seed))
    save_checkpoint(victim_dir / settings.VICTIM_CHECKPOINT_NAME, network)
    emit_report(
        ReportKind.training_curve,
        curve_rows(curve),
        victim_dir / settings.VICTIM_CURVE_NAME,
    )

    stats = evaluate_policy(GreedyPolicy(network), eval_episodes, eval_seed)
    logger.info(
        "Victim {}: mean return {:.2f} over {} episodes".format(
            spec.victim_id, stats.mean, eval_episodes
        )
    )
    dump_json(
        victim_dir / settings.VICTIM_STATS_NAME,
        victim_summary_row(spec.victim_id, stats),
    )


def collect_demos(
    victim_path: pathlib.Path, count: int, seed: int, output_path: pathlib.Path
) -> None:
    victim = GreedyPolicy(load_checkpoint(victim_path))
    demos = collect_demonstrations(victim, count, seed)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    save_demonstrations(output_path, demos)


def imitate(
    victim_id: str,
    demo_count: int,
    demos_path: pathlib.Path,
    cfg: DqfdConfig,
    seed: int,
    cell_dir: pathlib.Path,
) -> None:
    demos = load_demonstrations(demos_path)

    if demos.episode_count < 2:
        logger.warning(
            "{} demonstrations span a single episode: agreement is measured on "
            "the training set".format(demo_count)
        )
        train, holdout = demos, demos
    else:
        train, holdout = split_demonstrations(demos, cfg.holdout_fraction, seed)
        if holdout.count == 0:
            holdout = train

    dqfd_cfg = reseed_dqfd(cfg, seed)
    result = dqfd_train(train, dqfd_cfg)
    agreement = demonstration_agreement(result.network, holdout)
    logger.info(
        "Imitation of {} from {} demonstrations: held-out agreement {:.3f}".format(
            victim_id, demo_count, agreement
        )
    )

    if train.count < demos.count:
        # the saved imitation learns from every demonstration of the cell
        result = dqfd_train(demos, dqfd_cfg)

    save_checkpoint(cell_dir / settings.IMITATION_CHECKPOINT_NAME, result.network)
    emit_report(
        ReportKind.imitation_log,
        imitation_log_rows(result.log),
        cell_dir / settings.IMITATION_LOG_NAME,
    )
    emit_report(
        ReportKind.training_curve,
        curve_rows(result.curve),
        cell_dir / settings.IMITATION_CURVE_NAME,
    )
    dump_json(
        cell_dir / settings.IMITATION_STATS_NAME,
        imitation_summary_row(victim_id, demo_count, agreement),
    )


def attack_train(
    victim_path: pathlib.Path,
    imitation_path: pathlib.Path,
    cfg: AdversaryConfig,
    seed: int,
    cell_dir: pathlib.Path,
) -> None:
    victim = GreedyPolicy(load_checkpoint(victim_path))
    q_tilde = load_checkpoint(imitation_path)
    adversary, curve = train_adversary(victim, q_tilde, reseed_adversary(cfg, seed))
    save_checkpoint(cell_dir / settings.ADVERSARY_CHECKPOINT_NAME, adversary)
    emit_report(
        ReportKind.training_curve,
        curve_rows(curve),
        cell_dir / settings.ADVERSARY_CURVE_NAME,
    )


def attack_eval(
    victim_id: str,
    demo_count: int,
    victim_path: pathlib.Path,
    imitation_path: pathlib.Path,
    adversary_path: pathlib.Path,
    cfg: AdversaryConfig,
    episodes: int,
    seed: int,
    cell_dir: pathlib.Path,
) -> None:
    report = evaluate_attack(
        load_checkpoint(adversary_path),
        GreedyPolicy(load_checkpoint(victim_path)),
        load_checkpoint(imitation_path),
        episodes,
        seed,
        cost=cfg.cost,
        r_max=cfg.r_max,
    )
    emit_report(
        ReportKind.attack,
        attack_rows(victim_id, demo_count, report),
        cell_dir / settings.ATTACK_REPORT_NAME,
    )
    dump_json(
        cell_dir / settings.ATTACK_STATS_NAME,
        attack_summary_row(victim_id, demo_count, report),
    )


def transfer_eval(
    victim_id: str,
    demo_count: int,
    victim_path: pathlib.Path,
    imitation_path: pathlib.Path,
    cfg: FgsmConfig,
    episodes: int,
    seed: int,
    cell_dir: pathlib.Path,
) -> None:
    q_tilde = load_checkpoint(imitation_path)
    report = run_transfer_eval(
        GreedyPolicy(load_checkpoint(victim_path)),
        GreedyPolicy(q_tilde),
        q_tilde,
        episodes,
        cfg,
        seed,
    )
    emit_report(
        ReportKind.transfer,
        transfer_rows(victim_id, demo_count, report),
        cell_dir / settings.TRANSFER_REPORT_NAME,
    )
    dump_json(
        cell_dir / settings.TRANSFER_STATS_NAME,
        transfer_summary_row(victim_id, demo_count, report),
    )


def crop_eval(
    victim_path: pathlib.Path,
    sweep: CropSweepConfig,
    dqfd_cfg: DqfdConfig,
    fgsm_cfg: FgsmConfig,
    seed: int,
    victim_dir: pathlib.Path,
) -> None:
    report = evaluate_crop(
        load_checkpoint(victim_path),
        sweep.omegas,
        reseed_dqfd(dqfd_cfg, seed),
        sweep.demo_count,
        sweep.episodes,
        seed,
        fgsm_cfg=fgsm_cfg,
        transfer_episodes=sweep.transfer_episodes,
        literal_inequality=sweep.literal_inequality,
    )
    emit_report(
        ReportKind.crop, crop_rows(report), victim_dir / settings.CROP_REPORT_NAME
    )
    dump_json(victim_dir / settings.CROP_STATS_NAME, {"spearman": report.spearman})
