from pathlib import Path
from typing import List, Optional

import typer
from typer import Argument, Option

app = typer.Typer()

CONFIG_OPTION = Option(None, help="Experiment config file (JSON)", dir_okay=False)
SEED_OPTION = Option(None, help="Master seed, overrides the config file")
OUT_OPTION = Option(None, help="Run directory, overrides the config file")
VICTIM_OPTION = Option(None, help="Restrict the run to these victim ids")
DEMOS_OPTION = Option(None, help="Demonstration counts, override the config file")
WORKERS_OPTION = Option(None, help="Number of processes running victim chains")


def _run_stage(
    stage: Optional[str],
    config: Optional[Path],
    seed: Optional[int],
    out: Optional[Path],
    victim: Optional[List[str]],
    demos: Optional[List[int]],
    workers: Optional[int],
) -> None:
    from shadowpolicy.harness import Stage, apply_overrides, load_config
    from shadowpolicy.harness.pipeline import exit_code, run_pipeline
    from shadowpolicy.utils import get_logger

    get_logger()
    cfg = apply_overrides(
        load_config(config),
        seed=seed,
        out=out,
        victims=victim,
        demos=demos,
        workers=workers,
    )
    targets = [Stage(stage)] if stage is not None else None
    manifest = run_pipeline(cfg, targets)
    code = exit_code(manifest)

    if code:
        typer.echo("{} stage(s) failed, see {}".format(code, cfg.output_dir), err=True)
        raise typer.Exit(code=code)


@app.command()
def train_target(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Train the DQN victims and evaluate them."""
    _run_stage("train-target", config, seed, out, victim, None, workers)


@app.command()
def collect_demos(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    demos: Optional[List[int]] = DEMOS_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Record victim demonstrations for every demonstration count."""
    _run_stage("collect-demos", config, seed, out, victim, demos, workers)


@app.command()
def imitate(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    demos: Optional[List[int]] = DEMOS_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Train imitation Q-functions from the recorded demonstrations."""
    _run_stage("imitate", config, seed, out, victim, demos, workers)


@app.command()
def attack_train(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    demos: Optional[List[int]] = DEMOS_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Train one perturbation adversary per (victim, demonstration count) cell."""
    _run_stage("attack-train", config, seed, out, victim, demos, workers)


@app.command()
def attack_eval(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    demos: Optional[List[int]] = DEMOS_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Evaluate the trained adversaries: regret and perturbation counts."""
    _run_stage("attack-eval", config, seed, out, victim, demos, workers)


@app.command()
def transfer_eval(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    demos: Optional[List[int]] = DEMOS_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Count adversarial states crafted on the imitation that fool the victim."""
    _run_stage("transfer-eval", config, seed, out, victim, demos, workers)


@app.command()
def crop_eval(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Sweep the CRoP tolerance and measure the return/imitation trade-off."""
    _run_stage("crop-eval", config, seed, out, victim, None, workers)


@app.command()
def pipeline(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    victim: Optional[List[str]] = VICTIM_OPTION,
    demos: Optional[List[int]] = DEMOS_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
) -> None:
    """Run every stage; completed stages with unchanged inputs are skipped."""
    _run_stage(None, config, seed, out, victim, demos, workers)


@app.command()
def plot(
    csv_path: Path = Argument(..., exists=True, dir_okay=False),
    output: Path = Option(..., help="Image file to write", dir_okay=False),
    window: int = Option(1, help="Moving-average window"),
    title: Optional[str] = None,
) -> None:
    """Plot a training-curve or imitation-log CSV."""
    from shadowpolicy.harness.plots import plot_report
    from shadowpolicy.utils import get_logger

    get_logger()
    plot_report(csv_path, output, window=window, title=title)


def main() -> None:
    app()
