import os
import platform
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import prefect
import scipy
import typer
from pydantic import ValidationError
from rich.table import Table
from typer import Context, Exit

import uosdetect
from uosdetect import __version__
from uosdetect.bounds import bound_report, render_bound_report
from uosdetect.cli.config import RunConfig, load_config
from uosdetect.cli.plotting import line_plot, overlay_plot
from uosdetect.detect import detect, prepare
from uosdetect.errors import ConfigError, DimensionMismatch, RankDeficient, UoSError
from uosdetect.geometry import UnionModel, learn_basis_svd, orthonormalize, union_geometry
from uosdetect.io import read_labels, read_matrix, write_matrix, write_table
from uosdetect.noise import NoiseModel, NoiseRegime, inverse_sqrt
from uosdetect.sim import (
    CURVE_COLUMNS,
    Scenario,
    angle_sweep,
    baseline_comparison,
    calibrate_threshold,
    calibrate_thresholds,
    gap_experiment,
    known_prep,
    n0_sweep,
    noise_geometry_experiment,
    regime_comparison,
    roc_sweep,
    simulate_pair,
)
from uosdetect.utilities.jinja import report_env
from uosdetect.utilities.logging import get_logger
from uosdetect.utilities.rich import console, err_console

logger = get_logger(__name__)

app = typer.Typer(no_args_is_help=True)

CONFIG_ERROR = 2
NUMERIC_ERROR = 3


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


@dataclass
class CLIState:
    seed: Optional[int] = None
    output_dir: Optional[Path] = None
    plots: Optional[bool] = None


ConfigOption = Annotated[
    Path, typer.Option("--config", "-c", help="TOML run configuration.")
]


@contextmanager
def handle_errors():
    """Map failures to exit codes: 2 for configuration and I/O, 3 for numerics."""
    try:
        yield
    except (ConfigError, ValidationError, OSError) as exc:
        err_console.print(f"Configuration error: {exc}", style="red", markup=False)
        raise Exit(CONFIG_ERROR)
    except UoSError as exc:
        err_console.print(
            f"Numeric error ({type(exc).__name__}): {exc}", style="red", markup=False
        )
        raise Exit(NUMERIC_ERROR)


def _state(ctx: Context) -> CLIState:
    return ctx.obj if isinstance(ctx.obj, CLIState) else CLIState()


def _load(ctx: Context, config_path: Path) -> tuple[RunConfig, Scenario]:
    config = load_config(config_path)
    seed = _state(ctx).seed
    if seed is None:
        seed = uosdetect.settings.seed
    return config, config.build_scenario(seed)


def _output_dir(ctx: Context, config: Optional[RunConfig] = None) -> Path:
    path = _state(ctx).output_dir
    if path is None and config is not None and config.output_dir is not None:
        path = config.resolve(config.output_dir)
    if path is None:
        path = uosdetect.settings.output_dir
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"Cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"Output directory {path} is not writable")
    return path


def _plots(ctx: Context, config: RunConfig) -> bool:
    plots = _state(ctx).plots
    if plots is not None:
        return plots
    return config.plots and uosdetect.settings.plots


def _summary(command: str, scenario: Scenario, outputs: list[Path]) -> None:
    text = report_env.get_template("run_summary.jinja").render(
        command=command, scenario=scenario, outputs=outputs
    )
    console.print(text, markup=False, highlight=False)


@app.callback()
def main(
    ctx: Context,
    workers: Annotated[
        Optional[int], typer.Option("--workers", min=1, help="Monte-Carlo workers.")
    ] = None,
    seed: Annotated[
        Optional[int], typer.Option("--seed", min=0, help="Overrides UOS_SEED and the config seed.")
    ] = None,
    output_dir: Annotated[
        Optional[Path], typer.Option("--output-dir", help="Directory for CSV and SVG outputs.")
    ] = None,
    no_plots: Annotated[bool, typer.Option("--no-plots", help="Skip SVG plots.")] = False,
    log_level: Annotated[Optional[LogLevel], typer.Option("--log-level")] = None,
):
    """Union-of-subspaces detection experiments."""
    if workers is not None:
        uosdetect.settings.workers = workers
    if log_level is not None:
        uosdetect.settings.log_level = log_level.value
    ctx.obj = CLIState(
        seed=seed, output_dir=output_dir, plots=False if no_plots else None
    )


@app.command()
def calibrate(
    ctx: Context,
    config_path: ConfigOption,
    target_pfa: Annotated[
        Optional[float], typer.Option("--target-pfa", help="Defaults to [bounds] target_pfa.")
    ] = None,
    calibration_trials: Annotated[Optional[int], typer.Option("--calibration-trials", min=1)] = None,
):
    """Calibrate the threshold for a target false alarm rate."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        target = config.bounds.target_pfa if target_pfa is None else target_pfa
        if not 0 < target <= 1:
            raise ConfigError(f"--target-pfa must lie in (0, 1], got {target}")
        trials = calibration_trials or config.calibration_trials or scenario.trials
        gamma_bar = calibrate_threshold(scenario, target, trials)
        path = write_table(
            _output_dir(ctx, config) / "calibration.csv",
            ("target_pfa", "gamma_bar", "calibration_trials", "seed"),
            [(target, gamma_bar, trials, scenario.seed)],
        )
        console.print(f"gamma_bar = {gamma_bar!r}", highlight=False)
        _summary("calibrate", scenario, [path])


@app.command()
def roc(ctx: Context, config_path: ConfigOption):
    """ROC curve with bounds at every calibrated point."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        points = roc_sweep(
            scenario,
            config.roc.target_pfa,
            calibration_trials=config.calibration_trials,
            eta0=config.roc.eta0,
        )
        out = _output_dir(ctx, config)
        outputs = [write_table(out / "roc.csv", CURVE_COLUMNS, [p.row() for p in points])]
        if _plots(ctx, config):
            outputs.append(
                line_plot(
                    out / "roc.svg",
                    [p.pfa for p in points],
                    {
                        "P_D": [p.pd for p in points],
                        "P_C": [p.pc for p in points],
                        "P_D upper bound": [p.pd_ub for p in points],
                        "P_D lower bound": [p.pd_lb for p in points],
                        "P_C Frechet bound": [p.pc_lb_frechet_mean for p in points],
                        "P_C Bessel bound": [p.pc_lb_bessel_mean for p in points],
                    },
                    "P_FA",
                    "probability",
                    f"ROC, {scenario.regime.value}",
                )
            )
        _summary("roc", scenario, outputs)


@app.command("compare-regimes")
def compare_regimes(ctx: Context, config_path: ConfigOption):
    """ROC curves of the same geometry under all three noise regimes."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        curves = regime_comparison(
            scenario,
            config.roc.target_pfa,
            calibration_trials=config.calibration_trials,
            eta0=config.roc.eta0,
        )
        out = _output_dir(ctx, config)
        outputs = [
            write_table(
                out / f"roc_{regime.value.replace('-', '_')}.csv",
                CURVE_COLUMNS,
                [p.row() for p in points],
            )
            for regime, points in curves.items()
        ]
        if _plots(ctx, config):
            outputs.append(
                overlay_plot(
                    out / "roc_regimes.svg",
                    {
                        regime.value: ([p.pfa for p in points], [p.pd for p in points])
                        for regime, points in curves.items()
                    },
                    "P_FA",
                    "P_D",
                    "ROC by noise regime",
                )
            )
        _summary("compare-regimes", scenario, outputs)


@app.command("angle-sweep")
def angle_sweep_command(ctx: Context, config_path: ConfigOption):
    """Sweep the principal angles of the second subspace to the first."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        points = angle_sweep(
            scenario,
            config.angle_sweep.angles,
            target_pfa=config.angle_sweep.target_pfa,
            calibration_trials=config.calibration_trials,
            path=config.sweep_path(),
        )
        n = scenario.union.subspace_dim
        k0 = scenario.union.n_subspaces
        columns = (
            [f"requested_angle_{i + 1}" for i in range(n)]
            + [
                "whitened_angle_min",
                "whitened_angle_sum",
                "whitened_angle_nearest",
                "duplicate_flag",
                "gamma_bar",
                "pd",
                "pd_se",
                "pc",
                "pc_se",
            ]
            + [f"pc_{k + 1}" for k in range(k0)]
            + [f"pd_{k + 1}" for k in range(k0)]
        )
        rows = [
            [*p.requested_angles]
            + [
                p.whitened_angle_min,
                p.whitened_angle_sum,
                p.whitened_angle_nearest,
                p.duplicate_flag,
                p.gamma_bar,
                p.summary.pd,
                p.summary.pd_se,
                p.summary.pc,
                p.summary.pc_se,
            ]
            + [*p.summary.class_pc]
            + [*p.summary.class_pd]
            for p in points
        ]
        out = _output_dir(ctx, config)
        outputs = [write_table(out / "angle_sweep.csv", columns, rows)]
        if _plots(ctx, config):
            series = {"P_D": [p.summary.pd for p in points]}
            for k in range(k0):
                series[f"P_C class {k + 1}"] = [p.summary.class_pc[k] for p in points]
            outputs.append(
                line_plot(
                    out / "angle_sweep.svg",
                    [p.whitened_angle_min for p in points],
                    series,
                    "whitened minimum principal angle S1-S2 (rad)",
                    "probability",
                )
            )
        _summary("angle-sweep", scenario, outputs)


@app.command("noise-geometry")
def noise_geometry(ctx: Context, config_path: ConfigOption):
    """Per-subspace performance for subspaces aligned with the noise eigenvectors."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        section = config.noise_geometry
        rows = noise_geometry_experiment(
            scenario,
            condition=section.condition,
            perturbation=section.perturbation,
            target_pfa=section.target_pfa,
            calibration_trials=config.calibration_trials,
        )
        out = _output_dir(ctx, config)
        columns = ("subspace", "mean_xbar_norm", "pd", "pd_se", "pc", "pc_se")
        path = write_table(
            out / "noise_geometry.csv",
            columns,
            [(r.subspace + 1, r.mean_xbar_norm, r.pd, r.pd_se, r.pc, r.pc_se) for r in rows],
        )
        table = Table(*columns, title="Noise geometry")
        for r in rows:
            table.add_row(
                str(r.subspace + 1), f"{r.mean_xbar_norm:.4f}", f"{r.pd:.4f}",
                f"{r.pd_se:.4f}", f"{r.pc:.4f}", f"{r.pc_se:.4f}",
            )
        console.print(table)
        _summary("noise-geometry", scenario, [path])


@app.command()
def gap(ctx: Context, config_path: ConfigOption):
    """P_D - P_C over the P_FA grid at several SNRs."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        rows = gap_experiment(
            scenario,
            config.gap.snr_db,
            config.roc.target_pfa,
            calibration_trials=config.calibration_trials,
        )
        out = _output_dir(ctx, config)
        outputs = [
            write_table(
                out / "gap.csv",
                ("snr_db", "target_pfa", "pd", "pc", "gap", "gap_se"),
                [(r.snr_db, r.target_pfa, r.pd, r.pc, r.gap, r.gap_se) for r in rows],
            )
        ]
        if _plots(ctx, config):
            outputs.append(
                overlay_plot(
                    out / "gap.svg",
                    {
                        f"SNR {snr} dB": (
                            [r.target_pfa for r in rows if r.snr_db == snr],
                            [r.gap for r in rows if r.snr_db == snr],
                        )
                        for snr in config.gap.snr_db
                    },
                    "P_FA",
                    "P_D - P_C",
                )
            )
        _summary("gap", scenario, outputs)


def _parse_n0(value: Optional[str]) -> Optional[list[int]]:
    if value is None:
        return None
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"--n0 must be a comma separated list of integers: {value}") from exc


@app.command("n0-sweep")
def n0_sweep_command(
    ctx: Context,
    config_path: ConfigOption,
    n0: Annotated[Optional[str], typer.Option("--n0", help="e.g. 8,200")] = None,
):
    """Known-regime ROC against the unknown-covariance ROC for several N0."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        n0_list = _parse_n0(n0) or config.n0_sweep.n0
        rows, mean_gaps = n0_sweep(
            scenario,
            n0_list,
            config.roc.target_pfa,
            calibration_trials=config.calibration_trials,
        )
        out = _output_dir(ctx, config)
        outputs = [
            write_table(
                out / "n0_sweep.csv",
                ("n0", "target_pfa", "pd_known", "pd_unknown_cov", "abs_gap"),
                [(r.n0, r.target_pfa, r.pd_known, r.pd_unknown_cov, r.abs_gap) for r in rows],
            )
        ]
        if _plots(ctx, config):
            curves = {
                "known": (
                    [r.target_pfa for r in rows if r.n0 == n0_list[0]],
                    [r.pd_known for r in rows if r.n0 == n0_list[0]],
                )
            }
            for value in n0_list:
                curves[f"N0 = {value}"] = (
                    [r.target_pfa for r in rows if r.n0 == value],
                    [r.pd_unknown_cov for r in rows if r.n0 == value],
                )
            outputs.append(overlay_plot(out / "n0_sweep.svg", curves, "P_FA", "P_D"))
        for value, mean_gap in mean_gaps.items():
            console.print(f"N0 = {value}: mean |P_D gap| = {mean_gap!r}", highlight=False)
        _summary("n0-sweep", scenario, outputs)


@app.command()
def baseline(ctx: Context, config_path: ConfigOption):
    """Union detector against the direct-sum detector at shared thresholds."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        gammas = calibrate_thresholds(
            scenario, config.baseline.target_pfa, config.calibration_trials
        )
        rows = baseline_comparison(scenario, gammas)
        columns = (
            "gamma_bar", "uos_pfa", "uos_pfa_se", "uos_pd", "uos_pd_se",
            "sum_pfa", "sum_pfa_se", "sum_pd", "sum_pd_se",
        )
        path = write_table(
            _output_dir(ctx, config) / "baseline.csv",
            columns,
            [tuple(getattr(r, c) for c in columns) for r in rows],
        )
        _summary("baseline", scenario, [path])


@app.command()
def geometry(ctx: Context, config_path: ConfigOption):
    """Pairwise principal angles of the configured union."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        plain = union_geometry(scenario.union)
        whitened = union_geometry(scenario.union, inverse_sqrt(scenario.noise_covariance))
        k0 = scenario.union.n_subspaces
        columns = ("i", "j", "min_angle", "angle_sum", "whitened_min_angle", "whitened_angle_sum")
        rows = [
            (
                i + 1,
                j + 1,
                plain.min_angles[i, j],
                plain.angle_sums[i, j],
                whitened.min_angles[i, j],
                whitened.angle_sums[i, j],
            )
            for i in range(k0)
            for j in range(i + 1, k0)
        ]
        path = write_table(_output_dir(ctx, config) / "geometry.csv", columns, rows)
        table = Table(*columns, title="Principal angles (rad)")
        for row in rows:
            table.add_row(str(row[0]), str(row[1]), *(f"{v:.4f}" for v in row[2:]))
        console.print(table)
        for k, value in enumerate(whitened.cumulative_min):
            console.print(f"subspace {k + 1}: cumulative whitened minimum angle {value:.4f}")
        if whitened.near_identical:
            console.print(f"near-identical pairs: {list(whitened.near_identical)}", style="yellow")
        _summary("geometry", scenario, [path])


@app.command()
def bounds(ctx: Context, config_path: ConfigOption):
    """All bounds at one calibrated threshold."""
    with handle_errors():
        config, scenario = _load(ctx, config_path)
        gamma_bar = calibrate_threshold(
            scenario, config.bounds.target_pfa, config.calibration_trials
        )
        null_batch, signal_batch = simulate_pair(scenario)
        report = bound_report(
            null_batch,
            signal_batch,
            scenario.priors,
            gamma_bar,
            eta0=config.bounds.eta0,
            scenario_id=scenario.scenario_id,
            prep=known_prep(scenario),
        )
        k0 = report.n_subspaces
        columns = [
            "regime", "gamma_bar", "scenario_id", "pfa_upper",
            "pd_upper", "pd_lower", "pd_lower_union",
        ]
        row = [
            report.regime.value, report.gamma_bar, report.scenario_id, report.pfa_upper,
            report.pd_upper, report.pd_lower, report.pd_lower_union,
        ]
        for k in range(k0):
            columns += [
                f"pc_lower_frechet_{k + 1}",
                f"pc_lower_bessel_{k + 1}",
                f"pc_lower_bessel_p05_{k + 1}",
                f"pc_lower_bessel_p95_{k + 1}",
            ]
            row += [
                report.pc_lower_frechet[k],
                report.pc_lower_bessel[k],
                report.pc_lower_bessel_p05[k],
                report.pc_lower_bessel_p95[k],
            ]
        path = write_table(_output_dir(ctx, config) / "bounds.csv", columns, [row])
        console.print(render_bound_report(report), markup=False, highlight=False)
        _summary("bounds", scenario, [path])


@app.command("learn-bases")
def learn_bases(
    ctx: Context,
    data: Annotated[Path, typer.Argument(help="m x p samples, one per column.")],
    labels: Annotated[Path, typer.Argument(help="One integer label per sample.")],
    dim: Annotated[int, typer.Option("--dim", min=1, help="Subspace dimension.")],
):
    """Learn one orthonormal basis per class from labelled samples."""
    with handle_errors():
        samples = read_matrix(data)
        classes = read_labels(labels)
        if len(classes) != samples.shape[1]:
            raise ConfigError(
                f"{len(classes)} labels for {samples.shape[1]} samples"
            )
        out = _output_dir(ctx)
        failures = []
        for label in np.unique(classes):
            try:
                basis = learn_basis_svd(samples[:, classes == label], dim)
            except (RankDeficient, DimensionMismatch) as exc:
                failures.append(f"class {label}: {exc}")
                continue
            path = write_matrix(out / f"basis_{label}.csv", basis.basis)
            console.print(f"class {label}: wrote {path}", highlight=False)
        if failures:
            for failure in failures:
                err_console.print(failure, style="red", markup=False)
            raise Exit(NUMERIC_ERROR)


def _basis_files(bases_dir: Path) -> list[tuple[int, Path]]:
    files = []
    for path in bases_dir.glob("basis_*.csv"):
        try:
            files.append((int(path.stem.split("_", 1)[1]), path))
        except ValueError as exc:
            raise ConfigError(f"Cannot read a class label from {path.name}") from exc
    if not files:
        raise ConfigError(f"No basis_<label>.csv files in {bases_dir}")
    return sorted(files)


@app.command("detect-batch")
def detect_batch(
    ctx: Context,
    bases_dir: Annotated[Path, typer.Option("--bases-dir", help="Directory of basis_<label>.csv files.")],
    data: Annotated[Path, typer.Option("--data", help="m x N observations, one per column.")],
    gamma_bar: Annotated[float, typer.Option("--gamma-bar")],
    regime: Annotated[NoiseRegime, typer.Option("--regime")] = NoiseRegime.KNOWN,
    sigma2: Annotated[Optional[float], typer.Option("--sigma2")] = None,
    covariance: Annotated[Optional[Path], typer.Option("--covariance")] = None,
    training: Annotated[Optional[Path], typer.Option("--training", help="m x N0 noise-only samples.")] = None,
):
    """Detect and classify every observation of a data file."""
    with handle_errors():
        if regime.uses_sigma2 and sigma2 is None:
            raise ConfigError(f"--sigma2 is required for the {regime.value} regime")
        if regime.uses_training and training is None:
            raise ConfigError(f"--training is required for the {regime.value} regime")

        files = _basis_files(bases_dir)
        labels = [label for label, _ in files]
        observations = read_matrix(data)
        try:
            union = UnionModel(
                subspaces=tuple(orthonormalize(read_matrix(path)) for _, path in files)
            )
            if observations.shape[0] != union.ambient_dim:
                raise DimensionMismatch(
                    f"Observations live in R^{observations.shape[0]}, bases in R^{union.ambient_dim}"
                )
            if regime is NoiseRegime.KNOWN:
                noise = NoiseModel(
                    regime=regime,
                    sigma2=sigma2,
                    covariance=(
                        read_matrix(covariance) if covariance else np.eye(union.ambient_dim)
                    ),
                )
            else:
                noise = NoiseModel(
                    regime=regime, sigma2=sigma2, training_samples=read_matrix(training)
                )
            prep = prepare(union, noise)
        except DimensionMismatch as exc:
            raise ConfigError(str(exc)) from exc

        rows = []
        for index in range(observations.shape[1]):
            outcome = detect(prep, observations[:, index], gamma_bar)
            rows.append(
                (index, labels[outcome.khat], outcome.statistic, outcome.signal_detected)
            )
        path = write_table(
            _output_dir(ctx) / "decisions.csv",
            ("index", "khat", "statistic", "detected"),
            rows,
        )
        detected = [row for row in rows if row[3]]
        counts = ", ".join(
            f"{label}: {sum(1 for row in detected if row[1] == label)}" for label in labels
        )
        console.print(
            f"{len(rows)} observations, {len(detected)} detected ({counts}); wrote {path}",
            highlight=False,
        )


@app.command()
def version(ctx: Context):
    if ctx.resilient_parsing:
        return

    info = {
        "uosdetect version": __version__,
        "NumPy version": np.__version__,
        "SciPy version": scipy.__version__,
        "Prefect version": prefect.__version__,
        "Python version": platform.python_version(),
        "Platform": platform.platform(),
        "Path": Path(__file__).resolve().parents[3],
    }

    g = Table.grid(padding=(0, 1))
    g.add_column(justify="right")
    g.add_column()
    for k, v in info.items():
        g.add_row(k + ":", str(v).replace("\n", " "))
    console.print(g)

    raise Exit()


if __name__ == "__main__":
    app()
