"""
Command line interface
"""

import json as JSON
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Any, Dict, Iterator, List, Optional

import click
import typer
from click.core import ParameterSource
from rich.console import Console
from rich.logging import RichHandler

from gfstool._seeding import derive_seed
from gfstool.data import (
    DatasetException,
    generate_synthetic,
    load_csv,
    project_features,
    save_csv,
    stratified_folds,
    subsample,
)
from gfstool.greedy import (
    GreedyConfig,
    GreedyConfigException,
    GreedyTrace,
    StepException,
    format_table,
    run_greedy,
)
from gfstool.kernel_lab import KernelException, alignment_trace, save_alignment_trace
from gfstool.metrics import MetricsException, confusion, score_suite, summarize
from gfstool.mlp import MlpConfig
from gfstool.models import (
    ModelConfigException,
    ModelFormatException,
    PredictionException,
    TrainingException,
    fit_pipeline,
    load_model,
    make_classifier,
    save_model,
)
from gfstool.search import HyperSearchSpec, SearchException, random_search_cv
from gfstool.svm import SvmConfig
from gfstool.vc_lab import VcInputException, find_shattered_set

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

app = typer.Typer(no_args_is_help=True)

console = Console()


class ConfigFileException(Exception):
    """
    Raised when a --config file is unreadable, names unknown settings, or a
    required setting is missing
    """


_EXIT_CODES = (
    ((ConfigFileException, GreedyConfigException, ModelConfigException), EXIT_CONFIG),
    (
        (
            DatasetException,
            MetricsException,
            ModelFormatException,
            PredictionException,
            VcInputException,
        ),
        EXIT_DATA,
    ),
    (
        (TrainingException, SearchException, StepException, KernelException),
        EXIT_NUMERICAL,
    ),
)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Report library errors on stderr and exit with their code"""
    try:
        yield
    except Exception as e:  # pylint: disable=broad-exception-caught
        for kinds, code in _EXIT_CODES:
            if isinstance(e, kinds):
                typer.echo(f"Error: {e}", err=True)
                raise typer.Exit(code) from e
        raise


def _settings(ctx: typer.Context) -> Dict[str, Any]:
    """
    The command's parameters, with --config file values filling every
    parameter not given on the command line
    """
    settings = dict(ctx.params)
    path = settings.get("config")
    if path is None:
        return settings
    try:
        data = JSON.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, JSON.JSONDecodeError) as e:
        raise ConfigFileException(f"Cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigFileException(f"Config file {path} must hold a JSON object")

    params = {p.name: p for p in ctx.command.params}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in params or name == "config":
            raise ConfigFileException(f"Unknown config key '{key}' in {path}")
        if ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE:
            continue
        try:
            settings[name] = params[name].type_cast_value(ctx, value)
        except click.BadParameter as e:
            raise ConfigFileException(f"Config key '{key}': {e.message}") from e
    return settings


def _seed(settings: Dict[str, Any]) -> int:
    if settings.get("seed") is None:
        raise ConfigFileException(
            "--seed is required, on the command line or in --config"
        )
    return int(settings["seed"])


def _options(settings: Dict[str, Any]) -> Dict[str, Any]:
    """Logger and worker count for library calls"""
    log = logging.getLogger("gfstool")
    log.handlers.clear()
    log.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    log.setLevel(logging.DEBUG if settings.get("verbose") else logging.INFO)
    log.propagate = False
    workers = settings.get("workers") or os.cpu_count() or 1
    return {"logger": log, "concurrency": workers}


def _read_trace(path: str) -> GreedyTrace:
    try:
        with open(path, "r", encoding="utf-8") as file:
            return GreedyTrace.from_dict(JSON.load(file))
    except (OSError, JSON.JSONDecodeError, KeyError, TypeError) as e:
        raise ModelFormatException(f"Cannot read trace {path}: {e}") from e


def _columns(names: List[str], available: List[str]) -> List[int]:
    missing = [name for name in names if name not in available]
    if missing:
        raise PredictionException(f"Dataset lacks feature(s) {missing}")
    return [available.index(name) for name in names]


def _write_json(data: Any, out: Optional[str]) -> None:
    text = JSON.dumps(data, indent=2) + "\n"
    if out is None:
        print(text, end="")
        return
    Path(out).write_text(text, encoding="utf-8")


ConfigOption = Annotated[
    Optional[Path],
    typer.Option(
        help="JSON file of settings keyed by option name; "
        "options given on the command line take precedence"
    ),
]
SeedOption = Annotated[
    Optional[int], typer.Option(help="Root seed of every random choice")
]
DataOption = Annotated[Path, typer.Option(help="CSV file with a header row")]
LabelOption = Annotated[str, typer.Option(help="Name of the label column")]
ClassifierOption = Annotated[
    str, typer.Option(help="Classifier inside the ranking: svm or mlp")
]
WorkersOption = Annotated[
    Optional[int],
    typer.Option(help="Parallel candidate evaluations [default: CPU count]"),
]
VerboseOption = Annotated[bool, typer.Option(help="Log debug messages")]


@app.command("synth")
def synth(  # pylint: disable=[too-many-arguments, too-many-positional-arguments, unused-argument]
    ctx: typer.Context,
    out: Annotated[Path, typer.Option(help="CSV file to write")],
    n: Annotated[int, typer.Option(help="Number of examples")] = 1000,
    d: Annotated[int, typer.Option(help="Number of features, at least 7")] = 15,
    alpha: Annotated[float, typer.Option(help="Weight of the noise features")] = -8.0,
    seed: SeedOption = None,
    config: ConfigOption = None,
) -> None:
    """
    Generate the balanced synthetic dataset and write it as CSV
    """
    with _exit_codes():
        s = _settings(ctx)
        ds = generate_synthetic(s["n"], s["d"], s["alpha"], _seed(s))
        save_csv(ds, s["out"])
        print(f"Wrote {ds.n} example(s) with {ds.d} feature(s) to {s['out']}")


@app.command("rank")
def rank(  # pylint: disable=[too-many-arguments, too-many-positional-arguments, too-many-locals, unused-argument]
    ctx: typer.Context,
    data: DataOption,
    label_col: LabelOption = "label",
    classifier: ClassifierOption = "svm",
    q: Annotated[int, typer.Option(help="Train/validation splits per candidate")] = 7,
    tau: Annotated[float, typer.Option(help="Stopping threshold")] = 0.09,
    validation_fraction: Annotated[
        float, typer.Option(help="Share of examples in each validation part")
    ] = 0.3,
    metric: Annotated[str, typer.Option(help="Score to maximise")] = "tss",
    max_features: Annotated[
        Optional[int], typer.Option(help="Stop after this many steps")
    ] = None,
    fixed_splits: Annotated[
        bool, typer.Option(help="Reuse the same splits at every step")
    ] = False,
    search: Annotated[
        bool, typer.Option(help="Tune SVM C and gamma by randomized search first")
    ] = False,
    search_draws: Annotated[int, typer.Option(help="Draws of the search")] = 10,
    search_per_step: Annotated[
        bool, typer.Option(help="Repeat the search at every step")
    ] = False,
    subsample_size: Annotated[
        Optional[int],
        typer.Option("--subsample", help="Rank on a seeded subset of this size"),
    ] = None,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out: Annotated[
        Optional[Path], typer.Option(help="JSON file for the full trace")
    ] = None,
    verbose: VerboseOption = False,
    config: ConfigOption = None,
) -> None:
    """
    Rank features greedily and print the selection table
    """
    with _exit_codes():
        s = _settings(ctx)
        root = _seed(s)
        options = _options(s)
        ds = load_csv(s["data"], s["label_col"])
        if s["subsample_size"] is not None:
            ds = subsample(ds, s["subsample_size"], root)
        cfg = GreedyConfig(
            q=s["q"],
            validation_fraction=s["validation_fraction"],
            tau=s["tau"],
            metric=s["metric"],
            classifier=s["classifier"],
            svm=SvmConfig(seed=root),
            mlp=MlpConfig(seed=root),
            search=(
                HyperSearchSpec(n_draws=s["search_draws"], seed=root)
                if s["search"]
                else None
            ),
            search_per_step=s["search_per_step"],
            max_features=s["max_features"],
            seed=root,
            fixed_splits=s["fixed_splits"],
        )
        trace = run_greedy(ds, cfg, options)
        if s["out"] is not None:
            Path(s["out"]).write_text(trace.to_json(), encoding="utf-8")
        console.print(format_table(trace))
        print(f"Stopped: {trace.stop_reason}; k* = {trace.k_star}")
        print(f"Selected: {', '.join(trace.selected_names)}")


@app.command("train")
def train(  # pylint: disable=[too-many-arguments, too-many-positional-arguments, unused-argument]
    ctx: typer.Context,
    data: DataOption,
    out: Annotated[Path, typer.Option(help="JSON file for the trained model")],
    label_col: LabelOption = "label",
    classifier: ClassifierOption = "svm",
    trace: Annotated[
        Optional[Path],
        typer.Option(help="Train on the features a rank trace selected"),
    ] = None,
    search: Annotated[
        bool, typer.Option(help="Tune SVM C and gamma by randomized search")
    ] = False,
    search_draws: Annotated[int, typer.Option(help="Draws of the search")] = 10,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    verbose: VerboseOption = False,
    config: ConfigOption = None,
) -> None:
    """
    Fit a classifier on all features, or on a trace's selection
    """
    with _exit_codes():
        s = _settings(ctx)
        root = _seed(s)
        options = _options(s)
        ds = load_csv(s["data"], s["label_col"])
        if s["trace"] is not None:
            names = _read_trace(s["trace"]).selected_names
            ds = project_features(ds, _columns(names, list(ds.names)))

        if s["classifier"] == "svm":
            svm = SvmConfig(seed=derive_seed(root, "model"))
            if s["search"]:
                spec = HyperSearchSpec(n_draws=s["search_draws"], seed=root)
                svm = random_search_cv(ds, spec, base=svm, options=options)
            model = make_classifier("svm", svm)
        elif s["search"]:
            raise GreedyConfigException("Hyperparameter search is SVM-only")
        else:
            model = make_classifier(
                s["classifier"], MlpConfig(seed=derive_seed(root, "model"))
            )

        pipeline = fit_pipeline(model, ds)
        save_model(pipeline, s["out"])
        print(
            f"Wrote {pipeline.kind} model on {len(pipeline.feature_names)} "
            f"feature(s) to {s['out']}"
        )


@app.command("eval")
def evaluate(  # pylint: disable=[too-many-arguments, too-many-positional-arguments, unused-argument]
    ctx: typer.Context,
    model: Annotated[Path, typer.Option(help="Model JSON written by train")],
    data: DataOption,
    label_col: LabelOption = "label",
    splits: Annotated[
        int, typer.Option(help="Disjoint stratified parts to score separately")
    ] = 5,
    seed: SeedOption = None,
    out: Annotated[
        Optional[Path], typer.Option(help="JSON file for the score summary")
    ] = None,
    config: ConfigOption = None,
) -> None:
    """
    Score a trained model on parts of a test set, mean and std per score
    """
    with _exit_codes():
        s = _settings(ctx)
        root = _seed(s)
        pipeline = load_model(s["model"])
        ds = load_csv(s["data"], s["label_col"])
        parts = stratified_folds(ds.y, s["splits"], derive_seed(root, "eval"))
        reports = []
        for part in parts:
            test = ds.take(part.valid_idx)
            predicted = pipeline.predict_dataset(test)
            reports.append(score_suite(confusion(predicted, test.y)))
        _write_json(
            {"splits": len(reports), "scores": summarize(reports)},
            None if s["out"] is None else str(s["out"]),
        )


@app.command("align")
def align(  # pylint: disable=[too-many-arguments, too-many-positional-arguments, unused-argument]
    ctx: typer.Context,
    data: DataOption,
    label_col: LabelOption = "label",
    trace: Annotated[
        Optional[Path],
        typer.Option(help="Follow a rank trace's feature order [default: file order]"),
    ] = None,
    gamma: Annotated[
        Optional[float], typer.Option(help="Kernel coefficient [default: 1/d]")
    ] = None,
    normalization: Annotated[
        str, typer.Option(help="Alignment denominator: standard or literal")
    ] = "standard",
    out: Annotated[Optional[Path], typer.Option(help="CSV file for the trace")] = None,
    config: ConfigOption = None,
) -> None:
    """
    Frobenius norm and target alignment of the Gaussian Gram along a feature order
    """
    with _exit_codes():
        s = _settings(ctx)
        ds = load_csv(s["data"], s["label_col"])
        order = list(range(ds.d))
        if s["trace"] is not None:
            order = _columns(_read_trace(s["trace"]).selected_names, list(ds.names))
        gamma = s["gamma"] if s["gamma"] is not None else 1.0 / ds.d
        points = alignment_trace(ds, order, gamma, s["normalization"])
        if s["out"] is not None:
            save_alignment_trace(points, s["out"])
            return
        print("k,frobenius_norm,target_alignment")
        for point in points:
            print(f"{point.k},{point.frobenius_norm!r},{point.target_alignment!r}")


@app.command("vc")
def vc(  # pylint: disable=[too-many-arguments, too-many-positional-arguments, unused-argument]
    ctx: typer.Context,
    dim: Annotated[int, typer.Option(help="Ambient dimension")] = 2,
    blind: Annotated[
        Optional[List[int]],
        typer.Option(help="Feature the class ignores, 1-based; repeat for more"),
    ] = None,
    trials: Annotated[int, typer.Option(help="Random point sets per size")] = 50,
    s_max: Annotated[
        Optional[int], typer.Option(help="Largest size to try [default: 2(d+2)]")
    ] = None,
    seed: SeedOption = None,
    out: Annotated[
        Optional[Path], typer.Option(help="JSON file for the report")
    ] = None,
    config: ConfigOption = None,
) -> None:
    """
    Estimate the VC dimension of (blind) affine-threshold classifiers
    """
    with _exit_codes():
        s = _settings(ctx)
        estimate = find_shattered_set(
            s["dim"], s["blind"] or (), s["trials"], s["s_max"], _seed(s)
        )
        report = {
            "dim": estimate.d,
            "blind": sorted(estimate.blind),
            "vc_lower_bound": estimate.vc,
            "largest_size_tried": estimate.tried,
            "witness": estimate.witness.tolist(),
        }
        if s["out"] is not None:
            _write_json(report, str(s["out"]))
        print(f"VC >= {estimate.vc}", end="")
        if estimate.tried > estimate.vc:
            print(f" (no set of size {estimate.tried} found shattered)", end="")
        print()
        for point in estimate.witness:
            print("  " + " ".join(f"{v:g}" for v in point))


@app.command("table1")
def table1(  # pylint: disable=[too-many-arguments, too-many-positional-arguments, unused-argument]
    ctx: typer.Context,
    n: Annotated[int, typer.Option(help="Number of examples")] = 1000,
    d: Annotated[int, typer.Option(help="Number of features")] = 15,
    alphas: Annotated[
        str, typer.Option(help="Comma separated noise weights")
    ] = "-8,-6,-4,-2",
    classifier: ClassifierOption = "svm",
    q: Annotated[int, typer.Option(help="Train/validation splits per candidate")] = 7,
    tau: Annotated[float, typer.Option(help="Stopping threshold")] = 0.09,
    search: Annotated[
        bool, typer.Option(help="Tune SVM C and gamma by randomized search first")
    ] = True,
    search_draws: Annotated[int, typer.Option(help="Draws of the search")] = 10,
    seed: SeedOption = None,
    workers: WorkersOption = None,
    out_dir: Annotated[
        Optional[Path], typer.Option(help="Directory for one trace JSON per alpha")
    ] = None,
    verbose: VerboseOption = False,
    config: ConfigOption = None,
) -> None:
    """
    Generate and rank the synthetic dataset for several noise weights

    SVM rankings tune C and gamma first unless --no-search is given; the
    network ignores the search.
    """
    with _exit_codes():
        s = _settings(ctx)
        root = _seed(s)
        options = _options(s)
        try:
            values = [float(a) for a in str(s["alphas"]).split(",") if a.strip()]
        except ValueError as e:
            raise ConfigFileException(f"Invalid --alphas '{s['alphas']}'") from e
        if s["out_dir"] is not None and not os.path.isdir(s["out_dir"]):
            raise ConfigFileException(f"Directory {s['out_dir']} does not exist")

        cfg = GreedyConfig(
            q=s["q"],
            tau=s["tau"],
            classifier=s["classifier"],
            svm=SvmConfig(seed=root),
            mlp=MlpConfig(seed=root),
            search=(
                HyperSearchSpec(n_draws=s["search_draws"], seed=root)
                if s["search"] and s["classifier"] == "svm"
                else None
            ),
            seed=root,
        )
        for value in values:
            ds = generate_synthetic(s["n"], s["d"], value, root)
            trace = run_greedy(ds, cfg, options)
            console.print(format_table(trace, title=f"alpha = {value:g}"))
            if s["out_dir"] is not None:
                path = Path(s["out_dir"]) / f"trace_alpha{value:g}.json"
                path.write_text(trace.to_json(), encoding="utf-8")


def main():
    """
    Main entry point
    """
    try:
        code = app(standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        sys.exit(EXIT_CONFIG)
    except click.exceptions.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except click.exceptions.Abort:
        sys.exit(EXIT_CONFIG)
    sys.exit(code or 0)


if __name__ == "__main__":
    main()
