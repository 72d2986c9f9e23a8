# LPCR Shield - Command Line Entry Point
import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .advtrain import random_patch_set, train_aa_lpcr
from .analysis import RandomPatchResult, confusion_matrix, random_patch_eval, write_report
from .attack import (
    attack_dataset,
    fgsm_dataset,
    read_records,
    save_hard_set,
    write_attack_summary,
    write_records,
)
from .attack.types import AttackRecord
from .core.config import RunConfig, apply_overrides, get_settings, load_profile, load_run_config
from .core.exceptions import EXIT_OK, EXIT_UNEXPECTED, LpcrException, exit_code_for
from .core.logging import get_logger, log_performance_metric, setup_logging
from .dataset import generate_dataset, load_dataset, save_dataset, split
from .dataset.types import GlyphDataset, GlyphImage
from .model import LpcrModel, build_from_config, evaluate, kfold_cv, load_model, lpcr_layer_specs, save_model, train
from .model.types import ArchitectureConfig
from .nn import fc, gradient_check, relu, softmax_layer
from .utils.helpers import ensure_dir, write_csv, write_json
from .utils.rng import derive_seed

logger = get_logger('lpcr.cli')

RESOLVED_CONFIG = "resolved_config.json"
RUN_METADATA = "run_metadata.json"
RECORDS_FILE = "records.jsonl"
FGSM_RECORDS_FILE = "fgsm_records.jsonl"
HARD_SET_DIR = "hard_set"

FC_TOLERANCE = 1e-4
FULL_STACK_TOLERANCE = 1e-3


class RunContext:
    """Resolved config plus process settings for one command"""

    def __init__(self, config: RunConfig, threads: int, eval_batch_size: int, command: str):
        self.config = config
        self.threads = threads
        self.eval_batch_size = eval_batch_size
        self.command = command

    def path(self, name: str) -> Path:
        return self.config.paths.resolve(name)

    def record_outputs(self, directory: Path) -> None:
        """Every output directory carries the config that produced it"""
        ensure_dir(directory)
        write_json(directory / RESOLVED_CONFIG, self.config.to_json_dict())

    def write_metadata(self, started: float) -> None:
        root = ensure_dir(self.config.paths.root)
        metadata_path = root / RUN_METADATA
        write_json(metadata_path, {
            "command": self.command,
            "version": __version__,
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "elapsed_seconds": round(time.perf_counter() - started, 3),
        })

    def load_dataset(self, override: Optional[str] = None) -> GlyphDataset:
        return load_dataset(override or self.path("dataset_dir"))

    def split(self, dataset: GlyphDataset) -> Tuple[List[GlyphImage], List[GlyphImage]]:
        train_cfg = self.config.train
        return split(dataset, train_cfg.split_ratio, derive_seed(train_cfg.seed, "split"))  # type: ignore[arg-type]

    def load_model(self, path: Path) -> LpcrModel:
        model = load_model(path)
        model.eval_batch_size = self.eval_batch_size
        return model


# Commands

def cmd_gen_data(ctx: RunContext, args: argparse.Namespace) -> None:
    dataset = generate_dataset(ctx.config.dataset)
    target = ctx.path("dataset_dir")
    save_dataset(target, dataset)
    ctx.record_outputs(target)


def cmd_train(ctx: RunContext, args: argparse.Namespace) -> None:
    dataset = ctx.load_dataset(args.dataset)
    train_set, val_set = ctx.split(dataset)
    config = ctx.config.train

    if args.variant == "transfer":
        analysis = ctx.config.analysis
        architecture = config.architecture.model_copy(
            update={"width_multiplier": config.architecture.width_multiplier * analysis.transfer_width_multiplier}
        )
        config = config.model_copy(update={"seed": analysis.transfer_seed, "architecture": architecture})
        target = ctx.path("transfer_model_file")
    else:
        target = ctx.path("model_file")

    model = build_from_config(dataset.dims, config)
    model.eval_batch_size = ctx.eval_batch_size
    result = train(model, train_set, val_set, config)
    save_model(result.model, target)

    out_dir = target.parent
    stem = target.stem
    result.history.to_csv(out_dir / f"{stem}_history.csv")
    write_json(out_dir / f"{stem}_metrics.json", evaluate(result.model, val_set).to_dict())
    ctx.record_outputs(out_dir)

    if args.kfold:
        cv = kfold_cv(dataset, config.kfold, config)
        write_csv(out_dir / f"{stem}_kfold.csv", cv.to_frame())
        logger.info(f"{config.kfold}-fold accuracy {cv.mean_accuracy:.4f} +/- {cv.std_accuracy:.4f}")


def _attack_targets(ctx: RunContext, dataset: GlyphDataset) -> List[GlyphImage]:
    attack_cfg = ctx.config.attack
    images = list(dataset) if attack_cfg.target_split == "all" else ctx.split(dataset)[1]
    images = sorted(images, key=lambda image: image.id)
    if attack_cfg.max_images is not None:
        images = images[:attack_cfg.max_images]
    return images


def cmd_attack(ctx: RunContext, args: argparse.Namespace) -> None:
    if args.variant == "aa":
        model_path, out_dir = ctx.path("aa_model_file"), ctx.path("aa_attack_dir")
    else:
        model_path, out_dir = ctx.path("model_file"), ctx.path("attack_dir")
    model = ctx.load_model(Path(args.model) if args.model else model_path)
    images = _attack_targets(ctx, ctx.load_dataset(args.dataset))
    attack_cfg = ctx.config.attack

    run = attack_dataset(model, images, attack_cfg.shapes, attack_cfg, threads=ctx.threads)
    ensure_dir(out_dir)
    write_records(out_dir / RECORDS_FILE, run.records)
    write_attack_summary(out_dir / "summary.csv", run.records)
    save_hard_set(out_dir / HARD_SET_DIR, run.hard_set)

    if attack_cfg.run_fgsm:
        fgsm_records = fgsm_dataset(model, images, attack_cfg.fgsm_epsilon)
        write_records(out_dir / FGSM_RECORDS_FILE, fgsm_records)
        write_attack_summary(out_dir / "fgsm_summary.csv", fgsm_records)
    ctx.record_outputs(out_dir)


def cmd_adv_train(ctx: RunContext, args: argparse.Namespace) -> None:
    dataset = ctx.load_dataset(args.dataset)
    train_set, val_set = ctx.split(dataset)
    model = build_from_config(dataset.dims, ctx.config.train)
    model.eval_batch_size = ctx.eval_batch_size
    result = train_aa_lpcr(train_set, val_set, ctx.config.train, ctx.config.advtrain, model=model)

    target = ctx.path("aa_model_file")
    save_model(result.model, target)
    result.history.to_csv(target.parent / f"{target.stem}_history.csv")
    write_json(target.parent / f"{target.stem}_metrics.json", evaluate(result.model, val_set).to_dict())
    ctx.record_outputs(target.parent)


def cmd_eval(ctx: RunContext, args: argparse.Namespace) -> None:
    model_path = Path(args.model) if args.model else ctx.path("model_file")
    model = ctx.load_model(model_path)
    dataset = ctx.load_dataset(args.dataset)
    images = list(dataset) if args.split == "all" else ctx.split(dataset)[1]

    out_dir = ensure_dir(Path(ctx.config.paths.root) / "eval" / model_path.stem)
    metrics = evaluate(model, images)
    write_json(out_dir / "metrics.json", metrics.to_dict())
    confusion_matrix(model, images).write(out_dir, "confusion", ctx.config.analysis.heatmap_cell)
    ctx.record_outputs(out_dir)
    logger.info(f"{model_path.name}: accuracy {metrics.accuracy:.4f} on {metrics.count} images")


def _read_attack_dir(directory: Path) -> List[AttackRecord]:
    records: List[AttackRecord] = []
    for name in (RECORDS_FILE, FGSM_RECORDS_FILE):
        path = directory / name
        if path.exists():
            records.extend(read_records(path))
    if not records:
        logger.warning(f"No attack records under {directory}")
    return records


def _optional_model(ctx: RunContext, path: Path) -> Optional[LpcrModel]:
    return ctx.load_model(path) if path.exists() else None


def _random_patch_results(ctx: RunContext, models: Dict[str, Optional[LpcrModel]]) -> Dict[str, RandomPatchResult]:
    """Clean versus randomly patched accuracy on the validation split, for each model on disk"""
    present = {name: model for name, model in models.items() if model is not None}
    if not present or not (ctx.path("dataset_dir") / "manifest.json").exists():
        return {}
    _, val_set = ctx.split(ctx.load_dataset())
    seed = ctx.config.analysis.random_patch_seed
    patched = random_patch_set(val_set, ctx.config.advtrain, seed)  # type: ignore[arg-type]
    results = {name: random_patch_eval(model, val_set, patched) for name, model in present.items()}
    for name, result in results.items():
        logger.info(f"{name}: random patches drop accuracy by {result.accuracy_drop:.3f} over {result.count} images")
    return results


def cmd_report(ctx: RunContext, args: argparse.Namespace) -> None:
    baseline_dir = Path(args.baseline) if args.baseline else ctx.path("attack_dir")
    aa_dir = Path(args.aa) if args.aa else ctx.path("aa_attack_dir")
    baseline_records = _read_attack_dir(baseline_dir)
    aa_records = _read_attack_dir(aa_dir) if aa_dir.exists() else None

    hard_dir = baseline_dir / HARD_SET_DIR
    hard_set = load_dataset(hard_dir) if (hard_dir / "manifest.json").exists() else None

    baseline_model = _optional_model(ctx, ctx.path("model_file"))
    aa_model = _optional_model(ctx, ctx.path("aa_model_file"))
    random_patch = _random_patch_results(ctx, {"lpcr": baseline_model, "aa_lpcr": aa_model})

    out_dir = ctx.path("report_dir")
    write_report(
        out_dir,
        baseline_records,
        aa_records=aa_records,
        hard_set=hard_set,
        baseline_model=baseline_model,
        aa_model=aa_model,
        transfer_model=_optional_model(ctx, ctx.path("transfer_model_file")),
        config=ctx.config.analysis,
        random_patch=random_patch,
    )
    ctx.record_outputs(out_dir)


def gradcheck_nets(architecture: ArchitectureConfig) -> Dict[str, Tuple[tuple, Tuple[int, int, int], float]]:
    """The fc-only and full-stack nets the gradcheck command verifies"""
    fc_only = (fc(8), relu(), fc(13), softmax_layer())
    full_stack = lpcr_layer_specs(fc_widths=(8, 8), width_multiplier=1.0 / 16.0, dropout_rate=architecture.dropout_rate)
    return {
        "fc_only": (fc_only, (4, 4, 3), FC_TOLERANCE),
        "full_stack": (full_stack, (16, 16, 3), FULL_STACK_TOLERANCE),
    }


def cmd_gradcheck(ctx: RunContext, args: argparse.Namespace) -> None:
    seed = derive_seed(ctx.config.seed, "gradcheck")
    out_dir = ensure_dir(Path(ctx.config.paths.root) / "gradcheck")
    results = {}
    failures = []
    for name, (specs, input_shape, tolerance) in gradcheck_nets(ctx.config.train.architecture).items():
        report = gradient_check(
            specs, seed, epsilon=args.epsilon, input_shape=input_shape, include_input=name == "fc_only"
        )
        results[name] = {**report.to_dict(), "tolerance": tolerance, "passed": report.passed(tolerance)}
        if not report.passed(tolerance):
            failures.append((name, report, tolerance))
    write_json(out_dir / "gradcheck.json", results)
    ctx.record_outputs(out_dir)
    for name, report, tolerance in failures:
        logger.error(f"Gradient check '{name}' failed")
        report.raise_for_tolerance(tolerance)


COMMANDS: Dict[str, Callable[[RunContext, argparse.Namespace], None]] = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "attack": cmd_attack,
    "adv-train": cmd_adv_train,
    "eval": cmd_eval,
    "report": cmd_report,
    "gradcheck": cmd_gradcheck,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config JSON; overrides --profile")
    common.add_argument("--profile", default="desk", help="built-in profile when no --config is given (desk, full)")
    common.add_argument("--out", help="output root directory")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--threads", type=int, help="worker threads for attacks")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    common.add_argument("--log-json", action="store_true", help="emit JSON log lines")

    parser = argparse.ArgumentParser(
        prog="lpcr-shield", description="Geometric patch attacks and adversarial training for a character CNN"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", parents=[common], help="render and save the synthetic dataset")

    p = sub.add_parser("train", parents=[common], help="train the baseline (or transfer) model")
    p.add_argument("--variant", choices=["baseline", "transfer"], default="baseline")
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--kfold", action="store_true", help="also run stratified k-fold cross-validation")

    p = sub.add_parser("attack", parents=[common], help="run exhaustive patch attacks and build the hard set")
    p.add_argument("--variant", choices=["baseline", "aa"], default="baseline")
    p.add_argument("--model", help="model file to attack")
    p.add_argument("--dataset", help="dataset directory")

    p = sub.add_parser("adv-train", parents=[common], help="train the attack-aware model")
    p.add_argument("--dataset", help="dataset directory")

    p = sub.add_parser("eval", parents=[common], help="evaluate a model on a dataset")
    p.add_argument("--model", help="model file")
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--split", choices=["validation", "all"], default="validation")

    p = sub.add_parser("report", parents=[common], help="assemble tables, heatmaps and region maps")
    p.add_argument("--baseline", help="baseline attack directory")
    p.add_argument("--aa", help="attack-aware attack directory")

    p = sub.add_parser("gradcheck", parents=[common], help="verify analytic gradients by finite differences")
    p.add_argument("--epsilon", type=float, default=1e-5)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config) if args.config else load_profile(args.profile)
    return apply_overrides(config, seed=args.seed, out=args.out).resolved()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        settings = get_settings()
        setup_logging(
            level=args.log_level or settings.log_level,
            json_format=args.log_json or settings.log_json,
            log_file=settings.log_file,
        )
        ctx = RunContext(
            config=_resolve_config(args),
            threads=args.threads or settings.threads,
            eval_batch_size=settings.batch_eval_size,
            command=args.command,
        )
        COMMANDS[args.command](ctx, args)
        ctx.write_metadata(started)
        log_performance_metric("command_time", time.perf_counter() - started, "s", command=args.command)
        return EXIT_OK
    except LpcrException as e:
        logger.error(str(e))
        print(f"lpcr-shield {args.command}: {e}", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        print(f"lpcr-shield {args.command}: unexpected error: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
