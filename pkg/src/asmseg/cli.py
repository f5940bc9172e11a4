"""Command-line entry point: ``asmseg <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import workflow as wf
from .config import ConfigError, RunConfig, load_config, parse_selector_pair, save_config
from .evalrep import emit_report, load_scores
from .imgfeat import load_attribute_table, save_attribute_table
from .manifest import parse_manifest
from .relations import load_cooccurrence, save_cooccurrence
from .selection import save_selector
from .synth import default_spec, default_stubs, generate_benchmark

log = logging.getLogger("asmseg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _variant(text: str) -> str:
    if text not in ("rs_rp", "rs_rs", "rs_plus_rp", "rs_plus_rs"):
        raise argparse.ArgumentTypeError(f"invalid variant {text!r} (choose rs_rp or rs_rs)")
    return text


def _pair(text: str) -> tuple[str, str]:
    try:
        return parse_selector_pair(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _theta(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("theta must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asmseg", description="Iterative algorithm selection for semantic segmentation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def command(name, help_text, manifest=True, model_dir=True):
        p = sub.add_parser(name, help=help_text)
        if manifest:
            p.add_argument("--manifest", required=True, type=Path)
        if model_dir:
            p.add_argument("--model-dir", required=True, type=Path)
        p.add_argument("--config", type=Path, help="key=value run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--theta", type=_theta)
        p.add_argument("--variant", type=_variant)
        p.add_argument("--selector-pair", type=_pair, metavar="FIRST:SECOND")
        p.add_argument("--max-iterations", type=int)
        return p

    p = command("synth-gen", "generate the seeded synthetic benchmark", manifest=False, model_dir=False)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n-images", type=int, default=50, help="test scenes (default 50)")
    p.add_argument("--n-train", type=int, default=200, help="training scenes (default 200)")
    p.add_argument("--n-planted", type=int, default=60, help="planted-contradiction scenes (default 60)")

    command("train-relations", "train the co-occurrence model from training ground truth")
    command("train-attributes", "train class-mean object attributes")
    command("calibrate-theta", "calibrate the contradiction threshold on planted scenes")
    command("train-selector", "train the first- and second-pass selectors")
    p = command("train-all", "run every training step in order")

    p = command("run", "run the selection loop on the test split")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--split", default="test")

    p = command("evaluate", "score algorithms, oracle and loop output", model_dir=False)
    p.add_argument("--predictions", type=Path, help="directory written by 'run'")
    p.add_argument("--out", required=True, type=Path, help="report path")
    p.add_argument("--split", default="test")

    p = command("report", "render a report from saved score files", manifest=False, model_dir=False)
    p.add_argument("scores", nargs="+", type=Path, help="NAME=path.scores or path.scores")
    p.add_argument("--out", type=Path)
    p.add_argument("--class-names", type=Path, help="manifest whose class names label the rows")
    return parser


def _config(args) -> RunConfig:
    if args.config is not None:
        config = load_config(args.config)
    elif getattr(args, "model_dir", None) is not None and (args.model_dir / wf.CONFIG_FILE).exists():
        config = load_config(args.model_dir / wf.CONFIG_FILE)
    else:
        config = RunConfig()
    return config.updated(
        seed=args.seed,
        theta=args.theta,
        variant=args.variant,
        selector_pair=args.selector_pair,
        max_iterations=args.max_iterations,
    )


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"no trained {what} at {path}; run the corresponding training step first")
    return path


def cmd_synth_gen(args):
    seed = args.seed if args.seed is not None else 0
    spec = default_spec(seed)
    path = generate_benchmark(spec, default_stubs(spec, seed), args.n_images, args.out,
                              n_train=args.n_train, n_planted=args.n_planted)
    print(f"wrote {path}")


def cmd_train_relations(args):
    manifest, config = parse_manifest(args.manifest), _config(args)
    args.model_dir.mkdir(parents=True, exist_ok=True)
    model = wf.train_relations(manifest, config.connectivity)
    save_cooccurrence(model, args.model_dir / wf.COOC_FILE)
    save_config(config, args.model_dir / wf.CONFIG_FILE)
    print(f"co-occurrence model over {len(model.pairs)} class pairs -> {args.model_dir / wf.COOC_FILE}")


def cmd_train_attributes(args):
    manifest, config = parse_manifest(args.manifest), _config(args)
    args.model_dir.mkdir(parents=True, exist_ok=True)
    table = wf.train_attributes(manifest, config.connectivity)
    save_attribute_table(table, args.model_dir / wf.ATTR_FILE)
    print(f"attributes for {len(table)} classes -> {args.model_dir / wf.ATTR_FILE}")


def cmd_calibrate_theta(args):
    manifest, config = parse_manifest(args.manifest), _config(args)
    model = load_cooccurrence(_require(args.model_dir / wf.COOC_FILE, "co-occurrence model"))
    result = wf.calibrate(manifest, model, config.variant, config.connectivity)
    (args.model_dir / wf.CALIBRATION_FILE).write_text(result.report())
    save_config(config.updated(theta=result.theta), args.model_dir / wf.CONFIG_FILE)
    print(f"theta={result.theta!r} accuracy={result.accuracy:.4f}")


def cmd_train_selector(args):
    manifest, config = parse_manifest(args.manifest), _config(args)
    attrs = load_attribute_table(_require(args.model_dir / wf.ATTR_FILE, "attribute table"))
    pair = wf.train_selector_pair(manifest, attrs, config)
    save_selector(pair.first, args.model_dir / wf.FIRST_FILE)
    save_selector(pair.second, args.model_dir / wf.SECOND_FILE)
    save_config(config, args.model_dir / wf.CONFIG_FILE)
    print(f"selectors {':'.join(config.selector_pair)} -> {args.model_dir}")


def cmd_train_all(args):
    manifest, config = parse_manifest(args.manifest), _config(args)
    config, calibration = wf.train_all(manifest, args.model_dir, config)
    if calibration is not None:
        print(f"theta={calibration.theta!r} accuracy={calibration.accuracy:.4f}")
    print(f"models -> {args.model_dir}")


def cmd_run(args):
    manifest = parse_manifest(args.manifest)
    _require(args.model_dir / wf.COOC_FILE, "co-occurrence model")
    config = _config(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    traces = wf.run_dataset(manifest, args.model_dir, args.out, config, args.split, args.jobs)
    reasons: dict[str, int] = {}
    for t in traces.values():
        reasons[t.reason] = reasons.get(t.reason, 0) + 1
    summary = ", ".join(f"{k}: {v}" for k, v in sorted(reasons.items()))
    print(f"{len(traces)} images -> {args.out} ({summary})")


def cmd_evaluate(args):
    manifest = parse_manifest(args.manifest)
    tables = wf.evaluate_methods(manifest, args.predictions, args.split)
    sys.stdout.write(wf.write_evaluation(tables, manifest, args.out))


def cmd_report(args):
    tables = []
    for item in args.scores:
        name, sep, path = str(item).partition("=")
        if not sep:
            path = name
            name = Path(path).name.split(".")[-2] if Path(path).name.count(".") >= 2 else Path(path).stem
        tables.append((name, load_scores(path)))
    names = parse_manifest(args.class_names).class_names() if args.class_names else None
    text = emit_report(tables, names)
    if args.out is not None:
        args.out.write_text(text)
    sys.stdout.write(text)


COMMANDS = {
    "synth-gen": cmd_synth_gen,
    "train-relations": cmd_train_relations,
    "train-attributes": cmd_train_attributes,
    "calibrate-theta": cmd_calibrate_theta,
    "train-selector": cmd_train_selector,
    "train-all": cmd_train_all,
    "run": cmd_run,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"asmseg {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"asmseg {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
