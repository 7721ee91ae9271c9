"""Command-line front end: gen-synthetic, run, report."""

import argparse
import json
import sys
from pathlib import Path

from .config import load_config, load_synthetic_spec
from .data import gen_synthetic, serialize_libsvm
from .errors import ConfigError, ParseError
from .harness import run_experiment, write_report


def _cmd_gen_synthetic(args) -> int:
    spec = load_synthetic_spec(args.spec)
    ds = gen_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize_libsvm(ds), encoding="utf-8")
    n_ood = int((ds.labels < 0).sum())
    print(f"wrote {ds.n_samples} rows ({ds.n_samples - n_ood} ID / {n_ood} OOD, "
          f"{ds.n_features} features) to {out}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg)
    paths = write_report(result, args.out)
    print(f"{cfg.name}: strategy={cfg.strategy} trials={cfg.trials} "
          f"AUBC {result.summary['aubc_mean']:.4f} ± {result.summary['aubc_sd']:.4f}")
    for name in ("records", "summary", "manifest"):
        print(f"  {paths[name]}")
    return 0


def _load_summary(run_dir: Path) -> dict:
    path = run_dir / "summary.json"
    if not path.is_file():
        raise ConfigError(f"no summary.json under {run_dir}")
    return json.loads(path.read_text(encoding="utf-8"))


def _cmd_report(args) -> int:
    dirs = [Path(d) for d in args.indir]
    summaries = [_load_summary(d) for d in dirs]
    header = f"{'strategy':<18} {'trials':>6} {'AUBC mean':>10} {'sd':>8} " \
             f"{'final acc':>10} {'OOD picked':>10}"
    print(header)
    print("-" * len(header))
    for summary in summaries:
        print(f"{summary['strategy']:<18} {summary['trials']:>6} "
              f"{summary['aubc_mean']:>10.4f} {summary['aubc_sd']:>8.4f} "
              f"{summary['round_accuracy_mean'][-1]:>10.4f} "
              f"{summary['round_ood_mean'][-1]:>10.1f}")
    if not args.no_figures:
        from . import figures  # imported lazily: matplotlib only on demand
        target = dirs[0]
        acc = figures.plot_accuracy_curves(summaries, target / "accuracy_vs_budget.png")
        ood = figures.plot_ood_curves(summaries, target / "ood_vs_budget.png")
        print(f"figures: {acc} {ood}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paretoal",
        description="Pool-based active learning under OOD contamination",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-synthetic", help="sample a synthetic dataset")
    p_gen.add_argument("--spec", required=True, help="synthetic spec JSON file")
    p_gen.add_argument("--out", required=True, help="output dataset path (LIBSVM text)")
    p_gen.set_defaults(func=_cmd_gen_synthetic)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="experiment config JSON file")
    p_run.add_argument("--out", required=True, help="output directory for the report")
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("report", help="summarize finished runs and render figures")
    p_rep.add_argument("--in", dest="indir", required=True, action="append",
                       help="run output directory (repeat to overlay strategies)")
    p_rep.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
