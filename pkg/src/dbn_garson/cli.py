"""Command-line entry point: ``dbn-garson {run,rank,synth,chart}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .attribution import ImportanceVector
from .core import write_csv
from .exceptions import ConfigError, DataError, NumericalError, StageError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("dbn_garson")


def _load_config(args):
    from .pipeline import ExperimentConfig

    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=str(args.out))
    return cfg


def cmd_run(args):
    from .pipeline import run_experiment

    cfg = _load_config(args)
    report = run_experiment(cfg)
    for d in report.decisions:
        print(f"top-{d['k']}: {d['rationale']}")
    print(f"wrote {len(report.files)} files to {cfg.output_dir}")


def cmd_rank(args):
    from .pipeline import emit_chart_data, rank_features

    cfg = _load_config(args)
    fitted = rank_features(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ega = fitted["dbna"].importance_
    wald = fitted["wald"].as_importance()
    ega.to_csv(out / "importance_ega.csv")
    wald.to_csv(out / "importance_wald.csv")
    fitted["dbna"].model_.save(out / "dbna.json")
    for k in cfg.top_k:
        emit_chart_data(ega, k, out / f"chart_ega_top{k}.csv")
        emit_chart_data(wald, k, out / f"chart_wald_top{k}.csv")
    print(f"ranked {len(ega.scores)} features; outputs in {out}")


def cmd_synth(args):
    from .pipeline import generate_synthetic

    opts = {"n_samples": 500, "n_informative": 3, "n_noise": 3, "task": "classification"}
    if args.config:
        try:
            given = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read synth config {args.config}: {exc}") from exc
        unknown = set(given) - set(opts) - {"seed"}
        if unknown:
            raise ConfigError(f"unknown synth option(s): {sorted(unknown)}")
        opts.update({k: v for k, v in given.items() if k != "seed"})
        seed = given.get("seed", 0)
    else:
        seed = 0
    for key in ("n_samples", "n_informative", "n_noise", "task"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    if args.seed is not None:
        seed = args.seed
    data, mask = generate_synthetic(seed=seed, **opts)
    out = Path(args.out or "synthetic.csv")
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "synthetic.csv"
    write_csv(data, out)
    truth = {"informative": [n for n, m in zip(data.feature_names, mask) if m], "seed": seed, **opts}
    out.with_suffix(".truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n",
                                              encoding="utf-8")
    print(f"wrote {data.n_samples} rows to {out}")


def cmd_chart(args):
    from .pipeline import emit_chart_data

    imp = ImportanceVector.read_csv(args.importance)
    out = Path(args.out or "chart.csv")
    emit_chart_data(imp, args.k, out)
    print(f"wrote top-{args.k} chart data to {out}")


def build_parser():
    p = argparse.ArgumentParser(prog="dbn-garson", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required):
        sp.add_argument("--config", required=config_required, help="JSON configuration file")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--out", default=None, help="output directory or file")

    sp = sub.add_parser("run", help="full EGA vs Wald comparison experiment")
    common(sp, True)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("rank", help="EGA and Wald rankings only")
    common(sp, True)
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("synth", help="write a planted-signal synthetic dataset")
    common(sp, False)
    sp.add_argument("--n-samples", type=int, default=None)
    sp.add_argument("--n-informative", type=int, default=None)
    sp.add_argument("--n-noise", type=int, default=None)
    sp.add_argument("--task", choices=["classification", "regression"], default=None)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("chart", help="top-k chart data from an importance CSV")
    common(sp, False)
    sp.add_argument("--importance", required=True, help="importance CSV (feature_name, score_percent, rank)")
    sp.add_argument("--k", type=int, required=True)
    sp.set_defaults(func=cmd_chart)
    return p


def exit_code(exc):
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_DATA


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigError, DataError, NumericalError, StageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
