"""``neurofuzzy`` command line: data generation, training, prediction and sweeps.

Every flag can also come from a JSON file passed with ``--config``; keys use
the flag names with dashes replaced by underscores, and flags given on the
command line win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .data import (
    FEATURES,
    Dataset,
    compute_metrics,
    gen_synthetic,
    load_csv,
    load_features,
    split_random,
    write_csv,
)
from .errors import (
    DegenerateActivationError,
    DivergenceError,
    InvalidArgumentError,
    NeuroFuzzyError,
    ParseError,
    ScaleError,
    SchemaError,
    TrainingDataError,
)
from .experiments import (
    compare_scale_factors,
    sweep_iterations,
    sweep_mf_counts,
    sweep_train_fraction,
)
from .fuzzy import AnfisModel
from .hybrid import AnfisTrainConfig, train_anfis
from .mlp import LmConfig, fit_bnn
from .report import FORMATS, membership_figure, render_report, save_svg, scatter_figure
from .serialize import load_model, save_model

log = logging.getLogger("neurofuzzy")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_ARGUMENT = 5
EXIT_TRAINING = 6

DEFAULT_DAYS = 6940
SEED_ENV = "NEUROFUZZY_SEED"


class UsageError(Exception):
    pass


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fraction_list(text):
    # accepts "0.7,0.75" or percentages "70,75"
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    return [v / 100.0 if v > 1 else v for v in vals]


def _fraction(text):
    return _fraction_list(text)[0]


def _formats(text):
    vals = [v.strip() for v in str(text).split(",") if v.strip()]
    bad = [v for v in vals if v not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {FORMATS}")
    return vals


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with default values for any flag")
    common.add_argument("--seed", type=int, help=f"random seed (default ${SEED_ENV} or 42)")
    common.add_argument("--log-level", default="WARNING")

    source = argparse.ArgumentParser(add_help=False)
    group = source.add_mutually_exclusive_group()
    group.add_argument("--data", type=Path, help="CSV with date,tmin_c,tmax_c,tmean_c,dpt_c")
    group.add_argument("--days", type=int, help=f"generate a synthetic series instead (default {DEFAULT_DAYS})")
    source.add_argument("--noise", type=float, default=1.0, help="synthetic dew point noise sd (degC)")
    source.add_argument("--split", type=_fraction, default=0.65, help="training fraction, e.g. 0.65 or 65")

    anfis = argparse.ArgumentParser(add_help=False)
    anfis.add_argument("--mf", type=int, default=4, help="membership functions per input")
    anfis.add_argument("--epochs", type=int, default=100)
    anfis.add_argument("--lr", type=float, default=0.01, help="premise learning rate")
    anfis.add_argument("--ridge", type=float, default=1e-6, help="consequent least-squares penalty")

    bnn = argparse.ArgumentParser(add_help=False)
    bnn.add_argument("--width", type=int, default=10, help="units in each hidden layer")
    bnn.add_argument("--layers", type=int, default=2, help="number of hidden layers")
    bnn.add_argument("--max-iters", type=int, default=200)
    bnn.add_argument("--patience", type=int, default=6)

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    output.add_argument("--formats", type=_formats, default=list(FORMATS))
    output.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for byte-stable CSVs")
    output.add_argument("--workers", type=int, default=1)

    p = _Parser(prog="neurofuzzy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p.subcommands = sub.choices

    g = sub.add_parser("gen-data", parents=[common], help="write a synthetic CSV")
    g.add_argument("--days", type=int, default=DEFAULT_DAYS)
    g.add_argument("--noise", type=float, default=1.0)
    g.add_argument("--out", type=Path, default=Path("synthetic.csv"))

    t = sub.add_parser("train", parents=[common, source, anfis, bnn, output], help="fit and save a model")
    t.add_argument("--model", choices=("anfis", "bnn"), default="anfis")

    pr = sub.add_parser("predict", parents=[common], help="predict dew point for a CSV")
    pr.add_argument("--model", type=Path, required=True)
    pr.add_argument("--data", type=Path, required=True)
    pr.add_argument("--out", type=Path, default=Path("predictions.csv"))

    e = sub.add_parser("eval", parents=[common], help="score a model on a labelled CSV")
    e.add_argument("--model", type=Path, required=True)
    e.add_argument("--data", type=Path, required=True)
    e.add_argument("--out", type=Path, help="optional metrics CSV")

    s = sub.add_parser("sweep-mf", parents=[common, source, anfis, output], help="vary MF count")
    s.add_argument("--counts", type=_int_list, default=[4, 6])

    s = sub.add_parser("sweep-iters", parents=[common, source, anfis, output], help="vary epochs")
    s.add_argument("--checkpoints", type=_int_list, default=[10, 50, 100, 200])

    s = sub.add_parser("sweep-split", parents=[common, source, anfis, output], help="vary training fraction")
    s.add_argument("--fractions", type=_fraction_list, default=[0.70, 0.75, 0.85, 0.95])

    c = sub.add_parser("compare", parents=[common, source, anfis, bnn, output], help="ANFIS vs BNN scale factors")
    c.add_argument("--anfis-counts", type=_int_list, default=[2, 3, 4, 5, 6])
    c.add_argument("--bnn-sizes", type=_int_list, default=[2, 4, 8, 16, 32])
    c.add_argument("--bnn-scale", choices=("width", "depth"), default="width")
    return p


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            file_cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(file_cfg, dict):
            raise UsageError(f"{args.config}: expected a JSON object")
        # re-parse with file values as defaults so explicit flags still win
        sub = parser.subcommands[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(file_cfg) - known
        if unknown:
            raise UsageError(f"{args.config}: unknown key(s) {sorted(unknown)}")
        for a in sub._actions:
            if a.dest in file_cfg and a.type is not None and isinstance(file_cfg[a.dest], str):
                file_cfg[a.dest] = a.type(file_cfg[a.dest])
        sub.set_defaults(**file_cfg)
        args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = _default_seed()
    return args


# ------------------------------------------------------------- commands


def _dataset(args) -> Dataset:
    if args.data is not None:
        return load_csv(args.data)
    return gen_synthetic(args.days or DEFAULT_DAYS, args.seed, args.noise)


def _anfis_cfg(args):
    return AnfisTrainConfig(
        epochs=args.epochs, learning_rate=args.lr, seed=args.seed, mf_count=args.mf, ridge=args.ridge
    )


def _lm_cfg(args):
    return LmConfig(max_iters=args.max_iters, val_patience=args.patience, seed=args.seed)


def _parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_metrics(path, rows):
    with _parent(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["split", "n", "mse", "rmse", "r"])
        for name, n, m in rows:
            w.writerow([name, n, repr(m.mse), repr(m.rmse), repr(m.r)])


def cmd_gen_data(args):
    ds = gen_synthetic(args.days, args.seed, args.noise)
    write_csv(ds, _parent(args.out))
    print(f"wrote {len(ds)} records to {args.out}")


def cmd_train(args):
    ds = _dataset(args)
    split = split_random(ds, args.split, args.seed)
    if args.model == "anfis":
        model, history = train_anfis(split, _anfis_cfg(args))
    else:
        model, history = fit_bnn(split, (args.width,) * args.layers, _lm_cfg(args))
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    write_csv(split.train, out / "train_split.csv")
    write_csv(split.test, out / "test_split.csv")
    train_pred, test_pred = model.predict(split.train.x), model.predict(split.test.x)
    m_train = compute_metrics(train_pred, split.train.y)
    m_test = compute_metrics(test_pred, split.test.y)
    _write_metrics(out / "metrics.csv", [("train", len(split.train), m_train), ("test", len(split.test), m_test)])
    with (out / "history.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "train_mse", "train_rmse", "test_mse", "test_rmse"])
        for r in history.records:
            w.writerow(
                [r.epoch, repr(r.train.mse), repr(r.train.rmse)]
                + ([repr(r.test.mse), repr(r.test.rmse)] if r.test else ["", ""])
            )
    if "svg" in args.formats:
        save_svg(scatter_figure(train_pred, split.train.y, "training"), out / "scatter_train.svg")
        save_svg(scatter_figure(test_pred, split.test.y, "testing"), out / "scatter_test.svg")
        if isinstance(model, AnfisModel):
            save_svg(membership_figure(model), out / "memberships.svg")
    print(
        f"{args.model}: train RMSE {m_train.rmse:.4f} R {m_train.r:.4f} | "
        f"test RMSE {m_test.rmse:.4f} R {m_test.r:.4f} -> {out}"
    )


def cmd_predict(args):
    model = load_model(args.model)
    dates, x = load_features(args.data)
    pred = model.predict(x)
    with _parent(args.out).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *FEATURES, "dpt_pred_c"])
        for d, row, p in zip(dates, x, pred):
            w.writerow([str(d), *(repr(float(v)) for v in row), repr(float(p))])
    print(f"wrote {len(pred)} predictions to {args.out}")


def cmd_eval(args):
    model = load_model(args.model)
    ds = load_csv(args.data)
    m = compute_metrics(model.predict(ds.x), ds.y)
    if args.out is not None:
        _write_metrics(args.out, [("eval", len(ds), m)])
    print(f"n={len(ds)} mse={m.mse!r} rmse={m.rmse!r} r={m.r!r}")


def _render(args, report):
    paths = render_report(report, args.out, args.formats, timing=not args.no_timing)
    for p in paths:
        log.info("wrote %s", p)
    print(f"{report.name}: {len(report.cells)} cells, {len(paths)} files in {args.out}")
    failed = [c for c in report.cells if not c.ok]
    for c in failed:
        print(f"  cell {c.axis}={c.value} failed: {c.error}", file=sys.stderr)


def cmd_sweep_mf(args):
    _render(args, sweep_mf_counts(_dataset(args), args.counts, _anfis_cfg(args), args.split, args.workers))


def cmd_sweep_iters(args):
    _render(args, sweep_iterations(_dataset(args), args.checkpoints, _anfis_cfg(args), args.split))


def cmd_sweep_split(args):
    _render(args, sweep_train_fraction(_dataset(args), args.fractions, _anfis_cfg(args), args.workers))


def cmd_compare(args):
    report = compare_scale_factors(
        _dataset(args),
        args.anfis_counts,
        args.bnn_sizes,
        _anfis_cfg(args),
        _lm_cfg(args),
        fraction=args.split,
        bnn_scale=args.bnn_scale,
        depth_width=args.width,
        workers=args.workers,
    )
    _render(args, report)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "sweep-mf": cmd_sweep_mf,
    "sweep-iters": cmd_sweep_iters,
    "sweep-split": cmd_sweep_split,
    "compare": cmd_compare,
}


def _exit_code(exc) -> int:
    if isinstance(exc, (SchemaError, ParseError, ScaleError)):
        return EXIT_DATA
    if isinstance(exc, (DegenerateActivationError, TrainingDataError, DivergenceError)):
        return EXIT_TRAINING
    if isinstance(exc, InvalidArgumentError):
        return EXIT_ARGUMENT
    return EXIT_ERROR


def run(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"neurofuzzy: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"neurofuzzy: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
    try:
        COMMANDS[args.command](args)
    except OSError as exc:
        print(f"neurofuzzy: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NeuroFuzzyError as exc:
        print(f"neurofuzzy: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
