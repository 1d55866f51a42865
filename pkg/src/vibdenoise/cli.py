"""``vibdenoise`` command-line front end.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure,
5 corrupted checkpoint or dataset checksum.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ar, persistence
from .exceptions import DataError, NumericError, VibDenoiseError
from .metrics import report
from .persistence import ExperimentConfig, atomic_write
from .plotting import svg_line_plot
from .signals import WindowedDataset, add_noise, build_dataset, offset_signal, synth_clean
from .training import evaluate, predict, split_dataset, train
from .transformer import TINY_CONFIG, gradient_check

logger = logging.getLogger("vibdenoise")


def _experiment(args) -> ExperimentConfig:
    cfg = persistence.load_config(args.config) if getattr(args, "config", None) else _default_config()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, noise=replace(cfg.noise, seed=args.seed), train=replace(cfg.train, seed=args.seed))
    return cfg


def _default_config():
    return persistence.parse_config("")


def _input_column(table, column):
    if column:
        if column not in table:
            raise DataError(f"column {column!r} not in input (have {', '.join(table)})")
        return column
    for name in ("noisy", "clean"):
        if name in table:
            return name
    others = [c for c in table if c != "t"]
    if not others:
        raise DataError("input has no signal column")
    return others[0]


def cmd_synth(args):
    cfg = _experiment(args)
    if args.variance is not None:
        cfg = persistence.with_variance(cfg, args.variance)
    clean = synth_clean(cfg.signal)
    noisy = add_noise(clean, cfg.noise)
    if args.out:
        persistence.write_signal_csv(args.out, clean, noisy)
    if args.dataset_out:
        persistence.save_dataset(args.dataset_out, build_dataset(clean, cfg.noise, cfg.window_len, cfg.hop))
    print(f"synthesized {len(clean)} samples, noise {cfg.noise.describe()}")


def cmd_ar_denoise(args):
    table = persistence.read_table(args.input)
    column = _input_column(table, args.column)
    x = table[column]
    refine = ar.RefineConfig(args.iterations, args.min_delta)
    denoised, models = ar.ar_denoise_iterative(x, args.p_max, args.criterion, refine)
    t = table.get("t", np.arange(x.size, dtype=np.float64))
    header, cols = ["t", column, "denoised"], [t, x, denoised]
    if "clean" in table and column != "clean":
        header.insert(1, "clean")
        cols.insert(1, table["clean"])
    persistence.write_table(args.out, header, cols)
    if args.model_out:
        atomic_write(args.model_out, "".join(m.to_record() + "\n" for m in models))
    orders = ",".join(str(m.order) for m in models) or "none"
    print(f"ar-denoise: {len(models)} iteration(s), orders {orders}")


def cmd_train(args):
    cfg = _experiment(args)
    dataset = persistence.load_dataset(args.data)
    run = train(dataset, cfg.model, cfg.train)
    persistence.save_checkpoint(args.checkpoint_out, run.params, cfg.model)
    if args.history_out:
        persistence.write_history_csv(args.history_out, run.history)
    if run.history:
        tr, va = run.history[-1]
        print(f"trained {len(run.history)} epochs: train_loss={tr!r} val_loss={va!r}")
    else:
        print("trained 0 epochs")


def denoise_signal(params, config, x):
    """Denoise a whole signal window by window; the tail is covered by one end-aligned window."""
    x = np.asarray(x, dtype=np.float64)
    n, length = x.size, config.seq_len
    if n < length:
        raise DataError(f"signal of {n} samples is shorter than seq_len {length}")
    starts = list(range(0, n - length + 1, length))
    if starts[-1] + length < n:
        starts.append(n - length)
    windows = np.stack([x[s:s + length] for s in starts])
    out = predict(params, config, WindowedDataset(windows, windows))
    result = np.empty(n)
    covered = (n // length) * length
    result[:covered] = out[: n // length].reshape(-1)
    if covered < n:
        result[covered:] = out[-1][covered - n:]
    return result


def cmd_denoise(args):
    params, config = persistence.load_checkpoint(args.checkpoint)
    table = persistence.read_table(args.input)
    column = _input_column(table, args.column)
    x = table[column]
    y = denoise_signal(params, config, x)
    t = table.get("t", np.arange(x.size, dtype=np.float64))
    persistence.write_table(args.out, ["t", column, "denoised"], [t, x, y])
    print(f"denoised {x.size} samples")


def cmd_eval(args):
    params, config = persistence.load_checkpoint(args.checkpoint)
    dataset = persistence.load_dataset(args.data)
    if args.split != "all":
        cfg = _experiment(args)
        train_set, val_set = split_dataset(dataset, cfg.train.val_fraction, cfg.train.seed)
        dataset = val_set if args.split == "val" else train_set
    _, loss = evaluate(params, config, dataset)
    denoised = predict(params, config, dataset)
    rep = report(dataset.clean, dataset.noisy, denoised, method="transformer", noise=args.split)
    if args.out:
        atomic_write(args.out, rep.to_csv())
    agg = rep.aggregates()
    print(f"loss={loss!r}")
    print(f"median_improvement_db={agg['median_improvement_db']!r} mean_improvement_db={agg['mean_improvement_db']!r}")


def cmd_gradcheck(args):
    config = persistence.load_config(args.config).model if args.config else TINY_CONFIG
    worst = 0.0
    for seed in args.seeds:
        errors = gradient_check(config, seed=seed, step=args.step, corrupt=args.corrupt)
        name = max(errors, key=errors.get)
        worst = max(worst, errors[name])
        print(f"seed {seed}: max relative error {errors[name]:.3e} ({name})")
    ok = worst <= args.tolerance
    print(f"{'PASS' if ok else 'FAIL'} max relative error {worst!r} (tolerance {args.tolerance})")
    return 0 if ok else NumericError.exit_code


def cmd_export_plot(args):
    tables = [(Path(p), persistence.read_table(p)) for p in args.inputs]
    first = tables[0][1]
    x = first["t"] if "t" in first else np.arange(len(next(iter(first.values()))), dtype=np.float64)
    series = {}
    for path, table in tables:
        for name, values in table.items():
            if name == "t":
                continue
            label = name if len(tables) == 1 else f"{path.stem}:{name}"
            if values.size != x.size:
                raise DataError(f"{path}:{name} has {values.size} rows, expected {x.size}")
            series[label] = values
    atomic_write(args.out, svg_line_plot(x, series, title=args.title or ""))
    print(f"wrote {len(series)} series to {args.out}")


def cmd_sweep(args):
    """Train and evaluate both denoisers at each noise variance on fresh test windows."""
    base = _experiment(args)
    out_dir = Path(args.out_dir or base.output_dir)
    lines = ["variance,method,median_snr_noisy_db,median_snr_denoised_db,median_improvement_db"]
    for variance in args.variance:
        cfg = persistence.with_variance(base, variance)
        tag = f"var{variance!r}"
        clean = synth_clean(cfg.signal)
        data = build_dataset(clean, cfg.noise, cfg.window_len, cfg.hop)
        test = build_dataset(offset_signal(clean, cfg.hop // 2 + 1),
                             replace(cfg.noise, seed=cfg.noise.seed + 1), cfg.window_len, cfg.hop)
        persistence.save_dataset(out_dir / f"{tag}_dataset.bin", data)
        run = train(data, cfg.model, cfg.train)
        persistence.save_checkpoint(out_dir / f"{tag}_checkpoint.vcln", run.params, cfg.model)
        persistence.write_history_csv(out_dir / f"{tag}_history.csv", run.history)
        denoised = {
            "transformer": predict(run.params, cfg.model, test),
            "ar": np.stack([
                ar.ar_denoise_iterative(w, args.p_max, args.criterion, ar.RefineConfig(args.iterations))[0]
                for w in test.noisy
            ]),
        }
        for method, est in denoised.items():
            rep = report(test.clean, test.noisy, est, method=method, noise=cfg.noise.describe())
            atomic_write(out_dir / f"{tag}_{method}_report.csv", rep.to_csv())
            agg = rep.aggregates()
            lines.append(f"{variance!r},{method},{agg['median_snr_noisy_db']!r},"
                         f"{agg['median_snr_denoised_db']!r},{agg['median_improvement_db']!r}")
        t = np.arange(cfg.window_len) / cfg.signal.sample_rate
        svg = svg_line_plot(t, {"clean": test.clean[0], "noisy": test.noisy[0],
                                "transformer": denoised["transformer"][0], "ar": denoised["ar"][0]},
                            title=f"noise variance {variance!r}")
        atomic_write(out_dir / f"{tag}_window0.svg", svg)
    atomic_write(out_dir / "sweep_summary.csv", "\n".join(lines) + "\n")
    print("\n".join(lines))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vibdenoise", description="Vibration signal denoising toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a clean + noisy signal CSV and optional dataset")
    p.add_argument("--config", help="experiment config file (defaults built in)")
    p.add_argument("--out", help="signal CSV path (t,clean,noisy)")
    p.add_argument("--dataset-out", help="windowed dataset binary path")
    p.add_argument("--seed", type=int, help="noise seed override (else config, then $VCLN_SEED)")
    p.add_argument("--variance", type=float, help="noise variance override")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ar-denoise", help="autoregressive denoising of a signal CSV")
    p.add_argument("--in", dest="input", required=True, help="input signal CSV")
    p.add_argument("--column", help="column to denoise (default: noisy, then clean)")
    p.add_argument("--p-max", type=int, default=20, help="largest AR order considered")
    p.add_argument("--criterion", choices=("aic", "bic"), default="aic")
    p.add_argument("--iterations", type=int, default=1, help="refinement passes (0 = passthrough)")
    p.add_argument("--min-delta", type=float, default=1e-6, help="residual-variance stop threshold")
    p.add_argument("--model-out", help="AR model records, one line per iteration")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_ar_denoise)

    p = sub.add_parser("train", help="train the transformer denoiser on a dataset")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--data", required=True, help="dataset binary from `synth --dataset-out`")
    p.add_argument("--checkpoint-out", required=True)
    p.add_argument("--history-out", help="loss history CSV (epoch,train_loss,val_loss)")
    p.add_argument("--seed", type=int, help="training seed override")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("denoise", help="denoise a signal CSV with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--column", help="column to denoise (default: noisy, then clean)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset and emit an SNR report")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="experiment config (needed for the split seed)")
    p.add_argument("--split", choices=("all", "train", "val"), default="all")
    p.add_argument("--seed", type=int, help="split seed override")
    p.add_argument("--out", help="report CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--config", help="experiment config whose model section is checked (default: tiny)")
    p.add_argument("--seed", dest="seeds", type=int, nargs="+", default=list(range(10)))
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--corrupt", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("export-plot", help="render CSV traces to an SVG line plot")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title")
    p.set_defaults(func=cmd_export_plot)

    p = sub.add_parser("sweep", help="noise-variance sweep comparing transformer and AR denoising")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--variance", type=float, nargs="+", default=[0.1, 0.2])
    p.add_argument("--out-dir", help="output directory (default: config output.dir)")
    p.add_argument("--seed", type=int)
    p.add_argument("--p-max", type=int, default=20)
    p.add_argument("--criterion", choices=("aic", "bic"), default="aic")
    p.add_argument("--iterations", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args) or 0
    except VibDenoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NumericError.exit_code


if __name__ == "__main__":
    sys.exit(main())
