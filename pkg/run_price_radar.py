#!/usr/bin/env python3
"""
PriceRadar batch runner
- gen:       write a seeded synthetic sales CSV
- stats:     clean a CSV, report drops, write the correlation matrix
- train:     fit the TCN-MLP-attention forecaster; checkpoint + loss curve + report
- evaluate:  score a checkpoint on the held-out tail; predictions + metrics
- predict:   one next-week USD price from a window CSV
- gradcheck: finite-difference check of every gradient

Results go to stdout. Log records go to stderr with a timestamp prefix; a failure adds one
final stderr line `error: <ErrorClass>: <message>` and exits 1 (gradcheck mismatches exit 2).
Parsers should select the stderr line that starts with `error:`.
"""
import argparse
import json
import sys
from pathlib import Path

from dotenv import load_dotenv
from pydantic import ValidationError

from price_core.checkpoint import load_checkpoint, save_checkpoint
from price_core.config import DataConfig, configure_logging, load_run_config
from price_core.data import clean, correlation_matrix, load_csv, price_by_type, write_correlation_csv, write_table_csv
from price_core.errors import ConfigurationError, PriceRadarError
from price_core.evaluation import (climatology_baseline, evaluate, export_prediction_series, persistence_baseline,
                                   write_metrics)
from price_core.features import encode_frame
from price_core.gradcheck import run_gradcheck_suite
from price_core.model import predict
from price_core.pipeline import prepare_data, run_training
from price_core.synthetic import SyntheticConfig, gen_synthetic

GRADCHECK_FAILED = 2


def cmd_gen(args, logger) -> int:
    table = gen_synthetic(args.regions, args.weeks, args.seed, SyntheticConfig(missing_rate=args.missing_rate))
    write_table_csv(table, args.out)
    print(f"✅ Wrote {len(table):,} rows to {args.out}")
    return 0


def cmd_stats(args, logger) -> int:
    table = clean(load_csv(args.data))
    report = table.report
    print(f"📋 Rows: {report.rows_before:,} → {report.rows_after:,} ({report.total_dropped:,} dropped)")
    for reason, n in report.dropped.items():
        print(f"   • {reason}: {n:,}")
    write_correlation_csv(correlation_matrix(table), args.out)
    print(f"✅ Correlation matrix written to {args.out}")
    if args.cleaned:
        write_table_csv(table, args.cleaned)
    if args.price_by_type:
        price_by_type(table).to_csv(args.price_by_type, index=False, date_format="%Y-%m-%d")
    return 0


def cmd_train(args, logger) -> int:
    run_cfg = load_run_config(args.config)
    logger.info(f"⚙️ Resolved config: {json.dumps(run_cfg.flat(), sort_keys=True)}")
    ckpt, report, data = run_training(load_csv(args.data), run_cfg)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.ckpt", ckpt)
    report.write_loss_curve(out / "loss_curve.csv")
    report.write_json(out / "train_report.json")
    m = report.metrics
    print(f"✅ Trained {report.epochs_run} epochs (best {report.best_epoch}); "
          f"{m['split']} RMSE {m['rmse']:.4f} {m['units']}; artifacts in {out}")
    return 0


def cmd_evaluate(args, logger) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    if ckpt.feature_spec is None:
        raise ConfigurationError("checkpoint has no feature spec; it cannot decode prices")
    data_cfg = ckpt.data_config or DataConfig()
    logger.info(f"⚙️ Checkpoint config: {json.dumps(ckpt.model_config.model_dump(), sort_keys=True)}")
    data = prepare_data(load_csv(args.data), ckpt.model_config.window_length, data_cfg, spec=ckpt.feature_spec)

    result = evaluate(ckpt.params, ckpt.model_config, data.test, ckpt.feature_spec, with_attention=args.attention)
    metrics = dict(result.metrics)
    if data.train:
        metrics.update({f"climatology_{k}": v for k, v in climatology_baseline(data.train, data.test).items()
                        if k != "n_samples"})
    metrics.update({f"persistence_{k}": v for k, v in persistence_baseline(data.test).items() if k != "n_samples"})

    out = Path(args.out_dir)
    export_prediction_series(result.predictions, out / "predictions.csv")
    write_metrics(metrics, out / "metrics.json")
    print(f"✅ Test RMSE {metrics['rmse']:.4f} USD, MSE {metrics['mse']:.4f} on {metrics['n_samples']:,} windows")
    return 0


def cmd_predict(args, logger) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    spec, cfg = ckpt.feature_spec, ckpt.model_config
    if spec is None:
        raise ConfigurationError("checkpoint has no feature spec; it cannot encode a window")
    frame = clean(load_csv(args.window)).frame
    if frame[["Region", "type"]].drop_duplicates().shape[0] != 1:
        raise ConfigurationError("window CSV must hold exactly one (Region, type) series")
    L = cfg.window_length
    if len(frame) < L:
        raise ConfigurationError(f"window CSV has {len(frame)} usable weeks, the model needs {L}")
    window = encode_frame(frame.sort_values("Date").tail(L), spec).T
    price = float(spec.decode_target(predict(window, cfg, ckpt.params)))
    print(f"{price:.6f}")
    return 0


def cmd_gradcheck(args, logger) -> int:
    results = run_gradcheck_suite(args.seed)
    failed = [r for r in results if not r.passed]
    worst = max(r.max_rel_err for r in results)
    print(f"{'✅' if not failed else '❌'} gradcheck: {len(results) - len(failed)}/{len(results)} tensors match "
          f"(worst relative error {worst:.2e})")
    for r in failed:
        print(f"   • {r.case}/{r.tensor}: max rel err {r.max_rel_err:.2e}")
    return GRADCHECK_FAILED if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="PriceRadar: weekly avocado price forecasting")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging (per-epoch losses)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic sales CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--regions", type=int, default=5)
    p.add_argument("--weeks", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--missing-rate", type=float, default=0.0, help="share of numeric cells set to -99")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", help="clean a CSV and write its correlation matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="correlation matrix CSV")
    p.add_argument("--cleaned", help="optional echo of the cleaned table")
    p.add_argument("--price-by-type", help="optional weekly mean price per type")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train and checkpoint a model")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="key=value config file; every key optional")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on the test tail")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--attention", action="store_true", help="add per-step attention weights to predictions.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict next week's price from a window CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--window", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def _one_line(message: str) -> str:
    return " ".join(str(message).split())


def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    logger = configure_logging(args.verbose)
    try:
        return args.func(args, logger)
    except ValidationError as e:
        print(f"error: ConfigurationError: {_one_line(e)}", file=sys.stderr)
    except PriceRadarError as e:
        print(f"error: {type(e).__name__}: {_one_line(e)}", file=sys.stderr)
    except OSError as e:
        print(f"error: {type(e).__name__}: {_one_line(e)}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
