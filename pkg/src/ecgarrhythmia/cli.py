"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 data, 4 signal, 5 feature,
6 model, 7 evaluation errors (see :mod:`ecgarrhythmia.errors`).

Every subcommand accepts ``--config FILE``: a JSON object whose keys are
option names (``n_trees`` or ``n-trees``). Flags given on the command line
override the file.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .balance import BalanceConfig, auto_target, balance
from .classify import ForestParams, load_model, predict, save_model, train
from .delineate import delineate, detect_r_peaks
from .domain import (
    FEATURE_NAMES,
    LABELS,
    load_features,
    load_records,
    parse_label,
    read_record,
    save_features,
    write_manifest,
    write_record,
)
from .errors import DataError, EcgError
from .evaluate import (
    ablation_feature_subsets,
    ablation_wavelets,
    balanced_for_training,
    compare_classifiers,
    grid_search,
    kfold_crossval,
    present_labels,
    write_plots,
)
from .pipeline import FilterSettings, PipelineConfig, extract_dataset, record_features, run_pipeline
from .preprocess import clean
from .synthgen import make_corpus
from .wavelet import WAVELETS


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _forest_params(a) -> ForestParams:
    return ForestParams(
        n_trees=a.trees, max_depth=a.max_depth, min_samples_leaf=a.min_leaf,
        features_per_split=a.mtry, bootstrap=not a.no_bootstrap, seed=a.seed, n_jobs=a.jobs,
    )


def _filters(a) -> FilterSettings:
    return FilterSettings(a.low_hz, a.high_hz, None if a.notch_hz <= 0 else a.notch_hz)


def _balance_config(a):
    if a.target is None:
        return None
    return BalanceConfig(a.target, a.k, a.seed)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(a):
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = [parse_label(x) for x in a.labels.split(",")] if a.labels else None
    entries = []
    for record, truth in make_corpus(a.n_per_class, a.seed, labels):
        path = out / f"{record.id}.ecg"
        write_record(record, path)
        if not a.no_truth:
            (out / f"{record.id}.truth.json").write_text(json.dumps(truth.to_dict()) + "\n")
        entries.append((path, record.label))
    write_manifest(entries, out / "manifest.csv")
    print(f"wrote {len(entries)} records to {out}", file=sys.stderr)


def cmd_preprocess(a):
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    low = None if a.notch_only else a.low_hz
    notch = None if a.notch_hz <= 0 else a.notch_hz
    for rec in load_records(a.manifest):
        path = out / f"{rec.id}.ecg"
        write_record(clean(rec, low, a.high_hz, notch), path)
        entries.append((path, rec.label))
    write_manifest(entries, out / "manifest.csv")


def cmd_delineate(a):
    records = [read_record(a.record)] if a.record else load_records(a.manifest)
    filters = _filters(a)
    result = {}
    for rec in records:
        x = clean(rec, filters.low_hz, filters.high_hz, filters.notch_hz)
        result[rec.id] = delineate(x, detect_r_peaks(x)).to_dict()
    _write_json(result, a.out)


def cmd_features(a):
    records = load_records(a.manifest)
    res = extract_dataset(records, a.mode, a.wavelet, filters=_filters(a), skip_errors=a.skip_errors)
    save_features(res.dataset, a.out)
    for rid, kind, msg in res.failures:
        print(f"skipped {rid}: {kind}: {msg}", file=sys.stderr)
    if a.flags:
        _write_json({"flags": res.flags, "failures": res.failures}, a.flags)


def cmd_balance(a):
    ds = load_features(a.features)
    labels = present_labels(ds) if a.present_only else LABELS
    out = balance(ds, BalanceConfig(a.target, a.k, a.seed), labels=labels)
    save_features(out, a.out)


def cmd_train(a):
    ds = load_features(a.features)
    meta = {"wavelet": a.wavelet} if a.wavelet else {}
    model = train(ds, a.classifier, _forest_params(a), a.knn_k, meta=meta)
    save_model(model, a.out)
    if model.oob_score is not None:
        print(f"out-of-bag accuracy: {model.oob_score:.4f}", file=sys.stderr)


def cmd_crossval(a):
    if a.manifest:
        cfg = PipelineConfig(
            mode=a.mode, wavelet=a.wavelet if a.mode == "wavelet66" else None,
            filters=_filters(a), balance=_balance_config(a),
            balance_train_only=a.balance_train_only, no_balance=a.no_balance,
            forest=_forest_params(a), classifier=a.classifier, folds=a.folds, seed=a.seed,
            manifest=a.manifest, out_dir=a.out_dir,
        )
        report, paths = run_pipeline(cfg)
        text = paths["report"].read_text()
        if a.report in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(a.report).write_text(text)
    else:
        if not a.features:
            raise DataError("crossval needs --features or --manifest")
        ds = load_features(a.features)
        cfg = _balance_config(a)
        balance_train = None
        if a.no_balance:
            pass
        elif a.balance_train_only:
            balance_train = cfg or BalanceConfig(auto_target(ds, present_labels(ds)), a.k, a.seed)
        else:
            ds = balanced_for_training(ds, cfg, a.seed)
        report = kfold_crossval(ds, a.folds, _forest_params(a), a.seed, a.classifier, a.knn_k,
                                balance_train=balance_train)
        _write_json(report.to_dict(), a.report)
    if a.plots:
        write_plots(report, a.plots)
    avg = report.headline()
    print("  ".join(f"{k} {avg[k]:.2f}" for k in ("Acc", "Se", "+P", "F1")), file=sys.stderr)


def cmd_ablate(a):
    params = _forest_params(a)
    if a.kind == "wavelets":
        records = load_records(a.manifest)
        wavelets = a.wavelets.split(",") if a.wavelets else list(WAVELETS)
        rows = ablation_wavelets(records, wavelets, a.folds, params, a.seed,
                                 balance_config=_balance_config(a))
        _write_json({"kind": "wavelets", "rows": rows}, a.out)
        return
    ds = load_features(a.features)
    if not a.no_balance:
        ds = balanced_for_training(ds, _balance_config(a), a.seed)
    if a.kind == "subsets":
        subsets = a.subsets.split(",") if a.subsets else ["HRV", "HRV+P", "HRV+PRI", "HRV+QRS", "ALL"]
        rows = ablation_feature_subsets(ds, subsets, a.folds, params, a.seed)
    elif a.kind == "classifiers":
        rows = compare_classifiers(ds, a.classifiers.split(","), a.folds, params, a.seed, a.knn_k)
    else:
        grid = json.loads(a.grid) if a.grid else {"n_trees": [50, 100, 200], "max_depth": [None]}
        best, rows = grid_search(ds, grid, a.folds, params, a.seed)
        _write_json({"kind": "grid", "best": best.to_dict(), "rows": rows}, a.out)
        return
    _write_json({"kind": a.kind, "rows": rows}, a.out)


def cmd_predict(a):
    model = load_model(a.model)
    ds = load_features(a.features, model.mode)
    labels, proba = predict(model, ds)
    lines = ["id,label,confidence"]
    for rid, lab, p in zip(ds.ids, labels, proba):
        lines.append(f"{rid},{lab},{p.max():.6f}")
    text = "\n".join(lines) + "\n"
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)


def stream_classify(model, lines, out, err, wavelet=None, filters=FilterSettings()):
    """Classify one record path per input line; returns the number of errors.

    Output per record is ``id,label,confidence`` or ``id,ERROR,reason``;
    the processing latency goes to ``err``.
    """
    wavelet = wavelet or model.meta.get("wavelet", "sym7")
    if tuple(model.names) != FEATURE_NAMES[model.mode]:
        raise DataError("streaming needs a model trained on the full feature set")
    n_err = 0
    for line in lines:
        path = line.strip()
        if not path:
            continue
        t0 = time.perf_counter()
        rid = Path(path).stem
        try:
            rec = read_record(path)
            rid = rec.id
            fv = record_features(rec, model.mode, wavelet, filters=filters)
            lab, proba = predict(model, fv)
            out.write(f"{rid},{lab},{proba.max():.6f}\n")
        except (EcgError, OSError, ValueError) as exc:
            n_err += 1
            reason = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
            out.write(f"{rid},ERROR,{reason}\n")
        out.flush()
        err.write(f"{rid} latency_ms={1000 * (time.perf_counter() - t0):.1f}\n")
    return n_err


def cmd_stream(a):
    model = load_model(a.model)
    stream_classify(model, sys.stdin, sys.stdout, sys.stderr, a.wavelet, _filters(a))


# ---------------------------------------------------------------------------
# parser


def _add_filter_args(p):
    p.add_argument("--low-hz", type=float, default=1.0)
    p.add_argument("--high-hz", type=float, default=150.0)
    p.add_argument("--notch-hz", type=float, default=50.0, help="0 disables the notch")


def _add_forest_args(p):
    p.add_argument("--classifier", choices=("forest", "dtree", "knn"), default="forest")
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--mtry", type=int, default=None, help="features per split (default ceil(sqrt F))")
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)


def _add_balance_args(p, with_modes=True):
    p.add_argument("--target", type=int, default=None,
                   help="rows per class after balancing (default: median class count)")
    p.add_argument("--k", type=int, default=5, help="SMOTE neighbours")
    if with_modes:
        p.add_argument("--no-balance", action="store_true")
        p.add_argument("--balance-train-only", action="store_true",
                       help="balance training folds only; test folds keep their distribution")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecgarrhythmia", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file with option defaults")
        p.add_argument("--seed", type=int, default=42)
        p.set_defaults(func=func)
        return p

    p = command("synth", cmd_synth, "generate a labelled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", "--n", dest="n_per_class", type=int, default=100)
    p.add_argument("--labels", "--class", dest="labels", help="comma-separated subset of classes")
    p.add_argument("--no-truth", action="store_true",
                   help="skip the ground-truth fiducial sidecar files")
    p.set_defaults(seed=13)

    p = command("preprocess", cmd_preprocess, "filter every record of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--notch-only", action="store_true")
    _add_filter_args(p)

    p = command("delineate", cmd_delineate, "R-peaks and P/QRS/T fiducials as JSON")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--record")
    g.add_argument("--manifest")
    p.add_argument("--out", default="-")
    _add_filter_args(p)

    p = command("features", cmd_features, "extract time48 or wavelet66 features")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=("time48", "wavelet66"), default="time48")
    p.add_argument("--wavelet", default="sym7", choices=WAVELETS + ("bior4_4",))
    p.add_argument("--out", required=True)
    p.add_argument("--skip-errors", action="store_true")
    p.add_argument("--flags", help="write per-record estimator flags to this JSON file")
    _add_filter_args(p)

    p = command("balance", cmd_balance, "SMOTE / undersample a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", type=int, default=3451)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--present-only", action="store_true",
                   help="balance only the classes present instead of requiring all nine")

    p = command("train", cmd_train, "train a classifier on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--wavelet", help="recorded in the model for streaming wavelet66 input")
    _add_forest_args(p)

    p = command("crossval", cmd_crossval, "stratified k-fold cross-validation")
    p.add_argument("--features")
    p.add_argument("--manifest", help="run the whole pipeline from records")
    p.add_argument("--mode", choices=("time48", "wavelet66"), default="time48")
    p.add_argument("--wavelet", default="sym7")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--report", default="-")
    p.add_argument("--plots", help="directory for confusion-matrix and per-class images")
    _add_forest_args(p)
    _add_balance_args(p)
    _add_filter_args(p)

    p = command("ablate", cmd_ablate, "feature-subset, wavelet, classifier or grid comparisons")
    p.add_argument("kind", choices=("subsets", "wavelets", "classifiers", "grid"))
    p.add_argument("--features")
    p.add_argument("--manifest")
    p.add_argument("--subsets", help="comma-separated, groups joined by '+', e.g. HRV,HRV+P,ALL")
    p.add_argument("--wavelets", help="comma-separated mother wavelets")
    p.add_argument("--classifiers", default="knn,dtree,forest")
    p.add_argument("--grid", help='JSON, e.g. {"n_trees": [50, 200], "max_depth": [null, 10]}')
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out", default="-")
    _add_forest_args(p)
    _add_balance_args(p, with_modes=False)
    p.add_argument("--no-balance", action="store_true")

    p = command("predict", cmd_predict, "classify the rows of a feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out")

    p = command("stream", cmd_stream, "classify record paths read line by line from stdin")
    p.add_argument("--model", required=True)
    p.add_argument("--wavelet", help="override the wavelet stored in the model")
    _add_filter_args(p)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so explicit flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config file must hold a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {act.dest for act in subparser._actions}
    unknown = sorted(set(cfg) - known)
    if unknown:
        parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    try:
        args.func(args)
    except EcgError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: MissingFile: {exc}", file=sys.stderr)
        return DataError.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
