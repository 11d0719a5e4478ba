"""Command-line pipeline: featurize, fit, score, signatures, cluster.

Exit codes: 0 success, 1 usage error, 2 data error, 3 failed invariant check.
Every command writes a ``*.manifest.json`` next to its outputs.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import ClusterConfig, cluster_signatures
from .data_io import featurize_spectra, load_csv, load_model, load_spectra, save_csv, save_model, write_json
from .dataset import Dataset
from .errors import DataError, InvalidFractionError, SchemaMismatchError, SigforestError, TooFewSamplesError
from .forest import ForestConfig, ForestModel, fit, resolve_workers
from .scoring import score_samples
from .signature import signature_batch, telescoping_residual

log = logging.getLogger("sigforest")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3
TELESCOPING_TOLERANCE = 1e-9


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _power_of_two(text: str) -> int:
    value = int(text)
    if value < 2 or value & (value - 1):
        raise argparse.ArgumentTypeError(f"must be a power of two >= 2, got {value}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {value}")
    return value


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _write_manifest(path: Path, args, config: dict, inputs: list, outputs: list, started: str) -> None:
    manifest = {
        "command": args.command,
        "argv": list(args.argv),
        "config": config,
        "seed": config.get("seed"),
        "artifact_version": __version__,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": {str(p): _digest(p) for p in outputs},
        "runtime": {"threads": resolve_workers(args.threads)},
        "timestamps": {"started": started, "finished": _now()},
    }
    write_json(manifest, path)


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_table(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _align(data: Dataset, model: ForestModel) -> Dataset:
    """Reorder input columns to the model's feature order."""
    if data.feature_names == model.feature_names:
        return data
    have, want = set(data.feature_names), set(model.feature_names)
    if have != want or len(data.feature_names) != len(model.feature_names):
        raise SchemaMismatchError(
            missing=[n for n in model.feature_names if n not in have],
            extra=[n for n in data.feature_names if n not in want],
        )
    pos = {n: j for j, n in enumerate(data.feature_names)}
    order = [pos[n] for n in model.feature_names]
    return Dataset(data.values[:, order], list(model.feature_names), list(data.row_ids))


def _load_inputs(args) -> tuple[ForestModel, Dataset]:
    model = load_model(args.model)
    data = _align(load_csv(args.input, id_column=args.id_column), model)
    return model, data


def _check(args, model: ForestModel, data: Dataset) -> None:
    if not args.check:
        return
    worst = telescoping_residual(model, data)
    log.info("telescoping check: max residual %.3g", worst)
    if worst > TELESCOPING_TOLERANCE:
        raise InvariantViolation(f"telescoping residual {worst:.3g} exceeds {TELESCOPING_TOLERANCE:g}")


def cmd_featurize(args) -> None:
    started = _now()
    if (args.uncertainty is None) == (args.split_at is None):
        raise UsageError("give exactly one of --uncertainty or --split-at")
    pair = load_spectra(args.flux, args.uncertainty, split_at=args.split_at, id_column=args.id_column)
    data = featurize_spectra(pair)
    out = Path(args.out)
    save_csv(data, out)
    inputs = [args.flux] + ([args.uncertainty] if args.uncertainty else [])
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        args,
        {"split_at": args.split_at, "bins": len(pair.wavelengths), "features": data.n_features, "seed": None},
        inputs,
        [out],
        started,
    )
    log.info("wrote %d rows x %d features to %s", data.n_samples, data.n_features, out)


def cmd_fit(args) -> None:
    started = _now()
    data = load_csv(args.input, id_column=args.id_column)
    config = ForestConfig(subsample_size=args.subsample, tree_count=args.trees, seed=args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = fit(data, config, n_jobs=args.threads)
    for w in caught:
        log.warning("%s", w.message)
    out = Path(args.model_out)
    save_model(model, out)
    cfg = model.config
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        args,
        {
            "subsample_size": cfg.subsample_size,
            "requested_subsample_size": args.subsample,
            "tree_count": cfg.tree_count,
            "max_depth": cfg.max_depth,
            "seed": cfg.seed,
        },
        [args.input],
        [out],
        started,
    )
    log.info("fitted %d trees on %d x %d -> %s", cfg.tree_count, data.n_samples, data.n_features, out)


def cmd_score(args) -> None:
    started = _now()
    model, data = _load_inputs(args)
    _check(args, model, data)
    scores, depth = score_samples(model, data, n_jobs=args.threads)
    order = np.argsort(scores, kind="stable")
    out = Path(args.out)
    _write_table(
        out,
        ["row_id", "score", "expected_depth_mean"],
        ([data.row_ids[i], _fmt(scores[i]), _fmt(depth[i])] for i in order),
    )
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        args,
        {"seed": model.config.seed},
        [args.model, args.input],
        [out],
        started,
    )


def _split_point(names: list[str], split_at: int | None) -> int | None:
    if split_at is not None:
        return split_at
    half = len(names) // 2
    if len(names) % 2 == 0 and half and all(n.startswith("flux_") for n in names[:half]) and all(
        n.startswith("err_") for n in names[half:]
    ):
        return half
    return None


def cmd_signatures(args) -> None:
    started = _now()
    model, data = _load_inputs(args)
    if args.ids:
        data = data.select(data.positions_of(args.ids))
    _check(args, model, data)
    sig = signature_batch(model, data, n_jobs=args.threads)
    names = list(model.feature_names)
    out = Path(args.out)
    stem = out.with_suffix("")
    counts_path = Path(f"{stem}_counts.csv")
    json_path = Path(f"{stem}.json")
    _write_table(out, ["row_id", *names], ([rid, *map(_fmt, row)] for rid, row in zip(sig.row_ids, sig.values)))
    _write_table(counts_path, ["row_id", *names], ([rid, *map(str, row)] for rid, row in zip(sig.row_ids, sig.counts)))
    write_json(
        {
            "feature_names": names,
            "row_ids": sig.row_ids,
            "values": sig.values.tolist(),
            "counts": sig.counts.tolist(),
            "defined_mask": sig.defined_mask.tolist(),
        },
        json_path,
    )
    outputs = [out, counts_path, json_path]
    cut = _split_point(names, args.split_at)
    if cut is not None:
        for label, cols in (("flux", slice(0, cut)), ("err", slice(cut, None))):
            path = Path(f"{stem}_{label}.csv")
            _write_table(
                path,
                ["row_id", *names[cols]],
                ([rid, *map(_fmt, row[cols])] for rid, row in zip(sig.row_ids, sig.values)),
            )
            outputs.append(path)
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        args,
        {"seed": model.config.seed, "ids": args.ids, "split_at": cut},
        [args.model, args.input],
        outputs,
        started,
    )


def cmd_cluster(args) -> None:
    started = _now()
    model, data = _load_inputs(args)
    _check(args, model, data)
    config = ClusterConfig(
        k=args.k,
        top_fraction=args.top_fraction,
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        seed=args.seed,
        standardize=args.standardize,
    )
    report = cluster_signatures(model, data, config, n_jobs=args.threads)
    names = list(model.feature_names)
    prefix = args.out_prefix
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    assignments_path = Path(f"{prefix}_assignments.csv")
    profiles_path = Path(f"{prefix}_profiles.csv")
    report_path = Path(f"{prefix}_report.json")
    _write_table(
        assignments_path,
        ["row_id", "score", "cluster"],
        (
            [rid, _fmt(s), str(int(c))]
            for rid, s, c in zip(report.selected_ids, report.selected_scores, report.assignments)
        ),
    )
    _write_table(
        profiles_path,
        ["cluster", *names, "size"],
        ([str(c), *map(_fmt, report.profiles[c]), str(int(report.sizes[c]))] for c in range(config.k)),
    )
    doc = report.to_dict(names)
    doc["config"] = {
        "k": config.k,
        "top_fraction": config.top_fraction,
        "restarts": config.restarts,
        "max_iterations": config.max_iterations,
        "tolerance": config.tolerance,
        "seed": config.seed,
        "standardize": config.standardize,
    }
    write_json(doc, report_path)
    _write_manifest(
        Path(f"{prefix}.manifest.json"),
        args,
        doc["config"],
        [args.model, args.input],
        [assignments_path, profiles_path, report_path],
        started,
    )
    log.info(
        "selected %d rows; cluster sizes %s; triage ratio %.2f",
        len(report.selected_ids),
        report.sizes.tolist(),
        report.triage_ratio,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--id-column", type=int, default=0, help="position of the row-id column (default 0)")
    common.add_argument("--threads", type=_positive_int, default=None, help="worker threads (default: $SIGFOREST_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    checked = argparse.ArgumentParser(add_help=False)
    checked.add_argument("--model", required=True)
    checked.add_argument("--input", required=True)
    checked.add_argument("--check", action="store_true", help="verify the depth decomposition on every input row")

    parser = _Parser(prog="sigforest", description="Isolation forest with per-feature anomaly signatures.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("featurize", parents=[common], help="turn flux/uncertainty spectra into a feature CSV")
    p.add_argument("--flux", required=True, help="flux CSV (or combined flux+uncertainty CSV with --split-at)")
    p.add_argument("--uncertainty", help="uncertainty CSV with the same rows and wavelength header")
    p.add_argument("--split-at", type=_positive_int, help="feature column where uncertainties start in a combined CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("fit", parents=[common], help="fit an isolation forest")
    p.add_argument("--input", required=True)
    p.add_argument("--subsample", type=_power_of_two, default=1024, help="points per tree, a power of two (default 1024)")
    p.add_argument("--trees", type=_positive_int, default=3000, help="number of trees (default 3000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", parents=[common, checked], help="score rows, most anomalous first")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("signatures", parents=[common, checked], help="export per-feature signatures")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--ids", nargs="+", help="row ids to export")
    which.add_argument("--all", action="store_true", help="export every row")
    p.add_argument("--split-at", type=_positive_int, help="also write the two column blocks separately")
    p.add_argument("--out", required=True, help="values CSV; siblings *_counts.csv and *.json are written too")
    p.set_defaults(func=cmd_signatures)

    p = sub.add_parser("cluster", parents=[common, checked], help="cluster signatures of the top anomalies")
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--top-fraction", type=_fraction, default=0.10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--max-iterations", type=_positive_int, default=300)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--standardize", action="store_true", help="z-score signature columns before clustering")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_cluster)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sigforest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"sigforest: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, TooFewSamplesError, InvalidFractionError, OSError) as exc:
        print(f"sigforest: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SigforestError as exc:
        print(f"sigforest: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
