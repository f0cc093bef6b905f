"""Command line front end: ``song fit|grow|eval|embed|plot|blobs``.

Reports are ``key=value`` lines on standard output; errors go to standard
error with a nonzero exit status and never leave partial output files.
"""
import argparse
import csv
import json
import logging
import sys
import warnings

import numpy as np

from .evaluation import (BlobSpec, DEFAULT_CENTER_BOX, adjusted_mutual_information,
                         apply_projection, consecutive_displacement, fit_pca, kmeans, make_blobs)
from .io import (atomic_write, export_embedding, load_csv, load_idx, load_model, save_model,
                 write_csv)
from .model import DataMatrix, HyperParams, ValidationError, init_model, transform
from .svg import scatter_svg
from .trainer import TrainingError, fit, partial_fit

log = logging.getLogger("song")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    if isinstance(v, bool):
        return str(v).lower()
    return str(v)


def _emit(pairs):
    for key, value in pairs:
        print(f"{key}={_fmt(value)}")


def _is_idx(path):
    name = path.lower()
    if name.endswith(".gz"):
        name = name[:-3]
    return name.endswith("ubyte") or name.endswith(".idx")


def _csv_label_column(path, requested):
    if requested is not None:
        return requested
    with open(path, newline="") as fh:
        first = next(csv.reader(fh), [])
    return "label" if "label" in [c.strip() for c in first] else None


def load_data(path, labels=None, label_column=None):
    """Load CSV or IDX data, chosen by file name."""
    if _is_idx(path):
        return load_idx(path, labels)
    return load_csv(path, has_header=None, label_column=_csv_label_column(path, label_column))


def _project(model, data):
    """Apply the model's stored input projection, if any."""
    if data.n == 0 or model.projection is None:
        return data
    mean = model.projection[0]
    if data.dim != mean.size:
        raise ValidationError(f"data has dimension {data.dim}, the model's projection expects "
                              f"{mean.size}")
    return DataMatrix(apply_projection(data.rows, model.projection), data.labels)


def _parse_overrides(items):
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def _write_report(path, pairs):
    if path:
        atomic_write(path, json.dumps(dict(pairs), sort_keys=True, indent=1) + "\n")


def _report_pairs(report):
    return [
        ("epochs_run", report.epochs_run),
        ("terminated_early", report.terminated_early),
        ("growth_events", report.growth_events),
        ("growth_skipped", report.growth_skipped),
        ("n_nodes", report.n_nodes),
        ("final_qe", report.final_qe),
        ("final_alpha", report.final_alpha),
        ("theta_g", report.theta_g if report.theta_g is not None else ""),
        ("edge_changes_per_epoch", ",".join(str(c) for c in report.edge_changes_per_epoch)),
    ]


def cmd_fit(args):
    data = load_data(args.data, args.labels, args.label_column)
    if data.n == 0:
        raise ValidationError(f"{args.data} contains no rows")
    rows = data.rows
    projection = None
    if args.pca:
        projection = fit_pca(rows, args.pca)
        rows = apply_projection(rows, projection)
    overrides = _parse_overrides(args.set)
    overrides["seed"] = args.seed
    hyper = HyperParams.from_dict({**HyperParams().to_dict(), **overrides})
    model = init_model(rows.shape[1], args.dims, hyper, (rows.min(axis=0), rows.max(axis=0)))
    model.projection = projection
    report = fit(model, rows)
    save_model(model, args.model_out)
    pairs = _report_pairs(report) + [("input_dim", model.input_dim),
                                     ("model_out", args.model_out)]
    _emit(pairs)
    _write_report(args.report, pairs)
    return 0


def cmd_grow(args):
    model = load_model(args.model_in)
    data = _project(model, load_data(args.data, args.labels, args.label_column))
    old = model.reference_data.copy()
    before = transform(model, old) if len(old) else np.zeros((0, model.output_dim))
    report = partial_fit(model, data)
    after = transform(model, old) if len(old) else before
    mean, std, _ = consecutive_displacement(before, after)
    save_model(model, args.model_out)
    pairs = _report_pairs(report) + [("new_rows", data.n), ("cdy_mean", mean), ("cdy_std", std),
                                     ("model_out", args.model_out)]
    _emit(pairs)
    _write_report(args.report, pairs)
    return 0


def cmd_eval(args):
    model = load_model(args.model_in)
    data = _project(model, load_data(args.data, args.labels, args.label_column))
    if data.labels is None:
        raise ValidationError(f"{args.data} has no labels to evaluate against")
    if args.repeats < 1:
        raise ValidationError("repeats must be at least 1")
    Y = transform(model, data)
    scores = [adjusted_mutual_information(data.labels, kmeans(Y, args.k, seed=args.seed + r))
              for r in range(args.repeats)]
    pairs = [("ami_mean", float(np.mean(scores))), ("ami_std", float(np.std(scores))),
             ("repeats", args.repeats), ("ami_samples", ",".join(format(s, ".6g") for s in scores))]
    _emit(pairs)
    _write_report(args.report, pairs)
    return 0


def cmd_embed(args):
    model = load_model(args.model_in)
    data = _project(model, load_data(args.data, args.labels, args.label_column))
    export_embedding(model, data, args.out)
    _emit([("rows", data.n), ("out", args.out)])
    return 0


def cmd_plot(args):
    if args.embedding:
        emb = load_csv(args.embedding, has_header=None,
                       label_column=_csv_label_column(args.embedding, args.label_column))
        points, labels = emb.rows, emb.labels
    elif args.model_in and args.data:
        model = load_model(args.model_in)
        data = _project(model, load_data(args.data, args.labels, args.label_column))
        points, labels = transform(model, data), data.labels
    else:
        raise ValidationError("plot needs --embedding or both --model-in and --data")
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValidationError(f"plot needs a 2-d embedding, got {points.shape[1]} dimensions")
    atomic_write(args.svg_out, scatter_svg(points, labels, point_size=args.point_size,
                                           color_by_label=not args.no_color))
    _emit([("points", points.shape[0]), ("svg_out", args.svg_out)])
    return 0


def cmd_blobs(args):
    spec = BlobSpec(n_clusters=args.n_clusters, cluster_std=args.std, dims=args.dims,
                    points_per_cluster=args.points_per_cluster, seed=args.seed,
                    center_box=args.center_box)
    data = make_blobs(spec)
    write_csv(args.out, data)
    _emit([("rows", data.n), ("dims", data.dim), ("clusters", spec.n_clusters), ("out", args.out)])
    return 0


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV file, or IDX images (*ubyte, *.idx, .gz)")
    p.add_argument("--labels", help="IDX label file accompanying IDX images")
    p.add_argument("--label-column", help="CSV label column, by name or 0-based position "
                                          "(default: a column named 'label' if present)")


def build_parser():
    parser = argparse.ArgumentParser(prog="song", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train a new model")
    _add_data_args(p)
    p.add_argument("--dims", type=int, default=2, help="embedding dimension")
    p.add_argument("--pca", type=int, default=0, help="project inputs to this many components first")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="hyperparameter override")
    p.add_argument("--model-out", required=True)
    p.add_argument("--report", help="also write the report as JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("grow", help="add data to a trained model")
    p.add_argument("--model-in", required=True)
    _add_data_args(p)
    p.add_argument("--model-out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("eval", help="AMI of k-means on the embedding against labels")
    p.add_argument("--model-in", required=True)
    _add_data_args(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("embed", help="write the embedding of a dataset as CSV")
    p.add_argument("--model-in", required=True)
    _add_data_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("plot", help="SVG scatter of a 2-d embedding")
    p.add_argument("--embedding", help="embedding CSV written by 'song embed'")
    p.add_argument("--model-in")
    _add_data_args(p, required=False)
    p.add_argument("--svg-out", required=True)
    p.add_argument("--point-size", type=float, default=3.0)
    p.add_argument("--no-color", action="store_true", help="ignore labels")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("blobs", help="write a Gaussian blob dataset")
    p.add_argument("--n-clusters", type=int, default=10)
    p.add_argument("--std", type=float, default=4.0)
    p.add_argument("--dims", type=int, default=60)
    p.add_argument("--points-per-cluster", type=int, default=200)
    p.add_argument("--center-box", type=float, default=DEFAULT_CENTER_BOX)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_blobs)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ValidationError, TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
