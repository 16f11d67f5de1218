"""Command-line pipeline: ``python -m icucet <subcommand>``.

Every subcommand reads and writes plain files inside ``--out-dir``;
inputs default to the file a previous step would have written there, so
a whole run needs little more than ``--out-dir``::

    icucet synth --out-dir run --n-stays 5000
    icucet featurize --out-dir run
    icucet label --out-dir run
    icucet split --out-dir run
    icucet train --out-dir run --family gbt
    icucet evaluate --out-dir run --model run/model_gbt.bin
    icucet importance --out-dir run --model run/model_gbt.bin
    icucet report --out-dir run

Errors print one line ``error: <Category>: <message>`` to stderr. Exit
codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import artifact, ingest, labeler, metrics, splitter, synth
from .config import PipelineConfig, load_config
from .errors import CetError, LengthMismatch, MissingInput, UsageError
from .featurize import featurize_cohort, read_features, write_features
from .labeler import LABELS
from .learners import DEFAULT_GRIDS, FAMILIES, fit_model, grid_search
from .learners.pipeline import resolve_params
from .seeding import derive_seed

logger = logging.getLogger("icucet")


def _path(args, attr, default_name):
    value = getattr(args, attr, None)
    return Path(value) if value else Path(args.out_dir) / default_name


def _open_in(path, mode="r"):
    try:
        return open(path, mode, encoding=None if "b" in mode else "utf-8", newline="" if "b" not in mode else None)
    except FileNotFoundError:
        raise MissingInput(f"input file not found: {path}") from None


def _write_text(path, writer, *payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer(fh, *payload)


def _cohort(args):
    sp, ep = _path(args, "stays", "stays.csv"), _path(args, "events", "events.csv")
    with _open_in(sp, "rb") as f:
        stays = ingest.parse_stays(f)
    with _open_in(ep, "rb") as f:
        cohort = ingest.select_cohort(stays, ingest.parse_event_blocks(f))
    return cohort


def _aligned(args, need_split=False):
    """Features and labels joined on stay_id, optionally restricted to the test split."""
    with _open_in(_path(args, "features", "features.csv")) as f:
        ids, X = read_features(f)
    with _open_in(_path(args, "labels", "labels.csv")) as f:
        lids, Y = read_labels_checked(f)
    if len(lids) != len(ids) or set(lids) != set(ids):
        raise LengthMismatch(f"labels cover {len(lids)} stays, features cover {len(ids)} (stay_id sets must match)")
    pos = {s: i for i, s in enumerate(lids)}
    Y = Y[[pos[s] for s in ids]]
    split_path = _path(args, "split", "split.csv")
    if need_split or getattr(args, "split", None) or split_path.exists():
        with _open_in(split_path) as f:
            assign = splitter.read_assignment(f)
        missing = [s for s in ids if s not in assign]
        if missing:
            raise LengthMismatch(f"{len(missing)} stays have no split assignment")
        return ids, X, Y, np.array([assign[s] for s in ids])
    return ids, X, Y, None


def read_labels_checked(fh):
    try:
        return labeler.read_labels(fh)
    except ValueError as exc:
        if isinstance(exc, CetError):
            raise
        raise LengthMismatch(f"malformed labels table: {exc}") from None


def _family_params(cfg, args):
    params = dict(cfg.params.get(args.family, {}))
    for item in args.param or []:
        if "=" not in item:
            raise UsageError(f"--param expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return resolve_params(args.family, params)


# subcommands -----------------------------------------------------------------


def cmd_synth(args, cfg):
    s = cfg.synth
    prevalence = args.prevalence or s.get("prevalence")
    sc = synth.SynthConfig(
        n_stays=args.n_stays or int(s.get("n_stays", 1000)),
        seed=derive_seed(cfg.seed, "synth"),
        signal_strength=args.signal_strength if args.signal_strength is not None else float(s.get("signal_strength", 1.0)),
        **({"prevalence": tuple(float(p) for p in str(prevalence).split(","))} if prevalence else {}),
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in zip(("stays.csv", "events.csv", "truth.csv"), synth.generate_cohort(sc)):
        (out / name).write_bytes(data)


def cmd_ingest(args, cfg):
    cohort = _cohort(args)
    out = Path(args.out_dir)
    _write_text(out / "cohort_stays.csv", lambda fh: ingest.write_stays(cohort.stays, fh))
    _write_text(out / "cohort_events.csv", lambda fh: ingest.write_events(cohort, fh))

    def summary(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["reason", "count"])
        w.writerows(cohort.summary.items())

    _write_text(out / "cohort_summary.csv", summary)


def cmd_featurize(args, cfg):
    ids, X = featurize_cohort(_cohort(args))
    _write_text(Path(args.out_dir) / "features.csv", write_features, ids, X)


def cmd_label(args, cfg):
    cohort = _cohort(args)
    ids, Y = labeler.label_cohort(cohort, cfg.rules)
    logger.info("stays_without_label_window_events=%d", cohort.summary["stays_without_label_window_events"])
    _write_text(Path(args.out_dir) / "labels.csv", labeler.write_labels, ids, Y)


def cmd_split(args, cfg):
    with _open_in(_path(args, "labels", "labels.csv")) as f:
        ids, Y = read_labels_checked(f)
    frac = args.test_fraction if args.test_fraction is not None else cfg.test_fraction
    k = args.k if args.k is not None else cfg.k
    sp = splitter.stratified_shuffle_split(Y, frac, derive_seed(cfg.seed, "splitter"))
    assign = np.array(["train"] * len(ids), dtype=object)
    assign[sp.test_indices] = "test"
    out = Path(args.out_dir)
    _write_text(out / "split.csv", splitter.write_assignment, ids, assign.tolist())
    folds = splitter.stratified_kfold(Y[sp.train_indices], k, derive_seed(cfg.seed, "splitter"))
    _write_text(out / "folds.csv", splitter.write_assignment,
                [ids[i] for i in sp.train_indices], folds.fold_of.tolist())


def cmd_train(args, cfg):
    params = _family_params(cfg, args)
    ids, X, Y, assign = _aligned(args, need_split=True)
    train = assign == "train"
    Xtr, Ytr = X[train], Y[train]
    name = args.name or args.family
    out = Path(args.out_dir)
    seed = derive_seed(cfg.seed, "learners", args.family)
    if args.grid:
        with _open_in(_path(args, "folds", "folds.csv")) as f:
            fold_map = splitter.read_assignment(f)
        tr_ids = [s for s, a in zip(ids, assign) if a == "train"]
        if set(fold_map) != set(tr_ids):
            raise LengthMismatch("folds.csv does not cover exactly the training stays")
        folds = splitter.FoldAssignment(np.array([int(fold_map[s]) for s in tr_ids]))
        grid = cfg.grids.get(args.family, DEFAULT_GRIDS[args.family])
        cv = grid_search(args.family, grid, folds, Xtr, Ytr, seed=seed)

        def cv_table(fh):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["candidate", "params", *(f"fold{f}" for f in range(folds.k)), "mean_macro_f1"])
            for i, (c, sc) in enumerate(zip(cv.candidates, cv.fold_scores.tolist())):
                w.writerow([i, ";".join(f"{k}={v}" for k, v in c.items()), *map(repr, sc), repr(float(np.mean(sc)))])

        _write_text(out / f"cv_{name}.csv", cv_table)
        params = resolve_params(args.family, {**params, **cv.best_params})
        logger.info("best params %s", cv.best_params)
    model = fit_model(args.family, Xtr, Ytr, params, seed=seed, rules=cfg.rules.as_dict())
    path = Path(args.model) if args.model else out / f"model_{name}.bin"
    path.parent.mkdir(parents=True, exist_ok=True)
    artifact.save_model(model, path)


def _test_rows(args):
    ids, X, Y, assign = _aligned(args)
    if assign is not None:
        keep = assign == "test"
        return [s for s, k in zip(ids, keep) if k], X[keep], Y[keep]
    return ids, X, Y


def _load(args):
    path = Path(args.model) if args.model else None
    if path is None:
        raise UsageError("--model is required")
    try:
        return artifact.load_model(path)
    except FileNotFoundError:
        raise MissingInput(f"model file not found: {path}") from None


def cmd_evaluate(args, cfg):
    model = _load(args)
    _, X, Y = _test_rows(args)
    name = args.name or model.family
    m, curves, _ = metrics.evaluate(model, X, Y)
    out = Path(args.out_dir)
    mpath = out / "metrics.csv"
    rows = []
    if mpath.exists():
        with open(mpath, encoding="utf-8", newline="") as f:
            rows = [r for r in list(csv.reader(f))[1:] if r and r[0] != name]
    rows += [[r[0], r[1], *map(repr, r[2:])] for r in metrics.metric_rows(name, m)]
    order = {f: i for i, f in enumerate(FAMILIES)}
    rows.sort(key=lambda r: (order.get(r[0], len(order)), r[0], LABELS.index(r[1])))

    def table(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(metrics.METRIC_COLUMNS)
        w.writerows(rows)

    _write_text(mpath, table)
    for lab, curve in zip(LABELS, curves):
        if curve is not None:
            _write_text(out / f"roc_{name}_{lab}.csv", metrics.write_roc, curve)
    logger.info("evaluate %s macro=%s", name, m.macro())


def cmd_importance(args, cfg):
    model = _load(args)
    _, X, Y = _test_rows(args)
    repeats = args.repeats or cfg.repeats
    rep = metrics.permutation_importance(model, X, Y, repeats=repeats, seed=derive_seed(cfg.seed, "importance"))
    out = Path(args.out_dir)
    for lab in (args.label,) if args.label else LABELS:
        _write_text(out / f"importance_{lab}.csv", metrics.write_importance, rep, lab)
    (out / "importance_source.txt").write_text((args.name or model.family) + "\n", encoding="utf-8")


def cmd_report(args, cfg):
    out = Path(args.out_dir)
    mpath = out / "metrics.csv"
    if not mpath.exists():
        raise MissingInput(f"no metrics found at {mpath}; run evaluate first")
    with open(mpath, encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise MissingInput("metrics.csv holds no rows")
    source = (out / "importance_source.txt").read_text(encoding="utf-8").strip() if (out / "importance_source.txt").exists() else None
    top = {}
    for lab in LABELS:
        p = out / f"importance_{lab}.csv"
        if p.exists():
            with open(p, encoding="utf-8", newline="") as f:
                imp = sorted(csv.DictReader(f), key=lambda r: -float(r["mean"]))
            top[lab] = "; ".join(f"{r['feature']} ({float(r['mean']):.3f})" for r in imp[:3])
    cols = ["accuracy", "precision", "recall", "f1", "auc"]
    table = []
    for model in dict.fromkeys(r["model"] for r in rows):
        mrows = [r for r in rows if r["model"] == model]
        for r in mrows:
            table.append([model, r["label"], *(f"{float(r[c]):.2f}" for c in cols),
                          top.get(r["label"], "") if model == source else ""])
        table.append([model, "macro", *(f"{np.mean([float(r[c]) for r in mrows]):.2f}" for c in cols), ""])

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "label", *cols, "top_predictors"])
        w.writerows(table)

    _write_text(out / "report.csv", write)
    for r in table:
        print("  ".join(f"{c:<12}" for c in r[:7]) + (f"  {r[7]}" if r[7] else ""))


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "featurize": cmd_featurize,
    "label": cmd_label,
    "split": cmd_split,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "importance": cmd_importance,
    "report": cmd_report,
}


def build_parser():
    p = argparse.ArgumentParser(prog="icucet", description="ICU care-escalation-trigger pipeline")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--seed", type=int, help="root seed (default 42)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text, *inputs):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--out-dir", default=".", help="directory for inputs/outputs (default .)")
        for flag in inputs:
            sp.add_argument(f"--{flag}", help=f"path to {flag} file (default <out-dir>/{flag}.csv)")
        return sp

    sp = add("synth", "generate a synthetic cohort")
    sp.add_argument("--n-stays", type=int)
    sp.add_argument("--signal-strength", type=float)
    sp.add_argument("--prevalence", help="four comma-separated prevalences")
    add("ingest", "parse and select the cohort", "stays", "events")
    add("featurize", "write features.csv", "stays", "events")
    add("label", "write labels.csv", "stays", "events")
    sp = add("split", "write split.csv and folds.csv", "labels")
    sp.add_argument("--test-fraction", type=float)
    sp.add_argument("--k", type=int)
    sp = add("train", "train one model family", "features", "labels", "split", "folds")
    sp.add_argument("--family", choices=FAMILIES, required=True)
    sp.add_argument("--param", action="append", help="fixed hyperparameter name=value (repeatable)")
    sp.add_argument("--grid", action="store_true", help="grid-search over folds.csv before the final fit")
    sp.add_argument("--model", help="artifact path (default <out-dir>/model_<name>.bin)")
    sp.add_argument("--name")
    for name in ("evaluate", "importance"):
        sp = add(name, f"{name} a trained model on the test split", "features", "labels", "split")
        sp.add_argument("--model", required=True)
        sp.add_argument("--name")
    sp = sub.choices["importance"]
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--label", choices=LABELS)
    add("report", "join metrics and importances into report.csv")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        for attr, key in (("out_dir", "out_dir"), ("stays", "stays"), ("events", "events")):
            if getattr(args, attr, None) in (None, ".") and key in cfg.pipeline:
                setattr(args, attr, cfg.pipeline[key])
        COMMANDS[args.command](args, cfg)
    except CetError as exc:
        print(f"error: {exc.category}: {' '.join(str(exc).split())}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: MissingInput: {exc}", file=sys.stderr)
        return MissingInput.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
