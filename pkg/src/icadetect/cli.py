"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import bundle, evaluation, pipeline, reports, synthetic, text
from .config import load_config
from .errors import ConfigError, DataError, IcaDetectError, NumericalError
from .ica import IcaConfig, ica_ebm, isi, sparse_ica_ebm

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4


def _exit_code(exc: IcaDetectError) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return 1


def _featurize(docs, tok, variant):
    counts = text.build_matrix(docs, tok)
    return counts, text.tfidf(counts, variant)


def _write_meta(path: Path, meta: dict) -> None:
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- run

def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set)
    threads = args.threads or cfg.threads
    out = Path(args.output) if args.output else cfg.output_dir
    if not cfg.raw["dataset"]:
        raise ConfigError("no dataset configured (set 'dataset' or pass --set dataset=PATH)")
    ev = cfg.evaluation
    t0 = time.perf_counter()

    docs = text.load_csv(cfg.dataset)
    tok = cfg.tokenizer()
    counts, X = _featurize(docs, tok, cfg.tfidf_variant)
    labels = text.label_signs(docs)
    ica_cfg = cfg.ica(threads=1)
    variant = "sparse" if ica_cfg.lam > 0 else "dense"
    prov = reports.provenance(cfg.hash(), cfg.seed, variant)
    grid = cfg.grid()

    t_cv = time.perf_counter()
    report = pipeline.nested_cv(
        X.values, labels, grid, seed=cfg.seed, ica_config=ica_cfg, threads=threads,
        svm_tol=ev["svm_tol"], test_centering=ev["test_centering"],
    )
    t_cv = time.perf_counter() - t_cv

    fam = ev["final_family"]
    order, param, c = pipeline.final_selection(report, fam)
    t_final = time.perf_counter()
    tm = pipeline.train_final(X.values, labels, fam, order, param, c, ica_cfg, grid,
                              ev["svm_tol"], ev["test_centering"])
    t_final = time.perf_counter() - t_final
    assoc = evaluation.component_class_association(tm.train_features.T, labels)
    k = ev["k"]
    if k > len(X.vocab):
        raise ConfigError(f"evaluation.k={k} exceeds the vocabulary size {len(X.vocab)}")
    lexs = evaluation.lexicons(tm.extractor.a_hat, X.vocab, assoc, k)

    out.mkdir(parents=True, exist_ok=True)
    cv_doc = {
        "schema": "icadetect/cv_report/1",
        "provenance": prov,
        "dataset": {
            "documents": len(docs), "d": len(X.vocab),
            "unreliable": int(np.sum(labels > 0)), "reliable": int(np.sum(labels < 0)),
        },
        "report": report.to_dict(),
        "final_model": {"family": fam, "order": int(order), "param": param, "c": float(c),
                        "kernel": tm.model.kernel.to_dict()},
        "reference": evaluation.REFERENCE_SCORES,
    }
    reports.write_report(cv_doc, out / "cv_report.json", "cv_report")
    lex_doc = {"schema": "icadetect/lexicons/1", "provenance": prov, "k": k,
               "components": [lx.to_dict() for lx in lexs]}
    reports.write_report(lex_doc, out / "lexicons.json", "lexicons")
    (out / "lexicons.txt").write_text(evaluation.lexicon_table(lexs), encoding="utf-8")
    table = evaluation.metrics_table(report.summary)
    (out / "metrics.txt").write_text(table, encoding="utf-8")
    mb = bundle.ModelBundle(tm, X.vocab, X.idf, cfg.tfidf_variant, tok, assoc, prov)
    bundle.save_bundle(mb, out / "model.json")
    _write_meta(out / "run_meta.json", {
        "timings_s": {"total": time.perf_counter() - t0, "nested_cv": t_cv, "final_fit": t_final,
                      "folds": report.timings["fold_s"]},
        "threads": threads,
        "dataset_path": str(cfg.dataset),
    })
    print(table, end="")
    print(f"selected order N={pipeline.select_order(report)}; artifacts in {out}")
    return 0


# ---------------------------------------------------------------- bss-bench

def bss_bench(families, V, seeds, lam=0.0, restarts=5, max_iters=500, threads=1):
    """Separate random mixtures of known sources; returns (report, per-seed seconds)."""
    runs, times = [], []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        S = synthetic.sources(families, V, rng)
        A = synthetic.mixing_matrix(len(families), rng)
        X = A @ S
        X = X - X.mean(axis=1, keepdims=True)
        cfg = IcaConfig(seed=seed, lam=lam, restarts=restarts, max_iters=max_iters, threads=threads)
        t = time.perf_counter()
        res = sparse_ica_ebm(X, cfg) if lam > 0 else ica_ebm(X, cfg)
        times.append(time.perf_counter() - t)
        runs.append({"seed": int(seed), "isi": isi(res.w, A), "cost_trace": [float(c) for c in res.cost_trace],
                     "converged": res.converged, "iters": int(res.iters), "restart": int(res.restart)})
    vals = [r["isi"] for r in runs]
    report = {
        "schema": "icadetect/bss_bench/1",
        "params": {"sources": list(families), "V": int(V), "seeds": [int(s) for s in seeds],
                   "lam": float(lam), "restarts": int(restarts)},
        "runs": runs,
        "summary": {"mean_isi": float(np.mean(vals)), "median_isi": float(np.median(vals))},
    }
    return report, times


def cmd_bss_bench(args) -> int:
    if args.V < 8:
        raise ConfigError("V must be >= 8")
    if args.seeds < 1:
        raise ConfigError("seeds must be >= 1")
    if args.lam < 0:
        raise ConfigError("lam must be >= 0")
    families = synthetic.parse_mix(args.sources)
    if len(families) > args.V:
        raise ConfigError("more sources than samples")
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    report, times = bss_bench(families, args.V, seeds, args.lam, args.restarts, args.max_iters,
                              args.threads or 1)
    digest = hashlib.sha256(json.dumps(report["params"], sort_keys=True).encode()).hexdigest()
    report["provenance"] = reports.provenance(digest, args.first_seed, "sparse" if args.lam > 0 else "dense")
    meta = {"seconds_per_seed": times, "total_s": float(sum(times))}
    if args.scale_run:
        rng = np.random.default_rng(0)
        X = synthetic.mixing_matrix(50, rng, max_cond=100.0) @ synthetic.sources(["laplace"] * 50, 560, rng)
        t = time.perf_counter()
        ica_ebm(X - X.mean(axis=1, keepdims=True), IcaConfig(restarts=1))
        meta["single_run_N50_V560_s"] = time.perf_counter() - t
        meta["published_single_run_s"] = 2.96
    reports.validate(report, "bss_bench")
    if args.output:
        out = Path(args.output)
        reports.write_report(report, out)
        _write_meta(out.with_suffix(".meta.json"), meta)
    for r, t in zip(report["runs"], times):
        print(f"seed {r['seed']:>3}  ISI {r['isi']:.4f}  iters {r['iters']:>4}  {t:6.2f} s")
    s = report["summary"]
    print(f"mean ISI {s['mean_isi']:.4f}  median ISI {s['median_isi']:.4f}  total {meta['total_s']:.1f} s")
    if "single_run_N50_V560_s" in meta:
        print(f"single run N=50 V=560: {meta['single_run_N50_V560_s']:.2f} s (published: 2.96 s)")
    return 0


# ---------------------------------------------------------------- discover / featurize / eval

def cmd_discover(args) -> int:
    mb = bundle.load_bundle(args.model)
    if not 1 <= args.k <= mb.d:
        raise ConfigError(f"k must be in [1, {mb.d}], got {args.k}")
    scores = mb.association or None
    lexs = evaluation.lexicons(mb.trained.extractor.a_hat, mb.vocab, scores, args.k)
    doc = {"schema": "icadetect/lexicons/1", "provenance": mb.provenance, "k": args.k,
           "components": [lx.to_dict() for lx in lexs]}
    reports.validate(doc, "lexicons")
    if args.output:
        reports.write_report(doc, args.output)
    print(evaluation.lexicon_table(lexs), end="")
    return 0


def cmd_featurize(args) -> int:
    cfg = load_config(args.config, args.set)
    path = Path(args.data) if args.data else cfg.dataset
    docs = text.load_csv(path)
    counts, X = _featurize(docs, cfg.tokenizer(), cfg.tfidf_variant)
    mat = counts if args.weighting == "raw" else X
    text.write_triplets(mat, args.output)
    d, V = mat.shape
    print(f"wrote {np.count_nonzero(mat.values)} nonzeros of a {d} x {V} {mat.weighting.value} matrix to {args.output}")
    return 0


def cmd_eval(args) -> int:
    mb = bundle.load_bundle(args.model)
    docs = text.load_csv(args.data)
    counts = text.count_matrix(docs, mb.vocab, mb.tokenizer)
    X = text.apply_idf(counts, mb.idf)
    pred, dec = pipeline.predict_documents(mb.trained, X.values)
    labels = text.label_signs(docs)
    cc = evaluation.ConfusionCounts.from_labels(labels, pred)
    result = {
        "documents": len(docs),
        "confusion": {"tp": cc.tp, "fp": cc.fp, "tn": cc.tn, "fn": cc.fn},
        "metrics": evaluation.metrics(cc),
        "provenance": mb.provenance,
    }
    if args.predictions:
        result["predictions"] = [
            {"id": d.id, "label": "unreliable" if p > 0 else "reliable", "decision": float(v)}
            for d, p, v in zip(docs, pred, dec)
        ]
    if args.output:
        reports.write_report(result, args.output)
    print(evaluation.metrics_table({mb.trained.family: result["metrics"]}), end="")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="icadetect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def config_args(sp, need_config=False):
        sp.add_argument("--config", "-c", required=need_config, help="TOML config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted, TOML value syntax); repeatable")

    r = sub.add_parser("run", help="nested cross-validation, final model, lexicons and reports")
    config_args(r)
    r.add_argument("--output", "-o", help="output directory (overrides output_dir)")
    r.add_argument("--threads", type=int, default=0, help="worker threads (default: config, then all cores)")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bss-bench", help="separation benchmark on synthetic mixtures")
    b.add_argument("--sources", default="4xlaplace,2xuniform,2xbimodal",
                   help="source mix, e.g. '2xlaplace' or '4xlaplace,2xuniform,2xbimodal'")
    b.add_argument("--V", type=int, default=5000, help="samples per source")
    b.add_argument("--seeds", type=int, default=10, help="number of seeds")
    b.add_argument("--first-seed", type=int, default=0)
    b.add_argument("--lam", type=float, default=0.0, help="sparsity weight")
    b.add_argument("--restarts", type=int, default=5)
    b.add_argument("--max-iters", type=int, default=500)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--scale-run", action="store_true", help="also time one run at N=50, V=560")
    b.add_argument("--output", "-o", help="write the JSON report here")
    b.set_defaults(func=cmd_bss_bench)

    d = sub.add_parser("discover", help="top words per component of a saved model")
    d.add_argument("model", help="model bundle (model.json)")
    d.add_argument("--k", type=int, default=15)
    d.add_argument("--output", "-o", help="write lexicons JSON here")
    d.set_defaults(func=cmd_discover)

    f = sub.add_parser("featurize", help="dump the term-document matrix as row,col,value triplets")
    config_args(f)
    f.add_argument("--data", help="dataset CSV (overrides config)")
    f.add_argument("--weighting", choices=("raw", "tfidf"), default="tfidf")
    f.add_argument("--output", "-o", required=True)
    f.set_defaults(func=cmd_featurize)

    e = sub.add_parser("eval", help="score a saved model on a labeled CSV")
    e.add_argument("model")
    e.add_argument("data")
    e.add_argument("--predictions", action="store_true", help="include per-document predictions")
    e.add_argument("--output", "-o")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IcaDetectError as exc:
        kind = type(exc).__name__
        print(f"icadetect: error: {kind}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
