"""Command-line pipeline: partition -> train -> select -> calibrate ->
evaluate -> analyze -> report.

Every artifact records the study-config digest; stages refuse to mix
artifacts from different configurations. The test split is read only by
``evaluate`` and ``analyze``.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, calib, metrics, modelselect
from .dataio import (
    SPLIT_TEST,
    SPLIT_TRAIN,
    SPLIT_VAL,
    DatasetMeta,
    EmbeddingDataset,
    load,
    make_splits,
    pool_dataset,
    zscore_apply,
    zscore_fit,
)
from .exprcore import stats as program_stats
from .megp import GpConfig, RunRecord, run as megp_run
from .modelselect import fnv1a64
from .spfp import SpfpConfig, ViewPartition, partition as spfp_partition

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING = 3


class ValidationFailure(Exception):
    pass


class MissingArtifact(Exception):
    pass


@dataclass
class StudyConfig:
    dataset: str
    out: str = "study_out"
    seeds: list[int] = field(default_factory=lambda: list(range(30)))
    val_fraction: float = 0.1
    val_seed: int = 0
    standardize: bool = True
    pool: bool = False
    spfp: SpfpConfig = field(default_factory=SpfpConfig)
    gp: GpConfig = field(default_factory=GpConfig)
    top_dims: int = 3
    bootstrap: int = 200
    analysis_seed: int = 0
    calibration_bins: int = 20

    def digest(self) -> str:
        # out and seeds are excluded: the output directory is a location, and
        # --seeds deliberately reruns subsets of the same study
        doc = self.to_dict()
        doc.pop("out")
        doc.pop("seeds")
        payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return format(fnv1a64(payload.encode()), "016x")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "out": self.out,
            "seeds": list(self.seeds),
            "val_fraction": self.val_fraction,
            "val_seed": self.val_seed,
            "standardize": self.standardize,
            "pool": self.pool,
            "spfp": self.spfp.to_dict(),
            "gp": self.gp.to_dict(),
            "top_dims": self.top_dims,
            "bootstrap": self.bootstrap,
            "analysis_seed": self.analysis_seed,
            "calibration_bins": self.calibration_bins,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StudyConfig":
        doc = dict(doc)
        try:
            if "spfp" in doc:
                doc["spfp"] = SpfpConfig(**doc["spfp"])
            if "gp" in doc:
                gp = dict(doc["gp"])
                for key in ("const_range", "init_depths"):
                    if key in gp:
                        gp[key] = tuple(gp[key])
                doc["gp"] = GpConfig(**gp)
            if "seeds" in doc and isinstance(doc["seeds"], str):
                doc["seeds"] = parse_seed_range(doc["seeds"])
            return cls(**doc)
        except (TypeError, ValueError) as exc:
            raise ValidationFailure(f"bad config: {exc}") from None


def parse_seed_range(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip()]


def load_config(path: str, out: str | None = None, seeds: str | None = None) -> StudyConfig:
    p = Path(path)
    if not p.exists():
        raise MissingArtifact(f"config file {path} not found")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"config is not valid JSON: {exc}") from None
    cfg = StudyConfig.from_dict(doc)
    if out:
        cfg.out = out
    if seeds:
        cfg.seeds = parse_seed_range(seeds)
    if not cfg.seeds:
        raise ValidationFailure("no seeds configured")
    return cfg


# ---------------------------------------------------------------------------
# dataset preparation (shared by stages; deterministic)


def prepare_dataset(cfg: StudyConfig) -> EmbeddingDataset:
    path = Path(cfg.dataset)
    if not path.exists():
        raise MissingArtifact(f"dataset {cfg.dataset} not found")
    try:
        ds = load(path)
    except Exception as exc:
        raise ValidationFailure(f"cannot load dataset: {exc}") from None
    if not np.any(ds.split == SPLIT_TRAIN):
        raise ValidationFailure("dataset has no training rows")
    if not np.any(ds.split == SPLIT_VAL):
        ds = make_splits(ds, cfg.val_fraction, cfg.val_seed)
    if cfg.pool and ds.meta.tower_boundary:
        ds = pool_dataset(ds)
    if cfg.standardize:
        stats = zscore_fit(ds)
        # keep the container's float32 convention after standardization
        X = zscore_apply(stats, ds.X).astype(np.float32)
        ds = EmbeddingDataset(X, ds.y, ds.split, ds.meta)
    return ds


def _artifact(cfg: StudyConfig, name: str) -> Path:
    return Path(cfg.out) / name


def _read_json_artifact(cfg: StudyConfig, name: str) -> dict:
    path = _artifact(cfg, name)
    if not path.exists():
        raise MissingArtifact(f"artifact {path} not found; run the upstream stage first")
    doc = json.loads(path.read_text())
    if doc.get("study_digest") not in (None, cfg.digest()):
        raise ValidationFailure(
            f"artifact {path} belongs to study {doc['study_digest']}, current is {cfg.digest()}"
        )
    return doc


# ---------------------------------------------------------------------------
# stages


def cmd_partition(cfg: StudyConfig) -> int:
    ds = prepare_dataset(cfg)
    Xt, yt = ds.rows(SPLIT_TRAIN)
    part = spfp_partition(Xt, yt, cfg.spfp)
    out = _artifact(cfg, "partition.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    doc = part.to_dict()
    doc["digest"] = part.digest()
    doc["study_digest"] = cfg.digest()
    out.write_text(json.dumps(doc, indent=1))
    print(f"partition: {part.n_views} views, sizes {part.sizes()} -> {out}")
    return EXIT_OK


def _load_partition(cfg: StudyConfig) -> ViewPartition:
    doc = _read_json_artifact(cfg, "partition.json")
    return ViewPartition(
        [np.asarray(v) for v in doc["views"]], doc["d"], SpfpConfig(**doc["config"])
    )


def _train_one(ds_payload: dict, part_doc: dict, gp_doc: dict, seed: int, digest: str) -> dict:
    ds = EmbeddingDataset(
        np.asarray(ds_payload["X"]),
        np.asarray(ds_payload["y"]),
        np.asarray(ds_payload["split"], dtype=np.int8),
        DatasetMeta(**ds_payload["meta"]),
    )
    part = ViewPartition(
        [np.asarray(v) for v in part_doc["views"]], part_doc["d"], SpfpConfig(**part_doc["config"])
    )
    gp = dict(gp_doc)
    for key in ("const_range", "init_depths"):
        gp[key] = tuple(gp[key])
    record = megp_run(ds, part, GpConfig(**gp), seed=seed, config_digest=digest)
    return record.to_dict()


def cmd_train(cfg: StudyConfig, jobs: int = 1) -> int:
    ds = prepare_dataset(cfg)
    part = _load_partition(cfg)
    digest = cfg.digest()
    pending = []
    for seed in cfg.seeds:
        path = _artifact(cfg, f"run_{seed:04d}.json")
        if path.exists():
            doc = json.loads(path.read_text())
            if doc.get("config_digest") != digest or doc.get("partition_digest") != part.digest():
                raise ValidationFailure(
                    f"{path} was produced by a different study; refusing to mix "
                    f"(stored {doc.get('config_digest')}, current {digest})"
                )
            continue
        pending.append(seed)
    if not pending:
        print(f"train: all {len(cfg.seeds)} runs already present")
        return EXIT_OK

    ds_payload = {
        "X": ds.X,
        "y": ds.y,
        "split": ds.split,
        "meta": vars(ds.meta),
    }
    part_doc = {"views": [list(map(int, v)) for v in part.views], "d": part.d,
                "config": part.config.to_dict()}
    gp_doc = cfg.gp.to_dict()

    results: dict[int, dict] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                seed: pool.submit(_train_one, ds_payload, part_doc, gp_doc, seed, digest)
                for seed in pending
            }
            for seed, fut in futures.items():
                results[seed] = fut.result()
    else:
        for seed in pending:
            results[seed] = _train_one(ds_payload, part_doc, gp_doc, seed, digest)

    for seed in pending:
        doc = results[seed]
        doc["study_digest"] = digest
        path = _artifact(cfg, f"run_{seed:04d}.json")
        path.write_text(json.dumps(doc, indent=1))
        print(
            f"run seed={seed}: val_macro_f1={doc['val_macro_f1']:.4f} "
            f"complexity={doc['complexity']} generations={doc['generations']}"
        )
    return EXIT_OK


def _load_runs(cfg: StudyConfig) -> list[RunRecord]:
    runs = []
    for seed in cfg.seeds:
        doc = _read_json_artifact(cfg, f"run_{seed:04d}.json")
        if doc.get("config_digest") != cfg.digest():
            raise ValidationFailure(f"run seed={seed} has a foreign config digest")
        runs.append(RunRecord.from_dict(doc))
    return runs


def cmd_select(cfg: StudyConfig) -> int:
    runs = _load_runs(cfg)
    report = modelselect.selection_report(runs)
    report["study_digest"] = cfg.digest()
    path = _artifact(cfg, "selection.json")
    path.write_text(json.dumps(report, indent=1))
    print(
        f"select: m*={report['m_star']:.4f} se={report['se']:.4f} "
        f"chosen seed={report['chosen_seed']} -> {path}"
    )
    return EXIT_OK


def _canonical_run(cfg: StudyConfig) -> RunRecord:
    sel = _read_json_artifact(cfg, "selection.json")
    seed = sel["chosen_seed"]
    doc = _read_json_artifact(cfg, f"run_{seed:04d}.json")
    return RunRecord.from_dict(doc)


def cmd_calibrate(cfg: StudyConfig) -> int:
    record = _canonical_run(cfg)
    ds = prepare_dataset(cfg)
    Xv, yv = ds.rows(SPLIT_VAL)
    z_val = record.model.logits(Xv)
    T = calib.fit_temperature(z_val, yv)
    nll_pre = calib.log_loss(calib.apply_temperature(z_val, 1.0), yv)
    nll_post = calib.log_loss(calib.apply_temperature(z_val, T), yv)
    doc = {
        "study_digest": cfg.digest(),
        "seed": record.seed,
        "temperature": T,
        "val_nll_pre": nll_pre,
        "val_nll_post": nll_post,
    }
    path = _artifact(cfg, "temperature.json")
    path.write_text(json.dumps(doc, indent=1))
    print(f"calibrate: T={T:.4f} val NLL {nll_pre:.4f} -> {nll_post:.4f} ({path})")
    return EXIT_OK


def cmd_evaluate(cfg: StudyConfig) -> int:
    temp_doc = _read_json_artifact(cfg, "temperature.json")
    T = temp_doc["temperature"]
    runs = _load_runs(cfg)
    record = _canonical_run(cfg)
    ds = prepare_dataset(cfg)
    Xtest, ytest = ds.rows(SPLIT_TEST)
    if len(Xtest) == 0:
        raise ValidationFailure("dataset has no test rows")
    K = ds.n_classes

    # per-run test metrics, uncalibrated, aggregated with t intervals
    per_run = []
    for r in runs:
        z = r.model.logits(Xtest)
        p = calib.apply_temperature(z, 1.0)
        per_run.append(
            {
                "seed": r.seed,
                "f1": modelselect.macro_f1(np.argmax(z, axis=1), ytest, K),
                "auc": metrics.auc_macro_ovr(p, ytest, K),
                "ece": calib.ece(p, ytest, cfg.calibration_bins),
                "brier": calib.brier(p, ytest),
                "log_loss": calib.log_loss(p, ytest),
                "complexity": r.complexity,
            }
        )
    lines = ["seed,f1,auc,ece,brier,log_loss,complexity"]
    for row in per_run:
        lines.append(
            f"{row['seed']},{row['f1']!r},{row['auc']!r},{row['ece']!r},"
            f"{row['brier']!r},{row['log_loss']!r},{row['complexity']}"
        )
    _artifact(cfg, "metrics_runs.csv").write_text("\n".join(lines) + "\n")

    summary_lines = ["metric,mean,ci95_halfwidth"]
    for key in ("f1", "auc", "ece", "brier", "log_loss", "complexity"):
        values = [row[key] for row in per_run]
        if len(values) >= 2:
            mean, half = metrics.t_interval(values)
        else:
            mean, half = float(values[0]), 0.0
        summary_lines.append(f"{key},{mean!r},{half!r}")
    _artifact(cfg, "metrics_summary.csv").write_text("\n".join(summary_lines) + "\n")

    # canonical model: pre vs post temperature scaling on test
    z = record.model.logits(Xtest)
    report = calib.calibration_report(z, ytest, T, cfg.calibration_bins)
    f1_pre = modelselect.macro_f1(np.argmax(z, axis=1), ytest, K)
    f1_post = modelselect.macro_f1(
        np.argmax(calib.apply_temperature(z, T), axis=1), ytest, K
    )
    if f1_pre != f1_post:
        raise ValidationFailure("temperature scaling changed the predicted classes")
    doc = report.to_dict()
    doc.update(
        {
            "study_digest": cfg.digest(),
            "seed": record.seed,
            "f1": f1_pre,
            "auc": metrics.auc_macro_ovr(calib.apply_temperature(z, T), ytest, K),
            "complexity": record.complexity,
        }
    )
    _artifact(cfg, "calibration_test.json").write_text(json.dumps(doc, indent=1))

    for tag, bins in (("pre", report.bins_pre), ("post", report.bins_post)):
        rows = ["bin_lo,bin_hi,n,conf,acc,cp_lo,cp_hi"]
        for b in bins:
            rows.append(
                f"{b.lower!r},{b.upper!r},{b.count},{b.mean_confidence!r},"
                f"{b.accuracy!r},{b.ci_lo!r},{b.ci_hi!r}"
            )
        _artifact(cfg, f"reliability_{tag}.csv").write_text("\n".join(rows) + "\n")

    print(
        f"evaluate: canonical seed={record.seed} test F1={f1_pre:.4f} "
        f"ECE {report.pre['ece']:.4f} -> {report.post['ece']:.4f}"
    )
    return EXIT_OK


def cmd_analyze(cfg: StudyConfig) -> int:
    temp_doc = _read_json_artifact(cfg, "temperature.json")
    T = temp_doc["temperature"]
    record = _canonical_run(cfg)
    model = record.model
    ds = prepare_dataset(cfg)
    Xtest, ytest = ds.rows(SPLIT_TEST)
    if len(Xtest) == 0:
        raise ValidationFailure("dataset has no test rows")

    table = analysis.importance(model, Xtest)
    analysis.write_importance_csv(table, _artifact(cfg, "importance.csv"))
    analysis.write_histogram_csv(analysis.usage_histogram(model), _artifact(cfg, "usage.csv"))
    analysis.write_overlap_csv(analysis.overlap_sets(model), _artifact(cfg, "overlap.csv"))

    logit_dims = [
        program_stats(model.combined_logit(c)).used_dims for c in range(model.n_classes)
    ]

    def target_for(dim: int) -> int:
        for c, dims in enumerate(logit_dims):
            if dim in dims:
                return c
        return 0

    curves = []
    mono_rows = ["dim,importance,target_class,pdp_monotonicity,ale_monotonicity,direction"]
    for dim in table.top(cfg.top_dims):
        c = target_for(dim)
        curve_p = analysis.pdp(model, Xtest, dim, c, T, cfg.bootstrap, cfg.analysis_seed)
        curve_a = analysis.ale(model, Xtest, dim, c, T, cfg.bootstrap, cfg.analysis_seed)
        curves += [curve_p, curve_a]
        direction = "increasing" if curve_p.values[-1] >= curve_p.values[0] else "decreasing"
        mono_rows.append(
            f"{dim},{table.scores[list(table.dims).index(dim)]!r},{c},"
            f"{analysis.monotonicity(curve_p)!r},{analysis.monotonicity(curve_a)!r},{direction}"
        )
    analysis.write_curves_csv(curves, _artifact(cfg, "curves.csv"))
    _artifact(cfg, "monotonicity.csv").write_text("\n".join(mono_rows) + "\n")
    print(f"analyze: importance over {len(table.dims)} dims, curves for top {cfg.top_dims}")
    return EXIT_OK


def cmd_report(cfg: StudyConfig) -> int:
    doc = {"study_digest": cfg.digest(), "config": cfg.to_dict(), "artifacts": {}}
    for name in (
        "partition.json",
        "selection.json",
        "temperature.json",
        "calibration_test.json",
    ):
        path = _artifact(cfg, name)
        if path.exists():
            doc["artifacts"][name] = json.loads(path.read_text())
    for name in (
        "metrics_runs.csv",
        "metrics_summary.csv",
        "reliability_pre.csv",
        "reliability_post.csv",
        "importance.csv",
        "curves.csv",
        "usage.csv",
        "overlap.csv",
        "monotonicity.csv",
    ):
        path = _artifact(cfg, name)
        if path.exists():
            doc["artifacts"][name] = str(path)
    path = _artifact(cfg, "report.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1))
    print(f"report -> {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="symsur",
        description="Symbolic surrogate study pipeline over embedding datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("partition", "train", "select", "calibrate", "evaluate", "analyze", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="study config JSON")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seeds", default=None, help="seed list like 0..29 or 0,3,7")
        if name == "train":
            p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.seeds)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        if args.command == "partition":
            return cmd_partition(cfg)
        if args.command == "train":
            return cmd_train(cfg, jobs=args.jobs)
        if args.command == "select":
            return cmd_select(cfg)
        if args.command == "calibrate":
            return cmd_calibrate(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        return cmd_report(cfg)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
