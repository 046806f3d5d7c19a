"""Batch orchestration: manifest handling, per-view analysis, aggregation,
CSV emission, and the stats / forest entry points behind the CLI.

The manifest is a JSON file listing every plant, imaging session (dpi),
and view with explicit file paths and fiducial annotations; nothing is
inferred from directory structure.  Metrics go to a versioned CSV (one
row per plant and dpi) with the pooled per-day a* histograms in a
``<out>.hist.json`` sidecar next to it.
"""

import concurrent.futures
import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import forest as forest_mod
from . import geometry, metrics, raster, segmentation, stats
from .errors import ValidationError, WiltError

log = logging.getLogger("wiltmetrics")

CSV_SCHEMA_COMMENT = "# wiltmetrics metrics schema=1"
CSV_COLUMNS = (
    ["plant_id", "genotype", "treatment", "expert_score", "dpi", "views_ok", "views_total"]
    + metrics.METRIC_FIELDS
    + ["degenerate_stem_views", "quantile_saturated", "flags"]
)

GENOTYPES = {"HA", "WV"}
TREATMENTS = {"inoculated", "mock"}

FOREST_DPI_DAYS = [-1, 3, 4, 5, 6]


def setup_logging():
    level = os.environ.get("WILT_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise ValidationError(f"WILT_LOG must be one of {sorted(levels)}")
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s")


# ---------------------------------------------------------------------------
# manifest

@dataclass
class View:
    image_path: Path
    stem_mask_path: Path | None
    fiducial: raster.FiducialObservation
    analysis_region: list | None = None
    segmentation_params: segmentation.SegmentationParams | None = None


@dataclass
class Session:
    dpi: int
    views: list


@dataclass
class Plant:
    plant_id: str
    genotype: str
    treatment: str
    expert_score: float | None
    pot_top_row: float | None
    sessions: list


def _context(msg, where):
    return ValidationError(f"{where}: {msg}")


def load_manifest(path):
    base = Path(path).parent
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or "plants" not in data:
        raise ValidationError(f"{path}: manifest must be an object with a 'plants' list")
    plants = []
    seen_ids = set()
    for pi, p in enumerate(data["plants"]):
        where = f"{path}: plants[{pi}]"
        for key in ("plant_id", "genotype", "treatment", "sessions"):
            if key not in p:
                raise _context(f"missing key {key!r}", where)
        if p["plant_id"] in seen_ids:
            raise _context(f"duplicate plant_id {p['plant_id']!r}", where)
        seen_ids.add(p["plant_id"])
        if p["genotype"] not in GENOTYPES:
            raise _context(f"genotype must be one of {sorted(GENOTYPES)}", where)
        if p["treatment"] not in TREATMENTS:
            raise _context(f"treatment must be one of {sorted(TREATMENTS)}", where)
        score = p.get("expert_score")
        if score is not None and not 0.0 <= score <= 1.0:
            raise _context("expert_score must lie in [0, 1]", where)
        sessions = []
        seen_dpi = set()
        for si, s in enumerate(p["sessions"]):
            swhere = f"{where}.sessions[{si}]"
            if "dpi" not in s or "views" not in s:
                raise _context("session needs 'dpi' and 'views'", swhere)
            if s["dpi"] in seen_dpi:
                raise _context(f"duplicate dpi {s['dpi']}", swhere)
            seen_dpi.add(s["dpi"])
            views = []
            for vi, v in enumerate(s["views"]):
                vwhere = f"{swhere}.views[{vi}]"
                if "image_path" not in v or "fiducial" not in v:
                    raise _context("view needs 'image_path' and 'fiducial'", vwhere)
                fd = v["fiducial"]
                try:
                    fm = raster.FiducialObservation(
                        squares=[
                            raster.FiducialSquare(sq["x"], sq["y"], sq["radius"]) for sq in fd["squares"]
                        ],
                        reference_colors=fd["reference_colors"],
                        square_side_cm=fd["square_side_cm"],
                        square_side_px=fd["square_side_px"],
                    )
                except (KeyError, TypeError, ValidationError) as exc:
                    raise _context(f"bad fiducial annotation ({exc})", vwhere) from exc
                seg = None
                if "segmentation" in v:
                    try:
                        seg = segmentation.SegmentationParams(**v["segmentation"])
                    except (TypeError, ValidationError) as exc:
                        raise _context(f"bad segmentation override ({exc})", vwhere) from exc
                views.append(
                    View(
                        image_path=base / v["image_path"],
                        stem_mask_path=(base / v["stem_mask_path"]) if v.get("stem_mask_path") else None,
                        fiducial=fm,
                        analysis_region=v.get("analysis_region"),
                        segmentation_params=seg,
                    )
                )
            sessions.append(Session(dpi=int(s["dpi"]), views=views))
        plants.append(
            Plant(
                plant_id=p["plant_id"],
                genotype=p["genotype"],
                treatment=p["treatment"],
                expert_score=score,
                pot_top_row=p.get("pot_top_row"),
                sessions=sessions,
            )
        )
    return plants


# ---------------------------------------------------------------------------
# per-view analysis

def analyze_view(view, pot_top_row):
    """Color-correct, segment, and measure one view.

    Returns a ViewMetrics; failures are captured, not raised, so one bad
    view never aborts the batch.
    """
    try:
        image = raster.load_image(view.image_path)
        c_image = raster.sample_fiducial(image, view.fiducial)
        transform = raster.estimate_color_transform(c_image, view.fiducial.reference_colors)
        corrected = raster.apply_color_transform(image, transform)
        plant_mask = segmentation.segment_plant(corrected, view.segmentation_params)
        mask = plant_mask.mask
        if view.analysis_region is not None:
            x0, y0, x1, y1 = view.analysis_region
            clipped = np.zeros_like(mask)
            clipped[y0:y1, x0:x1] = mask[y0:y1, x0:x1]
            mask = clipped
        stem_mask = None
        if view.stem_mask_path is not None:
            stem_mask = raster.load_mask(view.stem_mask_path)
            if stem_mask.shape != mask.shape:
                raise ValidationError(
                    f"stem mask {view.stem_mask_path} shape {stem_mask.shape} != image {mask.shape}"
                )
        res = raster.pixel_resolution(view.fiducial)
        baseline = metrics.PlantBaseline(y_bot=float(pot_top_row)) if pot_top_row is not None else None
        return metrics.compute_all(corrected, mask, stem_mask, res, baseline=baseline)
    except (WiltError, OSError) as exc:
        log.warning("view %s failed: %s", view.image_path, exc)
        return metrics.ViewMetrics(metrics=None, histogram=None, failed=True, failure_reason=str(exc))


def _analyze_plant(plant):
    """All sessions of one plant; returns (rows, {dpi: normalized histogram})."""
    rows = []
    hists = {}
    for session in sorted(plant.sessions, key=lambda s: s.dpi):
        results = [analyze_view(v, plant.pot_top_row) for v in session.views]
        ok = [r for r in results if not r.failed]
        agg = {}
        for name in metrics.METRIC_FIELDS:
            vals = [getattr(r.metrics, name) for r in ok if not math.isnan(getattr(r.metrics, name))]
            agg[name] = sum(vals) / len(vals) if vals else math.nan
        pooled = np.zeros(256, dtype=np.int64)
        for r in ok:
            pooled += r.histogram.bins
        if pooled.sum() > 0:
            hists[session.dpi] = (pooled / pooled.sum()).tolist()
        flags = sorted({r.failure_reason for r in results if r.failed})
        rows.append(
            {
                "plant_id": plant.plant_id,
                "genotype": plant.genotype,
                "treatment": plant.treatment,
                "expert_score": plant.expert_score if plant.expert_score is not None else "",
                "dpi": session.dpi,
                "views_ok": len(ok),
                "views_total": len(results),
                **agg,
                "degenerate_stem_views": sum(1 for r in ok if r.metrics.degenerate_stem),
                "quantile_saturated": int(any(r.metrics.quantile_saturated for r in ok)),
                "flags": ";".join(flags),
            }
        )
    return rows, hists


def write_metrics_csv(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write(CSV_SCHEMA_COMMENT + "\n")
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, restval="")
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for name in metrics.METRIC_FIELDS:
                v = out.get(name)
                if isinstance(v, float):
                    out[name] = "" if math.isnan(v) else repr(v)
            writer.writerow(out)


def read_metrics_csv(path):
    rows = []
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    for raw in reader:
        row = dict(raw)
        row["dpi"] = int(raw["dpi"])
        row["views_ok"] = int(raw["views_ok"])
        row["views_total"] = int(raw["views_total"])
        row["expert_score"] = float(raw["expert_score"]) if raw["expert_score"] else None
        for name in metrics.METRIC_FIELDS:
            row[name] = float(raw[name]) if raw.get(name) else math.nan
        rows.append(row)
    return rows


def hist_sidecar_path(metrics_csv):
    p = Path(metrics_csv)
    return p.with_name(p.stem + ".hist.json")


def run_analyze(manifest_path, out_csv, jobs=1, plots_dir=None):
    """Process every plant/dpi/view in the manifest and write the metrics CSV.

    Returns the exit code: 0 on full success, 2 when some views failed.
    """
    plants = load_manifest(manifest_path)
    plants = sorted(plants, key=lambda p: p.plant_id)
    if not plants:
        log.warning("manifest %s lists no plants; writing header-only CSV", manifest_path)
    if jobs > 1 and plants:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_analyze_plant, plants))
    else:
        results = [_analyze_plant(p) for p in plants]

    rows = []
    hists = {}
    for plant, (plant_rows, plant_hists) in zip(plants, results):
        rows.extend(plant_rows)
        if plant_hists:
            hists[plant.plant_id] = {str(dpi): h for dpi, h in sorted(plant_hists.items())}
    rows.sort(key=lambda r: (r["plant_id"], r["dpi"]))
    write_metrics_csv(out_csv, rows)
    hist_sidecar_path(out_csv).write_text(json.dumps(hists, sort_keys=True))

    any_failed = any(r["views_ok"] < r["views_total"] for r in rows)
    if plots_dir is not None:
        emit_metric_plots(rows, plots_dir)
    return 2 if any_failed else 0


# ---------------------------------------------------------------------------
# stats

STAT_PAIRS = {
    "inoc-ha-vs-inoc-wv": (("HA", "inoculated"), ("WV", "inoculated")),
    "inoc-ha-vs-mock-wv": (("HA", "inoculated"), ("WV", "mock")),
    "inoc-ha-vs-mock-ha": (("HA", "inoculated"), ("HA", "mock")),
    "mock-ha-vs-mock-wv": (("HA", "mock"), ("WV", "mock")),
}


def rows_to_records(rows, metrics_csv=None):
    """Group CSV rows into per-plant records with per-dpi metric values and,
    when the sidecar exists, pooled histograms."""
    hists = {}
    if metrics_csv is not None:
        sidecar = hist_sidecar_path(metrics_csv)
        if sidecar.exists():
            raw = json.loads(sidecar.read_text())
            hists = {
                pid: {int(dpi): np.asarray(h) for dpi, h in per_day.items()} for pid, per_day in raw.items()
            }
    records = {}
    for row in rows:
        rec = records.setdefault(
            row["plant_id"],
            {
                "plant_id": row["plant_id"],
                "genotype": row["genotype"],
                "treatment": row["treatment"],
                "expert_score": row["expert_score"],
                "values": {},
                "histograms": hists.get(row["plant_id"], {}),
            },
        )
        rec["values"][row["dpi"]] = {name: row[name] for name in metrics.METRIC_FIELDS}
    return [records[pid] for pid in sorted(records)]


def run_stats(metrics_csv, metric="cm_hor_dis", dpi_from=-1, dpi_to=3, pairs="all", out_csv=None, plots_dir=None):
    """Welch tests on per-plant metric deltas for the requested group pairs,
    plus Kruskal-Wallis across dpi of the Bhattacharyya distances per group.

    Returns the report as a list of dicts (also written to out_csv if given).
    """
    if pairs == "all":
        pair_names = list(STAT_PAIRS)
    else:
        pair_names = [p.strip() for p in pairs.split(",") if p.strip()]
        unknown = [p for p in pair_names if p not in STAT_PAIRS]
        if unknown:
            raise ValidationError(f"unknown pairs {unknown}; valid: {', '.join(STAT_PAIRS)}")
    rows = read_metrics_csv(metrics_csv)
    records = rows_to_records(rows, metrics_csv)
    report = []

    delta = stats.delta_metric(records, metric, dpi_from, dpi_to)
    for name in pair_names:
        ga, gb = STAT_PAIRS[name]
        va = [d for _, d in delta.groups.get(ga, [])]
        vb = [d for _, d in delta.groups.get(gb, [])]
        entry = {"kind": "welch", "name": name, "metric": metric, "n_a": len(va), "n_b": len(vb)}
        try:
            r = stats.welch_t_test(va, vb)
            entry.update(statistic=r.statistic, df=r.df, p_value=r.p_value)
        except ValidationError as exc:
            entry.update(statistic="", df="", p_value="", error=str(exc))
        report.append(entry)
    if delta.excluded:
        log.warning("delta %s: excluded plants missing a day: %s", metric, ", ".join(delta.excluded))

    bd, bd_excluded = stats.bd_timeseries(records, baseline_dpi=dpi_from)
    if bd_excluded:
        log.warning("BD: excluded plants missing baseline: %s", ", ".join(bd_excluded))
    group_of = {r["plant_id"]: (r["genotype"], r["treatment"]) for r in records}
    for genotype, treatment in stats.GROUP_LABELS:
        per_day = {}
        for pid, series in bd.items():
            if group_of.get(pid) != (genotype, treatment):
                continue
            for dpi, value in series.items():
                if dpi != dpi_from:
                    per_day.setdefault(dpi, []).append(value)
        groups = [per_day[d] for d in sorted(per_day)]
        if len(groups) < 2:
            continue
        entry = {"kind": "kruskal_wallis_bd", "name": f"{genotype}-{treatment}", "metric": "bd"}
        try:
            r = stats.kruskal_wallis(groups)
            entry.update(statistic=r.statistic, df=r.df, p_value=r.p_value)
        except ValidationError as exc:
            entry.update(statistic="", df="", p_value="", error=str(exc))
        report.append(entry)

    if out_csv is not None:
        cols = ["kind", "name", "metric", "n_a", "n_b", "statistic", "df", "p_value", "error"]
        with open(out_csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols, restval="")
            writer.writeheader()
            writer.writerows(report)
    if plots_dir is not None:
        emit_stats_plots(delta, bd, group_of, plots_dir)
    return report


# ---------------------------------------------------------------------------
# forest

def build_feature_table(records, dpi_days=FOREST_DPI_DAYS):
    """Fixed-order per-plant feature vectors from the metric records.

    For every dpi day: all metric fields plus the BD to the first day;
    missing entries become NaN here and are median-imputed (with companion
    missing-indicator features) by ``impute_features``.
    """
    names = []
    for dpi in dpi_days:
        for m in metrics.METRIC_FIELDS:
            names.append(f"d{dpi}:{m}")
        names.append(f"d{dpi}:bd")
    baseline_dpi = dpi_days[0]
    table = {}
    for rec in records:
        feats = []
        hists = rec.get("histograms") or {}
        base_hist = hists.get(baseline_dpi)
        for dpi in dpi_days:
            vals = rec["values"].get(dpi)
            for m in metrics.METRIC_FIELDS:
                feats.append(vals[m] if vals else math.nan)
            if base_hist is not None and dpi in hists:
                feats.append(stats.bhattacharyya_distance(hists[dpi], base_hist))
            else:
                feats.append(math.nan)
        table[rec["plant_id"]] = np.asarray(feats, dtype=np.float64)
    return names, table


def impute_features(train_x, test_x):
    """Median-impute NaNs using the training medians; append one missing
    indicator column per original feature."""
    tr = np.asarray(train_x, dtype=np.float64)
    te = np.asarray(test_x, dtype=np.float64)
    medians = np.zeros(tr.shape[1])
    for j in range(tr.shape[1]):
        col = tr[:, j]
        finite = col[~np.isnan(col)]
        medians[j] = np.median(finite) if len(finite) else 0.0

    def _fill(x):
        ind = np.isnan(x).astype(np.float64)
        filled = np.where(np.isnan(x), medians[None, :], x)
        return np.hstack([filled, ind])

    return _fill(tr), _fill(te), medians


def run_forest(metrics_csv, manifest_path=None, seed=0, n_trees=1000, model_out=None, report_out=None):
    """Build features, split 6:4, train, and evaluate.

    Expert scores come from the metrics CSV (run_analyze copies them from
    the manifest); the manifest is consulted for scores only when the CSV
    lacks them.  Returns (model, EvalReport).
    """
    rows = read_metrics_csv(metrics_csv)
    records = rows_to_records(rows, metrics_csv)
    scores = {r["plant_id"]: r["expert_score"] for r in records}
    if manifest_path is not None:
        for plant in load_manifest(manifest_path):
            if plant.expert_score is not None and scores.get(plant.plant_id) is None:
                scores[plant.plant_id] = plant.expert_score

    names, table = build_feature_table(records)
    samples = []
    for rec in records:
        score = scores.get(rec["plant_id"])
        if score is None:
            continue
        samples.append(
            forest_mod.LabeledSample(
                plant_id=rec["plant_id"],
                features=table[rec["plant_id"]],
                expert_score=score,
                label=forest_mod.binarize_score(score),
            )
        )
    labels = {s.label for s in samples}
    if len(labels) < 2:
        raise ValidationError("need expert-scored plants of both classes to train")

    train_samples, test_samples = forest_mod.split_train_test(samples, seed=seed)
    train_x = np.asarray([s.features for s in train_samples])
    test_x = np.asarray([s.features for s in test_samples])
    train_xi, test_xi, _ = impute_features(train_x, test_x)
    full_names = names + [f"missing:{n}" for n in names]
    train_imputed = [
        forest_mod.LabeledSample(s.plant_id, train_xi[i], s.expert_score, s.label)
        for i, s in enumerate(train_samples)
    ]
    model = forest_mod.train(train_imputed, n_trees=n_trees, seed=seed, feature_order=full_names)

    preds = [forest_mod.predict(model, test_xi[i])[0] for i in range(len(test_samples))]
    truths = [s.label for s in test_samples]
    report = forest_mod.evaluate(preds, truths)

    if model_out is not None:
        Path(model_out).write_text(model.to_json())
    if report_out is not None:
        with open(report_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class", "precision", "recall", "f1"])
            for cls, label in ((forest_mod.WILTED, "wilted"), (forest_mod.NOT_WILTED, "not_wilted")):
                cr = report.per_class[cls]
                writer.writerow([label, f"{cr.precision:.4f}", f"{cr.recall:.4f}", f"{cr.f1:.4f}"])
    return model, report


# ---------------------------------------------------------------------------
# optional plots

def _get_pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        return plt
    except ImportError:
        log.warning("matplotlib not available; skipping plot output")
        return None


def emit_metric_plots(rows, plots_dir):
    plt = _get_pyplot()
    if plt is None:
        return
    out = Path(plots_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = {}
    for row in rows:
        key = (row["genotype"], row["treatment"])
        for name in metrics.METRIC_FIELDS:
            v = row[name]
            if not math.isnan(v):
                groups.setdefault((name, key), {}).setdefault(row["dpi"], []).append(v)
    for name in metrics.METRIC_FIELDS:
        fig, ax = plt.subplots(figsize=(7, 4))
        plotted = False
        for (mname, key), per_day in sorted(groups.items()):
            if mname != name:
                continue
            days = sorted(per_day)
            means = [float(np.mean(per_day[d])) for d in days]
            ax.plot(days, means, marker="o", label=f"{key[0]} {key[1]}")
            plotted = True
        if not plotted:
            plt.close(fig)
            continue
        ax.set_xlabel("days post inoculation")
        ax.set_ylabel(name)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"metric_{name}.png")
        plt.close(fig)


def emit_stats_plots(delta, bd, group_of, plots_dir):
    plt = _get_pyplot()
    if plt is None:
        return
    out = Path(plots_dir)
    out.mkdir(parents=True, exist_ok=True)

    labels = []
    data = []
    for key in sorted(delta.groups):
        labels.append(f"{key[0]}\n{key[1]}")
        data.append([d for _, d in delta.groups[key]])
    if data:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.boxplot(data, tick_labels=labels)
        ax.set_ylabel(f"delta {delta.metric} ({delta.dpi_from} to {delta.dpi_to} dpi)")
        fig.tight_layout()
        fig.savefig(out / f"delta_{delta.metric}.png")
        plt.close(fig)

    per_group = {}
    for pid, series in bd.items():
        key = group_of.get(pid)
        for dpi, value in series.items():
            per_group.setdefault(key, {}).setdefault(dpi, []).append(value)
    for key, per_day in sorted(per_group.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        days = sorted(per_day)
        ax.boxplot([per_day[d] for d in days], tick_labels=[str(d) for d in days])
        ax.set_xlabel("days post inoculation")
        ax.set_ylabel("Bhattacharyya distance to baseline")
        ax.set_title(f"{key[0]} {key[1]}")
        fig.tight_layout()
        fig.savefig(out / f"bd_{key[0]}_{key[1]}.png")
        plt.close(fig)
