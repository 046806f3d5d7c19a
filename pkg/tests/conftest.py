"""Shared fixtures: one small rendered dataset and one cohort-scale
metrics-only dataset, generated once per session."""

import json
from pathlib import Path

import pytest

from wiltmetrics import pipeline, synth


@pytest.fixture(scope="session")
def rendered_dataset(tmp_path_factory):
    """Small rendered dataset: 4 plants per group, 2 views, 5 days (160 scenes).

    Returns (root_dir, manifest_dict).
    """
    out = tmp_path_factory.mktemp("rendered")
    params = synth.default_cohort_params(seed=3, views=2, render=True)
    for g in params.groups:
        g.n_plants = 4
    manifest = synth.generate(params, out)
    return out, manifest


@pytest.fixture(scope="session")
def analyzed_metrics(rendered_dataset, tmp_path_factory):
    """Metrics CSV produced by running the full pipeline over the rendered
    dataset. Returns (csv_path, exit_code)."""
    root, _ = rendered_dataset
    out = tmp_path_factory.mktemp("analyzed") / "metrics.csv"
    code = pipeline.run_analyze(root / "manifest.json", out, jobs=4)
    return out, code


@pytest.fixture(scope="session")
def cohort_dataset(tmp_path_factory):
    """Full-size labeled cohort (61+61 inoculated, 18+18 mock) with
    ground-truth metrics written directly (no rendering).

    Returns the directory containing gt_metrics.csv / gt_metrics.hist.json.
    """
    out = tmp_path_factory.mktemp("cohort")
    params = synth.default_cohort_params(seed=7, views=2, render=False)
    synth.generate(params, out)
    return out


@pytest.fixture(scope="session")
def cohort_records(cohort_dataset):
    rows = pipeline.read_metrics_csv(cohort_dataset / "gt_metrics.csv")
    return pipeline.rows_to_records(rows, cohort_dataset / "gt_metrics.csv")
