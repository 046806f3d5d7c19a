"""Group statistics: Bhattacharyya distance, Welch's t-test, Kruskal-Wallis,
and the per-plant delta / distance-over-time analyses.

Tail probabilities are computed from scratch via the regularized
incomplete beta and gamma functions (series + continued fraction), so the
test suite can check them against an independent reference.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_BC_FLOOR = 1e-300


@dataclass
class TestResult:
    statistic: float
    p_value: float
    df: float


# ---------------------------------------------------------------------------
# special functions

def _betacf(a, b, x, max_iter=300, eps=3e-16):
    """Continued fraction for the incomplete beta function (Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def regularized_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValidationError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def regularized_gamma_upper(s, x, max_iter=500, eps=3e-16):
    """Upper regularized incomplete gamma function Q(s, x)."""
    if x < 0 or s <= 0:
        raise ValidationError("require x >= 0 and s > 0")
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        # lower series, then complement
        term = 1.0 / s
        total = term
        a = s
        for _ in range(max_iter):
            a += 1.0
            term *= x / a
            total += term
            if abs(term) < abs(total) * eps:
                break
        lower = total * math.exp(-x + s * math.log(x) - math.lgamma(s))
        return 1.0 - lower
    # continued fraction for Q directly (Lentz)
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h * math.exp(-x + s * math.log(x) - math.lgamma(s))


def student_t_sf2(t, df):
    """Two-sided tail probability of Student's t."""
    x = df / (df + t * t)
    return regularized_beta(df / 2.0, 0.5, x)


def chi2_sf(x, df):
    """Survival function of the chi-squared distribution."""
    return regularized_gamma_upper(df / 2.0, x / 2.0)


# ---------------------------------------------------------------------------
# histogram comparison

def bhattacharyya_coefficient(p, q):
    pa = np.asarray(p, dtype=np.float64)
    qa = np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape:
        raise ValidationError(f"histogram bin counts differ: {pa.shape} vs {qa.shape}")
    for name, h in (("p", pa), ("q", qa)):
        if abs(h.sum() - 1.0) > 1e-9:
            raise ValidationError(f"histogram {name} is not normalized (sum={h.sum()!r})")
    return float(np.sqrt(pa * qa).sum())


def bhattacharyya_distance(p, q):
    """BD = -ln sum_i sqrt(p_i q_i); the coefficient is floored so disjoint
    supports yield a large finite sentinel instead of infinity."""
    bc = bhattacharyya_coefficient(p, q)
    return -math.log(min(max(bc, _BC_FLOOR), 1.0))


# ---------------------------------------------------------------------------
# hypothesis tests

def welch_t_test(a, b):
    """Welch's unequal-variance t-test, two-sided."""
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    na, nb = len(xa), len(xb)
    if na < 2 or nb < 2:
        raise ValidationError("each group needs at least two values")
    va = xa.var(ddof=1)
    vb = xb.var(ddof=1)
    sa, sb = va / na, vb / nb
    if sa + sb == 0.0:
        # both groups constant
        if xa.mean() == xb.mean():
            return TestResult(statistic=0.0, p_value=1.0, df=float(na + nb - 2))
        raise ValidationError("zero variance in both groups with different means")
    t = (xa.mean() - xb.mean()) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    return TestResult(statistic=float(t), p_value=student_t_sf2(t, df), df=float(df))


def _midranks(values):
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def kruskal_wallis(groups):
    """Kruskal-Wallis H-test over mid-ranks with the standard tie correction."""
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(arrays) < 2 or any(len(g) < 1 for g in arrays):
        raise ValidationError("need at least two non-empty groups")
    pooled = np.concatenate(arrays)
    n = len(pooled)
    if n < 3:
        raise ValidationError("need at least three values in total")
    ranks = _midranks(pooled)
    h = 0.0
    start = 0
    for g in arrays:
        r = ranks[start : start + len(g)]
        h += r.sum() ** 2 / len(g)
        start += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    # tie correction
    _, counts = np.unique(pooled, return_counts=True)
    ties = float(((counts**3) - counts).sum())
    correction = 1.0 - ties / (n**3 - n)
    df = float(len(arrays) - 1)
    if correction == 0.0:
        # every value identical
        return TestResult(statistic=0.0, p_value=1.0, df=df)
    h /= correction
    return TestResult(statistic=float(h), p_value=chi2_sf(h, df), df=df)


# ---------------------------------------------------------------------------
# cohort-level analyses

GROUP_LABELS = [
    ("HA", "inoculated"),
    ("WV", "inoculated"),
    ("HA", "mock"),
    ("WV", "mock"),
]


@dataclass
class DeltaReport:
    """Per-plant metric deltas between two imaging days, grouped by
    genotype x treatment; plants missing either day are listed."""

    metric: str
    dpi_from: int
    dpi_to: int
    groups: dict  # (genotype, treatment) -> list of (plant_id, delta)
    excluded: list  # plant_ids missing one of the two days


def delta_metric(records, metric_name, dpi_from=-1, dpi_to=3):
    """Compute value(dpi_to) - value(dpi_from) per plant.

    ``records`` is a list of dicts with keys plant_id, genotype, treatment
    and ``values``: {dpi: {metric: value}}.
    """
    from .metrics import METRIC_FIELDS

    if metric_name not in METRIC_FIELDS:
        raise ValidationError(f"unknown metric {metric_name!r}; valid: {', '.join(METRIC_FIELDS)}")
    groups = {}
    excluded = []
    for rec in records:
        vals = rec["values"]
        if dpi_from not in vals or dpi_to not in vals:
            excluded.append(rec["plant_id"])
            continue
        v0 = vals[dpi_from].get(metric_name)
        v1 = vals[dpi_to].get(metric_name)
        if v0 is None or v1 is None or math.isnan(v0) or math.isnan(v1):
            excluded.append(rec["plant_id"])
            continue
        key = (rec["genotype"], rec["treatment"])
        groups.setdefault(key, []).append((rec["plant_id"], v1 - v0))
    return DeltaReport(metric=metric_name, dpi_from=dpi_from, dpi_to=dpi_to, groups=groups, excluded=excluded)


def bd_timeseries(records, baseline_dpi=-1):
    """Bhattacharyya distance of each plant-day's pooled a* histogram from the
    plant's pre-inoculation (baseline) histogram.

    ``records`` carry ``histograms``: {dpi: normalized 256-vector}.  Returns
    ({plant_id: {dpi: bd}}, excluded_plant_ids).
    """
    out = {}
    excluded = []
    for rec in records:
        hists = rec.get("histograms") or {}
        if baseline_dpi not in hists:
            excluded.append(rec["plant_id"])
            continue
        base = hists[baseline_dpi]
        out[rec["plant_id"]] = {
            dpi: bhattacharyya_distance(hist, base) for dpi, hist in sorted(hists.items())
        }
    return out, excluded
