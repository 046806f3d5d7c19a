"""Synthetic plant-scene generator used for desk-scale verification.

Renders side views of a stylized tomato plant: leaf blobs attached to a
slanted stem over a dark background, a pot, and a 9-square fiducial strip
with known reference colors.  The generator knows the exact silhouette,
stem mask, pot row, and per-view metric ground truth, so the whole
pipeline can be checked against construction.

A wilting trajectory is driven by two per-plant rates: ``droop`` moves
leaf material downward and toward the stem at constant blob size, and
``browning`` shifts the plant color from green toward brown.
"""

import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from . import raster
from .errors import ValidationError

# 9 diverse, in-gamut reference colors for the synthetic fiducial marker
FIDUCIAL_COLORS = np.array(
    [
        [115, 82, 68],
        [194, 150, 130],
        [98, 122, 157],
        [87, 108, 67],
        [133, 128, 177],
        [103, 189, 170],
        [214, 126, 44],
        [80, 91, 166],
        [193, 90, 99],
    ],
    dtype=np.float64,
)

BACKGROUND_COLOR = (30, 35, 80)
POT_COLOR = (45, 48, 60)
GREEN = np.array([70.0, 150.0, 60.0])
BROWN = np.array([150.0, 110.0, 50.0])

PIXEL_RESOLUTION_CM = 0.052


@dataclass
class GroupSpec:
    genotype: str  # "HA" or "WV"
    treatment: str  # "inoculated" or "mock"
    n_plants: int
    droop_rate: float  # droop gained per day post inoculation
    browning_rate: float  # color shift per day post inoculation
    droop_jitter: float = 0.1  # relative per-plant spread of droop_rate
    browning_jitter: float = 0.1


@dataclass
class SynthParams:
    seed: int = 7
    width: int = 220
    height: int = 260
    views: int = 8
    dpi_days: list = field(default_factory=lambda: [-1, 3, 4, 5, 6])
    groups: list = field(default_factory=list)
    render: bool = True  # False: write ground-truth metrics CSV only, no images
    distort_colors: bool = True

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        groups = [GroupSpec(**g) for g in data.pop("groups", [])]
        params = cls(**data, groups=groups) if groups else cls(**data)
        if not params.groups:
            raise ValidationError("synth params need at least one group")
        return params


def default_cohort_params(seed=7, scale=1.0, views=8, render=True):
    """Cohort mirroring the study composition: 61+61 inoculated, 18+18 mock."""
    n = lambda k: max(2, int(round(k * scale)))
    return SynthParams(
        seed=seed,
        views=views,
        render=render,
        groups=[
            GroupSpec("HA", "inoculated", n(61), droop_rate=0.025, browning_rate=0.0),
            GroupSpec("WV", "inoculated", n(61), droop_rate=0.115, browning_rate=0.2),
            GroupSpec("HA", "mock", n(18), droop_rate=0.0, browning_rate=0.0),
            GroupSpec("WV", "mock", n(18), droop_rate=0.0, browning_rate=0.0),
        ],
    )


# color distortion applied before correction, mild enough to stay in gamut
DISTORTION = np.array(
    [
        [1.08, 0.02, 0.00],
        [0.01, 0.94, 0.03],
        [0.00, 0.02, 1.05],
    ]
)


def _paint_ellipse(canvas, cx, cy, rx, ry):
    h, w = canvas.shape
    ya = max(0, int(math.floor(cy - ry)))
    yb = min(h, int(math.ceil(cy + ry)) + 1)
    xa = max(0, int(math.floor(cx - rx)))
    xb = min(w, int(math.ceil(cx + rx)) + 1)
    if ya >= yb or xa >= xb:
        return
    ys, xs = np.mgrid[ya:yb, xa:xb]
    inside = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
    canvas[ya:yb, xa:xb] |= inside


def _paint_thick_line(canvas, x0, y0, x1, y1, half_width):
    h, w = canvas.shape
    ya = max(0, int(math.floor(min(y0, y1) - half_width)))
    yb = min(h, int(math.ceil(max(y0, y1) + half_width)) + 1)
    xa = max(0, int(math.floor(min(x0, x1) - half_width)))
    xb = min(w, int(math.ceil(max(x0, x1) + half_width)) + 1)
    if ya >= yb or xa >= xb:
        return
    ys, xs = np.mgrid[ya:yb, xa:xb]
    vx, vy = x1 - x0, y1 - y0
    norm2 = vx * vx + vy * vy
    t = np.clip(((xs - x0) * vx + (ys - y0) * vy) / norm2, 0.0, 1.0)
    px = x0 + t * vx
    py = y0 + t * vy
    canvas[ya:yb, xa:xb] |= np.hypot(xs - px, ys - py) <= half_width


@dataclass
class SceneTruth:
    silhouette: np.ndarray
    stem_mask: np.ndarray
    pot_top_row: int
    image: np.ndarray  # undistorted rendering (ground truth colors)


class PlantModel:
    """Deterministic per-plant geometry and trajectory."""

    def __init__(self, plant_id, group, params, plant_rng):
        self.plant_id = plant_id
        self.group = group
        self.params = params
        self.droop_rate = group.droop_rate * (1.0 + group.droop_jitter * float(plant_rng.standard_normal()))
        self.browning_rate = group.browning_rate * (
            1.0 + group.browning_jitter * float(plant_rng.standard_normal())
        )
        self.droop_rate = max(0.0, self.droop_rate)
        self.browning_rate = max(0.0, self.browning_rate)
        h, w = params.height, params.width
        self.pot_top_row = int(h * 0.78)
        self.stem_base_x = w / 2 + float(plant_rng.uniform(-6, 6))
        self.stem_tilt = float(plant_rng.uniform(-0.08, 0.08))  # px of x per px of y
        self.stem_len = int(h * 0.5) + int(plant_rng.integers(-10, 10))
        # leaf blobs: (height fraction along stem, signed lateral offset, rx, ry)
        n_blobs = 8
        self.blobs = []
        for k in range(n_blobs):
            t = 0.25 + 0.75 * (k + 0.5) / n_blobs
            side = -1 if k % 2 == 0 else 1
            offset = side * float(plant_rng.uniform(18, 42))
            rx = float(plant_rng.uniform(13, 18))
            ry = float(plant_rng.uniform(9, 12))
            self.blobs.append((t, offset, rx, ry))

    def droop(self, dpi):
        return min(1.0, self.droop_rate * max(dpi, 0))

    def browning(self, dpi):
        return min(1.0, self.browning_rate * max(dpi, 0) / 10.0)

    def expert_score(self, scored_dpi=8):
        return round(min(1.0, self.droop_rate * scored_dpi), 3)

    def render_view(self, dpi, view):
        """Render the view of one imaging session (with per-view jitter)."""
        jitter_key = [self.params.seed, zlib.crc32(self.plant_id.encode()), dpi + 100, view]
        return self.render_scene(self.droop(dpi), self.browning(dpi), view, jitter_key=jitter_key)

    def render_scene(self, droop, browning, view=0, jitter_key=None):
        """Render one scene at an explicit droop/browning state.

        ``jitter_key`` seeds the small per-view leaf jitter; None disables
        it, which keeps controlled trajectories (droop sweeps) monotone.
        """
        p = self.params
        h, w = p.height, p.width
        view_rng = None if jitter_key is None else np.random.default_rng(np.random.SeedSequence(jitter_key))
        angle = 2 * math.pi * view / p.views

        stem_top_y = self.pot_top_row - self.stem_len
        x_base = self.stem_base_x
        x_top = x_base + self.stem_tilt * (stem_top_y - self.pot_top_row)
        stem = np.zeros((h, w), dtype=bool)
        _paint_thick_line(stem, x_base, self.pot_top_row, x_top, stem_top_y, 2.2)

        silhouette = stem.copy()
        for bi, (t, offset, rx, ry) in enumerate(self.blobs):
            anchor_y = self.pot_top_row - t * self.stem_len
            anchor_x = x_base + self.stem_tilt * (anchor_y - self.pot_top_row)
            view_factor = 0.82 + 0.18 * math.cos(angle + bi * 0.9)
            jitter = 0.0 if view_rng is None else float(view_rng.uniform(-1.5, 1.5))
            off = offset * view_factor * (1.0 - 0.55 * droop) + jitter
            sag = droop * (0.30 * self.stem_len) * t
            cx = anchor_x + off
            cy = anchor_y + sag + abs(off) * 0.12 * droop
            _paint_ellipse(silhouette, cx, cy, rx, ry)

        # the plant ends at the pot's upper edge
        silhouette[self.pot_top_row + 1 :, :] = False
        # smooth with the same open-close filter the pipeline applies; the
        # filter is idempotent, so segmentation can recover this silhouette
        # exactly instead of chasing concave wedges at blob overlaps
        from .segmentation import morph_close, morph_open

        silhouette = morph_close(morph_open(silhouette.astype(np.uint8), 3), 3).astype(bool)

        plant_color = GREEN + (BROWN - GREEN) * browning
        image = np.empty((h, w, 3), dtype=np.float64)
        image[:] = BACKGROUND_COLOR
        # pot
        pot_h = int(h * 0.12)
        pot_w = int(w * 0.3)
        x0 = int(w / 2 - pot_w / 2)
        image[self.pot_top_row : self.pot_top_row + pot_h, x0 : x0 + pot_w] = POT_COLOR
        # plant with deterministic dither so the a* histogram has spread;
        # keyed to pixel enumeration order (not position) so the color
        # distribution is a function of pixel count, not plant geometry
        ys, xs = np.nonzero(silhouette)
        k = np.arange(len(xs), dtype=np.float64)
        dither = np.column_stack(
            [(k * 41) % 127 / 126.0 * 14 - 7, (k * 79) % 131 / 130.0 * 14 - 7, (k * 101) % 137 / 136.0 * 14 - 7]
        )
        image[ys, xs] = np.clip(plant_color[None, :] + dither, 0, 255)

        # fiducial strip along the bottom edge
        side = 13
        gap = (w - 9 * side) // 10
        y_fid = h - side - 3
        for i in range(9):
            x_fid = gap + i * (side + gap)
            image[y_fid : y_fid + side, x_fid : x_fid + side] = FIDUCIAL_COLORS[i]

        return SceneTruth(
            silhouette=silhouette.astype(np.uint8),
            stem_mask=stem.astype(np.uint8),
            pot_top_row=self.pot_top_row,
            image=np.clip(np.rint(image), 0, 255).astype(np.uint8),
        )

    def fiducial_dict(self):
        p = self.params
        side = 13
        gap = (p.width - 9 * side) // 10
        y_fid = p.height - side - 3
        squares = []
        for i in range(9):
            x_fid = gap + i * (side + gap)
            squares.append({"x": x_fid + side // 2, "y": y_fid + side // 2, "radius": 4})
        return {
            "squares": squares,
            "reference_colors": FIDUCIAL_COLORS.astype(int).tolist(),
            "square_side_cm": side * PIXEL_RESOLUTION_CM,
            "square_side_px": side,
        }

    def analysis_region(self):
        p = self.params
        side = 13
        return [0, 0, p.width, p.height - side - 6]


def distort_image(image):
    """Apply the known synthetic color distortion (what the camera 'saw')."""
    flat = image.reshape(-1, 3).astype(np.float64) @ DISTORTION
    return np.clip(np.rint(flat), 0, 255).astype(np.uint8).reshape(image.shape)


def generate(params, out_dir):
    """Write a manifest, images/masks (when rendering), and ground truth.

    Returns the manifest dict.  Ground truth goes to ground_truth.json;
    when ``params.render`` is false, per-view ground-truth metrics are
    written to gt_metrics.csv / gt_metrics.hist.json instead of images.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    img_dir = out / "images"
    if params.render:
        img_dir.mkdir(exist_ok=True)

    res = raster.PixelResolution(PIXEL_RESOLUTION_CM)
    manifest = {"schema": 1, "plants": []}
    truth = {"seed": params.seed, "cm_per_pixel": PIXEL_RESOLUTION_CM, "plants": {}}
    gt_rows = []
    gt_hists = {}

    plant_counter = 0
    for gi, group in enumerate(params.groups):
        for pi in range(group.n_plants):
            plant_id = f"{group.genotype.lower()}{'i' if group.treatment == 'inoculated' else 'm'}{pi:03d}"
            plant_rng = np.random.default_rng(np.random.SeedSequence([params.seed, gi, pi]))
            model = PlantModel(plant_id, group, params, plant_rng)
            plant_entry = {
                "plant_id": plant_id,
                "genotype": group.genotype,
                "treatment": group.treatment,
                "pot_top_row": model.pot_top_row,
                "sessions": [],
            }
            if group.treatment == "inoculated":
                plant_entry["expert_score"] = model.expert_score()
            plant_truth = {"droop_rate": model.droop_rate, "browning_rate": model.browning_rate, "sessions": {}}

            for dpi in params.dpi_days:
                views_entry = []
                session_truth = []
                pooled_bins = np.zeros(256, dtype=np.int64)
                view_metric_dicts = []
                for view in range(params.views):
                    scene = model.render_view(dpi, view)
                    vm = metrics_mod.compute_all(
                        scene.image,
                        scene.silhouette,
                        scene.stem_mask,
                        res,
                        baseline=metrics_mod.PlantBaseline(y_bot=float(scene.pot_top_row)),
                    )
                    mdict = vm.metrics.as_dict()
                    view_metric_dicts.append(mdict)
                    pooled_bins += vm.histogram.bins
                    session_truth.append(
                        {
                            "view": view,
                            "metrics": mdict,
                            "silhouette_pixels": int(scene.silhouette.sum()),
                        }
                    )
                    if params.render:
                        stem = f"{plant_id}_d{dpi:+d}_v{view}"
                        img_path = img_dir / f"{stem}.png"
                        mask_path = img_dir / f"{stem}_stem.png"
                        sil_path = img_dir / f"{stem}_truth.png"
                        observed = distort_image(scene.image) if params.distort_colors else scene.image
                        raster.save_image(img_path, observed)
                        raster.save_mask(mask_path, scene.stem_mask)
                        raster.save_mask(sil_path, scene.silhouette)
                        views_entry.append(
                            {
                                "image_path": str(img_path.relative_to(out)),
                                "stem_mask_path": str(mask_path.relative_to(out)),
                                "truth_mask_path": str(sil_path.relative_to(out)),
                                "analysis_region": model.analysis_region(),
                                "fiducial": model.fiducial_dict(),
                            }
                        )
                if params.render:
                    plant_entry["sessions"].append({"dpi": dpi, "views": views_entry})
                else:
                    # ground-truth metrics stand in for the analyzed ones
                    agg = {}
                    for name in metrics_mod.METRIC_FIELDS:
                        vals = [d[name] for d in view_metric_dicts if not math.isnan(d[name])]
                        agg[name] = sum(vals) / len(vals) if vals else math.nan
                    gt_rows.append(
                        {
                            "plant_id": plant_id,
                            "genotype": group.genotype,
                            "treatment": group.treatment,
                            "expert_score": plant_entry.get("expert_score", ""),
                            "dpi": dpi,
                            "views_ok": params.views,
                            "views_total": params.views,
                            **agg,
                        }
                    )
                    total = pooled_bins.sum()
                    gt_hists.setdefault(plant_id, {})[str(dpi)] = (pooled_bins / total).tolist()
                plant_truth["sessions"][str(dpi)] = session_truth

            manifest["plants"].append(plant_entry)
            truth["plants"][plant_id] = plant_truth
            plant_counter += 1

    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    (out / "ground_truth.json").write_text(json.dumps(truth, sort_keys=True))
    if not params.render:
        from . import pipeline

        pipeline.write_metrics_csv(out / "gt_metrics.csv", gt_rows)
        (out / "gt_metrics.hist.json").write_text(json.dumps(gt_hists, sort_keys=True))
    return manifest
