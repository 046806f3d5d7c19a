"""``wilt`` command line interface.

Exit codes: 0 success, 1 validation error, 2 partial failure (some views
failed), 3 internal error.
"""

import argparse
import sys
from pathlib import Path

from . import __version__, pipeline, synth
from .errors import ValidationError, WiltError


def build_parser():
    parser = argparse.ArgumentParser(prog="wilt", description="Image-based plant wilting metrics")
    parser.add_argument("--version", action="version", version=f"wilt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the metric pipeline over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output metrics CSV")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--plots", default=None, help="directory for optional plots")

    p = sub.add_parser("stats", help="group statistics over a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--metric", default="cm_hor_dis")
    p.add_argument("--from-dpi", type=int, default=-1, dest="dpi_from")
    p.add_argument("--to-dpi", type=int, default=3, dest="dpi_to")
    p.add_argument("--pairs", default="all", help="'all' or comma-separated pair names")
    p.add_argument("--out", default=None, help="report CSV path")
    p.add_argument("--plots", default=None)

    p = sub.add_parser("forest", help="train and evaluate the wilting-score forest")
    p.add_argument("--metrics", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=1000)
    p.add_argument("--model-out", default=None)
    p.add_argument("--report-out", default=None)

    p = sub.add_parser("synth", help="generate a synthetic verification dataset")
    p.add_argument("--params", required=True, help="JSON generation parameters")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        pipeline.setup_logging()
        if args.command == "analyze":
            return pipeline.run_analyze(args.manifest, args.out, jobs=args.jobs, plots_dir=args.plots)
        if args.command == "stats":
            report = pipeline.run_stats(
                args.metrics,
                metric=args.metric,
                dpi_from=args.dpi_from,
                dpi_to=args.dpi_to,
                pairs=args.pairs,
                out_csv=args.out,
                plots_dir=args.plots,
            )
            for entry in report:
                p = entry.get("p_value")
                p_text = f"{p:.4g}" if isinstance(p, float) else entry.get("error", "n/a")
                print(f"{entry['kind']:18s} {entry['name']:22s} p={p_text}")
            return 0
        if args.command == "forest":
            _, report = pipeline.run_forest(
                args.metrics,
                manifest_path=args.manifest,
                seed=args.seed,
                n_trees=args.trees,
                model_out=args.model_out,
                report_out=args.report_out,
            )
            for cls, label in ((1, "wilted"), (0, "not_wilted")):
                cr = report.per_class[cls]
                print(f"{label:11s} precision={cr.precision:.2f} recall={cr.recall:.2f} f1={cr.f1:.2f}")
            return 0
        if args.command == "synth":
            params = synth.SynthParams.from_json(Path(args.params).read_text())
            synth.generate(params, args.out)
            return 0
        parser.error(f"unknown command {args.command}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except WiltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
