"""Command line interface.

Subcommands:
  distance  - bottleneck or wasserstein distance between two diagram CSVs
  fit-rst   - fit the diagram model to one diagram CSV, JSON to stdout
  simulate  - run a simulation suite from a TOML config, CSV table out
  compare   - full two-cloud comparison (H0/H1), JSON report
"""

from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import harness, samplers
from .distances import bottleneck, matching_cost, wasserstein
from .persistence import load_diagram
from .rst import RstConfig, fit, transform


def _cmd_distance(args) -> int:
    a = load_diagram(args.a, rank=args.rank)
    b = load_diagram(args.b, rank=args.rank)
    if args.metric == "bottleneck":
        value = bottleneck(a, b)
    elif args.total_cost:
        value = matching_cost(a, b, p=args.p)
    else:
        value = wasserstein(a, b, p=args.p)
    print(repr(value))
    return 0


def _cmd_fit_rst(args) -> int:
    diagram = load_diagram(args.diagram, rank=args.rank)
    cfg = RstConfig(k=args.k, alpha_range=(0.0, args.alpha_max))
    result = fit(transform(diagram), cfg)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def _shape_from_table(table: dict) -> samplers.ShapeSpec:
    return samplers.ShapeSpec(
        kind=table["kind"],
        radii=tuple(float(r) for r in table["radii"]),
        gap=float(table.get("gap", 0.0)),
        split=float(table.get("split", 0.4)),
    )


def load_experiment_configs(path) -> list[harness.ExperimentConfig]:
    """TOML config -> one ExperimentConfig per entry of the ``n`` list.

    Keys: shape1/shape2 tables (kind, radii, gap, split), n (int or list),
    replicates, bandwidth, seed, k, alpha_level, resolution, wasserstein_p,
    n_jobs.
    """
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    shape1 = _shape_from_table(raw["shape1"])
    shape2 = _shape_from_table(raw["shape2"])
    ns = raw["n"]
    if isinstance(ns, int):
        ns = [ns]
    rst_cfg = RstConfig(k=int(raw.get("k", 3)))
    resolution = tuple(raw.get("resolution", (128, 128)))
    return [
        harness.ExperimentConfig(
            shape1=shape1,
            shape2=shape2,
            n=int(n),
            replicates=int(raw.get("replicates", 1000)),
            bandwidth=float(raw.get("bandwidth", 0.1)),
            seed=int(raw.get("seed", 0)),
            resolution=resolution,
            rst=rst_cfg,
            alpha_level=float(raw.get("alpha_level", 0.05)),
            wasserstein_p=float(raw.get("wasserstein_p", 2.0)),
            wasserstein_rooted=bool(raw.get("wasserstein_rooted", False)),
            n_jobs=int(raw.get("n_jobs", 1)),
        )
        for n in ns
    ]


def _cmd_simulate(args) -> int:
    configs = load_experiment_configs(args.config)
    entries = harness.run_suite(configs)
    harness.write_summary_csv(entries, args.out)
    for entry in entries:
        if entry.error is not None:
            print(f"n={entry.config.n}: ERROR {entry.error}", file=sys.stderr)
        else:
            row = entry.row
            print(
                f"n={row.n}: bottleneck std {row.bottleneck.std:.4g}, "
                f"wasserstein std {row.wasserstein.std:.4g}, "
                f"proportions {tuple(round(p, 3) for p in row.proportions)}"
            )
    print(f"wrote {args.out}")
    return 1 if any(e.error for e in entries) else 0


def _cmd_compare(args) -> int:
    cloud_a = samplers.load_cloud(args.a)
    cloud_b = samplers.load_cloud(args.b)
    report = harness.compare_datasets(
        cloud_a,
        cloud_b,
        bandwidth=args.bandwidth,
        rst_cfg=RstConfig(k=args.k),
        alpha_level=args.alpha_level,
        wasserstein_p=args.p,
        wasserstein_rooted=args.rooted,
    )
    text = report.to_json(indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdacompare", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="distance between two diagram CSVs")
    p.add_argument("--a", required=True, help="first diagram CSV (rank,birth,death)")
    p.add_argument("--b", required=True, help="second diagram CSV")
    p.add_argument("--metric", choices=("bottleneck", "wasserstein"), required=True)
    p.add_argument("--p", type=float, default=1.0, help="wasserstein order (default 1)")
    p.add_argument("--total-cost", action="store_true", dest="total_cost",
                   help="report the un-rooted matching cost sum(cost^p) instead of the metric")
    p.add_argument("--rank", type=int, default=None, help="homology rank if the file mixes ranks")
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("fit-rst", help="fit the diagram model to a diagram CSV")
    p.add_argument("--diagram", required=True)
    p.add_argument("--k", type=int, default=3, help="cluster size (default 3)")
    p.add_argument("--alpha-max", type=float, default=3.0, dest="alpha_max")
    p.add_argument("--rank", type=int, default=None)
    p.set_defaults(func=_cmd_fit_rst)

    p = sub.add_parser("simulate", help="run a simulation suite from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="summary table CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="compare two point-cloud CSVs")
    p.add_argument("--a", required=True, help="first cloud CSV (x,y)")
    p.add_argument("--b", required=True, help="second cloud CSV")
    p.add_argument("--bandwidth", type=float, default=0.1)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--alpha-level", type=float, default=0.05, dest="alpha_level")
    p.add_argument("--p", type=float, default=2.0, help="wasserstein matching-cost power")
    p.add_argument("--rooted", action="store_true",
                   help="report the rooted wasserstein metric instead of the total cost")
    p.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
