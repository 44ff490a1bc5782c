"""Command-line front end: ``python -m mrstab <subcommand> [options]``.

Each subcommand reads an optional JSON config, applies flag overrides,
validates everything, runs one solver and writes CSV/JSON (and optionally
SVG) files into the output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import avgpower, codebook, duality, peak, sampling
from .avgpower import KappaConvergenceError
from .core import ChannelModel, ConstraintKind, as_rate_sets, rate_grid
from .geometry import ConvexPolygon

log = logging.getLogger("mrstab")

SUBCOMMANDS = ("mac-peak", "bc-peak", "mac-avg", "bc-avg", "duality", "onoff", "codebook")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a run depends on besides the subcommand.

    ``budgets`` holds the two per-user budgets of MAC runs (the codebook
    run uses the first as the common per-user budget); BC, duality and
    ON-OFF runs use ``total``.
    """

    rates: list = field(default_factory=lambda: [0.0, 1.0])
    budgets: list = field(default_factory=lambda: [1.0, 1.0])
    total: float = 2.0
    means: list = field(default_factory=lambda: [1.0, 1.0])
    samples: int = 100_000
    seed: int = 0
    w_points: int = 101
    alpha_points: int = 21
    tolerance: float = 0.01
    kind: str = "peak"
    bc_method: str = "quadrature"
    r0: float = 1.0
    n_max: int = 8
    out: str = "out"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self.rsets = as_rate_sets(self.rates)
            self.model = ChannelModel(tuple(self.means))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.model.n_links != 2:
            raise ConfigError("means must list two link gains")
        b = np.atleast_1d(np.asarray(self.budgets, dtype=float))
        if b.shape != (2,) or np.any(~np.isfinite(b)) or np.any(b < 0):
            raise ConfigError("budgets must be two finite nonnegative numbers")
        self.budgets = b.tolist()
        checks = [
            (math.isfinite(self.total) and self.total >= 0, "total must be finite and >= 0"),
            (int(self.samples) == self.samples and self.samples >= 10**4,
             "samples must be an integer >= 10000"),
            (int(self.seed) == self.seed and self.seed >= 0, "seed must be a nonnegative integer"),
            (int(self.w_points) == self.w_points and self.w_points >= 11, "w_points must be >= 11"),
            (int(self.alpha_points) == self.alpha_points and self.alpha_points >= 11,
             "alpha_points must be >= 11"),
            (0 < self.tolerance < 1, "tolerance must lie in (0, 1)"),
            (self.kind in ("peak", "average"), "kind must be 'peak' or 'average'"),
            (self.bc_method in ("mc", "quadrature"), "bc_method must be 'mc' or 'quadrature'"),
            (self.r0 > 0, "r0 must be positive"),
            (int(self.n_max) == self.n_max and self.n_max >= 1, "n_max must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        self.samples, self.seed = int(self.samples), int(self.seed)
        self.w_points, self.alpha_points = int(self.w_points), int(self.alpha_points)
        self.n_max = int(self.n_max)

    @property
    def w_grid(self) -> np.ndarray:
        return avgpower.default_w_grid(self.w_points)


def _round(obj):
    """Recursively round floats to 9 significant digits for stable output."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(f"{obj:.9g}") + 0.0
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, ConstraintKind):
        return obj.value
    return obj


class Writer:
    def __init__(self, out: Path):
        self.out = out
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def text(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        self.files.append(name)
        return path

    def json(self, name: str, obj) -> Path:
        return self.text(name, json.dumps(_round(obj), indent=2, sort_keys=True) + "\n")

    def region(self, stem: str, poly: ConvexPolygon) -> None:
        self.text(f"{stem}.csv", poly.to_csv())
        self.json(f"{stem}.json", poly.to_dict())

    def svg(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name


def _meta(cmd: str, cfg: RunConfig) -> dict:
    return {"command": cmd, "rates": [list(r) for r in cfg.rsets],
            "means": list(cfg.model.means), "seed": cfg.seed, "samples": cfg.samples}


def _run_mac_peak(cfg, out, svg):
    cells = peak.mac_partition(cfg.rsets, cfg.budgets, cfg.model)
    region = peak.stability_region_peak(cells)
    out.region("region", region)
    out.json("partition.json", peak.partition_report(
        cells, **_meta("mac-peak", cfg), budgets=cfg.budgets))
    if svg:
        from . import plotting
        plotting.emit_plot(out.svg("region.svg"), [("MAC peak", region)])
        plotting.emit_partition_map(out.svg("partition.svg"), cells)


def _run_bc_peak(cfg, out, svg):
    cells = peak.bc_partition(cfg.rsets, cfg.total, cfg.model, samples=cfg.samples,
                              seed=cfg.seed, method=cfg.bc_method)
    region = peak.stability_region_peak(cells)
    out.region("region", region)
    out.json("partition.json", peak.partition_report(
        cells, **_meta("bc-peak", cfg), total=cfg.total, method=cfg.bc_method))
    if svg:
        from . import plotting
        plotting.emit_plot(out.svg("region.svg"), [("BC peak", region)])
        _choice_map(out, cfg, "bc", 0.5, None)


def _choice_map(out, cfg, network, w, kappa):
    """Sampled decision map in chi^-1 coordinates (peak if kappa is None)."""
    from . import plotting
    chi = sampling.draw(cfg.model, 4000, cfg.seed)
    if kappa is None:
        mask = peak.supported_mask(network, chi, cfg.total if network == "bc" else cfg.budgets,
                                   cfg.rsets)
        keys = [tuple(row) for row in mask]
        names = sorted(set(keys), key=lambda k: (sum(k), k))
        labels = np.array([names.index(k) for k in keys])
        grid = rate_grid(cfg.rsets)
        names = ["{" + ",".join(f"({r.r1:g},{r.r2:g})" for r, b in zip(grid, k) if b) + "}"
                 for k in names]
    else:
        rm = avgpower.RateMap(network, cfg.rsets, w)
        labels = rm.choose(kappa, chi)
        names = [f"({r.r1:g},{r.r2:g})" + (f" pi{int(o)}" if o else "")
                 for r, o in zip(rm.rates, rm.orders)]
    with np.errstate(divide="ignore"):
        inv = 1.0 / chi
    keep = np.all(inv < 10.0, axis=1)
    plotting.emit_choice_map(out.svg("partition.svg"), inv[keep], labels[keep], names)


def _run_avg(network, cfg, out, svg):
    budgets = cfg.budgets if network == "mac" else (cfg.total,)
    sweep = avgpower.boundary_sweep(network, budgets, cfg.rsets, cfg.w_grid, cfg.model,
                                    cfg.samples, cfg.seed, cfg.tolerance)
    out.region("region", sweep.region)
    out.json("sweep.json", {**_meta(f"{network}-avg", cfg), **sweep.report(),
                            "tolerance": cfg.tolerance})
    if svg:
        from . import plotting
        plotting.emit_plot(out.svg("region.svg"), [(f"{network.upper()} average", sweep.region)])
        mid = sweep.points[len(sweep.points) // 2]
        _choice_map(out, cfg, network, mid.w, list(mid.kappa))


def _run_duality(cfg, out, svg):
    spec = duality.DualFamilySpec(cfg.total, cfg.kind, cfg.alpha_points)
    method = cfg.bc_method
    res = duality.duality_check(spec, cfg.rsets, cfg.model, cfg.w_grid, cfg.samples,
                                cfg.seed, cfg.tolerance, bc_method=method)
    out.region("bc_region", res.bc)
    out.region("union_hull", res.union)
    for i, (a, r) in enumerate(res.per_alpha):
        out.region(f"mac_alpha_{i:02d}", r)
    report = {**_meta("duality", cfg), **res.report(), "bc_method": method}
    if spec.kind is ConstraintKind.AVERAGE:
        report["hausdorff_tolerance"] = 0.02 * res.bc_max_sum_rate
        report["within_tolerance"] = res.relative_hausdorff <= 0.02
        _, sweep = duality.bc_region("average", cfg.total, cfg.rsets, cfg.model, cfg.w_grid,
                                     cfg.samples, cfg.seed, cfg.tolerance)
        report["emulation"] = duality.emulation_report(sweep, cfg.rsets, cfg.model,
                                                       cfg.samples, cfg.seed)
    out.json("duality_report.json", report)
    if svg:
        from . import plotting
        step = max(1, (len(res.per_alpha) - 1) // 4)
        overlays = [(f"MAC alpha={a:.2f}", r) for a, r in res.per_alpha[::step]]
        plotting.emit_plot(out.svg("duality.svg"),
                           [("BC", res.bc), ("MAC union hull", res.union)] + overlays)


def _run_onoff(cfg, out, svg):
    res = duality.onoff_case(cfg.r0, cfg.total, cfg.alpha_points)
    out.region("bc_region", res.bc_region)
    out.region("mac_union_region", res.mac_union_region)
    out.json("onoff_report.json", {"command": "onoff", "r0": cfg.r0, "total": cfg.total,
                                   **res.report()})
    if svg:
        from . import plotting
        plotting.emit_plot(out.svg("onoff.svg"), [("BC", res.bc_region),
                                                  ("MAC union hull", res.mac_union_region)])


def _run_codebook(cfg, out, svg):
    budget = cfg.budgets[0]
    results = [codebook.optimize_R0(n, budget, cfg.model.means[0], cfg.samples, cfg.seed)
               for n in range(1, cfg.n_max + 1)]
    out.text("codebook.csv", codebook.results_csv(results))
    out.json("codebook.json", {"command": "codebook", "budget": budget,
                               "mean_gain": cfg.model.means[0], "seed": cfg.seed,
                               "samples": cfg.samples,
                               "results": [r.to_dict() for r in results]})
    if svg:
        from . import plotting
        n = [r.n_users for r in results]
        plotting.emit_curve(out.svg("sum_rate.svg"), n,
                            {"s(R0*, N)": ([r.sum_rate for r in results],
                                           [r.ci_half_width() for r in results])},
                            ylabel="bits/slot")
        plotting.emit_curve(out.svg("per_user.svg"), n,
                            {"s/N": ([r.per_user for r in results],
                                     [r.ci_half_width() / r.n_users for r in results]),
                             "R0*": ([r.r0 for r in results], [0.0] * len(results))},
                            ylabel="bits/slot")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--samples", type=int, help="Monte Carlo samples")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("--w-points", type=int, dest="w_points", help="w grid size")
    common.add_argument("--alpha-points", type=int, dest="alpha_points",
                        help="alpha grid size")
    common.add_argument("--tolerance", type=float, help="relative power tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="mrstab", description="Stability regions of multi-rate MAC/BC networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "mac-peak": "MAC region under peak power (exact partition)",
        "bc-peak": "BC region under peak power",
        "mac-avg": "MAC region under average power (Lagrangian sweep)",
        "bc-avg": "BC region under average power (Lagrangian sweep)",
        "duality": "compare a BC region with its dual MAC union",
        "onoff": "exact two-state ON-OFF duality example",
        "codebook": "optimal fixed codebook rate for N = 1..n_max users",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "duality":
            p.add_argument("--kind", choices=("peak", "average"))
    return parser


def load_config(args) -> RunConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("out", "samples", "seed", "w_points", "alpha_points", "tolerance", "kind"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


RUNNERS = {
    "mac-peak": _run_mac_peak,
    "bc-peak": _run_bc_peak,
    "mac-avg": lambda c, o, s: _run_avg("mac", c, o, s),
    "bc-avg": lambda c, o, s: _run_avg("bc", c, o, s),
    "duality": _run_duality,
    "onoff": _run_onoff,
    "codebook": _run_codebook,
}


def run(command: str, cfg: RunConfig, svg: bool = False) -> list[str]:
    """Run one subcommand; returns the names of the files written."""
    out = Writer(Path(cfg.out))
    RUNNERS[command](cfg, out, svg)
    return out.files


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        files = run(args.command, cfg, args.svg)
    except KappaConvergenceError as exc:
        where = []
        if getattr(exc, "alpha", None) is not None:
            where.append(f"alpha={exc.alpha:g}")
        if exc.w is not None:
            where.append(f"w={exc.w:g}")
        print(f"solver did not converge at {' '.join(where) or 'unknown point'}: {exc}",
              file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name in files:
        log.info("wrote %s", Path(cfg.out) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
