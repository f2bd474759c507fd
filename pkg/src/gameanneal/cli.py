"""Experiment runner CLI.

Subcommands: run, compare, check, oracle, ensemble.  Results are written as
CSV/JSON artifacts whose filenames embed the config fingerprint; pass --svg
to also render the figures.  Exit codes: 0 success, 1 invalid config,
2 divergence, 3 I/O failure, 4 check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import games, metrics, oracle, topology
from .config import ConfigError, ExperimentConfig, build_game, build_network
from .engine import DivergenceError, run
from .games import DEFAULT_INIT_BOX

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGENCE = 2
EXIT_IO = 3
EXIT_CHECK = 4


def load_config(ref: str) -> ExperimentConfig:
    """Load a config from a path, or from the packaged presets by name."""
    path = Path(ref)
    if path.exists():
        return ExperimentConfig.from_json(path)
    name = ref[:-5] if ref.endswith(".json") else ref
    preset = resources.files("gameanneal") / "presets" / f"{name}.json"
    if preset.is_file():
        with resources.as_file(preset) as p:
            return ExperimentConfig.from_json(p)
    raise ConfigError("config", f"no such file or preset: {ref!r}")


def available_presets() -> list[str]:
    pdir = resources.files("gameanneal") / "presets"
    return sorted(p.name[:-5] for p in pdir.iterdir() if p.name.endswith(".json"))


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _emit_trace_artifacts(trace, game, cfg, out: Path, svg: bool):
    fp = trace.fingerprint
    trace.to_csv(out / f"trace_{fp}.csv")
    trace.write_metadata(out / f"meta_{fp}.json")

    series = metrics.consensus_error(trace, cfg.diagnostic_tau)
    cost = metrics.social_cost_series(trace, game)
    metrics.write_consensus_csv(series, out / f"fig_consensus_{fp}.csv")
    metrics.write_tracking_csv(trace, out / f"fig_tracking_{fp}.csv")
    metrics.write_decisions_csv(trace, out / f"fig_decisions_{fp}.csv")
    metrics.write_cost_csv(trace.ks, {cfg.method: cost}, out / f"fig_cost_{fp}.csv")
    if svg:
        from . import plots

        plots.plot_consensus(series, out / f"fig_consensus_{fp}.svg")
        plots.plot_tracking(trace, out / f"fig_tracking_{fp}.svg")
        plots.plot_decisions(trace, out / f"fig_decisions_{fp}.svg")
        plots.plot_cost(trace.ks, {cfg.method: cost}, out / f"fig_cost_{fp}.svg")
    return fp


def cmd_run(cfg: ExperimentConfig, out: Path, svg: bool) -> int:
    game = build_game(cfg.game)
    trace = run(cfg)
    fp = _emit_trace_artifacts(trace, game, cfg, out, svg)
    tail = trace.tail_average_x(cfg.tail_fraction)
    print(f"run {cfg.method} fingerprint={fp} T={cfg.horizon}")
    print(f"  tail average x = {np.array2string(tail, precision=6)}")
    print(f"  tail mean social cost = {trace.tail_mean_cost(cfg.tail_fraction):.6f}")
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, out: Path, svg: bool) -> int:
    game = build_game(cfg.game)
    cfg_a = cfg
    cfg_b = ExperimentConfig.from_dict({**cfg.to_dict(), "method": cfg.baseline})
    trace_a = run(cfg_a)
    trace_b = run(cfg_b)
    report = metrics.compare_costs(trace_a, trace_b, game, tail_fraction=cfg.tail_fraction)
    fp = cfg.fingerprint()
    for t in (trace_a, trace_b):
        _emit_trace_artifacts(t, game, cfg, out, svg=False)
    cost_a = metrics.social_cost_series(trace_a, game)
    cost_b = metrics.social_cost_series(trace_b, game)
    metrics.write_cost_csv(
        trace_a.ks, {cfg.method: cost_a, cfg.baseline: cost_b},
        out / f"fig_cost_compare_{fp}.csv",
    )
    if svg:
        from . import plots

        plots.plot_cost(
            trace_a.ks, {cfg.method: cost_a, cfg.baseline: cost_b},
            out / f"fig_cost_compare_{fp}.svg",
        )
    winner = {"a": cfg.method, "b": cfg.baseline, "tie": "tie"}[report.smaller]
    result = {
        "method_a": cfg.method,
        "method_b": cfg.baseline,
        "tail_mean_cost_a": report.mean_a,
        "tail_mean_cost_b": report.mean_b,
        "difference": report.difference,
        "smaller": winner,
    }
    with open(out / f"compare_{fp}.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"compare {cfg.method} vs {cfg.baseline}: "
          f"{report.mean_a:.6f} vs {report.mean_b:.6f} -> smaller: {winner}")
    return EXIT_OK


def cmd_check(cfg: ExperimentConfig, out: Path, svg: bool) -> int:
    game = build_game(cfg.game)
    model = build_network(cfg.network)
    checks = {}

    conn = topology.check_connected_in_expectation(model)
    checks["connectivity"] = {
        "passed": conn.passed, "lambda2_bar": conn.lambda2_bar, "tol": conn.tol,
    }

    lo, hi = DEFAULT_INIT_BOX.get(cfg.game.name, cfg.init_box)
    grad_report = games.check_gradients(game, games.probe_grid_1d(lo, hi, 7))
    checks["gradients"] = {
        "passed": grad_report.passed,
        "max_rel_error": grad_report.max_rel_error,
        "tol": grad_report.tol,
        "failures": len(grad_report.failures),
    }

    center = 0.5 * (lo + hi)
    radius = max(1.0, 0.5 * (hi - lo))
    dis = games.check_dissimilarity_bound(game, sample_count=500, radius=radius, center=center)
    checks["dissimilarity"] = {
        "passed": dis.passed,
        "sup_grad1": dis.sup1.tolist(),
        "sup_grad2": dis.sup2.tolist(),
        "growth_flagged": list(dis.growth_flagged),
        "note": "empirical sup is a necessary-condition check, not a boundedness proof",
    }

    sched_ok = True
    try:
        ks = range(cfg.schedule.k_guard, cfg.schedule.k_guard + 50)
        for name in ("alpha", "beta", "gamma"):
            vals = [getattr(cfg.schedule, name)(k) for k in ks]
            if any(v <= 0 for v in vals) or any(b > a * (1 + 1e-12) for a, b in zip(vals, vals[1:])):
                sched_ok = False
    except ValueError:
        sched_ok = False
    checks["schedule"] = {"passed": sched_ok}

    passed = all(c["passed"] for c in checks.values())
    with open(out / f"check_{cfg.fingerprint()}.json", "w") as fh:
        json.dump({"passed": passed, "checks": checks}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, c in checks.items():
        print(f"check {name}: {'pass' if c['passed'] else 'FAIL'}")
        if name == "dissimilarity" and c["growth_flagged"]:
            print(f"  note: dissimilarity sup grows with radius for agents {c['growth_flagged']}")
    print(f"check aggregate: {'pass' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_CHECK


def cmd_oracle(cfg: ExperimentConfig, out: Path, svg: bool) -> int:
    game = build_game(cfg.game)
    box = DEFAULT_INIT_BOX.get(cfg.game.name, cfg.init_box)
    if game.n * game.d <= oracle.GRID_DIM_LIMIT:
        result = oracle.grid_search_social_optimum(game, box, resolution=0.01)
    else:
        result = oracle.multistart_descent(game, box, starts=200, seed=cfg.seed)
    result.write_json(out / f"oracle_{cfg.fingerprint()}.json")
    print(f"oracle [{result.method}] optimum ~ {np.array2string(result.point, precision=6)} "
          f"value {result.value:.6f}")
    return EXIT_OK


def cmd_ensemble(cfg: ExperimentConfig, out: Path, svg: bool) -> int:
    stats = metrics.ensemble_run(cfg)
    fp = cfg.fingerprint()
    with open(out / f"ensemble_{fp}.json", "w") as fh:
        json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_rows(
        out / f"ensemble_reps_{fp}.csv",
        "replicate,tail_cost," + ",".join(f"tail_x{j}" for j in range(stats.tail_avgs.shape[1])),
        (
            (str(r), repr(float(stats.tail_costs[r])),
             *(repr(float(v)) for v in stats.tail_avgs[r]))
            for r in range(stats.completed)
        ),
    )
    print(f"ensemble {stats.completed}/{stats.replicates} completed; "
          f"mean tail cost {stats.tail_costs.mean():.6f}" if stats.completed else
          f"ensemble 0/{stats.replicates} completed")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "check": cmd_check,
    "oracle": cmd_oracle,
    "ensemble": cmd_ensemble,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gameanneal",
        description="Distributed-annealing experiments on aggregative games. "
                    f"Packaged presets: {', '.join(available_presets())}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="path to a config JSON, or a packaged preset name")
        p.add_argument("--out", default=None, help="output directory (default: from config)")
        p.add_argument("--seed", type=int, default=None, help="override the run seed")
        p.add_argument("--svg", action="store_true", help="also render SVG figures")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed).validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    out = Path(args.out) if args.out else Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args.svg)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
