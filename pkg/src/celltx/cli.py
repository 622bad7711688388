"""Command-line interface.

Subcommands: generate, evaluate, optimize, experiment, compare.
Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    compare_records,
    read_records_csv,
    run_experiment,
    spec_from_json,
    write_experiment_outputs,
)
from .network import (
    PowerAssignment,
    evaluate,
    generate_honeycomb,
    generate_ue_grid,
    initial_assignment,
    load_topology,
    save_topology,
)
from .optimize import GaConfig, count_changed, local_reconfigure, sga_optimize


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; remap to 1."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        nx, ny = text.lower().split("x")
        return int(nx), int(ny)
    except ValueError:
        raise ValueError(f"--ue-grid expects NXxNY (e.g. 18x18), got '{text}'") from None


def _load_powers(path: str) -> PowerAssignment:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("powers file: expected an object of cell id -> dBm")
    return PowerAssignment({int(k): float(v) for k, v in doc.items()})


def _powers_doc(a: PowerAssignment) -> dict[str, float]:
    return {str(cid): a[cid] for cid in a}


def _cmd_generate(args) -> int:
    scenario = generate_honeycomb(args.sites, args.isd, default_tx_power_dbm=args.default_power)
    if args.ue_grid:
        nx, ny = _parse_grid(args.ue_grid)
        ues = generate_ue_grid(nx, ny, (scenario.area_x_m, scenario.area_y_m))
        scenario = replace(scenario, ues=ues)
    Path(args.output).write_bytes(save_topology(scenario))
    return 0


def _cmd_evaluate(args) -> int:
    scenario = load_topology(Path(args.topology).read_bytes())
    powers = _load_powers(args.powers) if args.powers else initial_assignment(scenario)
    result = evaluate(scenario, powers)
    json.dump(result.as_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_optimize(args) -> int:
    scenario = load_topology(Path(args.topology).read_bytes())
    baseline = _load_powers(args.powers) if args.powers else initial_assignment(scenario)
    if args.method == "local":
        if not args.cells:
            raise ValueError("--cells is required with --method local")
        subset = frozenset(int(c) for c in args.cells.split(","))
    else:
        subset = frozenset(scenario.cell_ids)
    cfg = GaConfig(population_size=args.population, generations=args.generations, seed=args.seed)
    outcome = (
        local_reconfigure(scenario, subset, baseline, cfg)
        if args.method == "local"
        else sga_optimize(scenario, subset, baseline, cfg)
    )
    summary = {
        "method": args.method,
        "best_objective_bps": outcome.best_objective_bps,
        "baseline_objective_bps": outcome.objective_trace[0],
        "changed_count": count_changed(baseline, outcome.best_assignment),
        "evaluations": outcome.evaluations,
        "objective_trace": list(outcome.objective_trace),
        "best_powers_dbm": _powers_doc(outcome.best_assignment),
    }
    if args.output:
        Path(args.output).write_text(
            json.dumps(_powers_doc(outcome.best_assignment), indent=2) + "\n",
            encoding="utf-8",
        )
    json.dump(summary, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_experiment(args) -> int:
    spec_path = Path(args.spec)
    spec = spec_from_json(spec_path.read_bytes(), base_dir=spec_path.parent)
    records = run_experiment(spec)
    write_experiment_outputs(records, args.out_dir)
    ok = sum(1 for r in records if r.status == "ok")
    print(f"wrote {len(records)} records ({ok} ok) to {args.out_dir}")
    return 0


def _cmd_compare(args) -> int:
    a = read_records_csv(Path(args.records_a).read_bytes())
    b = read_records_csv(Path(args.records_b).read_bytes())
    sys.stdout.write(compare_records(a, b))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="celltx", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a honeycomb topology file")
    p.add_argument("--sites", type=int, required=True, help="number of three-sector sites")
    p.add_argument("--isd", type=float, required=True, help="inter-site distance, m")
    p.add_argument("--ue-grid", help="UE grid as NXxNY, e.g. 18x18")
    p.add_argument("--default-power", type=float, default=43.0, help="default TX power, dBm")
    p.add_argument("-o", "--output", required=True, help="output topology file")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("evaluate", help="evaluate a topology, print the result as JSON")
    p.add_argument("--topology", required=True)
    p.add_argument("--powers", help="JSON file of cell id -> dBm (default: snapped defaults)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("optimize", help="optimize TX powers of a topology")
    p.add_argument("--topology", required=True)
    p.add_argument("--method", choices=("global", "local"), required=True)
    p.add_argument("--cells", help="comma-separated cell ids (local method)")
    p.add_argument("--powers", help="baseline powers JSON (default: snapped defaults)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--population", type=int, default=32)
    p.add_argument("-o", "--output", help="write the optimized powers JSON here")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("experiment", help="run a method-comparison experiment")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("-o", "--out-dir", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("compare", help="paired-difference summary of two records.csv")
    p.add_argument("records_a")
    p.add_argument("records_b")
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"celltx: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
