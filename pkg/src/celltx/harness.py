"""Batch experiment driver: nomadic-site reconfiguration method comparison.

Each repetition builds the reference network, optimizes it globally,
adds the nomadic site, then runs every requested method from that shared
baseline so the per-seed comparisons are paired.  Statistics are
exported as CSV/JSON; records.csv is byte-identical across runs of the
same spec (wall times go to a separate, non-deterministic timings file).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .network import (
    DEFAULT_TX_POWER_DBM,
    Position,
    PowerAssignment,
    PowerDomain,
    Scenario,
    add_nomadic_site,
    generate_honeycomb,
    generate_ue_grid,
    load_topology,
)
from .neighborhood import (
    CircleSchedule,
    SamplingConfig,
    default_circle_schedule,
    iterative_range_reconfigure,
    sampling_reconfigure,
    sampling_select,
)
from .optimize import GaConfig, count_changed, global_reconfigure, local_reconfigure
from .radio import RadioConfig

METHODS = ("global", "iterative", "sampling")


@dataclass(frozen=True)
class GeneratorSource:
    """Honeycomb scenario parameters."""

    sites: int
    isd_m: float
    ue_nx: int
    ue_ny: int
    default_tx_power_dbm: float = DEFAULT_TX_POWER_DBM
    radio: RadioConfig = RadioConfig()
    power_domain: PowerDomain = PowerDomain()


@dataclass(frozen=True)
class TopologySource:
    """Scenario loaded from a topology document."""

    path: str


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything one comparison run needs; fully determines its outputs."""

    scenario: GeneratorSource | TopologySource
    methods: tuple[str, ...] = METHODS
    nomadic_site: Position | None = None  # None: area center
    nomadic_tx_power_dbm: float | None = None
    repetitions: int = 50
    base_seed: int = 0
    ga: GaConfig = GaConfig()
    circle: CircleSchedule | None = None  # None: default schedule per scenario
    sampling: SamplingConfig = SamplingConfig()

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method '{m}'")


@dataclass(frozen=True)
class RunRecord:
    """One (method, seed) outcome row."""

    method: str
    seed: int
    changed_count: int
    selected_count: int
    total_throughput_bps: float
    rel_to_global: float | None
    wall_ms: float | None
    status: str


def build_scenario(source: GeneratorSource | TopologySource) -> Scenario:
    if isinstance(source, TopologySource):
        return load_topology(Path(source.path).read_bytes())
    s = generate_honeycomb(
        source.sites,
        source.isd_m,
        radio_cfg=source.radio,
        power_domain=source.power_domain,
        default_tx_power_dbm=source.default_tx_power_dbm,
    )
    ues = generate_ue_grid(source.ue_nx, source.ue_ny, (s.area_x_m, s.area_y_m))
    return replace(s, ues=ues)


def run_experiment(spec: ExperimentSpec) -> list[RunRecord]:
    """All repetitions of all requested methods; deterministic given the spec."""
    s_ref = build_scenario(spec.scenario)
    site = spec.nomadic_site if spec.nomadic_site is not None else s_ref.center
    records: list[RunRecord] = []
    for rep in range(spec.repetitions):
        seed = spec.base_seed + rep
        ga = replace(spec.ga, seed=seed)
        records.extend(_run_repetition(spec, s_ref, site, seed, ga))
    records.sort(key=lambda r: (r.method, r.seed))
    return records


def _run_repetition(
    spec: ExperimentSpec, s_ref: Scenario, site: Position, seed: int, ga: GaConfig
) -> list[RunRecord]:
    def failed_rows(message: str) -> list[RunRecord]:
        return [
            RunRecord(m, seed, 0, 0, 0.0, None, None, f"failed: {message}")
            for m in spec.methods
        ]

    try:
        reference = global_reconfigure(s_ref, ga)
        s_after = add_nomadic_site(s_ref, site, spec.nomadic_tx_power_dbm)
        new_ids = frozenset(s_after.cell_ids) - frozenset(s_ref.cell_ids)
        baseline = reference.best_assignment.replace(
            {cid: s_after.power_domain.snap(s_after.cell_by_id(cid).default_tx_power_dbm)
             for cid in new_ids}
        )
    except Exception as exc:  # single-run failure: record, keep going
        return failed_rows(str(exc))

    rows: list[RunRecord] = []
    global_throughput: float | None = None
    for method in spec.methods:
        start = time.perf_counter()
        try:
            if method == "global":
                outcome = local_reconfigure(s_after, s_after.cell_ids, baseline, ga)
                selected_count = len(s_after.cell_ids)
                changed = count_changed(baseline, outcome.best_assignment)
                throughput = outcome.best_objective_bps
                global_throughput = throughput
            elif method == "iterative":
                sched = spec.circle
                if sched is None:
                    sched = default_circle_schedule(
                        s_after,
                        spec.nomadic_tx_power_dbm
                        if spec.nomadic_tx_power_dbm is not None
                        else DEFAULT_TX_POWER_DBM,
                    )
                report = iterative_range_reconfigure(s_after, site, sched, ga, baseline)
                selected_count = len(report.selected)
                changed = report.changed_count
                throughput = report.throughput_after_bps
            else:  # sampling
                scfg = replace(spec.sampling, seed=seed)
                flagged = sampling_select(
                    s_ref, s_after, reference.best_assignment, baseline, scfg
                )
                report = sampling_reconfigure(s_after, flagged | new_ids, baseline, ga)
                selected_count = len(report.selected)
                changed = report.changed_count
                throughput = report.throughput_after_bps
            wall_ms = (time.perf_counter() - start) * 1e3
            rows.append(
                RunRecord(method, seed, changed, selected_count, throughput, None, wall_ms, "ok")
            )
        except Exception as exc:
            rows.append(RunRecord(method, seed, 0, 0, 0.0, None, None, f"failed: {exc}"))
    if global_throughput is not None and global_throughput > 0:
        rows = [
            replace(r, rel_to_global=r.total_throughput_bps / global_throughput)
            if r.status == "ok"
            else r
            for r in rows
        ]
    return rows


def ecdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF: sorted unique values with cumulative fractions."""
    if len(values) == 0:
        raise ValueError("ecdf of an empty sequence")
    xs = sorted(values)
    n = len(xs)
    out: list[tuple[float, float]] = []
    for i, x in enumerate(xs):
        if i + 1 < n and xs[i + 1] == x:
            continue
        out.append((float(x), (i + 1) / n))
    return out


def boxplot_stats(values: Sequence[float]) -> tuple[float, float, float, float, float]:
    """Five-number summary (min, q1, median, q3, max), linear interpolation."""
    if len(values) == 0:
        raise ValueError("boxplot_stats of an empty sequence")
    q = np.percentile(np.asarray(values, dtype=np.float64), [0, 25, 50, 75, 100])
    return tuple(float(v) for v in q)


_CSV_COLUMNS = (
    "method",
    "seed",
    "changed_count",
    "selected_count",
    "total_throughput_bps",
    "rel_to_global",
    "wall_ms",
    "status",
)


def _cell_text(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_results(records: Sequence[RunRecord], fmt: str) -> bytes:
    """Records as CSV or JSON bytes, ordered by (method, seed)."""
    ordered = sorted(records, key=lambda r: (r.method, r.seed))
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for r in ordered:
            writer.writerow(
                [
                    r.method,
                    r.seed,
                    r.changed_count,
                    r.selected_count,
                    _cell_text(r.total_throughput_bps),
                    _cell_text(r.rel_to_global),
                    _cell_text(r.wall_ms),
                    r.status,
                ]
            )
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        rows = [
            {
                "method": r.method,
                "seed": r.seed,
                "changed_count": r.changed_count,
                "selected_count": r.selected_count,
                "total_throughput_bps": r.total_throughput_bps,
                "rel_to_global": r.rel_to_global,
                "wall_ms": r.wall_ms,
                "status": r.status,
            }
            for r in ordered
        ]
        return (json.dumps(rows, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown export format '{fmt}'")


def _write_pairs_csv(path: Path, header: tuple[str, str], pairs: Sequence[tuple[float, float]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for a, b in pairs:
        writer.writerow([_cell_text(float(a)), _cell_text(float(b))])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def write_experiment_outputs(records: Sequence[RunRecord], out_dir: str | Path) -> None:
    """records.csv (deterministic), timings.csv, ECDF and boxplot files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    deterministic = [replace(r, wall_ms=None) for r in records]
    (out / "records.csv").write_bytes(export_results(deterministic, "csv"))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("method", "seed", "wall_ms"))
    for r in sorted(records, key=lambda r: (r.method, r.seed)):
        writer.writerow([r.method, r.seed, _cell_text(r.wall_ms)])
    (out / "timings.csv").write_bytes(buf.getvalue().encode("utf-8"))

    methods = sorted({r.method for r in records})
    ok = [r for r in records if r.status == "ok"]
    box_changed: list[tuple[str, tuple[float, ...]]] = []
    box_throughput: list[tuple[str, tuple[float, ...]]] = []
    for m in methods:
        rows = [r for r in ok if r.method == m]
        if not rows:
            continue
        throughputs = [r.total_throughput_bps for r in rows]
        _write_pairs_csv(
            out / f"ecdf_throughput_{m}.csv", ("value", "fraction"), ecdf(throughputs)
        )
        rels = [r.rel_to_global for r in rows if r.rel_to_global is not None]
        if rels:
            _write_pairs_csv(
                out / f"ecdf_rel_to_global_{m}.csv", ("value", "fraction"), ecdf(rels)
            )
        box_changed.append((m, boxplot_stats([r.changed_count for r in rows])))
        box_throughput.append((m, boxplot_stats(throughputs)))
    for name, summary in (
        ("boxplot_changed_count.csv", box_changed),
        ("boxplot_throughput.csv", box_throughput),
    ):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("method", "min", "q1", "median", "q3", "max"))
        for m, stats in summary:
            writer.writerow([m] + [_cell_text(v) for v in stats])
        (out / name).write_bytes(buf.getvalue().encode("utf-8"))


def read_records_csv(data: bytes | str) -> list[RunRecord]:
    """Parse a records.csv back into RunRecord rows."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(data))
    if reader.fieldnames is None or tuple(reader.fieldnames) != _CSV_COLUMNS:
        raise ValueError("records csv: unexpected columns")
    rows = []
    for row in reader:
        rows.append(
            RunRecord(
                method=row["method"],
                seed=int(row["seed"]),
                changed_count=int(row["changed_count"]),
                selected_count=int(row["selected_count"]),
                total_throughput_bps=float(row["total_throughput_bps"]),
                rel_to_global=float(row["rel_to_global"]) if row["rel_to_global"] else None,
                wall_ms=float(row["wall_ms"]) if row["wall_ms"] else None,
                status=row["status"],
            )
        )
    return rows


def compare_records(a: Sequence[RunRecord], b: Sequence[RunRecord]) -> str:
    """Paired-difference summary (b - a) per method, keyed on (method, seed).

    Returns a CSV text with one row per (metric, method).
    """
    index_a = {(r.method, r.seed): r for r in a if r.status == "ok"}
    index_b = {(r.method, r.seed): r for r in b if r.status == "ok"}
    keys = sorted(set(index_a) & set(index_b))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("metric", "method", "n", "mean_diff", "median_diff", "min_diff", "max_diff"))
    for metric, getter in (
        ("total_throughput_bps", lambda r: r.total_throughput_bps),
        ("changed_count", lambda r: float(r.changed_count)),
    ):
        for method in sorted({m for m, _ in keys}):
            diffs = [
                getter(index_b[k]) - getter(index_a[k]) for k in keys if k[0] == method
            ]
            if not diffs:
                continue
            arr = np.asarray(diffs)
            writer.writerow(
                [
                    metric,
                    method,
                    len(diffs),
                    _cell_text(float(arr.mean())),
                    _cell_text(float(np.median(arr))),
                    _cell_text(float(arr.min())),
                    _cell_text(float(arr.max())),
                ]
            )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Experiment spec document (JSON)


def _spec_fields(obj: dict, ctx: str, required: Sequence[str], optional: Sequence[str]) -> None:
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ValueError(f"{ctx}: unknown field '{unknown[0]}'")
    for key in required:
        if key not in obj:
            raise ValueError(f"{ctx}: missing field '{key}'")


def spec_from_json(data: bytes | str, base_dir: str | Path | None = None) -> ExperimentSpec:
    """Parse an experiment spec document (see README for the schema)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    doc = json.loads(data)
    if not isinstance(doc, dict):
        raise ValueError("experiment spec: expected an object")
    _spec_fields(
        doc,
        "experiment spec",
        ("scenario",),
        ("methods", "nomadic_site", "nomadic_tx_power_dbm", "repetitions",
         "base_seed", "ga", "circle", "sampling"),
    )
    sdoc = doc["scenario"]
    if not isinstance(sdoc, dict):
        raise ValueError("scenario: expected an object")
    if "topology" in sdoc:
        _spec_fields(sdoc, "scenario", ("topology",), ())
        path = Path(sdoc["topology"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        scenario: GeneratorSource | TopologySource = TopologySource(str(path))
    else:
        _spec_fields(
            sdoc,
            "scenario",
            ("sites", "isd_m", "ue_grid"),
            ("default_tx_power_dbm", "radio", "power_domain"),
        )
        grid = sdoc["ue_grid"]
        if not (isinstance(grid, list) and len(grid) == 2):
            raise ValueError("scenario: field 'ue_grid' must be [nx, ny]")
        radio_cfg = RadioConfig(**sdoc.get("radio", {}))
        domain = (
            PowerDomain(
                min_dbm=sdoc["power_domain"]["min"],
                max_dbm=sdoc["power_domain"]["max"],
                step_db=sdoc["power_domain"]["step"],
            )
            if "power_domain" in sdoc
            else PowerDomain()
        )
        scenario = GeneratorSource(
            sites=int(sdoc["sites"]),
            isd_m=float(sdoc["isd_m"]),
            ue_nx=int(grid[0]),
            ue_ny=int(grid[1]),
            default_tx_power_dbm=float(sdoc.get("default_tx_power_dbm", DEFAULT_TX_POWER_DBM)),
            radio=radio_cfg,
            power_domain=domain,
        )
    site = None
    if doc.get("nomadic_site") is not None:
        ndoc = doc["nomadic_site"]
        _spec_fields(ndoc, "nomadic_site", ("x", "y"), ())
        site = Position(float(ndoc["x"]), float(ndoc["y"]))
    ga = GaConfig(**doc.get("ga", {}))
    circle = None
    if doc.get("circle") is not None:
        cdoc = doc["circle"]
        _spec_fields(cdoc, "circle", ("initial_radius_m",), ("growth_factor", "max_radius_m"))
        circle = CircleSchedule(
            initial_radius_m=float(cdoc["initial_radius_m"]),
            growth_factor=float(cdoc.get("growth_factor", 1.5)),
            max_radius_m=float(cdoc.get("max_radius_m", math.inf)),
        )
    sampling = SamplingConfig(**doc.get("sampling", {}))
    return ExperimentSpec(
        scenario=scenario,
        methods=tuple(doc.get("methods", METHODS)),
        nomadic_site=site,
        nomadic_tx_power_dbm=(
            float(doc["nomadic_tx_power_dbm"])
            if doc.get("nomadic_tx_power_dbm") is not None
            else None
        ),
        repetitions=int(doc.get("repetitions", 50)),
        base_seed=int(doc.get("base_seed", 0)),
        ga=ga,
        circle=circle,
        sampling=sampling,
    )
