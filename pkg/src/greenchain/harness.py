"""Experiment runner, power-saving metrics and report files.

A run writes four files into its output directory:

``results.csv``   one row per flow (``RESULT_COLUMNS``)
``summary.csv``   one row per run (``SUMMARY_COLUMNS``)
``state.txt``     on/off census of the final state
``solution.txt``  topology, flows and assignments, readable by ``validate``

Wall-clock time is logged but never written, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .capacity import ValidationReport, replay, validate_solution
from .formats import dump_topology, load_topology
from .model import NodeKind
from .mva import BeamConfig, SolveResult, solve_all
from .oracle import Infeasible, exhaustive_solve
from .power import reference_power
from .scenarios import ConfigParseError, Scenario, ScenarioSpec, generate, parse_config

log = logging.getLogger(__name__)

WORKERS_ENV = "GREENCHAIN_WORKERS"

RESULT_COLUMNS = ("flow", "source", "destination", "rate_bps", "served", "weight",
                  "mdra_calls", "rejected_stage", "reason", "placements", "route")
SUMMARY_COLUMNS = ("scenario", "seed", "psi", "flows", "served", "rejected",
                   "objective_power", "total_power", "reference_power", "eta",
                   "idle_reference_power", "eta_idle_reference", "nodes_on", "links_on",
                   "mdra_calls", "violations")


class ZeroReference(ValueError):
    pass


class DegenerateBaseline(ValueError):
    pass


def eta(run_power: float, reference: float) -> float:
    """Share of the all-on power that the run still consumes."""
    if reference <= 0:
        raise ZeroReference("reference power must be positive")
    return run_power / reference


def eta_bar(eta_min: float, eta_min_baseline: float) -> float:
    """Saved power relative to the saving of a baseline network."""
    if eta_min_baseline >= 1:
        raise DegenerateBaseline("baseline saves nothing")
    return (1.0 - eta_min) / (1.0 - eta_min_baseline)


@dataclass
class ExperimentResult:
    scenario_id: str
    spec: ScenarioSpec
    scenario: Scenario
    solve: SolveResult
    reference_power: float
    idle_reference_power: float
    eta: float
    eta_idle_reference: float
    census: dict
    mdra_calls: int
    report: ValidationReport
    wall_time: float

    @property
    def objective_power(self) -> float:
        return self.solve.objective_power

    @property
    def total_power(self) -> float:
        return self.solve.total_power


def scenario_id(spec: ScenarioSpec) -> str:
    name = f"structure{spec.structure}" if spec.structure else spec.size
    return f"{name}-s{spec.seed}-psi{spec.psi}"


def census(graph, state) -> dict:
    out = {}
    for kind in NodeKind:
        ids = [n.id for n in graph.nodes if n.kind is kind]
        out[f"{kind.value}_on"] = sum(1 for i in ids if state.node_on[i])
        out[f"{kind.value}_total"] = len(ids)
    out["sdn_links_on"] = sum(1 for l in graph.links if l.is_sdn and state.link_on[l.id])
    out["sdn_links_total"] = sum(1 for l in graph.links if l.is_sdn)
    out["links_on"] = sum(state.link_on)
    out["links_total"] = graph.num_links
    out["nodes_on"] = sum(state.node_on)
    out["nodes_total"] = graph.num_nodes
    return out


def run_spec(spec: ScenarioSpec) -> ExperimentResult:
    t0 = time.perf_counter()
    scenario = generate(spec)
    graph = scenario.graph
    solved = solve_all(graph, scenario.flows, scenario.catalog, BeamConfig(spec.psi))
    report = validate_solution(graph, scenario.catalog, scenario.flows, solved.assignments,
                               solved.state)
    ref = reference_power(graph, solved.state, loaded=True)
    idle = reference_power(graph, solved.state, loaded=False)
    wall = time.perf_counter() - t0
    result = ExperimentResult(
        scenario_id=scenario_id(spec), spec=spec, scenario=scenario, solve=solved,
        reference_power=ref, idle_reference_power=idle,
        eta=eta(solved.total_power, ref), eta_idle_reference=eta(solved.total_power, idle),
        census=census(graph, solved.state),
        mdra_calls=sum(o.mdra_calls for o in solved.outcomes),
        report=report, wall_time=wall,
    )
    log.info("%s: eta=%.4f (reference with servers at committed load), %d/%d served, %.2fs",
             result.scenario_id, result.eta, len(solved.assignments), len(scenario.flows), wall)
    return result


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def result_rows(result: ExperimentResult) -> list:
    flows = {f.id: f for f in result.scenario.flows}
    rows = []
    for o in result.solve.outcomes:
        f = flows[o.flow]
        if o.assignment is not None:
            places = " ".join(f"{k}:{u}" for k, u in o.assignment.placements)
            route = "|".join(".".join(map(str, s)) if s else "-" for s in o.assignment.segments)
        else:
            places = route = ""
        rows.append((f.id, f.source, f.destination, f.rate, int(o.served), _num(o.weight),
                     o.mdra_calls, _num(o.rejected_stage), o.reason, places, route))
    return rows


def summary_row(result: ExperimentResult) -> tuple:
    s = result.spec
    served = len(result.solve.assignments)
    return (result.scenario_id, s.seed, s.psi, len(result.scenario.flows), served,
            len(result.scenario.flows) - served, _num(result.objective_power),
            _num(result.total_power), _num(result.reference_power), _num(result.eta),
            _num(result.idle_reference_power), _num(result.eta_idle_reference),
            result.census["nodes_on"], result.census["links_on"], result.mdra_calls,
            len(result.report.violations))


def state_text(result: ExperimentResult) -> str:
    state = result.solve.state
    lines = [f"# {result.scenario_id}"]
    for key, value in result.census.items():
        lines.append(f"{key} {value}")
    lines.append("nodes_on_ids " + " ".join(str(i) for i, on in enumerate(state.node_on) if on))
    lines.append("links_on_ids " + " ".join(str(i) for i, on in enumerate(state.link_on) if on))
    for u, nf in sorted(state.placed):
        lines.append(f"vnf {u} {nf}")
    return "\n".join(lines) + "\n"


def solution_text(result: ExperimentResult) -> str:
    sc = result.scenario
    return dump_topology(sc.graph, sc.catalog, sc.flows, result.solve.assignments)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_outputs(result: ExperimentResult, out_dir) -> None:
    out = Path(out_dir)
    write_atomic(out / "results.csv", _csv_text(RESULT_COLUMNS, result_rows(result)))
    write_atomic(out / "summary.csv", _csv_text(SUMMARY_COLUMNS, [summary_row(result)]))
    write_atomic(out / "state.txt", state_text(result))
    write_atomic(out / "solution.txt", solution_text(result))


def load_spec(config_path, seed: Optional[int] = None, psi: Optional[int] = None,
              **overrides) -> ScenarioSpec:
    try:
        text = Path(config_path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {config_path}: {exc}") from exc
    spec = parse_config(text)
    if seed is not None:
        overrides["seed"] = seed
    if psi is not None:
        overrides["psi"] = psi
    return replace(spec, **overrides) if overrides else spec


def run_experiment(config_path, out_dir, seed: Optional[int] = None,
                   psi: Optional[int] = None) -> ExperimentResult:
    result = run_spec(load_spec(config_path, seed, psi))
    write_outputs(result, out_dir)
    if not result.report.ok:
        log.error("validator violations:\n%s", result.report.to_text())
    return result


@dataclass
class OracleComparison:
    scenario_id: str
    mva_power: Optional[float]
    oracle_power: Optional[float]
    mva_served: int
    flows: int
    status: str

    @property
    def ratio(self) -> Optional[float]:
        if self.mva_power is None or self.oracle_power is None:
            return None
        if self.oracle_power == 0:
            return 1.0 if self.mva_power == 0 else float("inf")
        return self.mva_power / self.oracle_power


def compare_scenario(scenario: Scenario, psi: int, sid: str = "") -> OracleComparison:
    g, cat, flows = scenario.graph, scenario.catalog, scenario.flows
    solved = solve_all(g, flows, cat, BeamConfig(psi))
    served = len(solved.assignments)
    try:
        opt = exhaustive_solve(g, flows, cat)
    except Infeasible:
        status = "both_rejected" if served < len(flows) else "oracle_infeasible"
        return OracleComparison(sid, None, None, served, len(flows), status)
    if served < len(flows):
        return OracleComparison(sid, None, opt.power, served, len(flows), "mva_rejected")
    return OracleComparison(sid, solved.objective_power, opt.power, served, len(flows), "ok")


def compare_with_oracle(config_path, seed: Optional[int] = None,
                        psi: Optional[int] = None) -> OracleComparison:
    spec = load_spec(config_path, seed, psi)
    return compare_scenario(generate(spec), spec.psi, scenario_id(spec))


ORACLE_COLUMNS = ("scenario", "flows", "mva_served", "status", "mva_power", "oracle_power", "ratio")


def oracle_csv(rows) -> str:
    return _csv_text(ORACLE_COLUMNS, [(r.scenario_id, r.flows, r.mva_served, r.status,
                                       _num(r.mva_power), _num(r.oracle_power), _num(r.ratio))
                                      for r in rows])


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigParseError(f"{WORKERS_ENV} must be an integer, got {raw!r}")


def _sweep_one(spec: ScenarioSpec) -> tuple:
    r = run_spec(spec)
    first = r.solve.outcomes[0].weight if r.solve.outcomes else None
    return summary_row(r) + (_num(first),), len(r.report.violations)


SWEEP_COLUMNS = ("param", "value") + SUMMARY_COLUMNS + ("first_flow_weight",)


def _coerce_value(spec: ScenarioSpec, param: str, text: str):
    current = getattr(spec, param)
    if isinstance(current, int) and not isinstance(current, bool):
        return int(text)
    return float(text)


def sweep(config_path, param: str, values, out_dir=None, seed: Optional[int] = None) -> tuple:
    """Run one experiment per value of ``param``; returns (csv text, total violations)."""
    base = load_spec(config_path, seed)
    if not hasattr(base, param):
        raise ConfigParseError(f"unknown sweep parameter {param!r}")
    try:
        specs = [replace(base, **{param: _coerce_value(base, param, v)}) for v in values]
    except ValueError as exc:
        raise ConfigParseError(str(exc)) from exc
    workers = worker_count()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_sweep_one, specs))
    else:
        outcomes = [_sweep_one(s) for s in specs]
    rows = [(param, v) + row for v, (row, _) in zip(values, outcomes)]
    text = _csv_text(SWEEP_COLUMNS, rows)
    if out_dir is not None:
        write_atomic(Path(out_dir) / "sweep.csv", text)
    return text, sum(n for _, n in outcomes)


def validate_file(path) -> ValidationReport:
    """Replay the assignments stored in a solution file and check every constraint."""
    topo = load_topology(path)
    if topo.placed:
        state = replay(topo.graph, topo.catalog, topo.flows, topo.assignments, topo.initial_state())
        return validate_solution(topo.graph, topo.catalog, topo.flows, topo.assignments, state)
    return validate_solution(topo.graph, topo.catalog, topo.flows, topo.assignments)

