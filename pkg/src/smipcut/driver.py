"""Cutting-plane solution loops for binary, integer, and mixed first stages,
plus the benchmark harness.

The binary loop alternates master MILP solves with per-scenario recourse
evaluation, seed-cut generation and LP strengthening.  Pure-integer first
stages are binarized and sent through the binary loop.  Mixed first stages
run the lifted pipeline: a symmetric initial cut from rho, strengthened
through the lifted LP, embedded with shared (w+, w-, z) blocks, paired with
one strengthened Benders cut per iteration.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cuts as cutlib
from . import milp, oracle, relu, strengthen, subproblems
from .embed import MasterModel, binarize_instance
from .model import (LinearCut, ReluCut, SmipInstance, SmipError, SolveReport,
                    evaluate_relu_cut, solve_gap)

CUT_PRESETS = {
    "l": frozenset({"lshaped"}),
    "b": frozenset({"benders", "lshaped"}),
    "sb": frozenset({"sb", "lshaped"}),
    "r": frozenset({"relu"}),
    "al": frozenset({"al"}),
    "lag": frozenset({"lag"}),
}
KNOWN_TOKENS = frozenset({"benders", "sb", "lshaped", "relu", "al", "lag"})


@dataclass(frozen=True)
class DriverConfig:
    cut_family: frozenset = frozenset({"relu"})
    aggregation: str = "single"  # or "multi"
    gap_tol: float = 1e-4  # 0.01%
    time_limit: float = 3600.0
    iteration_limit: int = 10000
    strategy: str = "auto"
    objective_cuts: bool = False
    warm_start: bool = True
    rho_method: str = "closed"  # or "search"
    lower_bound: float | None = None
    jobs: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.gap_tol <= 0:
            raise SmipError("gap tolerance must be positive")
        unknown = set(self.cut_family) - KNOWN_TOKENS
        if unknown:
            raise SmipError(f"unknown cut tokens {sorted(unknown)}")
        if self.aggregation not in ("single", "multi"):
            raise SmipError("aggregation must be 'single' or 'multi'")

    @staticmethod
    def with_cuts(name: str, **kw) -> "DriverConfig":
        """Config from a preset name ('l','b','sb','r','al','lag') or a
        comma-separated custom token combo."""
        key = name.lower()
        family = CUT_PRESETS.get(key, frozenset(key.split(",")) - {""})
        return DriverConfig(cut_family=family, **kw)


@dataclass
class MasterState:
    master: MasterModel
    lower: float = -np.inf
    upper: float = np.inf
    incumbent: np.ndarray | None = None
    cut_pool: list = field(default_factory=list)
    log: list = field(default_factory=list)
    anchors: dict = field(default_factory=dict)


def _scenario_map(fn, count: int, jobs: int) -> list:
    if jobs <= 1 or count <= 1:
        return [fn(s) for s in range(count)]
    with ThreadPoolExecutor(max_workers=min(jobs, count)) as pool:
        return list(pool.map(fn, range(count)))


def _aggregate_relu(anchor, cuts_by_scenario, probs) -> ReluCut:
    intercept = sum(p * c.intercept for c, p in zip(cuts_by_scenario, probs))
    pi_plus = sum(p * c.pi_plus for c, p in zip(cuts_by_scenario, probs))
    pi_minus = sum(p * c.pi_minus for c, p in zip(cuts_by_scenario, probs))
    return ReluCut(anchor=anchor, intercept=float(intercept), pi_plus=pi_plus,
                   pi_minus=pi_minus,
                   degraded=any(c.degraded for c in cuts_by_scenario))


def _aggregate_linear(cuts_by_scenario, probs) -> LinearCut:
    coeffs = sum(p * c.coeffs for c, p in zip(cuts_by_scenario, probs))
    rhs = sum(p * c.rhs for c, p in zip(cuts_by_scenario, probs))
    return LinearCut(coeffs=coeffs, rhs=float(rhs))


class _Loop:
    """Shared bookkeeping for the warm start and main loops."""

    def __init__(self, instance: SmipInstance, config: DriverConfig,
                 lower_bound: float):
        self.instance = instance
        self.config = config
        self.L = lower_bound
        self.N = len(instance.scenarios)
        self.probs = instance.probabilities
        multi = config.aggregation == "multi" and self.N > 0
        self.state = MasterState(master=MasterModel(
            instance, theta_count=self.N if multi else 1, theta_lb=lower_bound,
            theta_weights=self.probs if multi else None))
        self.multi = multi
        self.start = time.monotonic()

    def out_of_time(self) -> bool:
        return time.monotonic() - self.start > self.config.time_limit

    def exp_theta(self, thetas: np.ndarray) -> float:
        return float(self.probs @ thetas) if self.multi else float(thetas[0])

    def add_scenario_cuts(self, anchor, generated, thetas) -> bool:
        """Embed per-scenario cuts (aggregated in single mode).  Returns
        whether any added cut is violated at the generating point."""
        master, probs = self.state.master, self.probs
        progress = False
        for family, per_scenario in generated.items():
            if self.multi:
                for s, cut in enumerate(per_scenario):
                    value = (cut.value_at(anchor) if isinstance(cut, LinearCut)
                             else evaluate_relu_cut(cut, anchor))
                    if value > thetas[s] + 1e-9:
                        progress = True
                    if isinstance(cut, LinearCut):
                        master.add_linear_cut(cut, theta_index=s)
                    else:
                        master.embed_cut(cut, theta_index=s)
                    self.state.cut_pool.append(cut)
            else:
                if isinstance(per_scenario[0], LinearCut):
                    agg = _aggregate_linear(per_scenario, probs)
                    value = agg.value_at(anchor)
                    master.add_linear_cut(agg)
                else:
                    agg = _aggregate_relu(anchor, per_scenario, probs)
                    value = evaluate_relu_cut(agg, anchor)
                    master.embed_cut(agg)
                if value > thetas[0] + 1e-9:
                    progress = True
                self.state.cut_pool.append(agg)
        return progress

    def benders_warm_start(self, relax_master: bool, max_rounds: int = 200) -> None:
        """Add Benders cuts until the (relaxed) master agrees with the
        LP-relaxed subproblem values at its own solution."""
        cfg = self.config
        for _ in range(max_rounds):
            if self.out_of_time():
                return
            res = self.state.master.solve(relaxed=relax_master)
            if res.status != milp.Status.OPTIMAL or res.x is None:
                return
            xhat, thetas = self.state.master.split(res.x)
            cuts = _scenario_map(
                lambda s: cutlib.benders_cut(self.instance, s, xhat),
                self.N, cfg.jobs)
            values = np.array([c.value_at(xhat) for c in cuts])
            if self.multi:
                gap_mask = values > thetas + 1e-9
                if not gap_mask.any():
                    return
                for s in np.flatnonzero(gap_mask):
                    self.state.master.add_linear_cut(cuts[s], theta_index=int(s))
            else:
                agg = _aggregate_linear(cuts, self.probs)
                if agg.value_at(xhat) <= thetas[0] + 1e-9:
                    return
                self.state.master.add_linear_cut(agg)

    def report(self, iterations: int, status: str) -> SolveReport:
        inst = self.instance
        incumbent = self.state.incumbent
        offset = inst.obj_offset
        return SolveReport(
            lower_bound=self.state.lower + offset,
            upper_bound=self.state.upper + offset,
            incumbent=None if incumbent is None else incumbent + inst.shift,
            iterations=iterations, cut_log=self.state.log,
            wall_time=time.monotonic() - self.start, status=status)


def _first_stage_only(instance: SmipInstance, config: DriverConfig) -> SolveReport:
    loop = _Loop(instance, config, lower_bound=0.0)
    # degenerate zero-scenario problem: theta is fixed at zero
    loop.state.master.builder.hi[loop.state.master.theta_cols[0]] = 0.0
    res = loop.state.master.solve()
    if res.status != milp.Status.OPTIMAL:
        raise SmipError(f"first-stage problem {res.status.value}")
    xhat, _ = loop.state.master.split(res.x)
    loop.state.lower = loop.state.upper = res.objective
    loop.state.incumbent = xhat
    return loop.report(iterations=0, status="optimal")


def _oracle_tables(instance: SmipInstance):
    try:
        return [oracle.build_table(instance, s)
                for s in range(len(instance.scenarios))]
    except oracle.UnsupportedByOracle as exc:
        raise SmipError(
            "the 'lag' cut family needs oracle-enumerable instances") from exc


def solve_binary(instance: SmipInstance, config: DriverConfig | None = None) -> SolveReport:
    """Cutting-plane loop for purely binary first-stage decisions."""
    config = config or DriverConfig()
    if len(instance.scenarios) == 0:
        return _first_stage_only(instance, config)
    if not instance.is_binary:
        raise SmipError("solve_binary needs a purely binary first stage; "
                        "use solve_general")
    return _solve_discrete(instance, config)


def _solve_discrete(instance: SmipInstance, config: DriverConfig) -> SolveReport:
    """Master-resolve loop over an integer first stage.  Tight hinge cuts
    (lshaped/relu/al) require a binary domain; linear families run on any
    integer domain."""
    if not instance.is_binary and (config.cut_family & {"lshaped", "relu", "al"}):
        raise SmipError("hinge-cut families on a non-binary integer domain "
                        "must go through binarization (solve_general)")
    L = config.lower_bound if config.lower_bound is not None \
        else cutlib.global_lower_bound(instance)
    loop = _Loop(instance, config, lower_bound=L)
    tokens = config.cut_family
    tables = _oracle_tables(instance) if "lag" in tokens else None
    scen_lbs = None
    if config.objective_cuts:
        scen_lbs = [cutlib.scenario_lower_bound(instance, s)
                    for s in range(loop.N)]

    if config.warm_start:
        loop.benders_warm_start(relax_master=True)

    status = "iteration_limit"
    iteration = 0
    for iteration in range(1, config.iteration_limit + 1):
        if loop.out_of_time():
            status = "time_limit"
            break
        res = loop.state.master.solve()
        if res.status == milp.Status.INFEASIBLE:
            raise SmipError("master problem infeasible: the instance has no "
                            "feasible first-stage decision")
        if res.status != milp.Status.OPTIMAL:
            raise SmipError(f"master solve {res.status.value}")
        xhat, thetas = loop.state.master.split(res.x)
        xhat = np.round(xhat)
        loop.state.lower = max(loop.state.lower, res.objective)

        q_vals = np.array(_scenario_map(
            lambda s: subproblems.recourse_value(instance, s, xhat),
            loop.N, config.jobs))
        total = float(instance.c @ xhat) + float(loop.probs @ q_vals)
        if total < loop.state.upper:
            loop.state.upper, loop.state.incumbent = total, xhat
        key = tuple(xhat)
        loop.state.anchors[key] = loop.state.anchors.get(key, 0) + 1
        loop.state.log.append({"iteration": iteration, "anchor": list(map(float, xhat)),
                               "lb": loop.state.lower, "ub": loop.state.upper,
                               "families": sorted(tokens)})
        if solve_gap(loop.state.lower, loop.state.upper) <= config.gap_tol:
            status = "optimal"
            break

        def make_cuts(s: int) -> dict:
            out = {}
            q = q_vals[s]
            req = cutlib.CutRequest(scenario_id=s, anchor=xhat, q_val=q, lower_bound=L)
            chi = 2.0 * xhat - 1.0
            if "benders" in tokens:
                out["benders"] = cutlib.benders_cut(instance, s, xhat)
            if "sb" in tokens:
                out["sb"] = cutlib.strengthened_benders_cut(instance, s, xhat)
            if "lshaped" in tokens:
                out["lshaped"] = cutlib.integer_l_shaped_cut(req)
            if "relu" in tokens:
                seed = (q - L) * chi
                res_s = strengthen.strengthen_binary_cut(
                    instance, s, xhat, q, seed, strategy=config.strategy,
                    scenario_lb=None if scen_lbs is None else scen_lbs[s])
                out["relu"] = res_s.cut
            if "al" in tokens:
                out["al"] = cutlib.augmented_lagrangian_cut(
                    instance, s, xhat, np.zeros(instance.n), rho=max(q - L, 0.0))
            if "lag" in tokens:
                out["lag"] = cutlib.lagrangian_cut(tables[s], xhat)
            return out

        per_scenario = _scenario_map(make_cuts, loop.N, config.jobs)
        generated = {fam: [per_scenario[s][fam] for s in range(loop.N)]
                     for fam in per_scenario[0]}
        if not loop.add_scenario_cuts(xhat, generated, thetas):
            status = "stalled"
            break
    if solve_gap(loop.state.lower, loop.state.upper) <= config.gap_tol:
        status = "optimal"
    return loop.report(iterations=iteration, status=status)


def _solve_via_binarization(instance: SmipInstance, config: DriverConfig) -> SolveReport:
    mapped, mapping = binarize_instance(instance)
    report = solve_binary(mapped, config)
    if report.incumbent is not None:
        report.incumbent = mapping.to_original(report.incumbent) + instance.shift
    return report


def _solve_mixed(instance: SmipInstance, config: DriverConfig) -> SolveReport:
    L = config.lower_bound if config.lower_bound is not None \
        else cutlib.global_lower_bound(instance)
    loop = _Loop(instance, config, lower_bound=L)
    upper_bounds = instance.bounds[:, 1]

    if config.warm_start:
        # root LP phase, then integral first stage against the relaxed
        # second stage, both on Benders cuts
        loop.benders_warm_start(relax_master=True)
        for _ in range(200):
            if loop.out_of_time():
                break
            res = loop.state.master.solve()
            if res.status != milp.Status.OPTIMAL:
                break
            xhat, thetas = loop.state.master.split(res.x)
            bcuts = _scenario_map(lambda s: cutlib.benders_cut(instance, s, xhat),
                                  loop.N, config.jobs)
            if loop.multi:
                mask = np.array([c.value_at(xhat) for c in bcuts]) > thetas + 1e-9
                if not mask.any():
                    break
                for s in np.flatnonzero(mask):
                    loop.state.master.add_linear_cut(bcuts[s], theta_index=int(s))
            else:
                agg = _aggregate_linear(bcuts, loop.probs)
                if agg.value_at(xhat) <= thetas[0] + 1e-9:
                    break
                loop.state.master.add_linear_cut(agg)

    status = "iteration_limit"
    iteration = 0
    for iteration in range(1, config.iteration_limit + 1):
        if loop.out_of_time():
            status = "time_limit"
            break
        res = loop.state.master.solve()
        if res.status == milp.Status.INFEASIBLE:
            raise SmipError("master problem infeasible")
        if res.status != milp.Status.OPTIMAL:
            raise SmipError(f"master solve {res.status.value}")
        xhat, thetas = loop.state.master.split(res.x)
        xhat = np.where(instance.var_kinds, np.round(xhat), xhat)
        xhat = np.clip(xhat, 0.0, upper_bounds)
        loop.state.lower = max(loop.state.lower, res.objective)

        q_vals = np.array(_scenario_map(
            lambda s: subproblems.recourse_value(instance, s, xhat),
            loop.N, config.jobs))
        total = float(instance.c @ xhat) + float(loop.probs @ q_vals)
        if total < loop.state.upper:
            loop.state.upper, loop.state.incumbent = total, xhat
        loop.state.log.append({"iteration": iteration, "anchor": list(map(float, xhat)),
                               "lb": loop.state.lower, "ub": loop.state.upper,
                               "families": ["relu", "sb"]})
        if solve_gap(loop.state.lower, loop.state.upper) <= config.gap_tol:
            status = "optimal"
            break

        def make_cuts(s: int) -> dict:
            q = q_vals[s]
            if config.rho_method == "search":
                est = relu.binary_search_rho(instance, s, xhat, L, q_val=q)
            else:
                cands = relu.ball_box_candidates(xhat, upper_bounds)
                est = relu.closed_form_rho(cands, xhat, L, q_val=q)
            out = strengthen.strengthen_mixed_cut(instance, s, xhat, q, est.rho)
            cut = out.cut
            if cut.scenario_id is None:
                cut = ReluCut(anchor=cut.anchor, intercept=cut.intercept,
                              pi_plus=cut.pi_plus, pi_minus=cut.pi_minus,
                              scenario_id=s, degraded=cut.degraded)
            return {"relu": cut,
                    "sb": cutlib.strengthened_benders_cut(instance, s, xhat)}

        per_scenario = _scenario_map(make_cuts, loop.N, config.jobs)
        generated = {fam: [per_scenario[s][fam] for s in range(loop.N)]
                     for fam in per_scenario[0]}
        if not loop.add_scenario_cuts(xhat, generated, thetas):
            status = "stalled"
            break
    if solve_gap(loop.state.lower, loop.state.upper) <= config.gap_tol:
        status = "optimal"
    return loop.report(iterations=iteration, status=status)


def solve_general(instance: SmipInstance, config: DriverConfig | None = None) -> SolveReport:
    """Dispatch on the first-stage type: binary directly, pure integer via
    binarization, mixed through the lifted pipeline."""
    config = config or DriverConfig()
    if len(instance.scenarios) == 0:
        return _first_stage_only(instance, config)
    if instance.is_binary:
        return solve_binary(instance, config)
    if instance.is_pure_integer:
        if config.cut_family & {"lshaped", "relu", "al"}:
            return _solve_via_binarization(instance, config)
        # linear-cut families stay on the original integer domain
        return _solve_discrete(instance, config)
    return _solve_mixed(instance, config)


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------

BENCH_COLUMNS = ["name", "size", "N", "seed", "cuts", "status", "lb", "ub",
                 "gap", "iterations", "time"]


def _bench_instance(row: dict):
    from . import fixtures, instances

    if "fixture" in row:
        return fixtures.get_instance(row["fixture"]), row["fixture"], "-"
    spec = instances.GeneratorSpec.from_dict(row)
    return instances.generate(spec), spec.family, spec.size_label()


def run_benchmark(spec: dict | str, base_config: DriverConfig | None = None) -> list[dict]:
    """Run every (row, cut combo) of a benchmark spec; per-row failures are
    recorded and the run continues.  Returns one dict per run in column
    order BENCH_COLUMNS."""
    if isinstance(spec, str):
        with open(spec) as fh:
            spec = json.load(fh)
    if not isinstance(spec, dict) or "rows" not in spec:
        raise SmipError("benchmark spec must be an object with a 'rows' list")
    defaults = {k: spec[k] for k in ("gap", "time_limit", "iteration_limit")
                if k in spec}
    results = []
    for row in spec["rows"]:
        combos = row.get("cuts", ["r"])
        if isinstance(combos, str):
            combos = [combos]
        for combo in combos:
            record = {c: "" for c in BENCH_COLUMNS}
            record.update({"cuts": combo, "seed": row.get("seed", "-"),
                           "N": row.get("N", "-")})
            try:
                inst, name, size = _bench_instance(row)
                record.update({"name": name, "size": size,
                               "N": len(inst.scenarios)})
                cfg = base_config or DriverConfig()
                cfg = replace(cfg, cut_family=DriverConfig.with_cuts(combo).cut_family,
                              gap_tol=row.get("gap", defaults.get("gap", cfg.gap_tol)),
                              time_limit=row.get("time_limit",
                                                 defaults.get("time_limit", cfg.time_limit)),
                              iteration_limit=row.get(
                                  "iteration_limit",
                                  defaults.get("iteration_limit", cfg.iteration_limit)))
                report = solve_general(inst, cfg)
                record.update({
                    "status": report.status, "lb": report.lower_bound,
                    "ub": report.upper_bound, "gap": report.gap,
                    "iterations": report.iterations,
                    "time": round(report.wall_time, 4),
                })
            except Exception as exc:  # noqa: BLE001 - per-row failures recorded
                record["status"] = f"error: {exc}"
            results.append(record)
    return results
