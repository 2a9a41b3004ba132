"""Run driver: execute algorithm x scenario, evaluate every budget
inequality, persist plot-ready artifacts, and fit sublinearity slopes.

Artifacts per run directory:

* ``rounds.csv``  -- header ``t,x_0..x_{d-1},f,g,gplus,Q,grad_norm_surrogate``
* ``summary.json`` -- flat snake_case summary (metrics, budgets, flags)
* ``config.json``  -- echo of the run configuration (used by verification)
* ``plotdata.csv`` -- optional long-format ``series,t,value`` trajectories

Files are written atomically (temp file + rename). Reruns of an identical
configuration produce byte-identical CSVs.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coco import (
    Coco1State,
    Coco2State,
    coco1_bound_rhs,
    coco1_round,
    coco2_bound_rhs,
    coco2_round,
)
from .core import RoundRow, RunRecord, ccv_update, g_plus
from .geometry import membership
from .scenarios import Scenario, ScenarioSpec, build_scenario, with_horizon
from .subroutines import (
    KNOWN_PATH,
    PATH_FREE,
    AdaGradState,
    AhagState,
    adagrad_bound_rhs,
    adagrad_step,
    ahag_bound_rhs,
    ahag_round,
)

ALGORITHMS = ("adagrad", "ahag", "coco1", "coco2")
VERIFY_REL_TOL = 1e-6
FEASIBILITY_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class HarnessError(RuntimeError):
    """Numerical or oracle failure during a run (CLI exit code 3)."""


@dataclass
class RunConfig:
    scenario: ScenarioSpec
    algorithm: str
    comparators: list | None = None
    v: float | None = None
    g_lip: float | None = None
    path_estimate: float | None = None
    horizons: list | None = None
    out_dir: str | None = None
    emit_plotdata: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.horizons is not None:
            hs = list(self.horizons)
            if any(h2 <= h1 for h1, h2 in zip(hs, hs[1:])):
                raise ConfigError("horizons must be strictly increasing")
            if any(h < 1 for h in hs):
                raise ConfigError("horizons must be positive")
            self.horizons = hs
        if self.g_lip is not None:
            # explicit override feeds the scenario so the oracles, the
            # surrogates, and the budgets all share one Lipschitz bound
            self.scenario = ScenarioSpec(
                name=self.scenario.name, horizon=self.scenario.horizon,
                seed=self.scenario.seed,
                params={**self.scenario.params, "g_lip": self.g_lip},
            )


def _resolve_comparators(config: RunConfig, scenario: Scenario) -> dict:
    available = scenario.comparators()
    names = config.comparators if config.comparators is not None \
        else scenario.default_comparators()
    if not names:
        raise ConfigError("at least one comparator must be registered")
    missing = [n for n in names if n not in available]
    if missing:
        raise ConfigError(f"unknown comparators {missing}; scenario offers {sorted(available)}")
    return {n: available[n] for n in names}


def run(config: RunConfig, horizon: int | None = None) -> RunRecord:
    """Execute one run and return its record; persists when out_dir is set."""
    spec = config.scenario if horizon is None else with_horizon(config.scenario, horizon)
    try:
        scenario = build_scenario(spec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc
    comparators = _resolve_comparators(config, scenario)
    for name, comp in comparators.items():
        if comp.points.shape != (scenario.horizon, scenario.dimension):
            raise ConfigError(f"comparator {name!r} has wrong shape {comp.points.shape}")
        if not np.all(membership(comp.points, scenario.decision_set.geometry, tol=1e-8)):
            raise ConfigError(f"comparator {name!r} leaves the decision set")

    t0 = time.perf_counter()
    record = RunRecord(dimension=scenario.dimension)
    comp_cost = {name: 0.0 for name in comparators}
    sum_cost = 0.0
    bookkeeping_q = 0.0
    state = _init_state(config, scenario)

    for t in range(1, scenario.horizon + 1):
        try:
            cost, constraint = scenario.generate(t)
            row = _advance(config.algorithm, state, cost, constraint, t, bookkeeping_q)
            bookkeeping_q = row.q
            for name, comp in comparators.items():
                u = comp.points[t - 1]
                comp_cost[name] += float(cost.value(u))
                if comp.feasible and float(constraint.value(u)) > FEASIBILITY_TOL:
                    raise HarnessError(
                        f"comparator {name!r} marked feasible violates round {t}")
        except HarnessError:
            raise
        except Exception as exc:
            raise HarnessError(f"oracle failure at round {t}: {exc}") from exc
        sum_cost += row.f
        record.append(row)

    summary = _summarize(config, scenario, state, record, comparators, comp_cost, sum_cost)
    summary["wall_clock_sec"] = time.perf_counter() - t0
    record.summary = summary
    if config.out_dir is not None:
        persist(record, config, config.out_dir)
    return record


def _init_state(config: RunConfig, scenario: Scenario):
    ds = scenario.decision_set
    T = scenario.horizon
    g = scenario.g_lip
    if config.algorithm == "adagrad":
        if config.path_estimate is not None:
            return AdaGradState(decision_set=ds, mode=KNOWN_PATH,
                                path_estimate=float(config.path_estimate))
        return AdaGradState(decision_set=ds, mode=PATH_FREE)
    if config.algorithm == "ahag":
        return AhagState.create(ds, T)
    if config.algorithm == "coco1":
        return Coco1State.create(ds, T, g)
    return Coco2State.create(ds, T, g, v=config.v)


def _advance(algorithm: str, state, cost, constraint, t: int, prev_q: float) -> RoundRow:
    """One round of the selected algorithm; returns the trajectory row.

    The plain OCO subroutines ignore the constraint for their update but the
    violation they incur is still recorded.
    """
    if algorithm == "coco1":
        _, _, row = coco1_round(state, cost, constraint)
        return row
    if algorithm == "coco2":
        _, _, row = coco2_round(state, cost, constraint)
        return row
    if algorithm == "adagrad":
        x = state.point
        grad = np.asarray(cost.subgradient(x), dtype=float)
        grad_norm = float(np.linalg.norm(grad))
        adagrad_step(state, grad)
    else:
        before = state.grad_sq_sum
        _, x = ahag_round(state, cost)
        grad_norm = math.sqrt(max(state.grad_sq_sum - before, 0.0))
    f_val = float(cost.value(x))
    g_val = float(constraint.value(x))
    q = ccv_update(prev_q, g_val)
    return RoundRow(t=t, x=x, f=f_val, g=g_val, gplus=g_plus(g_val), q=q,
                    surrogate_grad_norm=grad_norm)


def _summarize(config, scenario, state, record, comparators, comp_cost, sum_cost) -> dict:
    algo = config.algorithm
    ds = scenario.decision_set
    summary = {
        "algorithm": algo,
        "scenario": scenario.name,
        "seed": config.scenario.seed,
        "horizon": record.horizon,
        "dimension": scenario.dimension,
        "g_lip": scenario.g_lip,
        "diameter": ds.diameter,
        "final_ccv": record.final_ccv(),
        "sum_cost": sum_cost,
        "surrogate_grad_sq_sum": record.surrogate_grad_sq_sum(),
    }
    if algo == "adagrad":
        summary["mode"] = state.mode
        if state.mode == KNOWN_PATH:
            summary["path_estimate"] = state.path_estimate
    if algo == "coco2":
        summary["v"] = state.v_param

    flags = []
    for name, comp in comparators.items():
        regret = sum_cost - comp_cost[name]
        summary[f"path_length__{name}"] = comp.path_length
        summary[f"feasible__{name}"] = comp.feasible
        summary[f"regret__{name}"] = regret
        rhs, applicable = _regret_budget(algo, state, record, scenario, comp)
        if applicable:
            summary[f"bound_rhs__{name}"] = rhs
            ok = regret <= rhs * (1.0 + 1e-12) + 1e-12
            summary[f"bound_ok__{name}"] = bool(ok)
            flags.append(bool(ok))

    ccv_rhs, ccv_path = _ccv_budget(algo, state, record, scenario)
    if ccv_rhs is not None:
        summary["ccv_bound_path"] = ccv_path
        summary["ccv_bound_rhs"] = ccv_rhs
        ok = record.final_ccv() <= ccv_rhs * (1.0 + 1e-12) + 1e-12
        summary["ccv_bound_ok"] = bool(ok)
        flags.append(bool(ok))

    summary["all_bounds_satisfied"] = bool(all(flags)) if flags else True
    return summary


def _regret_budget(algo, state, record, scenario, comp):
    """Budget RHS for the regret against one comparator, plus applicability."""
    if algo == "adagrad":
        if state.mode == KNOWN_PATH:
            # the analysis covers comparators whose path fits the budget
            if comp.path_length > state.path_estimate + 1e-12:
                return None, False
            return adagrad_bound_rhs(state, state.path_estimate), True
        return adagrad_bound_rhs(state, comp.path_length), True
    if algo == "ahag":
        return ahag_bound_rhs(state, comp.path_length), True
    if not comp.feasible:
        return None, False
    if algo == "coco1":
        return coco1_bound_rhs(record, comp.path_length, scenario.g_lip,
                               scenario.decision_set.diameter), True
    regret_rhs, _ = coco2_bound_rhs(record, comp.path_length, state.v_param,
                                    scenario.g_lip, scenario.decision_set.diameter)
    return regret_rhs, True


def _ccv_budget(algo, state, record, scenario):
    if algo == "coco1":
        p_star = scenario.minimizer_path_length()
        if p_star is None:
            return None, None
        return coco1_bound_rhs(record, p_star, scenario.g_lip,
                               scenario.decision_set.diameter), p_star
    if algo == "coco2":
        p_feas = scenario.feasible_path_length()
        if p_feas is None:
            return None, None
        _, ccv_rhs = coco2_bound_rhs(record, p_feas, state.v_param,
                                     scenario.g_lip, scenario.decision_set.diameter)
        return ccv_rhs, p_feas
    return None, None


# ---------------------------------------------------------------------------
# persistence

def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return repr(float(v))


def rounds_csv_text(record: RunRecord) -> str:
    d = record.dimension
    header = "t," + ",".join(f"x_{i}" for i in range(d)) + ",f,g,gplus,Q,grad_norm_surrogate"
    lines = [header]
    for r in record.rows:
        coords = ",".join(_fmt(c) for c in r.x)
        lines.append(f"{r.t},{coords},{_fmt(r.f)},{_fmt(r.g)},{_fmt(r.gplus)},"
                     f"{_fmt(r.q)},{_fmt(r.surrogate_grad_norm)}")
    return "\n".join(lines) + "\n"


def _prefix_budget(summary, prefix_t, prefix_path, prefix_grad_sq):
    """Regret budget evaluated on a run prefix, for plot trajectories."""
    from .subroutines import ahag_constant, num_experts

    algo = summary["algorithm"]
    diam = summary["diameter"]
    root_s = math.sqrt(prefix_grad_sq)
    if algo == "adagrad":
        p = summary.get("path_estimate", prefix_path)
        if summary["mode"] == KNOWN_PATH:
            return (diam + 1.0) * math.sqrt(2.0 * (1.0 + p)) * root_s
        return math.sqrt(2.0) * (diam + 1.0) * (1.0 + prefix_path) * root_s
    n = num_experts(diam, int(summary["horizon"]))
    if algo in ("ahag", "coco1"):
        return ahag_constant(diam, n) * math.sqrt(1.0 + prefix_path) * root_s
    from .coco import coco2_gamma
    gamma = coco2_gamma(summary["g_lip"], diam, n)
    v = summary["v"]
    one_p = 1.0 + prefix_path
    return (gamma ** 2 * one_p * prefix_t
            + gamma * math.sqrt(one_p) * v * math.sqrt(prefix_t)) / v


def plotdata_csv_text(record: RunRecord, config: RunConfig) -> str:
    """Long-format trajectories: running CCV, running regret per comparator,
    and the matching budget RHS evaluated on each prefix."""
    scenario = build_scenario(ScenarioSpec(
        name=config.scenario.name, horizon=record.horizon,
        seed=config.scenario.seed, params=config.scenario.params))
    comparators = _resolve_comparators(config, scenario)
    lines = ["series,t,value"]
    for r in record.rows:
        lines.append(f"ccv,{r.t},{_fmt(r.q)}")
    grad_sq_prefix = np.cumsum([r.surrogate_grad_norm ** 2 for r in record.rows])
    for name, comp in comparators.items():
        regret = 0.0
        path_prefix = 0.0
        for i, r in enumerate(record.rows):
            cost, _ = scenario.generate(r.t)
            regret += r.f - float(cost.value(comp.points[i]))
            if i > 0:
                path_prefix += float(np.linalg.norm(comp.points[i] - comp.points[i - 1]))
            lines.append(f"regret__{name},{r.t},{_fmt(regret)}")
            if f"bound_rhs__{name}" in record.summary:
                rhs = _prefix_budget(record.summary, r.t, path_prefix,
                                     float(grad_sq_prefix[i]))
                lines.append(f"bound_rhs__{name},{r.t},{_fmt(rhs)}")
    return "\n".join(lines) + "\n"


def persist(record: RunRecord, config: RunConfig, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "rounds.csv"), rounds_csv_text(record))
    _atomic_write(os.path.join(out_dir, "summary.json"),
                  json.dumps(record.summary, sort_keys=True, indent=2) + "\n")
    cfg = {
        "scenario": {
            "name": config.scenario.name, "horizon": record.horizon,
            "seed": config.scenario.seed, "params": config.scenario.params,
        },
        "algorithm": config.algorithm,
        "comparators": list(config.comparators) if config.comparators is not None else None,
        "v": config.v, "g_lip": config.g_lip, "path_estimate": config.path_estimate,
        "emit_plotdata": config.emit_plotdata,
    }
    _atomic_write(os.path.join(out_dir, "config.json"),
                  json.dumps(cfg, sort_keys=True, indent=2) + "\n")
    if config.emit_plotdata:
        _atomic_write(os.path.join(out_dir, "plotdata.csv"),
                      plotdata_csv_text(record, config))


# ---------------------------------------------------------------------------
# sweeps

def loglog_slope(horizons, values) -> float:
    """Least-squares slope of log(value) against log(horizon), dropping
    entries with value <= 1; degenerate inputs give slope 0."""
    pts = [(t, v) for t, v in zip(horizons, values) if v > 1.0]
    if len(pts) < 2:
        warnings.warn("metric degenerate: fewer than two horizons exceed 1")
        return 0.0
    ts, vs = zip(*pts)
    slope, _ = np.polyfit(np.log(np.asarray(ts, float)), np.log(np.asarray(vs, float)), 1)
    return float(slope)


def _metric_value(record: RunRecord, metric: str, comparator: str | None) -> float:
    if metric == "ccv":
        return record.summary["final_ccv"]
    if metric == "regret":
        name = comparator
        if name is None:
            name = next(k[len("regret__"):] for k in sorted(record.summary)
                        if k.startswith("regret__"))
        return record.summary[f"regret__{name}"]
    raise ConfigError(f"unknown metric {metric!r}; choose 'ccv' or 'regret'")


def sweep_slope(config: RunConfig, metric: str, comparator: str | None = None) -> float:
    """Run every configured horizon and fit the sublinearity slope of the metric."""
    if not config.horizons or len(config.horizons) < 3:
        raise ConfigError("sweeps need at least 3 horizons")
    records = sweep(config)
    values = [_metric_value(r, metric, comparator) for r in records]
    return loglog_slope(config.horizons, values)


def sweep(config: RunConfig) -> list:
    """Run all configured horizons (optionally in parallel) and return records."""
    if not config.horizons:
        raise ConfigError("sweep requires a horizons list")
    threads = int(os.environ.get("COCO_LAB_THREADS", "1"))

    def _one(T: int) -> RunRecord:
        sub = RunConfig(
            scenario=config.scenario, algorithm=config.algorithm,
            comparators=config.comparators, v=config.v, g_lip=None,
            path_estimate=config.path_estimate,
            out_dir=None if config.out_dir is None
            else os.path.join(config.out_dir, f"T{T}"),
            emit_plotdata=config.emit_plotdata,
        )
        return run(sub, horizon=T)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_one, config.horizons))
    return [_one(T) for T in config.horizons]


# ---------------------------------------------------------------------------
# verification: re-derive the summary from the persisted CSV

def _rel_close(a: float, b: float, tol: float = VERIFY_REL_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def load_run(out_dir: str):
    with open(os.path.join(out_dir, "summary.json")) as f:
        summary = json.load(f)
    with open(os.path.join(out_dir, "config.json")) as f:
        cfg = json.load(f)
    rows = np.genfromtxt(os.path.join(out_dir, "rounds.csv"), delimiter=",",
                         names=True, dtype=float)
    rows = np.atleast_1d(rows)
    return summary, cfg, rows


def verify_run(out_dir: str) -> list:
    """Recompute every summary number from rounds.csv; returns discrepancies."""
    summary, cfg, rows = load_run(out_dir)
    problems = []
    d = summary["dimension"]
    xs = np.stack([rows[f"x_{i}"] for i in range(d)], axis=1)
    f_col, g_col = rows["f"], rows["g"]
    gplus_col, q_col = rows["gplus"], rows["Q"]
    grad_col = rows["grad_norm_surrogate"]

    if len(rows) != summary["horizon"]:
        problems.append(f"row count {len(rows)} != horizon {summary['horizon']}")
    if np.max(np.abs(gplus_col - np.maximum(g_col, 0.0))) > 1e-12:
        problems.append("gplus column is not max(0, g)")
    q_re = np.cumsum(gplus_col)
    if not np.allclose(q_re, q_col, rtol=VERIFY_REL_TOL, atol=1e-9):
        problems.append("Q column does not match the running violation sum")
    if not _rel_close(float(q_col[-1]), summary["final_ccv"]):
        problems.append("final_ccv mismatch")
    if not _rel_close(float(np.sum(f_col)), summary["sum_cost"]):
        problems.append("sum_cost mismatch")
    s_re = float(np.sum(grad_col ** 2))
    if not _rel_close(s_re, summary["surrogate_grad_sq_sum"]):
        problems.append("surrogate_grad_sq_sum mismatch")

    spec = ScenarioSpec(name=cfg["scenario"]["name"], horizon=int(summary["horizon"]),
                        seed=int(cfg["scenario"]["seed"]),
                        params=cfg["scenario"]["params"])
    scenario = build_scenario(spec)
    names = [k[len("regret__"):] for k in summary if k.startswith("regret__")]
    comparators = scenario.comparators()
    comp_cost = {n: 0.0 for n in names}
    sum_fx = 0.0
    for t in range(1, scenario.horizon + 1):
        cost, constraint = scenario.generate(t)
        fx = float(cost.value(xs[t - 1]))
        gx = float(constraint.value(xs[t - 1]))
        if not _rel_close(fx, float(f_col[t - 1])):
            problems.append(f"f column mismatch at round {t}")
            break
        if not _rel_close(gx, float(g_col[t - 1])):
            problems.append(f"g column mismatch at round {t}")
            break
        sum_fx += fx
        for n in names:
            comp_cost[n] += float(cost.value(comparators[n].points[t - 1]))

    for n in names:
        regret_re = sum_fx - comp_cost[n]
        if not _rel_close(regret_re, summary[f"regret__{n}"]):
            problems.append(f"regret__{n} mismatch")
        if not _rel_close(comparators[n].path_length, summary[f"path_length__{n}"]):
            problems.append(f"path_length__{n} mismatch")
        rhs_key = f"bound_rhs__{n}"
        if rhs_key in summary:
            rhs_re = _recompute_regret_rhs(summary, scenario, comparators[n], s_re)
            if rhs_re is not None and not _rel_close(rhs_re, summary[rhs_key]):
                problems.append(f"bound_rhs__{n} mismatch")
    if "ccv_bound_rhs" in summary:
        rhs_re = _recompute_ccv_rhs(summary, scenario, s_re)
        if rhs_re is not None and not _rel_close(rhs_re, summary["ccv_bound_rhs"]):
            problems.append("ccv_bound_rhs mismatch")
    return problems


def _recompute_regret_rhs(summary, scenario, comp, grad_sq_sum):
    from .subroutines import ahag_constant, num_experts

    algo = summary["algorithm"]
    diam = summary["diameter"]
    root_s = math.sqrt(grad_sq_sum)
    if algo == "adagrad":
        if summary["mode"] == KNOWN_PATH:
            p = summary["path_estimate"]
            return (diam + 1.0) * math.sqrt(2.0 * (1.0 + p)) * root_s
        return math.sqrt(2.0) * (diam + 1.0) * (1.0 + comp.path_length) * root_s
    n = num_experts(diam, int(summary["horizon"]))
    if algo in ("ahag", "coco1"):
        return ahag_constant(diam, n) * math.sqrt(1.0 + comp.path_length) * root_s
    if algo == "coco2":
        from .coco import coco2_gamma
        gamma = coco2_gamma(summary["g_lip"], diam, n)
        T = summary["horizon"]
        one_p = 1.0 + comp.path_length
        return (gamma ** 2 * one_p * T + gamma * math.sqrt(one_p)
                * summary["v"] * math.sqrt(T)) / summary["v"]
    return None


def _recompute_ccv_rhs(summary, scenario, grad_sq_sum):
    from .subroutines import ahag_constant, num_experts

    algo = summary["algorithm"]
    diam = summary["diameter"]
    path = summary["ccv_bound_path"]
    n = num_experts(diam, int(summary["horizon"]))
    if algo == "coco1":
        return ahag_constant(diam, n) * math.sqrt(1.0 + path) * math.sqrt(grad_sq_sum)
    if algo == "coco2":
        from .coco import coco2_gamma
        gamma = coco2_gamma(summary["g_lip"], diam, n)
        T = summary["horizon"]
        v = summary["v"]
        root_tp = math.sqrt(T * (1.0 + path))
        return (2.0 * gamma * root_tp + 0.5 * math.sqrt(4.0 * gamma * v * root_tp)
                + 0.5 * math.sqrt(4.0 * v * summary["g_lip"] * diam * T))
    return None
