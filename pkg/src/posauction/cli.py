"""Configuration-driven command line front end.

Verbs: ``run`` (complete-information auction), ``tabulate`` (serialize an
equilibrium bid table), ``verify`` (residual/deviation suites with a pass/fail
exit status), ``simulate`` (paired revenue Monte Carlo).  One YAML experiment
config per file; every command is a pure function of (config, seed), and the
output files contain the numeric payload only, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .auction import (
    ExpressiveBidProfile,
    MechanismSpec,
    ScalingVector,
    SimplifiedBidProfile,
    SlotCurve,
    ValueProfile,
    run_auction,
)
from .bayes import (
    BayesSetting,
    check_auxiliary_lemmas,
    check_lemma1,
    check_lemma2,
    check_ode,
    myerson_expected_payment,
    truthful_win_probability,
)
from .bidtable import tabulate_bstar
from .complete_info import DeviationGrid, construct_equilibrium_bids, verify_nash
from .distributions import (
    EmpiricalCDF,
    Power,
    TruncatedExponential,
    Uniform,
)
from .quadrature import QuadratureConfig
from .simulate import simulate_revenue

VERIFY_SUITES = (
    "nash", "lemma1", "lemma2", "ode", "aux", "monotone", "payment-identity",
)

DEFAULT_TOLERANCES = {
    "nash": 1e-6,
    "lemma1": 1e-4,
    "lemma2": 1e-4,
    "ode": 1e-6,
    "aux": 1e-6,
    "monotone": 1e-9,
    "payment-identity": 1e-7,
}

DEFAULT_GRIDS = {
    "table": 512,
    "scan": 50,
    "verify_points": 20,
    "lemma_points": 10,
    "aux_m_max": 5,
    "fd_step_frac": 1e-3,
    "aux_fd_step_frac": 1e-4,
    "deviation_step_frac": 1e-3,
    "epsilon_fracs": (1e-3, 1e-6),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    digest: str
    mechanism: MechanismSpec
    curve: SlotCurve
    values: Optional[ValueProfile]
    n: Optional[int]
    dist: object
    quadrature: QuadratureConfig
    grids: dict
    tolerances: dict
    samples: Optional[int]
    seed: Optional[int]
    write_rounds: bool
    bids_source: str
    bids_matrix: Optional[list]
    bids_scalars: Optional[list]
    out_dir: Path

    def setting(self) -> BayesSetting:
        if self.dist is None or self.n is None:
            raise ConfigError("this command needs the distributional setting (agents.n + agents.distribution)")
        return BayesSetting(n=self.n, curve=self.curve, dist=self.dist, cfg=self.quadrature)

    def value_profile(self) -> ValueProfile:
        if self.values is None:
            raise ConfigError("this command needs explicit agent values")
        return self.values


def _build_distribution(node: dict, base_dir: Path):
    family = node.get("family")
    if family == "uniform":
        return Uniform(v_bar=float(node.get("v_bar", 1.0)))
    if family == "power":
        return Power(v_bar=float(node.get("v_bar", 1.0)), a=float(node.get("a", 2.0)))
    if family in ("truncated-exponential", "truncexp"):
        return TruncatedExponential(
            v_bar=float(node.get("v_bar", 1.0)), rate=float(node.get("rate", 1.0))
        )
    if family == "empirical":
        path = Path(node["path"])
        if not path.is_absolute():
            path = base_dir / path
        return EmpiricalCDF.from_file(path)
    raise ConfigError(f"unknown distribution family {family!r}")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    digest = hashlib.sha256(
        json.dumps(data, sort_keys=True, separators=(",", ":"), default=str).encode()
    ).hexdigest()

    mech = data.get("mechanism", {})
    scaling = None
    if mech.get("alphas") is not None:
        scaling = ScalingVector(np.asarray(mech["alphas"], dtype=float))
    mechanism = MechanismSpec(
        payment_rule=mech.get("payment_rule", "first-price"),
        bid_space=mech.get("bid_space", "expressive"),
        scaling=scaling,
    )

    curve_node = data.get("curve", {})
    if "betas" not in curve_node:
        raise ConfigError("config needs curve.betas")
    curve = SlotCurve(np.asarray(curve_node["betas"], dtype=float))

    agents = data.get("agents", {})
    has_values = "values" in agents
    has_dist = "distribution" in agents or "n" in agents
    if has_values == has_dist:
        raise ConfigError("exactly one of agents.values or the (n, distribution) pair must be present")
    values = None
    n = None
    dist = None
    if has_values:
        values = ValueProfile(np.asarray(agents["values"], dtype=float))
    else:
        if "n" not in agents or "distribution" not in agents:
            raise ConfigError("distributional setting needs both agents.n and agents.distribution")
        n = int(agents["n"])
        dist = _build_distribution(agents["distribution"], path.parent)

    qnode = data.get("quadrature", {})
    quadrature = QuadratureConfig(
        abs_tol=float(qnode.get("abs_tol", 1e-10)),
        rel_tol=float(qnode.get("rel_tol", 1e-8)),
        max_depth=int(qnode.get("max_depth", 40)),
    )

    grids = dict(DEFAULT_GRIDS)
    grids.update(data.get("grids", {}))
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(data.get("tolerances", {}))

    sim = data.get("simulation", {})
    samples = int(sim["samples"]) if "samples" in sim else None
    seed = int(sim["seed"]) if "seed" in sim else None

    bids_node = data.get("bids", {})
    bids_source = bids_node.get("source", "equilibrium")
    if bids_source not in ("equilibrium", "truthful", "matrix", "scalars"):
        raise ConfigError(f"unknown bids source {bids_source!r}")

    out_dir = Path(data.get("output", {}).get("dir", "out"))
    if not out_dir.is_absolute():
        out_dir = path.parent / out_dir

    return ExperimentConfig(
        digest=digest,
        mechanism=mechanism,
        curve=curve,
        values=values,
        n=n,
        dist=dist,
        quadrature=quadrature,
        grids=grids,
        tolerances=tolerances,
        samples=samples,
        seed=seed,
        write_rounds=bool(sim.get("write_rounds", False)),
        bids_source=bids_source,
        bids_matrix=bids_node.get("matrix"),
        bids_scalars=bids_node.get("scalars"),
        out_dir=out_dir,
    )


@dataclass
class ResultRecord:
    """Numeric payload of one command, plus bookkeeping timestamps.

    Timestamps are logged to stderr, never written to the output files, so
    reruns with the same config and seed are byte-identical.
    """

    config_digest: str
    command: str
    scalars: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)   # name -> (columns, rows)
    residuals: dict = field(default_factory=dict)
    started_at: float = field(default_factory=time.time)
    finished_at: Optional[float] = None

    def payload(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "command": self.command,
            "scalars": self.scalars,
            "residuals": self.residuals,
            "tables": sorted(self.tables),
        }

    def write(self, out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        summary = out_dir / "summary.json"
        with open(summary, "w", encoding="utf-8") as fh:
            json.dump(self.payload(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        for name, (columns, rows) in self.tables.items():
            with open(out_dir / f"{name}.csv", "w", encoding="utf-8", newline="") as fh:
                fh.write(",".join(columns) + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(cell) for cell in row) + "\n")
        return summary


def _fmt(cell) -> str:
    if isinstance(cell, (float, np.floating)):
        return repr(float(cell))
    return str(cell)


def _interior_grid(v_bar: float, points: int) -> np.ndarray:
    return np.linspace(0.1 * v_bar, 0.9 * v_bar, points)


def _build_bids(cfg: ExperimentConfig):
    """Bid profile plus tie hints for the complete-information commands."""
    values = cfg.value_profile()
    if cfg.bids_source == "equilibrium":
        if cfg.mechanism.bid_space != "expressive":
            raise ConfigError("the constructed equilibrium is an expressive bid profile")
        return construct_equilibrium_bids(values, cfg.curve)
    if cfg.bids_source == "truthful":
        if cfg.mechanism.bid_space == "simplified":
            return SimplifiedBidProfile(values.values.copy(), cfg.mechanism.scaling), None
        return ExpressiveBidProfile(np.outer(values.values, cfg.curve.betas)), None
    if cfg.bids_source == "matrix":
        if cfg.bids_matrix is None:
            raise ConfigError("bids.source=matrix needs bids.matrix")
        return ExpressiveBidProfile(np.asarray(cfg.bids_matrix, dtype=float)), None
    if cfg.bids_scalars is None:
        raise ConfigError("bids.source=scalars needs bids.scalars")
    if cfg.mechanism.scaling is None:
        raise ConfigError("scalar bids need mechanism.alphas")
    return SimplifiedBidProfile(np.asarray(cfg.bids_scalars, dtype=float),
                                cfg.mechanism.scaling), None


def cmd_run(cfg: ExperimentConfig) -> ResultRecord:
    record = ResultRecord(cfg.digest, "run")
    values = cfg.value_profile()
    bids, tie_hint = _build_bids(cfg)
    outcome = run_auction(cfg.mechanism, bids, cfg.curve, values, tie_hint)
    position_of = {agent: pos for pos, agent in outcome.assignment.items()}
    rows = []
    for i in range(values.n):
        pos = position_of.get(i)
        rows.append([
            i,
            "-" if pos is None else pos + 1,
            values.values[i],
            float(outcome.payments[i]),
            float(outcome.utilities[i]),
        ])
    record.tables["outcome"] = (["agent", "position", "value", "payment", "utility"], rows)
    record.scalars["revenue"] = float(outcome.payments.sum())
    record.scalars["welfare"] = float(
        sum(cfg.curve.betas[j] * values.values[i] for j, i in outcome.assignment.items())
    )
    return record


def cmd_tabulate(cfg: ExperimentConfig, grid_size: Optional[int] = None) -> ResultRecord:
    record = ResultRecord(cfg.digest, "tabulate")
    setting = cfg.setting()
    table = tabulate_bstar(setting, grid_size or int(cfg.grids["table"]))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    table.save(cfg.out_dir / "bidtable.txt")
    record.scalars.update({"n": setting.n, "k": setting.k, "grid": table.grid.size})
    record.scalars["table_file"] = "bidtable.txt"
    return record


def _suite_nash(cfg: ExperimentConfig, record: ResultRecord) -> bool:
    values = cfg.value_profile()
    bids, tie_hint = _build_bids(cfg)
    scale = float(np.max(values.values)) or 1.0
    grid = DeviationGrid.scaled(
        scale,
        step_frac=float(cfg.grids["deviation_step_frac"]),
        eps_fracs=tuple(float(f) for f in cfg.grids["epsilon_fracs"]),
    )
    tol = float(cfg.tolerances["nash"])
    report = verify_nash(bids, tie_hint, values, cfg.mechanism, cfg.curve, grid, tol)
    record.residuals["max_gain"] = report.max_gain
    record.scalars.update({
        "is_equilibrium": report.is_equilibrium,
        "efficient": report.efficiency_flag,
        "payment_floor_ok": report.payment_floor_ok,
    })
    if report.worst_violation is not None:
        agent, deviation, gain = report.worst_violation
        record.tables["violations"] = (["agent", "deviation", "gain"],
                                       [[agent, deviation, gain]])
    return report.is_equilibrium


def _suite_lemma1(cfg: ExperimentConfig, record: ResultRecord) -> bool:
    setting = cfg.setting()
    h = float(cfg.grids["fd_step_frac"]) * setting.dist.v_bar
    vs = _interior_grid(setting.dist.v_bar, int(cfg.grids["lemma_points"]))
    rows = []
    worst = 0.0
    for j in range(1, setting.k + 1):
        for v in vs:
            r = check_lemma1(j, float(v), setting, h)
            rows.append([j, float(v), r])
            worst = max(worst, r)
    record.tables["lemma1"] = (["position", "v", "residual"], rows)
    record.residuals["max_residual"] = worst
    return worst < float(cfg.tolerances["lemma1"])


def _suite_lemma2(cfg: ExperimentConfig, record: ResultRecord) -> bool:
    setting = cfg.setting()
    h = float(cfg.grids["fd_step_frac"]) * setting.dist.v_bar
    pts = int(cfg.grids["lemma_points"])
    vs = _interior_grid(setting.dist.v_bar, pts)
    rows = []
    worst = np.inf
    for j in range(1, setting.k + 1):
        m = check_lemma2(j, vs, vs, setting, h)
        rows.append([j, m])
        worst = min(worst, m)
    record.tables["lemma2"] = (["position", "min_cross_difference"], rows)
    record.residuals["min_cross_difference"] = float(worst)
    return worst >= -float(cfg.tolerances["lemma2"])


def _suite_ode(cfg: ExperimentConfig, record: ResultRecord) -> bool:
    setting = cfg.setting()
    vs = _interior_grid(setting.dist.v_bar, int(cfg.grids["verify_points"]))
    rows = []
    worst = 0.0
    for j in range(1, setting.k + 1):
        for v in vs:
            r = check_ode(j, float(v), setting)
            rows.append([j, float(v), r])
            worst = max(worst, r)
    record.tables["ode"] = (["position", "v", "residual"], rows)
    record.residuals["max_residual"] = worst
    return worst < float(cfg.tolerances["ode"])


def _suite_aux(cfg: ExperimentConfig, record: ResultRecord) -> bool:
    setting = cfg.setting()
    v_bar = setting.dist.v_bar
    h = float(cfg.grids["aux_fd_step_frac"]) * v_bar
    m_max = int(cfg.grids["aux_m_max"])
    rows = []
    worst = 0.0
    for v in (0.3 * v_bar, 0.5 * v_bar, 0.7 * v_bar):
        for m in range(2, m_max + 1):
            for j in range(1, m):
                x = np.full(max(j + 1, m), float(v))
                r = check_auxiliary_lemmas(j, m, x, setting, h)
                rows.append(["paired", j, m, "-", float(v), r])
                worst = max(worst, r)
                for ell in range(j + 2, m + 1):
                    x = np.full(max(ell, m), float(v))
                    r = check_auxiliary_lemmas(j, m, x, setting, h, ell=ell)
                    rows.append(["single", j, m, ell, float(v), r])
                    worst = max(worst, r)
    record.tables["aux"] = (["identity", "j", "m", "ell", "v", "residual"], rows)
    record.residuals["max_residual"] = worst
    return worst < float(cfg.tolerances["aux"])


def _suite_monotone(cfg: ExperimentConfig, record: ResultRecord) -> bool:
    setting = cfg.setting()
    vs = np.linspace(0.0, setting.dist.v_bar, int(cfg.grids["verify_points"]))
    betas = setting.curve.betas
    expected = [
        sum(betas[s - 1] * truthful_win_probability(s, float(v), setting)
            for s in range(1, setting.k + 1))
        for v in vs
    ]
    bids = np.array([[setting.bstar(j, float(v)) for j in range(1, setting.k + 1)]
                     for v in vs])
    worst = 0.0
    worst = max(worst, float(np.max(-np.diff(expected), initial=0.0)))
    worst = max(worst, float(np.max(-np.diff(bids, axis=0), initial=0.0)))     # b* rising in v
    worst = max(worst, float(np.max(np.diff(bids, axis=1), initial=0.0)))      # cone across slots
    worst = max(worst, float(np.max(-bids, initial=0.0)))                      # non-negative
    worst = max(worst, float(np.max(bids - betas * vs[:, None], initial=0.0)))  # <= beta_j v
    rows = [[float(v), *map(float, bids[g])] for g, v in enumerate(vs)]
    record.tables["bid_grid"] = (
        ["v"] + [f"b{j}" for j in range(1, setting.k + 1)], rows)
    record.residuals["max_violation"] = worst
    return worst <= float(cfg.tolerances["monotone"])


def _suite_payment_identity(cfg: ExperimentConfig, record: ResultRecord) -> bool:
    setting = cfg.setting()
    vs = _interior_grid(setting.dist.v_bar, int(cfg.grids["verify_points"]))
    rows = []
    worst = 0.0
    for v in vs:
        v = float(v)
        lhs = sum(
            truthful_win_probability(s, v, setting) * setting.bstar(s, v)
            for s in range(1, setting.k + 1)
        )
        rhs = myerson_expected_payment(v, setting)
        r = abs(lhs - rhs)
        rows.append([v, lhs, rhs, r])
        worst = max(worst, r)
    record.tables["payment_identity"] = (["v", "bid_weighted", "myerson", "residual"], rows)
    record.residuals["max_residual"] = worst
    return worst < float(cfg.tolerances["payment-identity"])


_SUITES = {
    "nash": _suite_nash,
    "lemma1": _suite_lemma1,
    "lemma2": _suite_lemma2,
    "ode": _suite_ode,
    "aux": _suite_aux,
    "monotone": _suite_monotone,
    "payment-identity": _suite_payment_identity,
}


def cmd_verify(cfg: ExperimentConfig, suite: str) -> tuple[ResultRecord, bool]:
    if suite not in _SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(VERIFY_SUITES)}")
    record = ResultRecord(cfg.digest, f"verify:{suite}")
    passed = _SUITES[suite](cfg, record)
    record.scalars["passed"] = bool(passed)
    return record, passed


def cmd_simulate(cfg: ExperimentConfig, samples: Optional[int] = None,
                 seed: Optional[int] = None) -> ResultRecord:
    record = ResultRecord(cfg.digest, "simulate")
    setting = cfg.setting()
    samples = samples if samples is not None else cfg.samples
    seed = seed if seed is not None else cfg.seed
    if samples is None or samples < 1:
        raise ConfigError("simulate needs simulation.samples >= 1")
    if seed is None:
        raise ConfigError("simulate is stochastic and needs a seed")
    table = tabulate_bstar(setting, int(cfg.grids["table"]))
    if cfg.write_rounds:
        est, gfp, vcg = simulate_revenue(setting, table, samples, seed, return_rounds=True)
        rows = [[r, float(g), float(c)] for r, (g, c) in enumerate(zip(gfp, vcg))]
        record.tables["rounds"] = (["round", "gfp_revenue", "vcg_revenue"], rows)
    else:
        est = simulate_revenue(setting, table, samples, seed)
    record.scalars.update(est.summary())
    record.scalars["seed"] = seed
    return record


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="posauction",
        description="Position-auction engine: run, tabulate, verify, simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", default=None, help="output directory override")

    p_run = sub.add_parser("run", help="run one complete-information auction")
    add_common(p_run)

    p_tab = sub.add_parser("tabulate", help="build and serialize the equilibrium bid table")
    add_common(p_tab)
    p_tab.add_argument("--grid", type=int, default=None, help="grid size override")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    add_common(p_ver)
    p_ver.add_argument("--suite", required=True, choices=VERIFY_SUITES)
    p_ver.add_argument("--grid", type=int, default=None, help="verify_points override")

    p_sim = sub.add_parser("simulate", help="paired GFP/VCG revenue Monte Carlo")
    add_common(p_sim)
    p_sim.add_argument("--samples", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out_dir = Path(args.out)
        if getattr(args, "grid", None) is not None and args.command == "verify":
            cfg.grids["verify_points"] = args.grid
            cfg.grids["lemma_points"] = args.grid

        exit_code = 0
        if args.command == "run":
            record = cmd_run(cfg)
        elif args.command == "tabulate":
            record = cmd_tabulate(cfg, grid_size=args.grid)
        elif args.command == "verify":
            record, passed = cmd_verify(cfg, args.suite)
            exit_code = 0 if passed else 1
        else:
            record = cmd_simulate(cfg, samples=args.samples, seed=args.seed)
        record.finished_at = time.time()
        summary = record.write(cfg.out_dir)
        print(
            f"{record.command}: wrote {summary} "
            f"({record.finished_at - record.started_at:.2f}s)",
            file=sys.stderr,
        )
        for key, val in sorted(record.scalars.items()):
            print(f"  {key} = {val}", file=sys.stderr)
        for key, val in sorted(record.residuals.items()):
            print(f"  {key} = {val}", file=sys.stderr)
        return exit_code
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
