"""Command-line driver: scenario files in, machine-readable reports out.

Commands:
    solve        centralized dispatch with its optimality certificate
    outcome      allocation and budget ledger for a message file
    equilibrium  both equilibria with certification and audits
    verify       epsilon certificate for a supplied message profile
    dynamics     best-response iteration with CSV/figure trajectory export
    report       consolidated document (dispatch, oracle, equilibria, audits,
                 optional reference comparison) plus CSV and figures
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .dispatch import brute_force_dispatch, solve_dispatch
from .dynamics import random_profile, run_best_response_dynamics
from .equilibrium import (
    SearchConfig,
    construct_equilibrium,
    deviation_gains,
    trivial_equilibrium_report,
)
from .errors import PoolError
from .fileio import (
    dumps_doc,
    format_sig,
    load_messages,
    load_scenario,
    read_json,
    scenario_to_dict,
)
from .mechanism import consumer_utility, outcome, producer_utilities
from . import report as rpt


@dataclass(frozen=True)
class RunConfig:
    """Tolerances, search densities, and run controls for one CLI invocation."""

    solver_tol: float = 1e-9
    audit_tol: float = 1e-6
    epsilon_threshold: float = 1e-4
    grid: int = 4001
    refine_iters: int = 60
    schedule: str = "sequential"
    max_iter: int = 100
    conv_tol: float = 1e-8
    relax_min_producers: bool = False
    strict_audit: bool = False
    output_format: str = "json"
    oracle_step: float = 0.01

    def __post_init__(self) -> None:
        for name in ("solver_tol", "audit_tol", "epsilon_threshold", "conv_tol", "oracle_step"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.grid < 3:
            raise ValueError("grid must be at least 3")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.schedule not in ("sequential", "simultaneous"):
            raise ValueError("schedule must be sequential or simultaneous")
        if self.output_format not in ("json", "table"):
            raise ValueError("format must be json or table")

    @property
    def search(self) -> SearchConfig:
        return SearchConfig(grid=self.grid, refine_iters=self.refine_iters)

    def as_dict(self) -> dict:
        return {
            "solver_tol": self.solver_tol,
            "audit_tol": self.audit_tol,
            "epsilon_threshold": self.epsilon_threshold,
            "grid": self.grid,
            "refine_iters": self.refine_iters,
            "schedule": self.schedule,
            "max_iter": self.max_iter,
            "conv_tol": self.conv_tol,
            "relax_min_producers": self.relax_min_producers,
            "strict_audit": self.strict_audit,
            "format": self.output_format,
            "oracle_step": self.oracle_step,
        }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elecpool",
        description="Electricity pooling market laboratory (inelastic demand).",
    )
    parser.add_argument("--version", action="version", version=f"elecpool {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", type=Path, help="scenario JSON file")
        p.add_argument("--tol", type=float, default=1e-9, help="solver tolerance on the demand gap")
        p.add_argument("--grid", type=int, default=4001, help="best-response grid density")
        p.add_argument("--relax-n", action="store_true", help="allow fewer than four producers")
        p.add_argument("--format", choices=("json", "table"), default="json", help="stdout rendering")
        p.add_argument("--out", type=Path, default=None, help="write outputs here instead of stdout")

    p_solve = sub.add_parser("solve", help="centralized dispatch with KKT certificate")
    common(p_solve)

    p_outcome = sub.add_parser("outcome", help="allocation and ledger for a message file")
    common(p_outcome)
    p_outcome.add_argument("messages", type=Path, help="message-profile JSON file")

    p_eq = sub.add_parser("equilibrium", help="construct and audit both equilibria")
    common(p_eq)
    p_eq.add_argument("--strict-audit", action="store_true", help="exit 1 unless the non-trivial equilibrium is fully green")

    p_verify = sub.add_parser("verify", help="epsilon certificate for a message profile")
    common(p_verify)
    p_verify.add_argument("messages", type=Path, help="message-profile JSON file")
    p_verify.add_argument("--strict-audit", action="store_true", help="exit 1 when epsilon exceeds the certification threshold")

    p_dyn = sub.add_parser("dynamics", help="best-response iteration experiment")
    common(p_dyn)
    p_dyn.add_argument("--init", type=Path, default=None, help="initial message file (default: random)")
    p_dyn.add_argument("--seed", type=int, default=0, help="seed for the random initial profile")
    p_dyn.add_argument("--schedule", choices=("seq", "sim"), default="seq")
    p_dyn.add_argument("--max-iter", type=int, default=100)
    p_dyn.add_argument("--conv-tol", type=float, default=1e-8)
    p_dyn.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p_rep = sub.add_parser("report", help="consolidated report with figures and CSV")
    common(p_rep)
    p_rep.add_argument("--benchmark", type=Path, default=None, help="reference dispatch JSON to compare against")
    p_rep.add_argument("--oracle-step", type=float, default=None, help="run the enumeration oracle at this grid step")
    p_rep.add_argument("--strict-audit", action="store_true", help="exit 1 unless the non-trivial equilibrium is fully green")
    p_rep.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    return parser


def _config_from(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        solver_tol=args.tol,
        grid=args.grid,
        schedule={"seq": "sequential", "sim": "simultaneous"}.get(
            getattr(args, "schedule", "seq"), "sequential"
        ),
        max_iter=getattr(args, "max_iter", 100),
        conv_tol=getattr(args, "conv_tol", 1e-8),
        relax_min_producers=bool(getattr(args, "relax_n", False)),
        strict_audit=bool(getattr(args, "strict_audit", False)),
        output_format=args.format,
        oracle_step=getattr(args, "oracle_step", None) or 0.01,
    )


def _emit(args: argparse.Namespace, doc: dict, table: str) -> None:
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(dumps_doc(doc))
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(dumps_doc(doc) if args.format == "json" else table)


def _scenario_input(args: argparse.Namespace, cfg: RunConfig):
    relax = True if cfg.relax_min_producers else None
    return load_scenario(args.scenario, relax_override=relax)


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    scenario = _scenario_input(args, cfg)
    result = solve_dispatch(scenario, tol=cfg.solver_tol)
    doc = {
        "schema": "elecpool.solve.v1",
        "scenario": scenario_to_dict(scenario),
        "dispatch": rpt.dispatch_block(result),
        "provenance": rpt.provenance(cfg.as_dict(), {"scenario": args.scenario}),
    }
    _emit(args, doc, rpt.render_dispatch_table(scenario, doc["dispatch"]))
    return 0


def cmd_outcome(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    scenario = _scenario_input(args, cfg)
    profile = load_messages(args.messages)
    alloc = outcome(profile, scenario)
    utilities = producer_utilities(profile, scenario, alloc)
    doc = {
        "schema": "elecpool.outcome.v1",
        "scenario": scenario_to_dict(scenario),
        "messages": [{"e_hat": m.quantity, "p": m.price} for m in profile.messages],
        "allocation": rpt.allocation_block(alloc),
        "utilities": list(utilities),
        "consumer_utility": consumer_utility(alloc, scenario),
        "welfare": rpt.welfare_block(profile, scenario),
        "provenance": rpt.provenance(
            cfg.as_dict(), {"scenario": args.scenario, "messages": args.messages}
        ),
    }
    _emit(args, doc, rpt.render_allocation_table(doc["allocation"], utilities))
    return 0


def _both_equilibria(scenario, cfg: RunConfig):
    trivial = trivial_equilibrium_report(
        scenario,
        solver_tol=cfg.solver_tol,
        search=cfg.search,
        audit_tol=cfg.audit_tol,
        epsilon_threshold=cfg.epsilon_threshold,
    )
    nontrivial = None
    if scenario.demand > 0.0:
        nontrivial = construct_equilibrium(
            scenario,
            solver_tol=cfg.solver_tol,
            search=cfg.search,
            audit_tol=cfg.audit_tol,
            epsilon_threshold=cfg.epsilon_threshold,
        )
    return trivial, nontrivial


def _equilibria_doc(scenario, trivial, nontrivial) -> dict:
    return {
        "trivial": rpt.equilibrium_block(trivial, scenario),
        "nontrivial": rpt.equilibrium_block(nontrivial, scenario) if nontrivial else None,
    }


def _strict_gate(cfg: RunConfig, nontrivial) -> int:
    if not cfg.strict_audit:
        return 0
    if nontrivial is None:
        return 0
    if nontrivial.certified and nontrivial.features.all_passed:
        return 0
    return 1


def cmd_equilibrium(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    scenario = _scenario_input(args, cfg)
    trivial, nontrivial = _both_equilibria(scenario, cfg)
    doc = {
        "schema": "elecpool.equilibrium.v1",
        "scenario": scenario_to_dict(scenario),
        "equilibria": _equilibria_doc(scenario, trivial, nontrivial),
        "provenance": rpt.provenance(cfg.as_dict(), {"scenario": args.scenario}),
    }
    tables = [rpt.render_equilibrium_table(doc["equilibria"]["trivial"])]
    if doc["equilibria"]["nontrivial"] is not None:
        tables.append(rpt.render_equilibrium_table(doc["equilibria"]["nontrivial"]))
    _emit(args, doc, "\n".join(tables))
    return _strict_gate(cfg, nontrivial)


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    scenario = _scenario_input(args, cfg)
    profile = load_messages(args.messages)
    gains = deviation_gains(profile, scenario, cfg.search)
    epsilon = max(gains) if gains else 0.0
    doc = {
        "schema": "elecpool.verify.v1",
        "scenario": scenario_to_dict(scenario),
        "epsilon": epsilon,
        "certified": epsilon <= cfg.epsilon_threshold,
        "deviation_gains": list(gains),
        "provenance": rpt.provenance(
            cfg.as_dict(), {"scenario": args.scenario, "messages": args.messages}
        ),
    }
    table = (
        f"epsilon: {format_sig(epsilon)}\n"
        f"certified (threshold {cfg.epsilon_threshold:g}): {doc['certified']}\n"
    )
    _emit(args, doc, table)
    if cfg.strict_audit and not doc["certified"]:
        return 1
    return 0


def cmd_dynamics(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    scenario = _scenario_input(args, cfg)
    if args.init is not None:
        init = load_messages(args.init)
        inputs = {"scenario": args.scenario, "init": args.init}
    else:
        init = random_profile(scenario, random.Random(args.seed))
        inputs = {"scenario": args.scenario}
    trajectory = run_best_response_dynamics(
        scenario,
        init,
        schedule=cfg.schedule,
        max_iter=cfg.max_iter,
        conv_tol=cfg.conv_tol,
        search=cfg.search,
    )
    doc = {
        "schema": "elecpool.dynamics.v1",
        "scenario": scenario_to_dict(scenario),
        "verdict": trajectory.verdict,
        "sweeps": len(trajectory.steps) - 1,
        "endpoint_epsilon": trajectory.endpoint_epsilon,
        "final_distance_to_trivial": trajectory.distance_to_trivial[-1],
        "final_distance_to_nontrivial": (
            trajectory.distance_to_nontrivial[-1]
            if trajectory.distance_to_nontrivial is not None
            else None
        ),
        "provenance": rpt.provenance(cfg.as_dict(), inputs),
    }
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        rpt.write_trajectory_csv(args.out / "trajectory.csv", trajectory)
        (args.out / "dynamics.json").write_text(dumps_doc(doc))
        if not args.no_figures:
            rpt.save_dynamics_figure(args.out / "dynamics.png", trajectory)
        print(f"wrote {args.out}/dynamics.json, trajectory.csv"
              + ("" if args.no_figures else ", dynamics.png"))
    else:
        table = (
            f"verdict: {trajectory.verdict} after {doc['sweeps']} sweeps\n"
            f"endpoint epsilon: {format_sig(trajectory.endpoint_epsilon)}\n"
        )
        _emit(args, doc, table)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    scenario = _scenario_input(args, cfg)
    dispatch = solve_dispatch(scenario, tol=cfg.solver_tol)
    inputs = {"scenario": args.scenario}

    oracle_profile = None
    if args.oracle_step is not None or args.benchmark is not None:
        oracle_profile = brute_force_dispatch(scenario, cfg.oracle_step)

    benchmark = None
    if args.benchmark is not None:
        reference = read_json(args.benchmark)
        inputs["benchmark"] = args.benchmark
        benchmark = rpt.benchmark_block(scenario, dispatch, reference, oracle_profile)

    trivial, nontrivial = _both_equilibria(scenario, cfg)
    doc = {
        "schema": "elecpool.report.v1",
        "scenario": scenario_to_dict(scenario),
        "dispatch": rpt.dispatch_block(dispatch),
        "oracle": (
            {
                "step": cfg.oracle_step,
                "production": list(oracle_profile.quantities),
                "total_cost": rpt.production_cost(scenario, oracle_profile),
            }
            if oracle_profile is not None
            else None
        ),
        "equilibria": _equilibria_doc(scenario, trivial, nontrivial),
        "benchmark": benchmark,
        "provenance": rpt.provenance(cfg.as_dict(), inputs),
    }

    tables = [rpt.render_dispatch_table(scenario, doc["dispatch"]), ""]
    tables.append(rpt.render_equilibrium_table(doc["equilibria"]["trivial"]))
    if doc["equilibria"]["nontrivial"] is not None:
        tables.append(rpt.render_equilibrium_table(doc["equilibria"]["nontrivial"]))
    table_text = "\n".join(tables)

    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(dumps_doc(doc))
        source = nontrivial if nontrivial is not None else trivial
        rpt.write_allocation_csv(
            args.out / "allocation.csv", scenario, source.allocation, source.utilities
        )
        written = ["report.json", "allocation.csv"]
        if not args.no_figures:
            rpt.save_clearing_figure(args.out / "clearing.png", scenario, dispatch)
            rpt.save_allocation_figure(args.out / "allocation.png", scenario, source.allocation)
            written += ["clearing.png", "allocation.png"]
        print(f"wrote {', '.join(str(args.out / w) for w in written)}")
    else:
        _emit(args, doc, table_text)
    return _strict_gate(cfg, nontrivial)


_HANDLERS = {
    "solve": cmd_solve,
    "outcome": cmd_outcome,
    "equilibrium": cmd_equilibrium,
    "verify": cmd_verify,
    "dynamics": cmd_dynamics,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except PoolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
