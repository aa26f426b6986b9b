"""Report assembly: machine-readable documents, delimited tables, figures.

The JSON documents are the source of truth; the text tables and the PNG
figures are renderings of the same content and never feed back into any
computation.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .dispatch import (
    DispatchResult,
    aggregate_supply,
    price_ceiling,
    production_cost,
)
from .dynamics import Trajectory
from .equilibrium import EquilibriumReport
from .errors import FileFormatError
from .fileio import file_digest, format_sig, messages_to_dict
from .mechanism import (
    Allocation,
    MessageProfile,
    budget_ledger,
    consumer_utility,
    social_welfare,
)
from .scenario import ProductionProfile, Scenario

MATCH_TOL = 1e-6


def provenance(config: dict, inputs: dict[str, Path | str]) -> dict:
    return {
        "package": f"elecpool {__version__}",
        "config": dict(config),
        "inputs": {
            name: {"path": str(path), "sha256": file_digest(path)}
            for name, path in inputs.items()
        },
    }


def dispatch_block(dispatch: DispatchResult) -> dict:
    cert = dispatch.certificate
    return {
        "production": list(dispatch.profile.quantities),
        "clearing_price": cert.price,
        "total_cost": dispatch.total_cost,
        "certificate": {
            "price": cert.price,
            "capacity_rents": list(cert.capacity_rents),
            "idle_margins": list(cert.idle_margins),
            "stationarity_residual": cert.stationarity_residual,
            "complementarity_residual": cert.complementarity_residual,
            "feasibility_residual": cert.feasibility_residual,
        },
        "residuals": dispatch.residuals.as_dict(),
    }


def allocation_block(alloc: Allocation) -> dict:
    ledger = budget_ledger(alloc)
    return {
        "e": list(alloc.e),
        "t": list(alloc.t),
        "receipts": list(alloc.payments),
        "penalties": list(alloc.penalties),
        "consumer_payment": alloc.consumer_payment,
        "imbalance": alloc.imbalance,
        "ledger_net": ledger.net,
    }


def equilibrium_block(report: EquilibriumReport, scenario: Scenario) -> dict:
    return {
        "kind": report.kind,
        "messages": messages_to_dict(report.profile)["messages"],
        "price": report.price,
        "epsilon": report.epsilon,
        "certified": report.certified,
        "deviation_gains": list(report.gains),
        "allocation": allocation_block(report.allocation),
        "utilities": list(report.utilities),
        "consumer_utility": consumer_utility(report.allocation, scenario),
        "identity_residuals": report.identities.as_dict(),
        "features": report.features.as_dict(),
    }


def benchmark_block(
    scenario: Scenario,
    dispatch: DispatchResult,
    reference: dict,
    oracle_profile: ProductionProfile | None = None,
) -> dict:
    """Compare solver (and optional enumeration oracle) against a reference
    dispatch, recording explicitly whether each one matches or beats it."""
    try:
        ref_production = [float(q) for q in reference["production"]]
        if reference.get("price") is not None:
            float(reference["price"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad reference dispatch document: {exc}") from exc
    if len(ref_production) != scenario.n:
        raise FileFormatError(
            f"reference dispatch has {len(ref_production)} entries "
            f"for {scenario.n} producers"
        )
    ref_cost = production_cost(scenario, ref_production)
    ref_price = reference.get("price")
    solver_production = dispatch.profile.quantities
    solver_gap = max(
        abs(a - b) for a, b in zip(solver_production, ref_production, strict=True)
    )
    block = {
        "reference_production": ref_production,
        "reference_cost": ref_cost,
        "reference_price": ref_price,
        "solver_production": list(solver_production),
        "solver_cost": dispatch.total_cost,
        "solver_max_deviation_from_reference": solver_gap,
        "solver_matches_reference": solver_gap <= MATCH_TOL,
        "solver_improves_on_reference": dispatch.total_cost < ref_cost - MATCH_TOL,
        "clearing_price": dispatch.certificate.price,
    }
    if ref_price is not None:
        block["clearing_price_gap_to_reference"] = dispatch.certificate.price - float(ref_price)
    if oracle_profile is not None:
        oracle_cost = production_cost(scenario, oracle_profile)
        oracle_gap = max(
            abs(a - b)
            for a, b in zip(oracle_profile.quantities, ref_production, strict=True)
        )
        block.update(
            {
                "oracle_production": list(oracle_profile.quantities),
                "oracle_cost": oracle_cost,
                "oracle_max_deviation_from_reference": oracle_gap,
                "oracle_matches_reference": oracle_gap <= MATCH_TOL,
                "oracle_improves_on_reference": oracle_cost < ref_cost - MATCH_TOL,
            }
        )
    return block


def welfare_block(profile: MessageProfile, scenario: Scenario) -> dict:
    w1, w2 = social_welfare(profile, scenario)
    return {"gross": w1, "net_of_service_constant": w2}


# ---------------------------------------------------------------------------
# delimited output


def write_allocation_csv(path, scenario: Scenario, alloc: Allocation, utilities) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["producer", "quantity", "receipt", "penalty", "transfer", "utility", "marginal_cost"]
        )
        for i, producer in enumerate(scenario.producers):
            writer.writerow(
                [
                    producer.id,
                    format_sig(alloc.e[i]),
                    format_sig(alloc.payments[i]),
                    format_sig(alloc.penalties[i]),
                    format_sig(alloc.t[i]),
                    format_sig(utilities[i]),
                    format_sig(producer.cost.marginal(alloc.e[i])),
                ]
            )
        writer.writerow(
            ["consumer", "", "", "", format_sig(-alloc.consumer_payment), "", ""]
        )


def write_trajectory_csv(path, trajectory: Trajectory) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["step", "producer", "e_hat", "p", "distance-to-trivial", "distance-to-nontrivial"]
        )
        for step, profile in enumerate(trajectory.steps):
            d_triv = format_sig(trajectory.distance_to_trivial[step])
            d_non = (
                format_sig(trajectory.distance_to_nontrivial[step])
                if trajectory.distance_to_nontrivial is not None
                else ""
            )
            for producer, message in enumerate(profile.messages, start=1):
                writer.writerow(
                    [
                        step,
                        producer,
                        format_sig(message.quantity),
                        format_sig(message.price),
                        d_triv,
                        d_non,
                    ]
                )


# ---------------------------------------------------------------------------
# figures


def save_clearing_figure(path, scenario: Scenario, dispatch: DispatchResult) -> None:
    """Aggregate supply curve with the demand line and the certified clearing point."""
    top = max(price_ceiling(scenario), dispatch.certificate.price) * 1.05
    prices = np.linspace(0.0, top, 300)
    supply = [aggregate_supply(scenario, float(p)) for p in prices]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(supply, prices, color="tab:blue", label="aggregate supply")
    ax.axvline(scenario.demand, color="tab:red", linestyle="--", label="demand")
    ax.axhline(
        dispatch.certificate.price, color="tab:green", linestyle=":", label="clearing price"
    )
    ax.plot([scenario.demand], [dispatch.certificate.price], "ko", markersize=5)
    ax.set_xlabel("quantity (MWh)")
    ax.set_ylabel("price ($/MWh)")
    ax.set_title("Market clearing")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_allocation_figure(path, scenario: Scenario, alloc: Allocation) -> None:
    """Production against capacity, and the transfer decomposition."""
    n = scenario.n
    idx = np.arange(1, n + 1)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    ax1.bar(idx, scenario.capacities, color="0.85", label="capacity")
    ax1.bar(idx, alloc.e, color="tab:blue", width=0.5, label="scheduled")
    ax1.set_ylabel("MWh")
    ax1.set_title("Scheduled production")
    ax1.legend(loc="best", fontsize=8)
    ax2.bar(idx, alloc.payments, color="tab:green", width=0.5, label="receipt")
    ax2.bar(idx, alloc.penalties, color="tab:red", width=0.5, label="penalty")
    ax2.axhline(0.0, color="black", linewidth=0.8)
    ax2.set_ylabel("$")
    ax2.set_xlabel("producer")
    ax2.set_xticks(idx)
    ax2.set_title("Transfer decomposition")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_dynamics_figure(path, trajectory: Trajectory) -> None:
    """Distance to the known equilibria and the quantity paths."""
    steps = np.arange(len(trajectory.steps))
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    floor = 1e-16
    ax1.semilogy(
        steps,
        np.maximum(trajectory.distance_to_trivial, floor),
        label="to trivial equilibrium",
    )
    if trajectory.distance_to_nontrivial is not None:
        ax1.semilogy(
            steps,
            np.maximum(trajectory.distance_to_nontrivial, floor),
            label="to non-trivial equilibrium",
        )
    ax1.set_ylabel("max-coordinate distance")
    ax1.set_title(f"Best-response dynamics ({trajectory.schedule}): {trajectory.verdict}")
    ax1.legend(loc="best", fontsize=8)
    n = len(trajectory.steps[0].messages)
    for i in range(n):
        ax2.plot(steps, [prof.messages[i].quantity for prof in trajectory.steps], label=f"producer {i + 1}")
    ax2.set_xlabel("sweep")
    ax2.set_ylabel("proposed production (MWh)")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# text tables


def _row(cells, widths) -> str:
    return "  ".join(str(c).rjust(w) for c, w in zip(cells, widths))


def table_lines(headers: list[str], rows: list[list[str]]) -> list[str]:
    widths = [
        max(len(str(h)), *(len(str(r[j])) for r in rows)) if rows else len(str(h))
        for j, h in enumerate(headers)
    ]
    lines = [_row(headers, widths), _row(["-" * w for w in widths], widths)]
    lines.extend(_row(r, widths) for r in rows)
    return lines


def render_dispatch_table(scenario: Scenario, block: dict) -> str:
    headers = ["producer", "production", "capacity", "rent", "idle_margin"]
    cert = block["certificate"]
    rows = [
        [
            str(i + 1),
            format_sig(block["production"][i]),
            format_sig(scenario.capacities[i]),
            format_sig(cert["capacity_rents"][i]),
            format_sig(cert["idle_margins"][i]),
        ]
        for i in range(scenario.n)
    ]
    lines = table_lines(headers, rows)
    lines.append("")
    lines.append(f"clearing price: {format_sig(block['clearing_price'])} $/MWh")
    lines.append(f"total cost:     {format_sig(block['total_cost'])} $")
    lines.append(
        "residuals:      "
        + ", ".join(f"{k}={format_sig(v)}" for k, v in block["residuals"].items())
    )
    return "\n".join(lines) + "\n"


def render_allocation_table(block: dict, utilities=None) -> str:
    headers = ["producer", "e", "receipt", "penalty", "transfer"]
    if utilities is not None:
        headers.append("utility")
    rows = []
    for i in range(len(block["e"])):
        row = [
            str(i + 1),
            format_sig(block["e"][i]),
            format_sig(block["receipts"][i]),
            format_sig(block["penalties"][i]),
            format_sig(block["t"][i]),
        ]
        if utilities is not None:
            row.append(format_sig(utilities[i]))
        rows.append(row)
    lines = table_lines(headers, rows)
    lines.append("")
    lines.append(f"consumer payment: {format_sig(block['consumer_payment'])} $")
    lines.append(f"imbalance:        {format_sig(block['imbalance'])} MWh")
    lines.append(f"ledger net:       {format_sig(block['ledger_net'])} $")
    return "\n".join(lines) + "\n"


def render_equilibrium_table(block: dict) -> str:
    lines = [f"[{block['kind']} equilibrium]"]
    lines.append(
        f"price {format_sig(block['price'])}  epsilon {format_sig(block['epsilon'])}"
        f"  certified {block['certified']}"
    )
    lines.append(
        "identities: "
        + ", ".join(
            f"{k}={format_sig(v)}"
            for k, v in block["identity_residuals"].items()
            if k != "reference_price"
        )
    )
    feature_bits = []
    for name, check in block["features"].items():
        feature_bits.append(f"{name}={'pass' if check['passed'] else 'FAIL'}")
    lines.append("features:   " + ", ".join(feature_bits))
    lines.append(render_allocation_table(block["allocation"], block.get("utilities")))
    return "\n".join(lines)
