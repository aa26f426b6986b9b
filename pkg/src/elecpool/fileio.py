"""JSON file formats, digests, and deterministic number rendering.

Scenario files:

    {"producers": [{"id": 1, "capacity": 2.0, "cost_coefficients": [2.0, 1.0]}, ...],
     "demand": 4.0, "consumer_utility": 100.0, "relax_min_producers": false}

Message-profile files:

    {"messages": [{"e_hat": 1.0, "p": 2.0}, ...]}

Machine-readable report documents print every computed float at 12
significant digits so byte-identical inputs give byte-identical reports; the
embedded scenario echo keeps full precision so a written scenario reloads
field-for-field identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import replace
from pathlib import Path

from .costs import CostFunction, Producer
from .errors import FileFormatError
from .mechanism import Message, MessageProfile
from .scenario import Scenario, require_valid_scenario

SIGNIFICANT_DIGITS = 12


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise FileFormatError("scenario document must be a JSON object")
    try:
        producer_docs = doc["producers"]
        demand = float(doc["demand"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"scenario document is missing or mistypes a field: {exc}") from exc
    if not isinstance(producer_docs, list):
        raise FileFormatError("'producers' must be a list")
    producers = []
    for entry in producer_docs:
        try:
            producers.append(
                Producer(
                    id=int(entry["id"]),
                    capacity=float(entry["capacity"]),
                    cost=CostFunction(tuple(float(c) for c in entry["cost_coefficients"])),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"bad producer entry {entry!r}: {exc}") from exc
    try:
        consumer_utility = float(doc.get("consumer_utility", 0.0))
        relax = bool(doc.get("relax_min_producers", False))
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"bad scalar field: {exc}") from exc
    return Scenario(
        producers=tuple(producers),
        demand=demand,
        consumer_utility=consumer_utility,
        relax_min_producers=relax,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "producers": [
            {
                "id": p.id,
                "capacity": p.capacity,
                "cost_coefficients": list(p.cost.coefficients),
            }
            for p in scenario.producers
        ],
        "demand": scenario.demand,
        "consumer_utility": scenario.consumer_utility,
        "relax_min_producers": scenario.relax_min_producers,
    }


def load_scenario(path, relax_override: bool | None = None) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        FileFormatError: unreadable or wrongly shaped file.
        InvalidScenarioError: shape is fine but a model rule is violated; the
            issues carry the rule tags (A1, A3, A5, A7, A8, schema).
    """
    scenario = scenario_from_dict(read_json(path))
    if relax_override is not None:
        scenario = replace(scenario, relax_min_producers=bool(relax_override))
    require_valid_scenario(scenario)
    return scenario


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=2, allow_nan=False) + "\n"
    )


def messages_from_dict(doc: dict) -> MessageProfile:
    if not isinstance(doc, dict) or "messages" not in doc:
        raise FileFormatError("message document must be an object with a 'messages' list")
    entries = doc["messages"]
    if not isinstance(entries, list):
        raise FileFormatError("'messages' must be a list")
    messages = []
    for entry in entries:
        try:
            messages.append(Message(float(entry["e_hat"]), float(entry["p"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"bad message entry {entry!r}: {exc}") from exc
    return MessageProfile(tuple(messages))


def messages_to_dict(profile: MessageProfile) -> dict:
    return {
        "messages": [{"e_hat": m.quantity, "p": m.price} for m in profile.messages]
    }


def load_messages(path) -> MessageProfile:
    return messages_from_dict(read_json(path))


def save_messages(profile: MessageProfile, path) -> None:
    Path(path).write_text(
        json.dumps(messages_to_dict(profile), indent=2, allow_nan=False) + "\n"
    )


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def round_sig(x: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """Round to a fixed number of significant digits; normalizes -0.0 to 0.0."""
    if x == 0.0:
        return 0.0
    return float(f"{x:.{digits}g}")


def format_sig(x: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Fixed 12-significant-digit text for tables and delimited output."""
    return f"{round_sig(x, digits):.{digits}g}"


def quantize(doc, protect: frozenset = frozenset({"scenario"})):
    """Recursively round floats for rendering, skipping protected subtrees."""
    if isinstance(doc, bool) or doc is None or isinstance(doc, (int, str)):
        return doc
    if isinstance(doc, float):
        return round_sig(doc)
    if isinstance(doc, dict):
        return {
            key: (value if key in protect else quantize(value, protect))
            for key, value in doc.items()
        }
    if isinstance(doc, (list, tuple)):
        return [quantize(item, protect) for item in doc]
    return doc


def dumps_doc(doc: dict) -> str:
    """Deterministic JSON rendering of a report document."""
    return json.dumps(quantize(doc), indent=2, allow_nan=False) + "\n"


def read_json(path):
    p = Path(path)
    try:
        return json.loads(p.read_text())
    except OSError as exc:
        raise FileFormatError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"cannot parse {p}: {exc}") from exc
