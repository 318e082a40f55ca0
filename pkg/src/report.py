"""
Report module
Builds and renders run reports (JSON or text) and (de)serialises models
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .oracle import IntervalSet, Model

VERDICTS = ("sat", "unsat", "unknown", "yes", "no")
MODEL_VERDICTS = ("sat", "no")
DEFAULT_MAX_LISTED = 4096


@dataclass
class RunReport:
    """Outcome of one CLI command"""
    verdict: str
    model: Optional[Model] = None
    strategy: str = "explicit"
    branches: int = 0
    ilp_nodes: int = 0
    ms: int = 0
    reason: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict '{self.verdict}'")
        if (self.model is not None) != (self.verdict in MODEL_VERDICTS):
            raise ValueError(f"verdict '{self.verdict}' and model presence disagree")

    def to_dict(self, max_listed: int = DEFAULT_MAX_LISTED) -> Dict[str, Any]:
        data: Dict[str, Any] = {"verdict": self.verdict}
        if self.model is not None:
            data["model"] = model_to_json(self.model, max_listed)
        data["stats"] = {"branches": self.branches, "ilp_nodes": self.ilp_nodes, "ms": self.ms}
        data["strategy"] = self.strategy
        if self.reason is not None:
            data["reason"] = self.reason
        data.update(self.extra)
        return data

    def to_json(self, max_listed: int = DEFAULT_MAX_LISTED) -> str:
        return json.dumps(self.to_dict(max_listed), sort_keys=False)

    def to_text(self, show_model: bool = False, max_listed: int = DEFAULT_MAX_LISTED) -> str:
        """Verdict token on the first line, details after"""
        lines = [self.verdict]
        if self.reason is not None:
            lines.append(f"reason: {self.reason}")
        for key, value in self.extra.items():
            lines.extend(_text_extra(key, value))
        if show_model and self.model is not None:
            lines.extend(model_to_text(self.model, max_listed))
        return "\n".join(lines)


def _text_extra(key: str, value: Any) -> List[str]:
    if isinstance(value, dict):
        return [f"{key}:"] + [f"  {k}: {_text_value(v)}" for k, v in value.items()]
    return [f"{key}: {_text_value(value)}"]


def _text_value(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(str(v) for v in value) + "]"
    return str(value)


# ---------------------------------------------------------------------------
# Models

def model_to_json(model: Model, max_listed: int = DEFAULT_MAX_LISTED) -> Dict[str, Any]:
    """JSON shape of a model; integers as decimal strings

    Universes larger than max_listed are given as half-open ranges under
    "set_ranges" with an empty "sets" map.
    """
    data: Dict[str, Any] = {"universe": model.universe_size}
    if model.universe_size <= max_listed:
        data["sets"] = {name: list(s) for name, s in model.sets.items()}
    else:
        data["sets"] = {}
        data["set_ranges"] = {name: [[str(a), str(b)] for a, b in s.ranges]
                              for name, s in model.sets.items()}
    data["ints"] = {name: str(value) for name, value in model.ints.items()}
    return data


def model_from_json(data: Dict[str, Any]) -> Model:
    """Inverse of model_to_json; also accepts a whole report carrying a model

    Raises:
        ValueError: On a malformed model object
    """
    if "model" in data and "universe" not in data:
        data = data["model"]
    try:
        universe = int(data["universe"])
        sets = {name: IntervalSet.of(int(e) for e in elements)
                for name, elements in data.get("sets", {}).items()}
        for name, ranges in data.get("set_ranges", {}).items():
            sets[name] = IntervalSet((int(a), int(b)) for a, b in ranges)
        ints = {name: int(value) for name, value in data.get("ints", {}).items()}
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed model: {e}")
    for name, s in sets.items():
        if s.ranges and (s.ranges[0][0] < 0 or s.ranges[-1][1] > universe):
            raise ValueError(f"set '{name}' has elements outside the universe")
    return Model(universe, sets, ints)


def _format_set(s: IntervalSet, listed: bool) -> str:
    if listed:
        return "{" + ", ".join(str(e) for e in s) + "}"
    return " ".join(f"[{a}, {b})" for a, b in s.ranges) or "{}"


def model_to_text(model: Model, max_listed: int = DEFAULT_MAX_LISTED) -> List[str]:
    listed = model.universe_size <= max_listed
    lines = [f"universe: {model.universe_size}"]
    lines += [f"{name} = {_format_set(s, listed)}" for name, s in model.sets.items()]
    lines += [f"{name} = {value}" for name, value in model.ints.items()]
    return lines
