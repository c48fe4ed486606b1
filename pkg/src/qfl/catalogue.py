"""QR pattern catalogue: load, classify, and instantiate requirement patterns.

Pattern text uses %name% placeholders; a literal percent sign is written %%.
Each placeholder must be declared exactly once as a parameter, and each
parameter constrains its values either by an interval or by an enumeration.
Patterns are linked to quality metrics, which is how alerts find their
candidate requirements. The catalogue is immutable after load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Mapping, Sequence

from .errors import (
    DanglingMetricLink,
    MissingParam,
    ParamOutOfRange,
    SchemaError,
)
from .model import QualityModel

if TYPE_CHECKING:  # candidates_for_alert only reads alert.element_id
    from .alerting import Alert


@dataclass(frozen=True)
class ParamSpec:
    name: str
    description: str = ""
    min_value: float | None = None
    max_value: float | None = None
    min_inclusive: bool = True
    max_inclusive: bool = True
    allowed_values: tuple[Any, ...] = ()

    def __post_init__(self) -> None:
        if self.allowed_values:
            return
        if self.min_value is None and self.max_value is None:
            raise SchemaError(
                f"parameter {self.name!r} needs an interval or an enumeration"
            )
        if (
            self.min_value is not None
            and self.max_value is not None
            and (
                self.min_value > self.max_value
                or (
                    self.min_value == self.max_value
                    and not (self.min_inclusive and self.max_inclusive)
                )
            )
        ):
            raise SchemaError(f"parameter {self.name!r} has an empty interval")

    @property
    def correctness(self) -> str:
        """Human-readable constraint, quoted in rejection messages."""
        if self.allowed_values:
            rendered = ", ".join(_render_value(v) for v in self.allowed_values)
            return f"{self.name} in {{{rendered}}}"
        parts = []
        if self.min_value is not None:
            parts.append(f"{_render_value(self.min_value)} {'<=' if self.min_inclusive else '<'}")
        parts.append(self.name)
        if self.max_value is not None:
            parts.append(f"{'<=' if self.max_inclusive else '<'} {_render_value(self.max_value)}")
        return " ".join(parts)

    def check(self, value: Any) -> None:
        if self.allowed_values:
            if value not in self.allowed_values:
                raise ParamOutOfRange(
                    f"value {value!r} for {self.name!r} violates {self.correctness}"
                )
            return
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParamOutOfRange(
                f"value {value!r} for {self.name!r} must be numeric ({self.correctness})"
            )
        number = float(value)
        if self.min_value is not None:
            if number < self.min_value or (number == self.min_value and not self.min_inclusive):
                raise ParamOutOfRange(f"value {_render_value(value)} violates {self.correctness}")
        if self.max_value is not None:
            if number > self.max_value or (number == self.max_value and not self.max_inclusive):
                raise ParamOutOfRange(f"value {_render_value(value)} violates {self.correctness}")

    def to_jsonable(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"name": self.name, "description": self.description}
        if self.allowed_values:
            doc["values"] = list(self.allowed_values)
        else:
            if self.min_value is not None:
                doc["min"] = self.min_value
                if not self.min_inclusive:
                    doc["min_exclusive"] = True
            if self.max_value is not None:
                doc["max"] = self.max_value
                if not self.max_inclusive:
                    doc["max_exclusive"] = True
        return doc


@dataclass(frozen=True)
class QRPattern:
    name: str
    description: str
    goal: str
    pattern_text: str
    parameters: tuple[ParamSpec, ...]
    linked_metric_ids: tuple[str, ...]
    categories: tuple[str, ...]

    def __post_init__(self) -> None:
        declared = {p.name for p in self.parameters}
        if len(declared) != len(self.parameters):
            raise SchemaError(f"pattern {self.name!r} declares a parameter twice")
        used = set(extract_placeholders(self.pattern_text))
        if used != declared:
            missing = sorted(used - declared)
            unused = sorted(declared - used)
            problems = []
            if missing:
                problems.append(f"placeholders without a parameter: {', '.join(missing)}")
            if unused:
                problems.append(f"parameters never used: {', '.join(unused)}")
            raise SchemaError(f"pattern {self.name!r}: " + "; ".join(problems))
        if not self.linked_metric_ids:
            raise SchemaError(f"pattern {self.name!r} links no metrics")

    def param(self, name: str) -> ParamSpec:
        for spec in self.parameters:
            if spec.name == name:
                return spec
        raise MissingParam(f"pattern {self.name!r} has no parameter {name!r}")

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "goal": self.goal,
            "pattern_text": self.pattern_text,
            "parameters": [p.to_jsonable() for p in self.parameters],
            "linked_metric_ids": list(self.linked_metric_ids),
            "categories": list(self.categories),
        }


@dataclass(frozen=True)
class Catalogue:
    patterns: tuple[QRPattern, ...]

    def __post_init__(self) -> None:
        names = [p.name for p in self.patterns]
        if len(set(names)) != len(names):
            raise SchemaError("catalogue contains duplicate pattern names")

    @property
    def pattern_count(self) -> int:
        return len(self.patterns)

    @property
    def category_count(self) -> int:
        """Total category assignments (a two-category pattern counts twice)."""
        return sum(len(p.categories) for p in self.patterns)

    def category_names(self) -> list[str]:
        return sorted({c for p in self.patterns for c in p.categories})

    def pattern(self, name: str) -> QRPattern:
        for candidate in self.patterns:
            if candidate.name == name:
                return candidate
        raise SchemaError(f"no pattern named {name!r} in the catalogue")

    def to_jsonable(self) -> list[dict[str, Any]]:
        return [p.to_jsonable() for p in self.patterns]


def extract_placeholders(pattern_text: str) -> list[str]:
    """Placeholder names in order of appearance; %% is a literal percent."""
    names: list[str] = []
    i = 0
    length = len(pattern_text)
    while i < length:
        ch = pattern_text[i]
        if ch != "%":
            i += 1
            continue
        if i + 1 < length and pattern_text[i + 1] == "%":
            i += 2
            continue
        end = pattern_text.find("%", i + 1)
        if end == -1:
            raise SchemaError(f"unterminated placeholder in {pattern_text!r}")
        name = pattern_text[i + 1 : end]
        if not name:
            raise SchemaError(f"empty placeholder in {pattern_text!r}")
        names.append(name)
        i = end + 1
    return names


def _render_value(value: Any) -> str:
    """Numbers render without noise: ints bare, reals trimmed to 2 decimals."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value == int(value):
            return str(int(value))
        text = f"{value:.2f}".rstrip("0").rstrip(".")
        return text
    return str(value)


def instantiate(pattern: QRPattern, params: Mapping[str, Any]) -> str:
    """Fill a pattern's placeholders with validated parameter values."""
    for spec in pattern.parameters:
        if spec.name not in params:
            raise MissingParam(
                f"pattern {pattern.name!r} needs parameter {spec.name!r}"
            )
        spec.check(params[spec.name])

    out: list[str] = []
    text = pattern.pattern_text
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "%":
            out.append(ch)
            i += 1
            continue
        if i + 1 < len(text) and text[i + 1] == "%":
            out.append("%")
            i += 2
            continue
        end = text.find("%", i + 1)
        name = text[i + 1 : end]
        out.append(_render_value(params[name]))
        i = end + 1
    return "".join(out)


def candidates_for_alert(alert: "Alert", catalogue: Catalogue,
                         model: QualityModel) -> list[QRPattern]:
    """Patterns applicable to an alert's element.

    A pattern qualifies when it links any metric at or below the alerted
    element. Ordering: more matching metric links first, then pattern name,
    so the result is stable however the catalogue file is ordered.
    """
    alerted_metrics = model.descendant_metric_ids(alert.element_id)
    scored: list[tuple[int, str, QRPattern]] = []
    for pattern in catalogue.patterns:
        overlap = alerted_metrics.intersection(pattern.linked_metric_ids)
        if overlap:
            scored.append((-len(overlap), pattern.name, pattern))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [pattern for _, _, pattern in scored]


def load_catalogue(document: str | bytes | Sequence[Any],
                   model: QualityModel | None = None) -> Catalogue:
    """Load the catalogue document (JSON list of pattern objects).

    With a model, every linked metric id is cross-checked against it.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"catalogue document is not valid JSON: {exc}") from exc
    else:
        doc = list(document)
    if not isinstance(doc, list):
        raise SchemaError("catalogue document must be a JSON list of patterns")

    patterns = []
    for index, raw in enumerate(doc):
        if not isinstance(raw, Mapping):
            raise SchemaError(f"patterns[{index}] must be an object")
        for key in ("name", "pattern_text", "linked_metric_ids"):
            if key not in raw:
                raise SchemaError(f"patterns[{index}] missing key {key!r}")
        parameters = tuple(
            _parse_param(p, index, pi) for pi, p in enumerate(raw.get("parameters", []))
        )
        patterns.append(
            QRPattern(
                name=str(raw["name"]),
                description=str(raw.get("description", "")),
                goal=str(raw.get("goal", "")),
                pattern_text=str(raw["pattern_text"]),
                parameters=parameters,
                linked_metric_ids=tuple(str(m) for m in raw["linked_metric_ids"]),
                categories=tuple(str(c) for c in raw.get("categories", [])),
            )
        )
    catalogue = Catalogue(patterns=tuple(patterns))
    if model is not None:
        known = {m.id for m in model.metrics}
        for pattern in catalogue.patterns:
            for metric_id in pattern.linked_metric_ids:
                if metric_id not in known:
                    raise DanglingMetricLink(
                        f"pattern {pattern.name!r} links unknown metric {metric_id!r}"
                    )
    return catalogue


def _parse_param(raw: Any, pattern_index: int, param_index: int) -> ParamSpec:
    if not isinstance(raw, Mapping):
        raise SchemaError(
            f"patterns[{pattern_index}].parameters[{param_index}] must be an object"
        )
    if "name" not in raw:
        raise SchemaError(
            f"patterns[{pattern_index}].parameters[{param_index}] missing key 'name'"
        )
    return ParamSpec(
        name=str(raw["name"]),
        description=str(raw.get("description", "")),
        min_value=None if raw.get("min") is None else float(raw["min"]),
        max_value=None if raw.get("max") is None else float(raw["max"]),
        min_inclusive=not raw.get("min_exclusive", False),
        max_inclusive=not raw.get("max_exclusive", False),
        allowed_values=tuple(raw.get("values", ())),
    )
