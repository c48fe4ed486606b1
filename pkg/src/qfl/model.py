"""Three-layer quality model: metrics aggregate into factors, factors into
strategic indicators.

The model is a strict layered DAG loaded from a JSON document. Evaluation is
bottom-up with weight-normalized arithmetic means, so every value stays inside
[0, 1] and increasing any child never decreases an ancestor. What-if analysis
recomputes the rollup with hypothetical metric or factor values pinned.

All operations here are pure: they never mutate their inputs and are safe for
concurrent callers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import (
    EmptyChildren,
    FieldMissing,
    MissingMetricValue,
    SchemaError,
    UnknownElement,
    ValidationError,
    ValueOutOfRange,
)
from .timeutil import format_rfc3339, utcnow


class Layer(str, Enum):
    METRIC = "metric"
    FACTOR = "factor"
    INDICATOR = "indicator"


class Provenance(str, Enum):
    OBSERVED = "observed"
    WHATIF = "whatif"
    FORECAST = "forecast"


class EvaluatorKind(str, Enum):
    """Supported metric evaluator families.

    All of them turn a list of records into a single value in [0, 1]:

    - ratio_within_range: fraction of records whose field lies in [low, high]
    - ratio_at_most: fraction of records whose field is <= max
    - ratio_at_least: fraction of records whose field is >= min
    - completion_ratio: fraction of records whose status field is in done_values
    - direct: per-record value (optionally a/b field ratio), linear-mapped
      scale*x + offset, clamped to [0, 1], averaged across records
    """

    RATIO_WITHIN_RANGE = "ratio_within_range"
    RATIO_AT_MOST = "ratio_at_most"
    RATIO_AT_LEAST = "ratio_at_least"
    COMPLETION_RATIO = "completion_ratio"
    DIRECT = "direct"


@dataclass(frozen=True)
class EvaluatorSpec:
    kind: EvaluatorKind
    field: str | None = None
    low: float | None = None
    high: float | None = None
    max_value: float | None = None
    min_value: float | None = None
    status_field: str | None = None
    done_values: tuple[str, ...] = ()
    scale: float = 1.0
    offset: float = 0.0
    # Value reported when the snapshot has zero (usable) records. Defaults to
    # 1.0: no files means no violations. Configurable per metric.
    empty_value: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.empty_value <= 1.0:
            raise ValidationError(
                f"empty_value {self.empty_value} outside [0, 1]"
            )
        kind = self.kind
        if kind is EvaluatorKind.RATIO_WITHIN_RANGE:
            self._require_field()
            if self.low is None or self.high is None:
                raise ValidationError("ratio_within_range needs low and high")
            if self.low > self.high:
                raise ValidationError(
                    f"range bounds out of order: low {self.low} > high {self.high}"
                )
        elif kind is EvaluatorKind.RATIO_AT_MOST:
            self._require_field()
            if self.max_value is None:
                raise ValidationError("ratio_at_most needs max")
        elif kind is EvaluatorKind.RATIO_AT_LEAST:
            self._require_field()
            if self.min_value is None:
                raise ValidationError("ratio_at_least needs min")
        elif kind is EvaluatorKind.COMPLETION_RATIO:
            if not self.status_field:
                raise ValidationError("completion_ratio needs status_field")
            if not self.done_values:
                raise ValidationError("completion_ratio needs done_values")
        elif kind is EvaluatorKind.DIRECT:
            self._require_field()

    def _require_field(self) -> None:
        if not self.field:
            raise ValidationError(f"{self.kind.value} evaluator needs a field")

    def to_jsonable(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind.value}
        if self.field is not None:
            doc["field"] = self.field
        if self.kind is EvaluatorKind.RATIO_WITHIN_RANGE:
            doc["low"] = self.low
            doc["high"] = self.high
        elif self.kind is EvaluatorKind.RATIO_AT_MOST:
            doc["max"] = self.max_value
        elif self.kind is EvaluatorKind.RATIO_AT_LEAST:
            doc["min"] = self.min_value
        elif self.kind is EvaluatorKind.COMPLETION_RATIO:
            doc["status_field"] = self.status_field
            doc["done_values"] = list(self.done_values)
        elif self.kind is EvaluatorKind.DIRECT:
            if self.scale != 1.0:
                doc["scale"] = self.scale
            if self.offset != 0.0:
                doc["offset"] = self.offset
        if self.empty_value != 1.0:
            doc["empty_value"] = self.empty_value
        return doc


@dataclass(frozen=True)
class MetricDef:
    id: str
    name: str
    description: str
    data_source_id: str
    evaluator: EvaluatorSpec

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "data_source_id": self.data_source_id,
            "evaluator": self.evaluator.to_jsonable(),
        }


@dataclass(frozen=True)
class ChildRef:
    id: str
    weight: float

    def to_jsonable(self) -> dict[str, Any]:
        return {"id": self.id, "weight": self.weight}


@dataclass(frozen=True)
class FactorDef:
    id: str
    name: str
    children: tuple[ChildRef, ...]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "children": [c.to_jsonable() for c in self.children],
        }


@dataclass(frozen=True)
class IndicatorDef:
    id: str
    name: str
    children: tuple[ChildRef, ...]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "children": [c.to_jsonable() for c in self.children],
        }


@dataclass(frozen=True)
class AssessmentPoint:
    element_id: str
    layer: Layer
    timestamp: datetime
    value: float
    provenance: Provenance

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueOutOfRange(
                f"assessment value {self.value} for {self.element_id!r} outside [0, 1]"
            )

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "element_id": self.element_id,
            "layer": self.layer.value,
            "timestamp": format_rfc3339(self.timestamp),
            "value": self.value,
            "provenance": self.provenance.value,
        }


@dataclass(frozen=True)
class QualityModel:
    model_id: str
    version: str
    metrics: tuple[MetricDef, ...]
    factors: tuple[FactorDef, ...]
    indicators: tuple[IndicatorDef, ...]
    _by_id: dict[str, Any] = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        by_id: dict[str, Any] = {}
        for element in (*self.metrics, *self.factors, *self.indicators):
            if element.id in by_id:
                raise ValidationError(f"duplicate element id {element.id!r}")
            by_id[element.id] = element
        metric_ids = {m.id for m in self.metrics}
        factor_ids = {f.id for f in self.factors}
        for factor in self.factors:
            _check_children(factor, metric_ids, "metric")
        for indicator in self.indicators:
            _check_children(indicator, factor_ids, "factor")
        object.__setattr__(self, "_by_id", by_id)

    def layer_of(self, element_id: str) -> Layer:
        element = self._by_id.get(element_id)
        if element is None:
            raise UnknownElement(f"element {element_id!r} not in model {self.model_id!r}")
        if isinstance(element, MetricDef):
            return Layer.METRIC
        if isinstance(element, FactorDef):
            return Layer.FACTOR
        return Layer.INDICATOR

    def element(self, element_id: str) -> Any:
        if element_id not in self._by_id:
            raise UnknownElement(f"element {element_id!r} not in model {self.model_id!r}")
        return self._by_id[element_id]

    def element_ids(self) -> list[str]:
        return list(self._by_id)

    def descendant_metric_ids(self, element_id: str) -> set[str]:
        """Metric ids reachable below an element (a metric maps to itself)."""
        layer = self.layer_of(element_id)
        if layer is Layer.METRIC:
            return {element_id}
        if layer is Layer.FACTOR:
            factor: FactorDef = self._by_id[element_id]
            return {child.id for child in factor.children}
        indicator: IndicatorDef = self._by_id[element_id]
        metric_ids: set[str] = set()
        for child in indicator.children:
            metric_ids |= self.descendant_metric_ids(child.id)
        return metric_ids

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "model_id": self.model_id,
            "version": self.version,
            "metrics": [m.to_jsonable() for m in self.metrics],
            "factors": [f.to_jsonable() for f in self.factors],
            "indicators": [i.to_jsonable() for i in self.indicators],
        }


def _check_children(parent: FactorDef | IndicatorDef, valid_ids: set[str], child_layer: str) -> None:
    if not parent.children:
        raise ValidationError(f"{parent.id!r} has no children")
    seen: set[str] = set()
    for child in parent.children:
        if child.id in seen:
            raise ValidationError(f"{parent.id!r} lists child {child.id!r} twice")
        seen.add(child.id)
        if child.id not in valid_ids:
            raise ValidationError(
                f"{parent.id!r} references {child.id!r}, which is not a {child_layer}"
            )
        if not child.weight > 0:
            raise ValidationError(
                f"{parent.id!r} child {child.id!r} has nonpositive weight {child.weight}"
            )


# --- loading -----------------------------------------------------------------


def load_model(document: str | bytes | Mapping[str, Any], *,
               known_sources: Iterable[str] | None = None) -> QualityModel:
    """Load and validate a quality-model document (JSON text or mapping).

    When known_sources is given, every metric's data_source_id must be one of
    them; otherwise source wiring is checked later at ingestion time.
    """
    doc = _parse_document(document, "quality model")
    for key in ("model_id", "version", "metrics", "factors", "indicators"):
        if key not in doc:
            raise SchemaError(f"quality model missing key {key!r}")
    metrics = tuple(_parse_metric(m, i) for i, m in enumerate(_as_list(doc["metrics"], "metrics")))
    factors = tuple(
        _parse_parent(f, i, "factors", FactorDef) for i, f in enumerate(_as_list(doc["factors"], "factors"))
    )
    indicators = tuple(
        _parse_parent(d, i, "indicators", IndicatorDef)
        for i, d in enumerate(_as_list(doc["indicators"], "indicators"))
    )
    model = QualityModel(
        model_id=str(doc["model_id"]),
        version=str(doc["version"]),
        metrics=metrics,
        factors=factors,
        indicators=indicators,
    )
    if known_sources is not None:
        registered = set(known_sources)
        for metric in model.metrics:
            if metric.data_source_id not in registered:
                raise ValidationError(
                    f"metric {metric.id!r} names unregistered data source "
                    f"{metric.data_source_id!r}"
                )
    return model


def _parse_document(document: str | bytes | Mapping[str, Any], what: str) -> Mapping[str, Any]:
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{what} document is not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise SchemaError(f"{what} document must be a JSON object")
    return doc


def _as_list(value: Any, key: str) -> list[Any]:
    if not isinstance(value, list):
        raise SchemaError(f"{key!r} must be a list")
    return value


def _parse_metric(raw: Any, index: int) -> MetricDef:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"metrics[{index}] must be an object")
    for key in ("id", "name", "data_source_id", "evaluator"):
        if key not in raw:
            raise SchemaError(f"metrics[{index}] missing key {key!r}")
    return MetricDef(
        id=str(raw["id"]),
        name=str(raw["name"]),
        description=str(raw.get("description", "")),
        data_source_id=str(raw["data_source_id"]),
        evaluator=parse_evaluator(raw["evaluator"], where=f"metrics[{index}]"),
    )


def parse_evaluator(raw: Any, *, where: str = "evaluator") -> EvaluatorSpec:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{where}: evaluator must be an object")
    kind_text = raw.get("kind")
    try:
        kind = EvaluatorKind(kind_text)
    except ValueError:
        raise SchemaError(f"{where}: unknown evaluator kind {kind_text!r}") from None
    try:
        return EvaluatorSpec(
            kind=kind,
            field=raw.get("field"),
            low=_opt_float(raw, "low"),
            high=_opt_float(raw, "high"),
            max_value=_opt_float(raw, "max"),
            min_value=_opt_float(raw, "min"),
            status_field=raw.get("status_field"),
            done_values=tuple(str(v) for v in raw.get("done_values", ())),
            scale=float(raw.get("scale", 1.0)),
            offset=float(raw.get("offset", 0.0)),
            empty_value=float(raw.get("empty_value", 1.0)),
        )
    except ValidationError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _opt_float(raw: Mapping[str, Any], key: str) -> float | None:
    return None if raw.get(key) is None else float(raw[key])


def _parse_parent(raw: Any, index: int, key: str, cls: type) -> Any:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{key}[{index}] must be an object")
    for required in ("id", "name", "children"):
        if required not in raw:
            raise SchemaError(f"{key}[{index}] missing key {required!r}")
    children = []
    for child_index, child in enumerate(_as_list(raw["children"], f"{key}[{index}].children")):
        if not isinstance(child, Mapping) or "id" not in child or "weight" not in child:
            raise SchemaError(
                f"{key}[{index}].children[{child_index}] must be an object with id and weight"
            )
        children.append(ChildRef(id=str(child["id"]), weight=float(child["weight"])))
    return cls(id=str(raw["id"]), name=str(raw["name"]), children=tuple(children))


# --- evaluation ----------------------------------------------------------------


def evaluate_metric(spec: EvaluatorSpec, items: list[Mapping[str, Any]]) -> float:
    """Apply an evaluator spec to raw records, producing a value in [0, 1].

    Zero records yield the spec's empty_value.
    """
    if not items:
        return spec.empty_value
    kind = spec.kind
    if kind is EvaluatorKind.COMPLETION_RATIO:
        done = set(spec.done_values)
        hits = sum(
            1 for item in items
            if str(_field_value(item, spec.status_field or "")) in done
        )
        return hits / len(items)
    if kind is EvaluatorKind.DIRECT:
        return _evaluate_direct(spec, items)
    hits = 0
    for item in items:
        value = _numeric_field(item, spec.field or "")
        if kind is EvaluatorKind.RATIO_WITHIN_RANGE:
            ok = spec.low <= value <= spec.high  # type: ignore[operator]
        elif kind is EvaluatorKind.RATIO_AT_MOST:
            ok = value <= spec.max_value  # type: ignore[operator]
        else:
            ok = value >= spec.min_value  # type: ignore[operator]
        hits += 1 if ok else 0
    return hits / len(items)


def _evaluate_direct(spec: EvaluatorSpec, items: list[Mapping[str, Any]]) -> float:
    field_expr = spec.field or ""
    numerator, _, denominator = field_expr.partition("/")
    values: list[float] = []
    for item in items:
        if denominator:
            den = _numeric_field(item, denominator.strip())
            if den == 0:
                continue  # unratable record; skipped rather than guessed
            raw = _numeric_field(item, numerator.strip()) / den
        else:
            raw = _numeric_field(item, field_expr)
        mapped = spec.scale * raw + spec.offset
        values.append(min(1.0, max(0.0, mapped)))
    if not values:
        return spec.empty_value
    return sum(values) / len(values)


def _field_value(item: Mapping[str, Any], name: str) -> Any:
    if name not in item:
        raise FieldMissing(f"record lacks field {name!r}")
    return item[name]


def _numeric_field(item: Mapping[str, Any], name: str) -> float:
    value = _field_value(item, name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FieldMissing(f"field {name!r} is not numeric (got {value!r})")
    return float(value)


def aggregate(children: list[tuple[float, float]]) -> float:
    """Weight-normalized arithmetic mean of (value, weight) pairs."""
    if not children:
        raise EmptyChildren("aggregate over an empty child list")
    total_weight = 0.0
    total = 0.0
    for value, weight in children:
        if not weight > 0:
            raise ValidationError(f"nonpositive weight {weight}")
        if not 0.0 <= value <= 1.0:
            raise ValueOutOfRange(f"child value {value} outside [0, 1]")
        total += value * weight
        total_weight += weight
    result = total / total_weight
    # Guard against float drift at the boundaries.
    return min(1.0, max(0.0, result))


def evaluate_snapshot(
    model: QualityModel,
    metric_values: Mapping[str, float],
    *,
    timestamp: datetime | None = None,
    provenance: Provenance = Provenance.OBSERVED,
) -> dict[str, AssessmentPoint]:
    """Evaluate the whole model bottom-up from raw metric values.

    Returns one AssessmentPoint per model element, all sharing one timestamp.
    """
    missing = sorted(m.id for m in model.metrics if m.id not in metric_values)
    if missing:
        raise MissingMetricValue(f"missing metric values: {', '.join(missing)}")
    instant = timestamp or utcnow()
    values: dict[str, float] = {}
    for metric in model.metrics:
        value = float(metric_values[metric.id])
        if not 0.0 <= value <= 1.0:
            raise ValueOutOfRange(f"value {value} for metric {metric.id!r} outside [0, 1]")
        values[metric.id] = value
    for factor in model.factors:
        values[factor.id] = aggregate([(values[c.id], c.weight) for c in factor.children])
    for indicator in model.indicators:
        values[indicator.id] = aggregate([(values[c.id], c.weight) for c in indicator.children])
    return {
        element_id: AssessmentPoint(
            element_id=element_id,
            layer=model.layer_of(element_id),
            timestamp=instant,
            value=value,
            provenance=provenance,
        )
        for element_id, value in values.items()
    }


def what_if(
    model: QualityModel,
    baseline: Mapping[str, float],
    overrides: Mapping[str, float],
    *,
    timestamp: datetime | None = None,
) -> dict[str, AssessmentPoint]:
    """Recompute the rollup with hypothetical values pinned.

    Overrides may target metrics or factors; a pinned factor ignores its
    children. The baseline (metric id -> value) is never mutated.
    """
    for element_id, value in overrides.items():
        layer = model.layer_of(element_id)  # raises UnknownElement for foreign ids
        if layer is Layer.INDICATOR:
            raise UnknownElement(
                f"{element_id!r} is a strategic indicator; only metrics and "
                "factors can be pinned"
            )
        if not 0.0 <= value <= 1.0:
            raise ValueOutOfRange(f"override {element_id!r}={value} outside [0, 1]")

    instant = timestamp or utcnow()
    missing = sorted(m.id for m in model.metrics if m.id not in baseline)
    if missing:
        raise MissingMetricValue(f"missing metric values: {', '.join(missing)}")

    values: dict[str, float] = {}
    for metric in model.metrics:
        value = overrides.get(metric.id, float(baseline[metric.id]))
        if not 0.0 <= value <= 1.0:
            raise ValueOutOfRange(f"value {value} for metric {metric.id!r} outside [0, 1]")
        values[metric.id] = value
    for factor in model.factors:
        if factor.id in overrides:
            values[factor.id] = overrides[factor.id]
        else:
            values[factor.id] = aggregate([(values[c.id], c.weight) for c in factor.children])
    for indicator in model.indicators:
        values[indicator.id] = aggregate([(values[c.id], c.weight) for c in indicator.children])
    return {
        element_id: AssessmentPoint(
            element_id=element_id,
            layer=model.layer_of(element_id),
            timestamp=instant,
            value=value,
            provenance=Provenance.WHATIF,
        )
        for element_id, value in values.items()
    }
