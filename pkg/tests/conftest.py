from __future__ import annotations

import json
import random
from importlib import resources
from pathlib import Path

import pytest

from qfl.catalogue import Catalogue, load_catalogue
from qfl.engine import Config, QflEngine, init_workspace
from qfl.model import QualityModel, load_model

SNAPSHOT_KINDS = {
    "sonarqube": "static_analysis",
    "mantis": "issue_tracker",
    "jenkins": "ci_builds",
    "modelio_testing": "ci_builds",
    "svn": "vcs_log",
    "openproject": "backlog",
}


def _data(name: str) -> str:
    return (resources.files("qfl") / "data" / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def example_model() -> QualityModel:
    return load_model(_data("model.json"))


@pytest.fixture(scope="session")
def example_catalogue(example_model: QualityModel) -> Catalogue:
    return load_catalogue(_data("catalogue.json"), example_model)


@pytest.fixture
def workspace(tmp_path: Path) -> QflEngine:
    """A scaffolded workspace with all bundled snapshots staged."""
    config_path = init_workspace(tmp_path)
    engine = QflEngine(Config.load(config_path))
    for name, kind in SNAPSHOT_KINDS.items():
        engine.ingest(kind, tmp_path / "snapshots" / f"{name}.json")
    yield engine
    engine.close()


@pytest.fixture
def assessed_workspace(workspace: QflEngine) -> QflEngine:
    workspace.assess()
    return workspace


def minimal_model_doc() -> dict:
    """One metric, one factor, one indicator, weight 1."""
    return {
        "model_id": "minimal",
        "version": "1",
        "metrics": [
            {
                "id": "m1",
                "name": "M1",
                "description": "",
                "data_source_id": "src",
                "evaluator": {"kind": "direct", "field": "x"},
            }
        ],
        "factors": [{"id": "f1", "name": "F1", "children": [{"id": "m1", "weight": 1}]}],
        "indicators": [{"id": "i1", "name": "I1", "children": [{"id": "f1", "weight": 1}]}],
    }


def random_model(rng: random.Random, *, max_indicators: int = 5,
                 max_factors: int = 10, max_metrics: int = 30) -> QualityModel:
    """A random strict 3-layer model; every factor and indicator non-empty."""
    n_metrics = rng.randint(1, max_metrics)
    n_factors = rng.randint(1, max_factors)
    n_indicators = rng.randint(1, max_indicators)
    metrics = [
        {
            "id": f"m{i}",
            "name": f"metric {i}",
            "description": "",
            "data_source_id": "src",
            "evaluator": {"kind": "direct", "field": "x"},
        }
        for i in range(n_metrics)
    ]
    factors = []
    for f in range(n_factors):
        size = rng.randint(1, n_metrics)
        chosen = rng.sample(range(n_metrics), size)
        factors.append(
            {
                "id": f"f{f}",
                "name": f"factor {f}",
                "children": [
                    {"id": f"m{m}", "weight": rng.uniform(0.1, 5.0)} for m in chosen
                ],
            }
        )
    indicators = []
    for i in range(n_indicators):
        size = rng.randint(1, n_factors)
        chosen = rng.sample(range(n_factors), size)
        indicators.append(
            {
                "id": f"i{i}",
                "name": f"indicator {i}",
                "children": [
                    {"id": f"f{f}", "weight": rng.uniform(0.1, 5.0)} for f in chosen
                ],
            }
        )
    return load_model(
        json.dumps(
            {
                "model_id": "random",
                "version": "1",
                "metrics": metrics,
                "factors": factors,
                "indicators": indicators,
            }
        )
    )


def naive_rollup(model: QualityModel, values: dict[str, float],
                 pinned: dict[str, float] | None = None) -> dict[str, float]:
    """Independent recursive-recompute oracle for snapshot and what-if."""
    pinned = pinned or {}
    by_id = {e.id: e for e in (*model.metrics, *model.factors, *model.indicators)}

    def value_of(element_id: str) -> float:
        if element_id in pinned:
            return pinned[element_id]
        element = by_id[element_id]
        if not hasattr(element, "children"):
            return values[element_id]
        total = sum(child.weight for child in element.children)
        return sum(child.weight * value_of(child.id) for child in element.children) / total

    return {element_id: value_of(element_id) for element_id in by_id}
