"""Five classifier families behind one train/predict contract.

Families: nearest_neighbors, decision_tree, random_forest, linear (softmax
regression), svm_rbf (one-vs-rest SMO). Training is a pure function of
(spec, data, seed); every tie-break is deterministic and the lowest task id
wins among equal votes or scores.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import PipelineConfig
from ..errors import (
    DimensionMismatchError,
    EmptyDataError,
    InvalidHyperparameterError,
    ModelFormatError,
    SingleClassDataError,
    UnknownFamilyError,
)
from ..features import FeatureMatrix, Scaler
from .forest import ForestModel, fit_forest
from .knn import KnnModel, fit_knn
from .linear import LinearModel, fit_linear, loss_and_grad, softmax
from .svm import SmoResult, SvmModel, dual_objective, fit_svm, kkt_violations, rbf_kernel, rbf_kernel_matrix, smo_fit
from .tree import DecisionTreeModel, fit_tree, gini_impurity

FAMILY_KNN = "nearest_neighbors"
FAMILY_TREE = "decision_tree"
FAMILY_FOREST = "random_forest"
FAMILY_LINEAR = "linear"
FAMILY_SVM = "svm_rbf"

# Fixed ranking order used to break score ties during model selection.
REGISTRY_ORDER = (FAMILY_FOREST, FAMILY_SVM, FAMILY_KNN, FAMILY_TREE, FAMILY_LINEAR)

DEFAULT_PARAMS: dict[str, dict] = {
    FAMILY_KNN: {"k": 5},
    FAMILY_TREE: {"max_depth": 0, "min_samples_split": 2},
    FAMILY_FOREST: {"n_trees": 100, "max_features": 0, "bootstrap": True, "max_depth": 0, "min_samples_split": 2},
    FAMILY_LINEAR: {"learning_rate": 0.1, "epochs": 200, "l2": 1e-4},
    FAMILY_SVM: {"c": 1.0, "gamma": 0.0, "tol": 1e-3, "max_passes": 5},
}

MODEL_FORMAT = "bcipipe-model"
MODEL_VERSION = 1

_IMPLS = {
    FAMILY_KNN: KnnModel,
    FAMILY_TREE: DecisionTreeModel,
    FAMILY_FOREST: ForestModel,
    FAMILY_LINEAR: LinearModel,
    FAMILY_SVM: SvmModel,
}


@dataclass(frozen=True)
class ModelSpec:
    """Classifier family + hyperparameters + naming for seeds and reports."""

    family: str
    params: dict = field(default_factory=dict)
    name: str = ""
    seed_purpose: str = ""

    def __post_init__(self):
        if self.family not in DEFAULT_PARAMS:
            raise UnknownFamilyError(f"unknown model family {self.family!r}")
        merged = dict(DEFAULT_PARAMS[self.family])
        for key, value in self.params.items():
            if key not in merged:
                raise InvalidHyperparameterError(f"{self.family}: unknown hyperparameter {key!r}")
            merged[key] = value
        object.__setattr__(self, "params", merged)
        if not self.name:
            object.__setattr__(self, "name", self.family)
        if not self.seed_purpose:
            object.__setattr__(self, "seed_purpose", self.name)

    def validate(self) -> list[str]:
        p = self.params
        v = []
        if self.family == FAMILY_KNN and p["k"] < 1:
            v.append(f"{self.name}: k must be >= 1")
        if self.family in (FAMILY_TREE, FAMILY_FOREST):
            if p["max_depth"] < 0:
                v.append(f"{self.name}: max_depth must be >= 0 (0 = unbounded)")
            if p["min_samples_split"] < 2:
                v.append(f"{self.name}: min_samples_split must be >= 2")
        if self.family == FAMILY_FOREST:
            if p["n_trees"] < 1:
                v.append(f"{self.name}: n_trees must be >= 1")
            if p["max_features"] < 0:
                v.append(f"{self.name}: max_features must be >= 0 (0 = auto)")
        if self.family == FAMILY_LINEAR:
            if p["learning_rate"] <= 0:
                v.append(f"{self.name}: learning_rate must be > 0")
            if p["epochs"] < 1:
                v.append(f"{self.name}: epochs must be >= 1")
            if p["l2"] < 0:
                v.append(f"{self.name}: l2 must be >= 0")
        if self.family == FAMILY_SVM:
            if p["c"] <= 0:
                v.append(f"{self.name}: c must be > 0")
            if p["gamma"] < 0:
                v.append(f"{self.name}: gamma must be >= 0 (0 = auto)")
            if p["tol"] <= 0:
                v.append(f"{self.name}: tol must be > 0")
            if p["max_passes"] < 1:
                v.append(f"{self.name}: max_passes must be >= 1")
        return v


def specs_from_config(config: PipelineConfig) -> list[ModelSpec]:
    """The five candidate specs, hyperparameters taken from the config."""
    return [
        ModelSpec(FAMILY_FOREST, {
            "n_trees": config.forest.n_trees,
            "max_features": config.forest.max_features,
            "bootstrap": config.forest.bootstrap,
            "max_depth": config.tree.max_depth,
            "min_samples_split": config.tree.min_samples_split,
        }),
        ModelSpec(FAMILY_SVM, {
            "c": config.svm.c,
            "gamma": config.svm.gamma,
            "tol": config.svm.tol,
            "max_passes": config.svm.max_passes,
        }),
        ModelSpec(FAMILY_KNN, {"k": config.knn.k}),
        ModelSpec(FAMILY_TREE, {
            "max_depth": config.tree.max_depth,
            "min_samples_split": config.tree.min_samples_split,
        }),
        ModelSpec(FAMILY_LINEAR, {
            "learning_rate": config.linear.learning_rate,
            "epochs": config.linear.epochs,
            "l2": config.linear.l2,
        }),
    ]


@dataclass
class TrainedModel:
    """A fitted classifier: spec, class vocabulary, and the family state."""

    spec: ModelSpec
    classes: tuple[int, ...]  # task ids seen at training, ascending
    n_features: int
    impl: object

    def predict(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise DimensionMismatchError(
                f"expected (N, {self.n_features}) features, got {features.shape}"
            )
        positions = self.impl.predict_positions(features)
        return np.asarray(self.classes, dtype=np.int64)[positions]


def train(spec: ModelSpec, data: FeatureMatrix, seed: int) -> TrainedModel:
    """Fit one family on a feature matrix. Deterministic given (spec, data, seed)."""
    problems = spec.validate()
    if problems:
        raise InvalidHyperparameterError("; ".join(problems))
    if len(data) == 0:
        raise EmptyDataError(f"{spec.name}: no training rows")
    classes = np.unique(data.labels)
    if len(classes) < 2:
        raise SingleClassDataError(f"{spec.name}: training data has a single class")
    x = data.features
    y = np.searchsorted(classes, data.labels)
    n_classes = len(classes)
    d = x.shape[1]
    p = spec.params

    if spec.family == FAMILY_KNN:
        impl = fit_knn(x, y, n_classes, k=p["k"])
    elif spec.family == FAMILY_TREE:
        impl = fit_tree(
            x,
            y,
            n_classes,
            max_depth=p["max_depth"] or None,
            min_samples_split=p["min_samples_split"],
        )
    elif spec.family == FAMILY_FOREST:
        impl = fit_forest(
            x,
            y,
            n_classes,
            n_trees=p["n_trees"],
            max_features=p["max_features"] or math.isqrt(d - 1) + 1,  # ceil(sqrt(d))
            bootstrap=p["bootstrap"],
            max_depth=p["max_depth"] or None,
            min_samples_split=p["min_samples_split"],
            seed=seed,
        )
    elif spec.family == FAMILY_LINEAR:
        impl = fit_linear(
            x,
            y,
            n_classes,
            learning_rate=p["learning_rate"],
            epochs=p["epochs"],
            l2=p["l2"],
        )
    elif spec.family == FAMILY_SVM:
        impl = fit_svm(
            x,
            y,
            n_classes,
            c=p["c"],
            gamma=p["gamma"] or 1.0 / d,
            tol=p["tol"],
            max_passes=p["max_passes"],
            seed=seed,
        )
    else:  # pragma: no cover - guarded by ModelSpec
        raise UnknownFamilyError(spec.family)

    return TrainedModel(
        spec=spec,
        classes=tuple(int(c) for c in classes),
        n_features=d,
        impl=impl,
    )


def predict(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    return model.predict(features)


# --- serialization -------------------------------------------------------------


def model_to_doc(model: TrainedModel, scaler: Scaler | None = None) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "family": model.spec.family,
        "name": model.spec.name,
        "params": model.spec.params,
        "classes": list(model.classes),
        "n_features": model.n_features,
        "state": model.impl.to_state(),
    }
    if scaler is not None:
        doc["scaler"] = {"mean": scaler.mean.tolist(), "std": scaler.std.tolist()}
    return doc


def model_from_doc(doc: dict) -> tuple[TrainedModel, Scaler | None]:
    if doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a model document")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    family = doc["family"]
    if family not in _IMPLS:
        raise UnknownFamilyError(f"unknown model family {family!r}")
    impl = _IMPLS[family].from_state(doc["state"])
    model = TrainedModel(
        spec=ModelSpec(family, doc["params"], name=doc.get("name", "")),
        classes=tuple(int(c) for c in doc["classes"]),
        n_features=int(doc["n_features"]),
        impl=impl,
    )
    scaler = None
    if "scaler" in doc:
        scaler = Scaler(
            mean=np.array(doc["scaler"]["mean"], dtype=np.float64),
            std=np.array(doc["scaler"]["std"], dtype=np.float64),
        )
    return model, scaler


def save_model(model: TrainedModel, path: str | Path, scaler: Scaler | None = None) -> None:
    Path(path).write_text(
        json.dumps(model_to_doc(model, scaler), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> tuple[TrainedModel, Scaler | None]:
    return model_from_doc(json.loads(Path(path).read_text(encoding="utf-8")))
