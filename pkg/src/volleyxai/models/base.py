"""Shared model plumbing: datasets, standardization, the probability
interface and versioned JSON serialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np

from ..errors import EmptyDataset, MissingModel, NonFiniteInput, SingleClassData
from ..features import FEATURE_NAMES, FeatureVector, feature_matrix

FORMAT_VERSION = 1


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    constant: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            raise EmptyDataset("cannot standardize an empty dataset")
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        constant = ~(std > 1e-12 * np.maximum(1.0, np.abs(mean)))
        scale = np.where(constant, 1.0, std)
        return cls(mean, scale, constant)

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "constant": self.constant.astype(bool).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["mean"], float), np.array(d["scale"], float), np.array(d["constant"], bool))


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    standardization: Standardizer | None = None
    match_ids: tuple[str, ...] = ()

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            self.features = self.features.reshape(len(self.features), -1)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree on row count")
        if len(self.feature_names) != self.features.shape[1]:
            self.feature_names = tuple(f"x{i}" for i in range(self.features.shape[1]))
        if not np.all(np.isfinite(self.features)):
            raise NonFiniteInput("dataset contains non-finite entries")

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "Dataset":
        X, y = feature_matrix(vectors)
        return cls(X, y, FEATURE_NAMES, match_ids=tuple(v.match_id for v in vectors))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        return h.hexdigest()

    def require_both_classes(self) -> None:
        if self.n == 0:
            raise EmptyDataset("empty training set")
        if len(np.unique(self.labels)) < 2:
            raise SingleClassData(f"training labels contain only class {int(self.labels[0])}")


def standardize(train: Dataset) -> tuple[Dataset, Standardizer]:
    """Fit a per-column z-score transform on ``train`` and apply it."""
    tf = Standardizer.fit(train.features)
    return (
        Dataset(tf.transform(train.features), train.labels, train.feature_names, tf, train.match_ids),
        tf,
    )


_REGISTRY: dict[str, type] = {}


def register(cls):
    _REGISTRY[cls.kind] = cls
    return cls


class Model:
    """Common probability interface. Inputs are raw (unstandardized) rows."""

    kind: ClassVar[str] = ""
    standardizer: Standardizer | None = None

    def predict_proba(self, X):
        arr = np.asarray(X, dtype=float)
        single = arr.ndim == 1
        X2 = np.atleast_2d(arr)
        if not np.all(np.isfinite(X2)):
            raise NonFiniteInput("model input contains non-finite values")
        Z = self.standardizer.transform(X2) if self.standardizer is not None else X2
        p = np.clip(self._proba(Z), 0.0, 1.0)
        return float(p[0]) if single else p

    def predict(self, X, threshold: float = 0.5):
        p = self.predict_proba(X)
        return (np.asarray(p) >= threshold).astype(int)

    def _proba(self, Z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- serialization ------------------------------------------------------
    def _params(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_params(cls, params: dict, standardizer, meta: dict):
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "params": self._params(),
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "hyperparameters": getattr(self, "hyperparameters", {}),
            "train_fingerprint": getattr(self, "train_fingerprint", ""),
            "feature_names": list(getattr(self, "feature_names", FEATURE_NAMES)),
        }


def predict_proba(model: Model, x):
    return model.predict_proba(x)


def model_from_dict(d: dict) -> Model:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
    cls = _REGISTRY[d["kind"]]
    std = None if d.get("standardizer") is None else Standardizer.from_dict(d["standardizer"])
    model = cls._from_params(d["params"], std, d)
    model.hyperparameters = d.get("hyperparameters", {})
    model.train_fingerprint = d.get("train_fingerprint", "")
    model.feature_names = tuple(d.get("feature_names", FEATURE_NAMES))
    return model


def dumps_model(model: Model) -> str:
    return json.dumps(model.to_dict(), indent=2, sort_keys=True)


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
        fh.write("\n")


def load_model(path) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            return model_from_dict(json.load(fh))
    except FileNotFoundError:
        raise MissingModel(f"no model artifact at {path}") from None
