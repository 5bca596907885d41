from .base import (
    Dataset,
    Model,
    Standardizer,
    dumps_model,
    load_model,
    model_from_dict,
    predict_proba,
    save_model,
    standardize,
)
from .brcg import BRCGModel, Literal, RuleSet, ruleset_predict, train_brcg
from .lda import LDAModel, train_lda
from .logreg import LogRegModel, logreg_feature_importance, train_logreg
from .mlp import MLPModel, train_mlp
from .svm import LinearSVMModel, train_svm

__all__ = [
    "BRCGModel",
    "Dataset",
    "LDAModel",
    "Literal",
    "LinearSVMModel",
    "LogRegModel",
    "MLPModel",
    "Model",
    "RuleSet",
    "Standardizer",
    "dumps_model",
    "load_model",
    "logreg_feature_importance",
    "model_from_dict",
    "predict_proba",
    "ruleset_predict",
    "save_model",
    "standardize",
    "train_brcg",
    "train_lda",
    "train_logreg",
    "train_mlp",
    "train_svm",
]
