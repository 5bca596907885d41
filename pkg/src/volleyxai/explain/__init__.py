from .protodash import (
    Prototype,
    PrototypeResult,
    attach_similarity,
    feature_similarity,
    nonneg_quadratic_max,
    protodash,
    prototype_objective,
    rbf_kernel,
)
from .shapley import Attribution, coalition_values, exact_shapley, kernel_shap, shapley_kernel_weight

__all__ = [
    "Attribution",
    "Prototype",
    "PrototypeResult",
    "attach_similarity",
    "coalition_values",
    "exact_shapley",
    "feature_similarity",
    "kernel_shap",
    "nonneg_quadratic_max",
    "prototype_objective",
    "protodash",
    "rbf_kernel",
    "shapley_kernel_weight",
]
