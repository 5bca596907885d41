"""Report figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .features import FEATURE_LABELS  # noqa: E402

POS_COLOR = "#d62728"
NEG_COLOR = "#1f77b4"
_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}

plt.rcParams.update(
    {
        "font.size": 9,
        "axes.titlesize": 10,
        "axes.spines.top": False,
        "axes.spines.right": False,
    }
)


def _label(name: str) -> str:
    return FEATURE_LABELS.get(name, name)


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_metrics(reports, path, baseline: float | None = None) -> None:
    """Grouped bars of accuracy / F1 / AUC-ROC per model."""
    from .metrics import sort_reports

    reports = sort_reports(reports)
    names = [r.display_name for r in reports]
    vals = np.array([[r.accuracy, r.f1, r.auc_roc] for r in reports])
    x = np.arange(len(reports))
    width = 0.26
    fig, ax = plt.subplots(figsize=(7.5, 3.6))
    for k, metric in enumerate(("Accuracy", "F1-Score", "AUC-ROC")):
        ax.bar(x + (k - 1) * width, vals[:, k], width, label=metric)
    if baseline is not None:
        ax.axhline(baseline, color="k", ls="--", lw=1, label="majority class")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=15, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score on test split")
    ax.legend(ncol=4, fontsize=7, loc="upper center", bbox_to_anchor=(0.5, 1.15), frameon=False)
    _save(fig, path)


def plot_attribution(attribution, path, top_k: int = 10) -> None:
    """Force-plot style bars: red pushes the prediction up, blue pushes it down."""
    phi = np.asarray(attribution.phi)
    names = attribution.feature_names or tuple(f"x{i}" for i in range(len(phi)))
    order = np.argsort(-np.abs(phi), kind="stable")[:top_k][::-1]
    rest = float(phi.sum() - phi[order].sum())
    labels = [_label(names[i]) for i in order]
    values = list(phi[order])
    if len(phi) > top_k:
        labels.insert(0, f"{len(phi) - top_k} other features")
        values.insert(0, rest)
    fig, ax = plt.subplots(figsize=(7.0, 0.35 * len(values) + 1.4))
    colors = [POS_COLOR if v > 0 else NEG_COLOR for v in values]
    ax.barh(np.arange(len(values)), values, color=colors)
    ax.set_yticks(np.arange(len(values)))
    ax.set_yticklabels(labels)
    ax.axvline(0, color="k", lw=0.8)
    ax.set_xlabel("contribution to P(home win)")
    ax.set_title(
        f"{attribution.match_id}: base value {attribution.base_value:.2f} "
        f"-> prediction {attribution.predicted:.2f}"
    )
    _save(fig, path)


def plot_prototypes(result, path) -> None:
    """Per-feature similarity heatmap, one column per prototype."""
    if not result.prototypes or result.prototypes[0].similarity is None:
        raise ValueError("prototype result has no similarity table")
    S = np.column_stack([p.similarity for p in result.prototypes])
    names = [_label(n) for n in result.feature_names] or [f"x{i}" for i in range(S.shape[0])]
    fig, ax = plt.subplots(figsize=(1.2 * S.shape[1] + 3.8, 0.3 * S.shape[0] + 1.6))
    im = ax.imshow(S, vmin=0, vmax=1, cmap="viridis", aspect="auto")
    for (i, j), v in np.ndenumerate(S):
        ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=6, color="w" if v < 0.6 else "k")
    ax.set_yticks(np.arange(S.shape[0]))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xticks(np.arange(S.shape[1]))
    ax.set_xticklabels(
        [f"P{k + 1}\nw={w:.3f}" for k, w in enumerate(result.normalized_weights)], fontsize=7
    )
    ax.set_title(f"Prototypes for {result.target_id}")
    fig.colorbar(im, ax=ax, fraction=0.04)
    _save(fig, path)


def plot_faithfulness(scores, path) -> None:
    scores = np.asarray(scores, float)
    fig, ax = plt.subplots(figsize=(5.0, 3.0))
    ax.hist(scores, bins=np.linspace(-1, 1, 21), color="0.6", edgecolor="k")
    if scores.size:
        ax.axvline(scores.mean(), color=POS_COLOR, label=f"mean {scores.mean():.2f}")
        ax.legend(frameon=False)
    ax.set_xlim(-1, 1)
    ax.set_xlabel("faithfulness")
    ax.set_ylabel("test matches")
    _save(fig, path)
