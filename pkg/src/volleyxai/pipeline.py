"""End-to-end orchestration behind the ``synth``, ``run`` and ``explain`` commands.

Output directory layout::

    out/data/          matches.csv, features.csv
    out/models/        <kind>.json for LogReg, BRCG, LinearSVM, MLP, LDA
    out/reports/       metrics_table.{txt,csv,json}, brcg_rule.txt, logreg_importance.csv,
                       faithfulness.csv, run.json, *.png
    out/explanations/  <match_id>_<method>.{json,csv,png}

Randomness derives from a single root seed: each consumer gets
``child_seed(root, name)`` with a fixed component name.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .data import (
    LeagueConfig,
    chronological_split,
    generate_synthetic_league,
    parse_matches_csv,
    write_matches_csv,
)
from .errors import (
    BudgetExceeded,
    InvalidConfig,
    MissingModel,
    UnknownMatch,
)
from .explain import attach_similarity, exact_shapley, kernel_shap, protodash
from .features import (
    FEATURE_LABELS,
    FEATURE_NAMES,
    build_features,
    read_features_csv,
    write_features_csv,
)
from .metrics import (
    evaluate_model,
    faithfulness,
    format_csv,
    format_table,
    reports_to_json,
)
from .models import (
    Dataset,
    Standardizer,
    dumps_model,
    load_model,
    logreg_feature_importance,
    train_brcg,
    train_lda,
    train_logreg,
    train_mlp,
    train_svm,
)

MODEL_KINDS = ("LogReg", "BRCG", "LinearSVM", "MLP", "LDA")


def child_seed(root: int, name: str) -> int:
    """Derive a 64-bit seed for component ``name`` from the root seed."""
    digest = hashlib.sha256(f"{int(root)}/{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class RunConfig:
    seed: int = 0
    alpha: float = 0.2
    test_fraction: float = 0.2
    threshold: float = 0.5
    # synthetic league (used when no input CSV is given)
    teams: int = 12
    seasons: int = 3
    home_advantage: float = 0.3
    strength_spread: float = 1.0
    drift: float = 0.3
    # models
    logreg_l2: float = 1e-2
    logreg_tol: float = 1e-8
    logreg_max_iter: int = 100
    svm_c: float = 1.0
    svm_epochs: int = 200
    mlp_hidden: int = 8
    mlp_lr: float = 0.05
    mlp_epochs: int = 500
    brcg_beam_width: int = 5
    brcg_max_clause_len: int = 4
    brcg_max_clauses: int = 3
    brcg_lambda: float = 0.5
    # explanations
    explain_model: str = "LinearSVM"
    background_size: int = 50
    n_coalitions: int = 2048
    prototypes: int = 5
    gamma: float | None = None
    figures: bool = True
    explain_test_set: bool = True
    input_path: str | None = field(default=None, metadata={"persist": False})

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise InvalidConfig(msg)

        need(0 < self.alpha <= 1, f"alpha must be in (0, 1], got {self.alpha}")
        need(0 < self.test_fraction < 1, f"test_fraction must be in (0, 1), got {self.test_fraction}")
        need(0 <= self.threshold <= 1, "threshold must be in [0, 1]")
        need(self.teams >= 4, f"teams must be >= 4, got {self.teams}")
        need(self.seasons >= 1, f"seasons must be >= 1, got {self.seasons}")
        need(0 <= self.seed < 2**64, "seed must be a 64-bit unsigned integer")
        need(self.logreg_l2 >= 0, "logreg_l2 must be >= 0")
        need(self.svm_c > 0, "svm_c must be > 0")
        need(self.mlp_hidden >= 1, "mlp_hidden must be >= 1")
        need(self.mlp_lr > 0, "mlp_lr must be > 0")
        need(self.brcg_beam_width >= 1 and self.brcg_max_clause_len >= 1, "BRCG beam width and clause length must be >= 1")
        need(self.brcg_max_clauses >= 1, "brcg_max_clauses must be >= 1")
        need(self.brcg_lambda >= 0, "brcg_lambda must be >= 0")
        need(self.explain_model in MODEL_KINDS, f"explain_model must be one of {MODEL_KINDS}")
        need(self.background_size >= 1, "background_size must be >= 1")
        need(self.n_coalitions >= len(FEATURE_NAMES), f"n_coalitions must be >= {len(FEATURE_NAMES)}")
        need(self.prototypes >= 1, "prototypes must be >= 1")
        need(self.gamma is None or self.gamma > 0, "gamma must be > 0")

    def league(self) -> LeagueConfig:
        return LeagueConfig(
            n_teams=self.teams,
            n_seasons=self.seasons,
            home_advantage=self.home_advantage,
            strength_spread=self.strength_spread,
            drift=self.drift,
            seed=child_seed(self.seed, "synth"),
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.metadata.get("persist", True)}

    def updated(self, **overrides) -> "RunConfig":
        known = {f.name: f for f in dataclasses.fields(self)}
        clean = {}
        for k, v in overrides.items():
            if v is None:
                continue
            if k not in known:
                raise InvalidConfig(f"unknown config key {k!r}")
            clean[k] = _coerce(known[k], v)
        return dataclasses.replace(self, **clean)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """Read ``key = value`` pairs from the ``[volleyxai]`` section of an INI file."""
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from None
        if not parser.has_section("volleyxai"):
            raise InvalidConfig(f"config {path} lacks a [volleyxai] section")
        return cls().updated(**dict(parser.items("volleyxai")))


def _coerce(f: dataclasses.Field, value):
    if not isinstance(value, str):
        return value
    text = value.strip()
    kind = str(f.type)
    try:
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind.startswith("float"):
            return None if text.lower() in ("", "none") else float(text)
    except ValueError:
        raise InvalidConfig(f"{f.name}: cannot parse {value!r} as {kind}") from None
    return text


# ---------------------------------------------------------------------------
# Output bookkeeping
# ---------------------------------------------------------------------------


class OutputWriter:
    """Writes files under an output root and can delete everything it wrote."""

    def __init__(self, root):
        self.root = Path(root)
        self.written: list[Path] = []
        self._created_dirs: list[Path] = []

    def path(self, *parts) -> Path:
        p = self.root.joinpath(*parts)
        missing = [d for d in reversed(p.parents) if not d.exists()]
        for d in missing:
            d.mkdir()
            self._created_dirs.append(d)
        self.written.append(p)
        return p

    def text(self, rel: str, content: str) -> Path:
        p = self.path(*rel.split("/"))
        p.write_text(content, encoding="utf-8")
        return p

    def rollback(self) -> None:
        for p in reversed(self.written):
            if p.exists():
                p.unlink()
        for d in reversed(self._created_dirs):
            try:
                d.rmdir()
            except OSError:
                pass


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train_all(train: Dataset, cfg: RunConfig) -> dict:
    """Fit every model on the training split only."""
    return {
        "LogReg": train_logreg(train, cfg.logreg_l2, cfg.logreg_max_iter, cfg.logreg_tol),
        "BRCG": train_brcg(
            train, cfg.brcg_beam_width, cfg.brcg_max_clause_len, cfg.brcg_max_clauses, cfg.brcg_lambda
        ),
        "LinearSVM": train_svm(train, cfg.svm_c, cfg.svm_epochs, child_seed(cfg.seed, "svm")),
        "MLP": train_mlp(train, cfg.mlp_hidden, cfg.mlp_lr, cfg.mlp_epochs, child_seed(cfg.seed, "mlp")),
        "LDA": train_lda(train),
    }


def background_rows(train: Dataset, cfg: RunConfig) -> np.ndarray:
    rng = np.random.default_rng(child_seed(cfg.seed, "background"))
    k = min(cfg.background_size, train.n)
    idx = np.sort(rng.choice(train.n, size=k, replace=False))
    return train.features[idx]


def explain_shap(model, x, background, cfg: RunConfig, match_id: str):
    """Kernel SHAP plus its faithfulness against the background mean."""
    attr = kernel_shap(
        model,
        x,
        background,
        n_coalitions=cfg.n_coalitions,
        seed=child_seed(cfg.seed, f"kernel_shap/{match_id}"),
        match_id=match_id,
        feature_names=FEATURE_NAMES,
    )
    faith = faithfulness(model, x, attr, background.mean(axis=0))
    return attr, faith


@dataclass
class RunResult:
    reports: list
    models: dict
    majority_baseline: float
    n_train: int
    n_test: int
    mean_faithfulness: float | None
    faithfulness_scores: list = field(default_factory=list)
    additivity_gaps: list = field(default_factory=list)


def load_matches(cfg: RunConfig):
    if cfg.input_path:
        return parse_matches_csv(cfg.input_path)
    return generate_synthetic_league(cfg.league())


def run_pipeline(cfg: RunConfig, out_dir, matches=None, echo=print) -> RunResult:
    """Featurize, split, train, evaluate and explain; write all artifacts.

    On any exception the files written by this call are removed.
    """
    cfg.validate()
    out = OutputWriter(out_dir)
    try:
        return _run(cfg, out, matches, echo)
    except BaseException:
        out.rollback()
        raise


def _run(cfg: RunConfig, out: OutputWriter, matches, echo) -> RunResult:
    if matches is None:
        matches = load_matches(cfg)
    write_matches_csv(matches, out.path("data", "matches.csv"))
    vectors = build_features(matches, alpha=cfg.alpha)
    write_features_csv(vectors, out.path("data", "features.csv"))
    train_v, test_v = chronological_split(vectors, cfg.test_fraction)
    train, test = Dataset.from_vectors(train_v), Dataset.from_vectors(test_v)

    models = train_all(train, cfg)
    for kind, model in models.items():
        out.text(f"models/{kind}.json", dumps_model(model) + "\n")

    # test labels are first touched here
    reports = [evaluate_model(models[k], test, threshold=cfg.threshold) for k in MODEL_KINDS]
    rate = float(test.labels.mean())
    baseline = max(rate, 1 - rate)
    table = format_table(reports)
    out.text("reports/metrics_table.txt", table)
    out.text("reports/metrics_table.csv", format_csv(reports))
    out.text("reports/metrics_table.json", reports_to_json(reports) + "\n")
    rule = models["BRCG"].rules.describe()
    out.text("reports/brcg_rule.txt", rule + "\n")
    ranking = logreg_feature_importance(models["LogReg"])
    out.text(
        "reports/logreg_importance.csv",
        "rank,feature,abs_weight\n"
        + "".join(f"{i + 1},{name},{w:.6f}\n" for i, (name, w) in enumerate(ranking)),
    )
    if cfg.figures:
        plotting.plot_metrics(reports, out.path("reports", "metrics.png"), baseline)

    echo(table.rstrip())
    echo(f"majority-class baseline accuracy: {baseline:.4f}")
    echo(f"BRCG: {rule}")
    echo("LogReg importance: " + ", ".join(FEATURE_LABELS.get(n, n) for n, _ in ranking[:3]))

    scores, gaps = [], []
    mean_faith = None
    if cfg.explain_test_set:
        model = models[cfg.explain_model]
        bg = background_rows(train, cfg)
        lines = ["match_id,faithfulness,degenerate,base_value,predicted,additivity_gap"]
        for v in test_v:
            attr, faith = explain_shap(model, np.array(v.values), bg, cfg, v.match_id)
            scores.append(faith.score)
            gaps.append(attr.additivity_gap)
            lines.append(
                f"{v.match_id},{faith.score:.6f},{int(faith.degenerate)},"
                f"{attr.base_value:.6f},{attr.predicted:.6f},{attr.additivity_gap:.3e}"
            )
        out.text("reports/faithfulness.csv", "\n".join(lines) + "\n")
        mean_faith = float(np.mean(scores))
        if cfg.figures:
            plotting.plot_faithfulness(scores, out.path("reports", "faithfulness.png"))
        echo(
            f"{cfg.explain_model} SHAP average faithfulness: {mean_faith:.2f} "
            f"(scale -1 to +1, {len(scores)} test matches)"
        )

    manifest = {
        "config": cfg.to_dict(),
        "input": cfg.input_path,
        "n_matches": len(matches),
        "n_train": train.n,
        "n_test": test.n,
        "majority_baseline": baseline,
        "mean_faithfulness": mean_faith,
        "train_fingerprint": train.fingerprint(),
    }
    out.text("reports/run.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return RunResult(reports, models, baseline, train.n, test.n, mean_faith, scores, gaps)


# ---------------------------------------------------------------------------
# Explain
# ---------------------------------------------------------------------------


def load_run(out_dir):
    """Reload config, split and match metadata written by `run_pipeline`."""
    root = Path(out_dir)
    manifest_path = root / "reports" / "run.json"
    if not manifest_path.exists():
        raise MissingModel(f"{manifest_path} not found; run the pipeline first")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    cfg = RunConfig().updated(**manifest["config"])
    vectors = read_features_csv(root / "data" / "features.csv")
    train_v, test_v = chronological_split(vectors, cfg.test_fraction)
    meta = {}
    matches_csv = root / "data" / "matches.csv"
    if matches_csv.exists():
        with open(matches_csv, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                meta[row["match_id"]] = {
                    "home_team": row["home_team"],
                    "away_team": row["away_team"],
                    "date": row["date"],
                    "stage": row["stage"],
                }
    return cfg, train_v, test_v, meta


def _find_test_row(match_id, train_v, test_v):
    for v in test_v:
        if v.match_id == match_id:
            return v
    if any(v.match_id == match_id for v in train_v):
        raise UnknownMatch(f"match {match_id!r} is in the training split, not the test split")
    raise UnknownMatch(f"unknown match_id {match_id!r}")


def explain_match(
    out_dir,
    match_id: str,
    method: str = "shap",
    model_kind: str | None = None,
    cfg_overrides: dict | None = None,
    exact_features=None,
    echo=print,
) -> dict:
    """Explain one test match and write ``explanations/<match_id>_<method>.*``."""
    cfg, train_v, test_v, meta = load_run(out_dir)
    cfg = cfg.updated(**(cfg_overrides or {}))
    if model_kind:
        cfg = cfg.updated(explain_model=model_kind)
    cfg.validate()
    target = _find_test_row(match_id, train_v, test_v)
    train = Dataset.from_vectors(train_v)
    out = OutputWriter(out_dir)
    safe_id = "".join(c if c.isalnum() or c in "-_." else "_" for c in match_id)
    x = np.array(target.values)
    try:
        if method == "protodash":
            payload = _explain_protodash(cfg, train, train_v, target, meta, out, safe_id)
            echo(
                f"{match_id}: {len(payload['prototypes'])} prototypes, first weight "
                f"{payload['prototypes'][0]['normalized_weight']:.6f}"
                + (" (dominant)" if payload["dominant_first_prototype"] else "")
            )
            return payload

        model = load_model(Path(out_dir) / "models" / f"{cfg.explain_model}.json")
        bg = background_rows(train, cfg)
        if method == "shap":
            attr, faith = explain_shap(model, x, bg, cfg, match_id)
        elif method == "shap-exact":
            if not exact_features:
                raise BudgetExceeded(
                    "exact Shapley over all 19 features exceeds the evaluation budget; "
                    "pass --exact-features to restrict the game to a few features"
                )
            players = _resolve_features(exact_features)
            attr = exact_shapley(model, x, bg, match_id, players=players, feature_names=FEATURE_NAMES)
            faith = faithfulness(model, x, attr, bg.mean(axis=0))
        else:
            raise InvalidConfig(f"unknown explanation method {method!r}")
        payload = attr.to_dict()
        payload["model"] = cfg.explain_model
        payload["faithfulness"] = round(faith.score, 6)
        payload["faithfulness_degenerate"] = faith.degenerate
        payload.update(meta.get(match_id, {}))
        out.text(f"explanations/{safe_id}_{method}.json", json.dumps(payload, indent=2) + "\n")
        if cfg.figures:
            plotting.plot_attribution(attr, out.path("explanations", f"{safe_id}_{method}.png"))
        echo(
            f"{match_id}: {cfg.explain_model} predicts home win with probability {attr.predicted:.2f}; "
            f"base value {attr.base_value:.2f}; faithfulness {faith.score:.2f}"
        )
        return payload
    except BaseException:
        out.rollback()
        raise


def _resolve_features(selection) -> list[int]:
    if isinstance(selection, int) or (isinstance(selection, str) and selection.isdigit()):
        k = int(selection)
        if not 1 <= k <= len(FEATURE_NAMES):
            raise InvalidConfig(f"--exact-features count must be in 1..{len(FEATURE_NAMES)}")
        return list(range(k))
    names = [s.strip() for s in (selection.split(",") if isinstance(selection, str) else selection)]
    bad = [n for n in names if n not in FEATURE_NAMES]
    if bad:
        raise InvalidConfig(f"unknown feature names {bad}")
    return [FEATURE_NAMES.index(n) for n in names]


def _explain_protodash(cfg, train, train_v, target, meta, out, safe_id) -> dict:
    std = Standardizer.fit(train.features)
    result = protodash(
        std.transform(np.array(target.values)),
        std.transform(train.features),
        m=min(cfg.prototypes, train.n),
        gamma=cfg.gamma,
        candidate_ids=[v.match_id for v in train_v],
        target_id=target.match_id,
    )
    scales = np.where(std.constant, 0.0, train.features.std(axis=0))
    attach_similarity(result, np.array(target.values), train.features, scales, FEATURE_NAMES)
    for p in result.prototypes:
        p.metadata = {**meta.get(p.match_id, {}), "label": int(train.labels[p.index])}
    result.target_metadata = meta.get(target.match_id, {})
    payload = result.to_dict()
    out.text(f"explanations/{safe_id}_protodash.json", json.dumps(payload, indent=2) + "\n")
    out.text(f"explanations/{safe_id}_protodash.csv", prototype_table_csv(result))
    if cfg.figures:
        plotting.plot_prototypes(result, out.path("explanations", f"{safe_id}_protodash.png"))
    return payload


def prototype_table_csv(result) -> str:
    """Feature rows by prototype columns, then weight and match metadata rows."""
    m = len(result.prototypes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Feature", *[f"Prototype-{k + 1}" for k in range(m)]])
    for i, name in enumerate(result.feature_names):
        w.writerow([FEATURE_LABELS.get(name, name), *[f"{p.similarity[i]:.2f}" for p in result.prototypes]])
    w.writerow(["Weight", *[f"{x:.6g}" for x in result.normalized_weights]])
    for key, label in (("home_team", "Home Team"), ("away_team", "Away Team"), ("date", "Date")):
        w.writerow([label, *[str(p.metadata.get(key, "")) for p in result.prototypes]])
    return buf.getvalue()


def explain_test_set(
    out_dir, method: str = "shap", model_kind=None, cfg_overrides=None, exact_features=None, echo=print
) -> list[dict]:
    _, _, test_v, _ = load_run(out_dir)
    return [
        explain_match(out_dir, v.match_id, method, model_kind, cfg_overrides, exact_features, echo)
        for v in test_v
    ]


def synth(cfg: RunConfig, path) -> int:
    cfg.validate()
    matches = generate_synthetic_league(cfg.league())
    write_matches_csv(matches, path)
    return len(matches)


__all__ = [
    "MODEL_KINDS",
    "RunConfig",
    "RunResult",
    "child_seed",
    "explain_match",
    "explain_test_set",
    "load_run",
    "run_pipeline",
    "synth",
    "train_all",
]
