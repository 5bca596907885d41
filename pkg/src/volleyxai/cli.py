"""Command-line entry point: ``volleyxai synth | run | explain``.

Exit codes: 0 ok, 2 configuration, 3 data, 4 training, 5 lookup.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import (
    BudgetExceeded,
    ConfigError,
    DataError,
    LookupFailure,
    TrainingError,
    VolleyXAIError,
)
from .pipeline import MODEL_KINDS, RunConfig, explain_match, explain_test_set, run_pipeline, synth

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_TRAINING, EXIT_LOOKUP = 0, 2, 3, 4, 5


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (ConfigError, BudgetExceeded)):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, TrainingError):
        return EXIT_TRAINING
    if isinstance(exc, LookupFailure):
        return EXIT_LOOKUP
    return EXIT_TRAINING


def _add_league_args(p):
    g = p.add_argument_group("synthetic league")
    g.add_argument("--teams", type=int, help="number of teams (>= 4)")
    g.add_argument("--seasons", type=int, help="number of seasons")
    g.add_argument("--home-advantage", type=float, dest="home_advantage")
    g.add_argument("--strength-spread", type=float, dest="strength_spread")
    g.add_argument("--drift", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volleyxai", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic league as a matches CSV")
    _add_league_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="INI file with a [volleyxai] section")
    p.add_argument("-o", "--output", default="matches.csv")

    p = sub.add_parser("run", help="featurize, train all five models, evaluate and explain")
    p.add_argument("--input", dest="input_path", help="matches CSV; a synthetic league is used if omitted")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--config", help="INI file with a [volleyxai] section")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, help="EMA smoothing constant")
    p.add_argument("--test-fraction", type=float, dest="test_fraction")
    p.add_argument("--threshold", type=float)
    _add_league_args(p)
    g = p.add_argument_group("models")
    g.add_argument("--logreg-l2", type=float, dest="logreg_l2")
    g.add_argument("--svm-c", type=float, dest="svm_c")
    g.add_argument("--svm-epochs", type=int, dest="svm_epochs")
    g.add_argument("--mlp-hidden", type=int, dest="mlp_hidden")
    g.add_argument("--mlp-lr", type=float, dest="mlp_lr")
    g.add_argument("--mlp-epochs", type=int, dest="mlp_epochs")
    g.add_argument("--brcg-beam-width", type=int, dest="brcg_beam_width")
    g.add_argument("--brcg-max-clause-len", type=int, dest="brcg_max_clause_len")
    g.add_argument("--brcg-max-clauses", type=int, dest="brcg_max_clauses")
    g.add_argument("--brcg-lambda", type=float, dest="brcg_lambda")
    g = p.add_argument_group("explanations")
    g.add_argument("--explain-model", choices=MODEL_KINDS, dest="explain_model")
    g.add_argument("--background-size", type=int, dest="background_size")
    g.add_argument("--n-coalitions", type=int, dest="n_coalitions")
    g.add_argument("--no-explain", action="store_false", dest="explain_test_set", default=None)
    g.add_argument("--no-figures", action="store_false", dest="figures", default=None)

    p = sub.add_parser("explain", help="explain test matches of a finished run")
    p.add_argument("--out-dir", default="out")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--match-id")
    target.add_argument("--all-test", action="store_true")
    p.add_argument("--method", choices=("shap", "shap-exact", "protodash"), default="shap")
    p.add_argument("--model", choices=MODEL_KINDS, help="model to explain (default from the run)")
    p.add_argument("--prototypes", type=int, help="number of prototypes")
    p.add_argument("--gamma", type=float, help="RBF kernel width for prototypes")
    p.add_argument("--n-coalitions", type=int, dest="n_coalitions")
    p.add_argument(
        "--exact-features",
        help="debug: restrict exact Shapley to the first K features or a comma list of names",
    )
    p.add_argument("--no-figures", action="store_false", dest="figures", default=None)
    return parser


def _config(args, keys) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.updated(**{k: getattr(args, k, None) for k in keys})


_RUN_KEYS = (
    "input_path", "seed", "alpha", "test_fraction", "threshold", "teams", "seasons",
    "home_advantage", "strength_spread", "drift", "logreg_l2", "svm_c", "svm_epochs",
    "mlp_hidden", "mlp_lr", "mlp_epochs", "brcg_beam_width", "brcg_max_clause_len",
    "brcg_max_clauses", "brcg_lambda", "explain_model", "background_size", "n_coalitions",
    "explain_test_set", "figures",
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "synth":
            cfg = _config(args, ("teams", "seasons", "home_advantage", "strength_spread", "drift", "seed"))
            n = synth(cfg, args.output)
            print(f"wrote {n} matches to {args.output}")
        elif args.command == "run":
            cfg = _config(args, _RUN_KEYS)
            run_pipeline(cfg, args.out_dir)
        else:
            overrides = {k: getattr(args, k) for k in ("prototypes", "gamma", "n_coalitions", "figures")}
            if args.all_test:
                explain_test_set(args.out_dir, args.method, args.model, overrides, args.exact_features)
            else:
                explain_match(
                    args.out_dir, args.match_id, args.method, args.model, overrides, args.exact_features
                )
    except VolleyXAIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
