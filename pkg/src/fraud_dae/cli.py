"""Command line entry point: ``fraud-dae <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import nn
from .classifier import load_classifier, predict_proba, save_classifier, train_classifier
from .dae import NoiseSpec, denoise, load_dae, save_dae, train_dae
from .dataset import as_transactions, generate_synthetic, load_csv, load_table, preprocess, write_csv
from .evaluation import format_csv, format_table, sweep_probs
from .pipeline import (
    CLASSIFIER_FILE,
    DAE_FILE,
    ConfigError,
    PipelineConfig,
    PipelineError,
    load_config,
    load_models,
    run_model1,
    run_model2,
)
from .resampler import SmoteConfig, smote

log = logging.getLogger("fraud_dae")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value config file; flags override its entries")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _add_noise(p):
    p.add_argument("--noise-kind", choices=["gaussian", "salt_pepper"])
    p.add_argument("--sigma", type=float)
    p.add_argument("--rate", type=float)


def _add_train(p, prefix):
    p.add_argument(f"--{prefix}-epochs", type=int)
    p.add_argument(f"--{prefix}-batch-size", type=int)
    p.add_argument(f"--{prefix}-lr", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="fraud-dae", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic imbalanced transaction CSV")
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--minority-fraction", type=float, default=0.005)
    p.add_argument("--separation", type=float, default=4.5)
    p.add_argument("--output", required=True)

    p = sub.add_parser("preprocess", parents=[common], help="drop Time and z-score Amount")
    p.add_argument("--input")
    p.add_argument("--output", required=True)

    p = sub.add_parser("oversample", parents=[common], help="SMOTE the fraud class of a preprocessed CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--smote-k", type=int)
    p.add_argument("--smote-target", type=int, help="fraud rows after oversampling (default: balance)")

    p = sub.add_parser("train-dae", parents=[common], help="train the denoising autoencoder")
    p.add_argument("--input", required=True)
    _add_noise(p)
    _add_train(p, "dae")

    p = sub.add_parser("train-clf", parents=[common], help="train the classifier")
    p.add_argument("--input", required=True)
    p.add_argument("--dae", help="autoencoder model; inputs are denoised first")
    _add_train(p, "clf")

    p = sub.add_parser("evaluate", parents=[common], help="threshold sweep of a saved classifier")
    p.add_argument("--input", required=True)
    p.add_argument("--model-dir", help=f"directory holding {CLASSIFIER_FILE} (and optionally {DAE_FILE})")
    p.add_argument("--classifier")
    p.add_argument("--dae")
    p.add_argument("--threshold", type=float, action="append", dest="thresholds")

    for name in ("run-model1", "run-model2"):
        p = sub.add_parser(name, parents=[common], help=f"full {name[4:]} pipeline")
        p.add_argument("--input")
        p.add_argument("--test-fraction", type=float)
        p.add_argument("--stratified", action="store_const", const=True)
        p.add_argument("--threshold", type=float, action="append", dest="thresholds")
        _add_train(p, "clf")
        if name == "run-model2":
            p.add_argument("--smote-k", type=int)
            p.add_argument("--no-smote", dest="smote", action="store_const", const=False)
            _add_noise(p)
            _add_train(p, "dae")
    return parser


_CONFIG_KEYS = set(PipelineConfig.__dataclass_fields__)


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS and v is not None}
    if args.config:
        return load_config(args.config, overrides)
    return PipelineConfig.from_mapping(overrides)


def _out_path(cfg: PipelineConfig, name: str) -> Path:
    out = Path(cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _read_features(path: str):
    """Raw transaction files get preprocessed on the fly; anything else is read as a table."""
    with open(path) as fh:
        header = fh.readline()
    if header.lstrip('"').startswith("Time"):
        return preprocess(load_csv(path))
    return load_table(path)


def _run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    cmd = args.command

    if cmd == "synth":
        ds = generate_synthetic(args.n, args.minority_fraction, 29, args.separation, cfg.seed)
        write_csv(as_transactions(ds), args.output)
        normal, fraud = ds.class_counts()
        print(f"wrote {ds.n} rows ({normal} normal, {fraud} fraud) to {args.output}")
    elif cmd == "preprocess":
        src = args.input or cfg.input
        if not src:
            raise ConfigError("--input is required")
        ds = preprocess(load_csv(src, has_header=True))
        write_csv(ds, args.output)
        print(f"wrote {ds.n} rows x {ds.d} features to {args.output}")
    elif cmd == "oversample":
        ds = _read_features(args.input)
        out = smote(ds, SmoteConfig(cfg.smote_k, cfg.smote_target, cfg.seed))
        write_csv(out, args.output)
        print("class counts (normal, fraud): {} -> {}".format(ds.class_counts(), out.class_counts()))
    elif cmd == "train-dae":
        ds = _read_features(args.input)
        model = train_dae(ds.features, NoiseSpec(cfg.noise_kind, cfg.sigma, cfg.rate, cfg.seed), cfg.dae_train())
        path = _out_path(cfg, DAE_FILE)
        save_dae(path, model)
        print(f"final epoch loss {model.history[-1]:.6g}; saved {path}")
    elif cmd == "train-clf":
        ds = _read_features(args.input)
        x = ds.features
        if args.dae:
            x = denoise(load_dae(args.dae), x)
        model = train_classifier(x, ds.labels, cfg.clf_train())
        path = _out_path(cfg, CLASSIFIER_FILE)
        save_classifier(path, model)
        print(f"final epoch loss {model.history[-1]:.6g}; saved {path}")
    elif cmd == "evaluate":
        if args.model_dir:
            dae, clf = load_models(args.model_dir)
        elif args.classifier:
            dae, clf = None, load_classifier(args.classifier)
        else:
            raise ConfigError("need --model-dir or --classifier")
        if args.dae:
            dae = load_dae(args.dae)
        ds = _read_features(args.input)
        x = denoise(dae, ds.features) if dae is not None else ds.features
        rows = sweep_probs(predict_proba(clf, x), ds.labels, cfg.thresholds)
        print(format_table(rows), end="")
        if cfg.out_dir:
            _out_path(cfg, "report.csv").write_text(format_csv(rows))
    else:
        result = (run_model1 if cmd == "run-model1" else run_model2)(cfg)
        print(result.report.to_text(), end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, nn.ModelFormatError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: stage {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
