"""End-to-end runs: preprocess -> split -> oversample -> DAE -> classifier -> evaluate."""

from __future__ import annotations

import contextlib
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import nn
from .classifier import ClassifierModel, load_classifier, save_classifier, train_classifier
from .dae import DaeModel, NoiseSpec, denoise, load_dae, save_dae, train_dae
from .dataset import TIME_COLUMN, LabeledDataset, SplitSpec, load_csv, preprocess, split
from .evaluation import SweepRow, format_csv, format_table, threshold_sweep
from .resampler import SmoteConfig, smote

log = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = (0.2, 0.3, 0.4, 0.5, 0.6)
DAE_FILE = "dae.model"
CLASSIFIER_FILE = "classifier.model"


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    input: str | None = None
    test_fraction: float = 0.2
    stratified: bool = False
    seed: int = 0
    smote: bool = True
    smote_k: int = 5
    smote_target: int | None = None
    noise_kind: str = "gaussian"
    sigma: float = 0.5
    rate: float = 0.1
    dae_epochs: int = 50
    dae_batch_size: int = 128
    dae_lr: float = 0.01
    clf_epochs: int = 50
    clf_batch_size: int = 128
    clf_lr: float = 0.01
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    out_dir: str | None = None

    def __post_init__(self):
        if not self.thresholds:
            raise ConfigError("thresholds must not be empty")
        for t in self.thresholds:
            if not 0 <= t <= 1:
                raise ConfigError(f"threshold {t} outside [0, 1]")
        try:
            self.split_spec()
            self.noise_spec()
            self.dae_train()
            self.clf_train()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.smote_k < 1:
            raise ConfigError("smote_k must be >= 1")

    # every sub-stage gets its own seed derived from the global one
    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.test_fraction, self.seed, self.stratified)

    def smote_config(self) -> SmoteConfig:
        return SmoteConfig(self.smote_k, self.smote_target, self.seed + 1)

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(self.noise_kind, self.sigma, self.rate, self.seed + 2)

    def dae_train(self) -> nn.TrainConfig:
        return nn.TrainConfig(self.dae_epochs, self.dae_batch_size, self.dae_lr, self.seed + 3)

    def clf_train(self) -> nn.TrainConfig:
        return nn.TrainConfig(self.clf_epochs, self.clf_batch_size, self.clf_lr, self.seed + 4)

    def items(self) -> list[tuple[str, str]]:
        """Effective settings as flat key/value text, in declaration order."""
        out = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "thresholds":
                text = ",".join(format(t, "g") for t in value)
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif value is None:
                text = ""
            else:
                text = str(value)
            out.append((f.name, text))
        return out

    def dumps(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    @classmethod
    def from_mapping(cls, values: dict[str, object]) -> "PipelineConfig":
        """Build from strings (config file) or already-typed values (CLI overrides)."""
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)


_INT_KEYS = {"seed", "smote_k", "smote_target", "dae_epochs", "dae_batch_size", "clf_epochs", "clf_batch_size"}
_FLOAT_KEYS = {"test_fraction", "sigma", "rate", "dae_lr", "clf_lr"}
_BOOL_KEYS = {"stratified", "smote"}
_OPTIONAL_KEYS = {"input", "out_dir", "smote_target"}


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        if key == "thresholds":
            return tuple(float(t) for t in raw)
        return raw
    text = raw.strip()
    try:
        if key in _OPTIONAL_KEYS and text == "":
            return None
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _BOOL_KEYS:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"not a boolean: {text!r}")
            return low in ("true", "1", "yes")
        if key == "thresholds":
            return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None
    return text


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def load_config(path: str | Path, overrides: dict[str, object] | None = None) -> PipelineConfig:
    values: dict[str, object] = dict(parse_config(Path(path).read_text()))
    values.update(overrides or {})
    return PipelineConfig.from_mapping(values)


@dataclass
class EvaluationReport:
    model: str
    stages: list[str]
    config: PipelineConfig
    counts: dict[str, tuple[int, int]]
    rows: list[SweepRow] = field(default_factory=list)

    def to_csv(self) -> str:
        return format_csv(self.rows)

    def to_text(self) -> str:
        out = [f"model: {self.model}", f"stages: {' -> '.join(self.stages)}"]
        out += [f"{k}: {v}" for k, v in self.config.items()]
        out += [f"{name} (normal, fraud): {c[0]}, {c[1]}" for name, c in self.counts.items()]
        out.append("")
        return "\n".join(out) + "\n" + format_table(self.rows, title=f"{self.model} evaluation")

    def write(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "report.csv").write_text(self.to_csv())
        (directory / "report.txt").write_text(self.to_text())


@dataclass
class PipelineResult:
    report: EvaluationReport
    train: LabeledDataset
    test: LabeledDataset
    classifier: ClassifierModel
    dae: DaeModel | None = None
    balanced: LabeledDataset | None = None


@contextlib.contextmanager
def stage(name: str, stages: list[str]):
    log.info("stage %s", name)
    stages.append(name)
    try:
        yield
    except PipelineError:
        raise
    except (ValueError, OSError, FloatingPointError) as exc:
        raise PipelineError(name, str(exc)) from exc


def _prepare(cfg: PipelineConfig, data: LabeledDataset | None, stages: list[str]):
    if data is None:
        if not cfg.input:
            raise PipelineError("load", "no input file configured")
        with stage("load", stages):
            data = load_csv(cfg.input, has_header=_has_header(cfg.input))
    if TIME_COLUMN in data.column_names:
        with stage("preprocess", stages):
            data = preprocess(data)
    with stage("split", stages):
        train, test = split(data, cfg.split_spec())
    return train, test


def _has_header(path: str | Path) -> bool:
    """True unless the first field of the first line parses as a number."""
    with open(path) as fh:
        first = fh.readline().split(",", 1)[0].strip().strip('"')
    try:
        float(first)
    except ValueError:
        return True
    return False


def run_model1(cfg: PipelineConfig, data: LabeledDataset | None = None) -> PipelineResult:
    """Baseline: classifier on the raw imbalanced training split.

    ``data`` may be supplied instead of ``cfg.input``; a Time column triggers preprocessing.
    """
    stages: list[str] = []
    train, test = _prepare(cfg, data, stages)
    with stage("train-classifier", stages):
        clf = train_classifier(train.features, train.labels, cfg.clf_train())
    with stage("evaluate", stages):
        rows = threshold_sweep(clf, None, test.features, test.labels, cfg.thresholds)
    counts = {"train": train.class_counts(), "test": test.class_counts()}
    report = EvaluationReport("model1", stages, cfg, counts, rows)
    if cfg.out_dir:
        with stage("save", stages):
            out = Path(cfg.out_dir) / "model1"
            save_models(out, None, clf)
            report.write(out)
    return PipelineResult(report, train, test, clf)


def run_model2(cfg: PipelineConfig, data: LabeledDataset | None = None) -> PipelineResult:
    """Oversample, denoise with the autoencoder, then classify."""
    stages: list[str] = []
    train, test = _prepare(cfg, data, stages)
    balanced = train
    if cfg.smote:
        with stage("oversample", stages):
            balanced = smote(train, cfg.smote_config())
    with stage("train-dae", stages):
        dae = train_dae(balanced.features, cfg.noise_spec(), cfg.dae_train())
    with stage("denoise", stages):
        train_clean = denoise(dae, balanced.features)
    with stage("train-classifier", stages):
        clf = train_classifier(train_clean, balanced.labels, cfg.clf_train())
    with stage("evaluate", stages):
        rows = threshold_sweep(clf, dae, test.features, test.labels, cfg.thresholds)
    counts = {"train": train.class_counts(), "oversampled": balanced.class_counts(), "test": test.class_counts()}
    report = EvaluationReport("model2", stages, cfg, counts, rows)
    if cfg.out_dir:
        with stage("save", stages):
            out = Path(cfg.out_dir) / "model2"
            save_models(out, dae, clf)
            report.write(out)
    return PipelineResult(report, train, test, clf, dae, balanced)


def save_models(directory: str | Path, dae: DaeModel | None, clf: ClassifierModel) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if dae is not None:
        save_dae(directory / DAE_FILE, dae)
    save_classifier(directory / CLASSIFIER_FILE, clf)


def load_models(directory: str | Path) -> tuple[DaeModel | None, ClassifierModel]:
    """Load the classifier and, when present, the autoencoder saved next to it."""
    directory = Path(directory)
    dae_path = directory / DAE_FILE
    dae = load_dae(dae_path) if dae_path.exists() else None
    return dae, load_classifier(directory / CLASSIFIER_FILE)
