"""Input corruption and the 29-22-15-10-15-22-29 denoising autoencoder."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn

DAE_WIDTHS = (29, 22, 15, 10, 15, 22, 29)
NOISE_KINDS = ("gaussian", "salt_pepper")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"
    sigma: float = 0.5
    rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 <= self.rate <= 1:
            raise ValueError(f"rate must be in [0, 1], got {self.rate}")

    def to_record(self) -> dict[str, str]:
        return {
            "noise_kind": self.kind,
            "noise_sigma": format(self.sigma, ".17g"),
            "noise_rate": format(self.rate, ".17g"),
            "noise_seed": str(self.seed),
        }

    @classmethod
    def from_record(cls, rec: dict[str, str]) -> "NoiseSpec":
        return cls(rec["noise_kind"], float(rec["noise_sigma"]), float(rec["noise_rate"]), int(rec["noise_seed"]))


def corrupt(x, noise: NoiseSpec, col_min=None, col_max=None) -> np.ndarray:
    """Return a corrupted copy of ``x``.

    Salt-and-pepper replaces entries by their column's min or max; pass
    ``col_min``/``col_max`` to use bounds from another matrix (the training set).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    rng = np.random.default_rng(noise.seed)
    if noise.kind == "gaussian":
        if noise.sigma == 0:
            return x.copy()
        return x + rng.normal(0.0, noise.sigma, size=x.shape)
    lo = x.min(axis=0) if col_min is None else np.asarray(col_min, dtype=np.float64)
    hi = x.max(axis=0) if col_max is None else np.asarray(col_max, dtype=np.float64)
    hit = rng.random(x.shape) < noise.rate
    salt = rng.random(x.shape) < 0.5
    out = x.copy()
    extreme = np.where(salt, np.broadcast_to(hi, x.shape), np.broadcast_to(lo, x.shape))
    out[hit] = extreme[hit]
    return out


@dataclass
class DaeModel:
    params: nn.NetworkParams
    noise: NoiseSpec = NoiseSpec()
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.params.widths != DAE_WIDTHS:
            raise ValueError(f"autoencoder widths must be {DAE_WIDTHS}, got {self.params.widths}")


def dae_specs() -> list[nn.LayerSpec]:
    w = DAE_WIDTHS
    return [nn.LayerSpec(w[i], w[i + 1], "relu" if i < len(w) - 2 else "linear") for i in range(len(w) - 1)]


def init_dae(seed: int = 0, noise: NoiseSpec = NoiseSpec()) -> DaeModel:
    return DaeModel(nn.init_network(dae_specs(), seed), noise)


def _epoch_noise(noise: NoiseSpec, epoch: int) -> NoiseSpec:
    seq = np.random.SeedSequence([noise.seed, epoch])
    return NoiseSpec(noise.kind, noise.sigma, noise.rate, int(seq.generate_state(1)[0]))


def train_dae(clean, noise: NoiseSpec, cfg: nn.TrainConfig) -> DaeModel:
    """Fit the autoencoder to map freshly corrupted rows back to the clean rows each epoch."""
    x = np.asarray(clean, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training data is empty")
    if x.shape[1] != DAE_WIDTHS[0]:
        raise ValueError(f"autoencoder input must have {DAE_WIDTHS[0]} columns, got {x.shape[1]}")
    col_min, col_max = x.min(axis=0), x.max(axis=0)
    start = nn.init_network(dae_specs(), cfg.seed)
    params, history = nn.train(
        start,
        x,
        x,
        "mse",
        cfg,
        epoch_inputs=lambda epoch: corrupt(x, _epoch_noise(noise, epoch), col_min, col_max),
    )
    return DaeModel(params, noise, history)


def denoise(model: DaeModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != DAE_WIDTHS[0]:
        raise ValueError(f"denoise expects {DAE_WIDTHS[0]} columns, got shape {x.shape}")
    return nn.predict(model.params, x)


def save_dae(path, model: DaeModel) -> None:
    nn.save_network(path, model.params, {"kind": "dae", **model.noise.to_record()})


def load_dae(path) -> DaeModel:
    params, meta = nn.load_network(path)
    if meta.get("kind") != "dae":
        raise nn.ModelFormatError(f"{path} does not hold an autoencoder")
    try:
        noise = NoiseSpec.from_record(meta)
    except (KeyError, ValueError) as exc:
        raise nn.ModelFormatError(f"{path}: bad noise record ({exc})") from None
    return DaeModel(params, noise)
