from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..errors import ConfigurationError

ARCHITECTURES = ("tsmixer", "tcn", "itransformer")
MODES = ("vanilla", "air", "timemmd")

# variant prefix -> (mode, air_on_features, air_on_predictor, vq_enabled)
VARIANTS = {
    "vanilla": ("vanilla", False, False, False),
    "air-f": ("air", True, False, False),
    "air-fp": ("air", True, True, False),
    "air": ("air", True, True, True),
    "timemmd": ("timemmd", False, False, False),
}
MODEL_IDS = tuple(f"{v}-{a}" for a in ARCHITECTURES for v in VARIANTS)


@dataclass(frozen=True)
class ModelConfig:
    architecture: str
    mode: str
    channels: int
    targets: tuple[int, ...] = (0,)
    lookback: int = 20
    horizon: int = 20
    latent: int = 32
    codebook_size: int = 16
    codebook_scale: float = 0.5          # std of the initial codebook logits
    blocks: int = 2
    d_model: int = 64
    heads: int = 4
    ffn_hidden: int = 128
    kernel: int = 3
    dilations: tuple[int, ...] = (1, 2, 4)
    embedding_dim: int = 64
    description_dim: int | None = None   # None disables channel-description fusion
    description_proj: int = 16
    generator_hidden: int = 256
    fusion_hidden: int = 256
    rescale_routing: bool = False
    # routing switches; None resolves to "on in air mode, off otherwise"
    air_on_features: bool | None = None
    air_on_predictor: bool | None = None
    vq_enabled: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "dilations", tuple(int(d) for d in self.dilations))
        air = self.mode == "air"
        for flag in ("air_on_features", "air_on_predictor", "vq_enabled"):
            if getattr(self, flag) is None:
                object.__setattr__(self, flag, air)
        self.validate()

    def validate(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ConfigurationError(f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.channels < 1 or self.lookback < 1 or self.horizon < 1:
            raise ConfigurationError("channels, lookback and horizon must be positive")
        if not self.targets or any(not 0 <= t < self.channels for t in self.targets):
            raise ConfigurationError(f"targets {self.targets} must be a non-empty subset of [0, {self.channels})")
        if len(set(self.targets)) != len(self.targets):
            raise ConfigurationError(f"duplicate target indices {self.targets}")
        if self.mode != "air" and (self.air_on_features or self.air_on_predictor or self.vq_enabled):
            raise ConfigurationError(f"routing flags require mode 'air', got mode {self.mode!r}")
        if self.mode == "air" and not (self.air_on_features or self.air_on_predictor):
            raise ConfigurationError("air mode needs air_on_features or air_on_predictor")
        if self.latent < 1 or self.codebook_size < 1 or self.blocks < 1:
            raise ConfigurationError("latent, codebook_size and blocks must be >= 1")
        if not self.codebook_scale > 0:
            raise ConfigurationError("codebook_scale must be positive")
        if self.d_model % self.heads:
            raise ConfigurationError(f"d_model={self.d_model} not divisible by heads={self.heads}")
        if self.kernel < 1 or not self.dilations or min(self.dilations) < 1:
            raise ConfigurationError("kernel and dilations must be positive")

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @property
    def uses_text(self) -> bool:
        return self.mode != "vanilla"

    @property
    def model_id(self) -> str:
        flags = (self.mode, self.air_on_features, self.air_on_predictor, self.vq_enabled)
        for name, spec in VARIANTS.items():
            if spec == flags:
                return f"{name}-{self.architecture}"
        return f"air-custom-{self.architecture}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["targets"] = list(self.targets)
        d["dilations"] = list(self.dilations)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)

    def with_(self, **kw) -> "ModelConfig":
        return replace(self, **kw)


def parse_model_id(model_id: str) -> tuple[str, str]:
    """``"air-fp-tsmixer"`` -> ``("air-fp", "tsmixer")``."""
    for arch in ARCHITECTURES:
        suffix = "-" + arch
        if model_id.endswith(suffix):
            variant = model_id[: -len(suffix)]
            if variant in VARIANTS:
                return variant, arch
    raise ConfigurationError(
        f"unknown model id {model_id!r}; expected <variant>-<architecture> with variant in "
        f"{sorted(VARIANTS)} and architecture in {ARCHITECTURES}"
    )


def config_for_model_id(model_id: str, channels: int, targets, **overrides) -> ModelConfig:
    variant, arch = parse_model_id(model_id)
    mode, on_f, on_p, vq = VARIANTS[variant]
    return ModelConfig(architecture=arch, mode=mode, channels=channels, targets=tuple(targets),
                       air_on_features=on_f, air_on_predictor=on_p, vq_enabled=vq, **overrides)
