"""Run configuration.

Plain INI files with ``[corpus]``, ``[model]``, ``[prompt]``, ``[train]``
and ``[run]`` sections. Precedence, lowest to highest: dataclass defaults,
then the named ``preset``, then the config file, then command-line
overrides.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .data import CorpusConfig
from .prompt import PromptToggles
from .text import DEFAULT_INSTRUCTION


class ConfigError(ValueError):
    pass


# Widths used for the full-scale setting; desk runs keep the small defaults.
PRESETS: dict[str, dict[str, Any]] = {
    "desk": {},
    "large": {"d_h": 512, "d_s": 2048, "d_w": 4096, "lora_rank": 64, "ffn_hidden": 4 * 4096,
              "kja_ffn_hidden": 2 * 512},
}

SECTIONS = {
    "corpus": ("n_total", "split_ratio", "n_scans", "patches", "d_s", "k", "prevalence", "snr", "corpus_seed"),
    "model": ("d_h", "d_w", "d_c", "kja_heads", "kja_depth", "kja_ffn_hidden", "d_r", "layers", "heads",
              "ffn_hidden", "max_len", "lora_rank", "lora_scaling", "activation"),
    "prompt": ("entity_embed", "status_embed", "category_words", "use_M_E", "use_M_I", "alpha_E", "alpha_I",
               "tau", "instruction"),
    "train": ("epochs", "batch_size", "lr", "beta1", "beta2", "weight_decay", "lam", "ema_decay",
              "max_gen_len", "shuffle"),
    "run": ("seed", "preset", "out_dir"),
}


@dataclass
class RunConfig:
    # corpus
    n_total: int = 600
    split_ratio: tuple[int, int, int] = (7, 2, 1)
    n_scans: int = 24
    patches: int = 4
    d_s: int = 32
    k: int = 8
    prevalence: tuple[float, ...] | None = None
    snr: float = 2.0
    corpus_seed: int = 0
    # model
    d_h: int = 32
    d_w: int = 64
    d_c: int = 32
    kja_heads: int = 8
    kja_depth: int = 1
    kja_ffn_hidden: int = 64
    d_r: int | None = None
    layers: int = 2
    heads: int = 4
    ffn_hidden: int = 128
    max_len: int = 256
    lora_rank: int = 4
    lora_scaling: float = 8.0
    activation: str = "gelu"
    # prompt / ablation toggles
    entity_embed: bool = True
    status_embed: bool = True
    category_words: bool = False
    use_M_E: bool = True
    use_M_I: bool = True
    alpha_E: float = 0.9
    alpha_I: float = 0.1
    tau: float = 0.1
    instruction: str = DEFAULT_INSTRUCTION
    # optimisation
    epochs: int = 10
    batch_size: int = 4
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.01
    lam: float = 0.1
    ema_decay: float = 0.99
    max_gen_len: int = 64
    shuffle: bool = True
    # run
    seed: int = 0
    preset: str = "desk"
    out_dir: str = ""
    _sources: list[str] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.status_embed and not self.entity_embed:
            raise ConfigError("status_embed = true requires entity_embed = true")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        for name in ("epochs", "batch_size", "d_h", "d_w", "d_c", "layers", "heads", "kja_heads", "max_len"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.alpha_E < 0 or self.alpha_I < 0:
            raise ConfigError("alpha_E and alpha_I must be non-negative")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError("tau must lie in [0, 1]")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ConfigError("ema_decay must lie in [0, 1)")
        if self.lam < 0:
            raise ConfigError("lam must be non-negative")
        if self.d_h % self.kja_heads:
            raise ConfigError(f"d_h={self.d_h} is not divisible by kja_heads={self.kja_heads}")
        if self.d_w % self.heads:
            raise ConfigError(f"d_w={self.d_w} is not divisible by heads={self.heads}")

    # --- derived views ----------------------------------------------------
    @property
    def toggles(self) -> PromptToggles:
        return PromptToggles(self.entity_embed, self.status_embed, self.category_words)

    @property
    def uses_entities(self) -> bool:
        """Whether any prompt segment depends on the joint-attention branch."""
        return self.entity_embed or self.category_words

    def corpus(self) -> CorpusConfig:
        return CorpusConfig(n_total=self.n_total, split_ratio=self.split_ratio, n_scans=self.n_scans,
                            patches=self.patches, d_s=self.d_s, k=self.k, prevalence=self.prevalence,
                            snr=self.snr, seed=self.corpus_seed)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("_sources")
        return d

    def to_ini(self) -> str:
        d = self.to_dict()
        lines = []
        for section, keys in SECTIONS.items():
            lines.append(f"[{section}]")
            lines += [f"{key} = {_format(d[key])}" for key in keys]
            lines.append("")
        return "\n".join(lines)

    def hash(self) -> str:
        """Content hash of everything except the output location."""
        text = "\n".join(line for line in self.to_ini().splitlines() if not line.startswith("out_dir"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        d = self.to_dict()
        for key, val in overrides.items():
            if key not in d:
                raise ConfigError(f"unknown config key {key!r}")
            d[key] = _coerce(key, val) if isinstance(val, str) else val
        return RunConfig(**d)


def _format(val) -> str:
    if val is None:
        return "none"
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, (tuple, list)):
        return ",".join(_format(v) for v in val)
    return str(val)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    kind = _TYPES[key]
    try:
        if raw.lower() == "none" and "None" in kind:
            return None
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind.startswith("int"):
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind.startswith("tuple[int"):
            return tuple(int(x) for x in raw.replace(":", ",").split(","))
        if kind.startswith("tuple[float"):
            return tuple(float(x) for x in raw.split(","))
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def load_config(path=None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Defaults, then preset, then ``path`` (if any), then ``overrides``."""
    values: dict[str, Any] = {}
    sources = ["defaults"]
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in SECTIONS[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                values[key] = _coerce(key, raw)
        sources.append(str(path))
    overrides = dict(overrides or {})
    preset = overrides.get("preset", values.get("preset", "desk"))
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    merged: dict[str, Any] = dict(PRESETS[preset])
    merged.update(values)
    for key, val in overrides.items():
        if key not in _TYPES or key == "_sources":
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = _coerce(key, val) if isinstance(val, str) else val
    if overrides:
        sources.append("flags")
    cfg = RunConfig(**merged)
    cfg._sources = sources
    return cfg
