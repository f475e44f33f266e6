"""Typed INI configuration with strict key checking.

Every section has defaults, so a config file only lists what it changes.
Lists are comma separated. Unknown sections or keys are rejected with the
offending name and line in the message.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields

from ..errors import ConfigError, SeqvarError
from ..priors import Hyperprior, MeanPrior, VariancePrior


def _ints(*v):
    return field(default_factory=lambda: list(v))


@dataclass
class ModelSection:
    alpha: float = 0.5
    sigma0_sq: float = 1.0


@dataclass
class BenchConfig:
    n_values: list = _ints(10, 100, 1000)
    t_values: list = _ints(0.0, 1.0, 2.0, 5.0)
    reps: int = 2000
    seed: int = 12345
    estimators: list = _ints("adjusted_profile", "switching", "map_limit", "mean_limit")
    plug_mode: list = _ints("empirical", "oracle")
    chunk_size: int = 250


@dataclass
class BvmSection:
    n_values: list = _ints(40, 200, 1000)
    mu: float = 0.5
    mu_large: float = 2.0
    n_large: int = 1000
    reps: int = 50
    seed: int = 4242


@dataclass
class InconsistencySection:
    n_values: list = _ints(100, 1000, 10000)
    sigma0_sq: float = 25.0
    reps: int = 50
    seed: int = 777
    fallback_mu: float = 7.0
    score_points: int = 17


@dataclass
class ContractionSection:
    n_values: list = _ints(100, 1000, 10000)
    mu: float = 1.0
    M: float = 20.0
    reps: int = 50
    seed: int = 99


@dataclass
class BiasSweepSection:
    n: int = 1000
    theta_sq_values: list = _ints(0.25, 0.5, 1.0, 2.0, 4.0)
    mu_bar_sq_values: list = _ints(0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass
class DensitySection:
    kind: str = "mixture"
    n: int = 200
    mu: float = 0.5
    seed: int = 1
    theta_sq: float = 1.0
    plug_mode: str = "oracle"


@dataclass
class SampleLimitSection:
    n: int = 1000
    mu: float = 0.5
    count: int = 100000
    seed: int = 2
    plug_mode: str = "oracle"


@dataclass
class PriorSection:
    family: str
    params: list


def _prior(family, *params):
    return field(default_factory=lambda: PriorSection(family, list(params)))


@dataclass
class Config:
    model: ModelSection = field(default_factory=ModelSection)
    bench: BenchConfig = field(default_factory=BenchConfig)
    bvm: BvmSection = field(default_factory=BvmSection)
    inconsistency: InconsistencySection = field(default_factory=InconsistencySection)
    contraction: ContractionSection = field(default_factory=ContractionSection)
    bias_sweep: BiasSweepSection = field(default_factory=BiasSweepSection)
    density: DensitySection = field(default_factory=DensitySection)
    sample_limit: SampleLimitSection = field(default_factory=SampleLimitSection)
    nu: PriorSection = _prior("cauchy", 1.0)
    pi: PriorSection = _prior("exponential", 1.0)
    gamma: PriorSection = _prior("exponential", 1.0)

    def mean_prior(self):
        return _build(MeanPrior, self.nu, "prior.nu")

    def variance_prior(self):
        return _build(VariancePrior, self.pi, "prior.pi")

    def hyperprior(self):
        return _build(Hyperprior, self.gamma, "prior.gamma")


def _build(cls, sec, name):
    try:
        return cls(sec.family, tuple(sec.params))
    except SeqvarError as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


_SECTION_NAMES = {
    "model": "model", "bench": "bench", "bvm": "bvm", "inconsistency": "inconsistency",
    "contraction": "contraction", "bias_sweep": "bias_sweep", "density": "density",
    "sample_limit": "sample_limit", "prior.nu": "nu", "prior.pi": "pi", "prior.gamma": "gamma",
}

# element types of list-valued keys, by field name
_LIST_TYPES = {
    "n_values": int, "t_values": float, "estimators": str, "plug_mode": str,
    "theta_sq_values": float, "mu_bar_sq_values": float, "params": float,
}


def _parse_value(raw, default, key, where):
    try:
        if isinstance(default, list):
            elem = _LIST_TYPES.get(key, str)
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return [elem(s) for s in items]
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false"):
                raise ValueError(raw)
            return low == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {key} = {raw!r}") from exc


def _format_value(v):
    if isinstance(v, list):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _line_of(text_lines, section, key=None):
    cur = None
    for i, line in enumerate(text_lines, start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            if key is None and cur == section:
                return i
        elif key is not None and cur == section and s.split("=", 1)[0].strip() == key:
            return i
    return "?"


def parse_config(text, source="<string>"):
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    lines = text.splitlines()
    cfg = Config()
    for sec in cp.sections():
        if sec not in _SECTION_NAMES:
            raise ConfigError(f"{source}:{_line_of(lines, sec)}: unknown section [{sec}]")
        target = getattr(cfg, _SECTION_NAMES[sec])
        names = {f.name: f for f in fields(target)}
        for key, raw in cp.items(sec):
            where = f"{source}:{_line_of(lines, sec, key)} [{sec}]"
            if key not in names:
                raise ConfigError(f"{where}: unknown key {key!r}")
            default = getattr(target, key)
            setattr(target, key, _parse_value(raw, default, key, where))
    validate(cfg, source)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def dump_config(cfg: Config):
    out = []
    for sec, attr in _SECTION_NAMES.items():
        out.append(f"[{sec}]")
        for f in fields(getattr(cfg, attr)):
            out.append(f"{f.name} = {_format_value(getattr(getattr(cfg, attr), f.name))}")
        out.append("")
    return "\n".join(out)


def write_config(cfg: Config, path):
    with open(path, "w") as fh:
        fh.write(dump_config(cfg))


def validate(cfg: Config, source="<config>"):
    def bad(msg):
        raise ConfigError(f"{source}: {msg}")

    if not 0.0 <= cfg.model.alpha <= 1.0:
        bad("model.alpha must lie in [0, 1]")
    if not cfg.model.sigma0_sq > 0:
        bad("model.sigma0_sq must be positive")
    b = cfg.bench
    if b.reps < 2:
        bad("bench.reps must be at least 2")
    if b.chunk_size < 1:
        bad("bench.chunk_size must be positive")
    if not b.n_values or any(n < 2 for n in b.n_values):
        bad("bench.n_values must be integers >= 2")
    from ..estimators import KINDS, PLUG_MODES

    for e in b.estimators:
        if e not in KINDS:
            bad(f"bench.estimators: unknown estimator {e!r}")
    for m in b.plug_mode:
        if m not in PLUG_MODES:
            bad(f"bench.plug_mode: unknown mode {m!r}")
    for sec in (cfg.bvm, cfg.inconsistency, cfg.contraction):
        if sec.reps < 1:
            bad("experiment reps must be positive")
    for attr in ("seed",):
        for sec in (b, cfg.bvm, cfg.inconsistency, cfg.contraction, cfg.density, cfg.sample_limit):
            if getattr(sec, attr) < 0:
                bad("seeds must be non-negative")
    cfg.mean_prior()
    cfg.variance_prior()
    cfg.hyperprior()
    return cfg


def replace(cfg: Config, **changes):
    return dataclasses.replace(cfg, **changes)
