"""Run configuration: flat INI sections, one per concern.

Example::

    [run]
    experiment = td_divergence      ; td_divergence | avg_reward_estimate | performance
    agent = q                       ; q | diff_q | centered_q | a2c
    approximator = linear           ; tabular | linear | sigmoid | mlp
    env = pendulum                  ; pendulum | random_mdp | swap | ring
    seeds = 1,2,3,4
    total_steps = 20000
    metric_window = 500
    output_dir = runs/linear

    [agent]
    alpha = 2e-4
    optimizer = sgd
    batch_size = 1
    replay = false
    rule = implicit
    r_bar0 = -0.25,0.0,0.25

    [features]
    num_tilings = 32
    tiles_per_dim = 8
    normalize = false

    [network]
    hidden = 32,32

    [env]
    continuing = false
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field

from ..agents.dqn import AgentConfig
from ..errors import ConfigError

EXPERIMENTS = ("td_divergence", "avg_reward_estimate", "performance")
AGENTS = ("q", "diff_q", "centered_q", "a2c")
APPROXIMATORS = ("tabular", "linear", "sigmoid", "mlp")
ENVS = ("pendulum", "random_mdp", "swap", "ring")

OUTPUT_ENV_VAR = "TDLAB_OUTPUT_DIR"


@dataclass(frozen=True)
class FeatureConfig:
    num_tilings: int = 32
    tiles_per_dim: int = 8
    normalize: bool = False
    grid_bins: int = 32  # tabular pendulum discretization


@dataclass(frozen=True)
class EnvConfig:
    continuing: bool = False
    num_states: int = 10
    num_actions: int = 3
    mdp_seed: int = 1
    gamma: float = 0.9


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "td_divergence"
    agent: str = "q"
    approximator: str = "linear"
    env: str = "pendulum"
    seeds: tuple[int, ...] = (1, 2, 3, 4)
    total_steps: int = 20_000
    metric_window: int = 500
    output_dir: str = "runs"
    agent_config: AgentConfig = field(default_factory=AgentConfig)
    rule: str = "implicit"
    r_bar0: tuple[float, ...] = (0.0,)
    replay: bool = True
    hidden: tuple[int, ...] = (32, 32)
    actor_hidden: tuple[int, ...] = (32, 32)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    env_config: EnvConfig = field(default_factory=EnvConfig)

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def validate(cfg: RunConfig) -> None:
    """Reject unknown names and incompatible agent/approximator/environment combinations."""
    for value, allowed, what in ((cfg.experiment, EXPERIMENTS, "experiment"), (cfg.agent, AGENTS, "agent"),
                                 (cfg.approximator, APPROXIMATORS, "approximator"), (cfg.env, ENVS, "env")):
        if value not in allowed:
            raise ConfigError(f"unknown {what} {value!r}; expected one of {allowed}")
    if not cfg.seeds:
        raise ConfigError("seeds must be non-empty")
    if cfg.total_steps <= 0 or cfg.metric_window <= 0:
        raise ConfigError("total_steps and metric_window must be positive")
    if cfg.rule not in ("implicit", "explicit", "smallest_magnitude", "none"):
        raise ConfigError(f"unknown rule {cfg.rule!r}")
    episodic = cfg.env == "pendulum" and not cfg.env_config.continuing
    if cfg.agent in ("diff_q", "centered_q") and episodic:
        raise ConfigError(f"{cfg.agent} needs a continuing task; set [env] continuing = true")
    if cfg.agent == "diff_q" and cfg.agent_config.gamma != 1.0:
        raise ConfigError("diff_q uses undiscounted targets; set [agent] gamma = 1")
    if cfg.agent == "a2c":
        if cfg.env != "pendulum":
            raise ConfigError("a2c runs on the continuous-action pendulum only")
        if cfg.approximator not in ("linear", "mlp"):
            raise ConfigError("a2c critic must be linear or mlp")
        if cfg.rule not in ("implicit", "explicit"):
            raise ConfigError("a2c advantage rule must be implicit or explicit")
    if cfg.approximator == "tabular" and cfg.agent != "a2c":
        if cfg.agent_config.batch_size != 1 or cfg.replay:
            raise ConfigError("tabular agents update online: batch_size = 1, replay = false")
    if cfg.experiment == "avg_reward_estimate" and cfg.agent not in ("diff_q", "centered_q"):
        raise ConfigError("avg_reward_estimate needs an average-reward agent (diff_q or centered_q)")
    if not cfg.replay and cfg.agent_config.batch_size != 1:
        raise ConfigError("online updates (replay = false) use batch_size = 1")


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(p) for p in raw.replace(";", ",").split(",") if p.strip())


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.replace(";", ",").split(",") if p.strip())


def _coerce(cls, section: configparser.SectionProxy | dict, skip=()):
    kw = {}
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    for key, raw in section.items():
        if key in skip:
            continue
        if key not in types:
            raise ConfigError(f"unknown key {key!r} for {cls.__name__}")
        t = str(types[key])
        try:
            if "bool" in t:
                kw[key] = str(raw).strip().lower() in ("1", "true", "yes", "on")
            elif "int" in t and "None" not in t:
                kw[key] = int(float(raw))
            elif "float" in t:
                kw[key] = float(raw)
            else:
                kw[key] = str(raw).strip()
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return kw


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    run = dict(cp["run"]) if cp.has_section("run") else {}
    agent = dict(cp["agent"]) if cp.has_section("agent") else {}
    kw = {}
    try:
        for key in ("experiment", "agent", "approximator", "env", "output_dir"):
            if key in run:
                kw[key] = run.pop(key).strip()
        if "seeds" in run:
            kw["seeds"] = _ints(run.pop("seeds"))
        for key in ("total_steps", "metric_window"):
            if key in run:
                kw[key] = int(float(run.pop(key)))
        if run:
            raise ConfigError(f"unknown [run] keys: {sorted(run)}")
        if "rule" in agent:
            kw["rule"] = agent.pop("rule").strip()
        if "r_bar0" in agent:
            kw["r_bar0"] = _floats(agent.pop("r_bar0"))
        if "replay" in agent:
            kw["replay"] = agent.pop("replay").strip().lower() in ("1", "true", "yes", "on")
        if cp.has_section("network"):
            net = dict(cp["network"])
            if "hidden" in net:
                kw["hidden"] = _ints(net.pop("hidden"))
            if "actor_hidden" in net:
                kw["actor_hidden"] = _ints(net.pop("actor_hidden"))
            if net:
                raise ConfigError(f"unknown [network] keys: {sorted(net)}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    kw["agent_config"] = AgentConfig(**_coerce(AgentConfig, agent))
    if cp.has_section("features"):
        kw["features"] = FeatureConfig(**_coerce(FeatureConfig, cp["features"]))
    if cp.has_section("env"):
        kw["env_config"] = EnvConfig(**_coerce(EnvConfig, cp["env"]))
    extra = set(cp.sections()) - {"run", "agent", "features", "network", "env"}
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")
    return RunConfig(**kw)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)


def resolve_output_dir(cfg: RunConfig, override: str | None = None) -> str:
    """CLI flag beats the environment variable, which beats the config file."""
    return override or os.environ.get(OUTPUT_ENV_VAR) or cfg.output_dir


def parse_grid(text: str) -> dict[str, tuple[str, ...]]:
    """Sweep grid: ``[grid]`` section mapping ``section.key`` to comma-separated values."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if not cp.has_section("grid"):
        raise ConfigError("grid file needs a [grid] section")
    out = {}
    for key, raw in cp["grid"].items():
        if "." not in key:
            raise ConfigError(f"grid key {key!r} must be section.key")
        out[key] = tuple(v.strip() for v in raw.split(",") if v.strip())
    return out


def apply_overrides(text: str, overrides: dict[str, str]) -> str:
    """Return config text with ``section.key = value`` overrides applied."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    for dotted, value in overrides.items():
        section, key = dotted.split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp[section][key] = value
    lines = []
    for section in cp.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in cp[section].items())
        lines.append("")
    return "\n".join(lines)
