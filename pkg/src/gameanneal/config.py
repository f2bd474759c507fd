"""Experiment configuration: a JSON-backed schema with strict validation.

Every constant an experiment depends on lives here, including all seeds, so
a config file pins a run completely.  Validation is field-level and strict:
unknown keys are rejected and error messages name the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import json

from . import games, topology
from .noise import GradientNoise, NoiseModel
from .schedules import ScheduleSet
from .trace import config_fingerprint

GAME_SIZES = {"example1": 2, "ev": 10, "doublewell": 1}
METHODS = ("daa", "daag", "centralized")
NETWORK_MODES = ("fixed-pool", "complete", "single-graph", "fresh-er")


class ConfigError(ValueError):
    def __init__(self, fld, message):
        self.field = fld
        super().__init__(f"config field '{fld}': {message}")


@dataclass(frozen=True)
class GameSpec:
    name: str = "example1"
    seed: int = 0


@dataclass(frozen=True)
class NetworkSpec:
    mode: str = "complete"
    n: int = 2
    pool_size: int = 50
    p_range: tuple = (0.1, 0.2)
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    game: GameSpec = GameSpec()
    network: NetworkSpec = NetworkSpec()
    method: str = "daa"
    schedule: ScheduleSet = ScheduleSet()
    noise: NoiseModel = NoiseModel()
    horizon: int = 1000
    record_stride: int = 1
    replicates: int = 1
    seed: int = 0
    init_box: tuple = (-5.0, 5.0)
    diagnostic_tau: float = 0.0
    tail_fraction: float = 0.1
    baseline: str = "daag"
    output_dir: str = "out"

    # -- validation ---------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        if self.game.name not in GAME_SIZES:
            raise ConfigError("game.name", f"unknown game {self.game.name!r}")
        if self.game.seed < 0:
            raise ConfigError("game.seed", "must be a nonnegative integer")
        n = GAME_SIZES[self.game.name]
        if self.network.mode not in NETWORK_MODES:
            raise ConfigError("network.mode", f"must be one of {NETWORK_MODES}")
        if self.network.n != n:
            raise ConfigError("network.n", f"must equal the game's agent count {n}")
        if self.network.mode in ("fixed-pool", "fresh-er"):
            lo, hi = self.network.p_range
            if not (0.0 <= lo <= hi <= 1.0):
                raise ConfigError("network.p_range", "must satisfy 0 <= lo <= hi <= 1")
            if self.network.pool_size < 1:
                raise ConfigError("network.pool_size", "must be >= 1")
        if self.network.seed < 0:
            raise ConfigError("network.seed", "must be a nonnegative integer")
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {METHODS}")
        if self.baseline not in METHODS:
            raise ConfigError("baseline", f"must be one of {METHODS}")
        try:
            ScheduleSet(self.schedule.c_alpha, self.schedule.c_beta, self.schedule.c_gamma,
                        self.schedule.tau_beta, self.schedule.k_guard)
        except ValueError as exc:
            raise ConfigError("schedule", str(exc)) from None
        try:
            NoiseModel(self.noise.gradient, self.noise.annealing)
        except ValueError as exc:
            raise ConfigError("noise", str(exc)) from None
        if self.horizon < 0:
            raise ConfigError("horizon", "must be >= 0")
        if self.record_stride < 1:
            raise ConfigError("record_stride", "must be >= 1")
        if self.replicates < 1:
            raise ConfigError("replicates", "must be >= 1")
        seed_parts = self.seed if isinstance(self.seed, (tuple, list)) else (self.seed,)
        if not all(isinstance(s, int) and s >= 0 for s in seed_parts):
            raise ConfigError("seed", "must be a nonnegative integer (or tuple of them)")
        lo, hi = self.init_box
        if not (lo <= hi) or not _finite(lo) or not _finite(hi):
            raise ConfigError("init_box", "must be a finite [lo, hi] with lo <= hi")
        admissible = 0.5 - self.schedule.tau_beta
        if not (0.0 <= self.diagnostic_tau < admissible):
            raise ConfigError(
                "diagnostic_tau",
                f"must lie in [0, 1/2 - tau_beta) = [0, {admissible}) for tau_beta="
                f"{self.schedule.tau_beta}",
            )
        if not (0.0 < self.tail_fraction <= 1.0):
            raise ConfigError("tail_fraction", "must lie in (0, 1]")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            raise ConfigError("output_dir", "must be a non-empty string")
        return self

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["network"]["p_range"] = list(self.network.p_range)
        d["init_box"] = list(self.init_box)
        d["noise"] = {
            "gradient": {"kind": self.noise.gradient.kind, "scale": self.noise.gradient.scale},
            "annealing": self.noise.annealing,
        }
        d["schedule"] = {
            "c_alpha": self.schedule.c_alpha,
            "c_beta": self.schedule.c_beta,
            "c_gamma": self.schedule.c_gamma,
            "tau_beta": self.schedule.tau_beta,
            "k_guard": self.schedule.k_guard,
        }
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        out = {}
        out["game"] = _sub(GameSpec, data.pop("game", {}), "game")
        net = dict(_expect_mapping(data.pop("network", {}), "network"))
        if "p_range" in net:
            net["p_range"] = _pair(net["p_range"], "network.p_range")
        out["network"] = _sub(NetworkSpec, net, "network")
        sched = _expect_mapping(data.pop("schedule", {}), "schedule")
        try:
            out["schedule"] = ScheduleSet(**sched)
        except (TypeError, ValueError) as exc:
            raise ConfigError("schedule", str(exc)) from None
        noise = _expect_mapping(data.pop("noise", {}), "noise")
        grad = _expect_mapping(noise.get("gradient", {}), "noise.gradient")
        try:
            out["noise"] = NoiseModel(
                gradient=GradientNoise(**grad),
                annealing=noise.get("annealing", "gaussian"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("noise", str(exc)) from None
        unknown_noise = set(noise) - {"gradient", "annealing"}
        if unknown_noise:
            raise ConfigError("noise", f"unknown keys {sorted(unknown_noise)}")
        if "init_box" in data:
            data["init_box"] = _pair(data.pop("init_box"), "init_box")
        if isinstance(data.get("seed"), list):
            data["seed"] = tuple(int(s) for s in data["seed"])
        for key in list(data):
            if key not in cls.__dataclass_fields__:
                raise ConfigError(key, "unknown field")
        out.update(data)
        try:
            cfg = cls(**out)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None
        return cfg.validate()

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        """Load from a config file; file-based experiments need horizon >= 1
        (a zero-step run is only meaningful for in-process probing)."""
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("file", f"invalid JSON in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("file", "top-level JSON value must be an object")
        cfg = cls.from_dict(data)
        if cfg.horizon < 1:
            raise ConfigError("horizon", "must be >= 1")
        return cfg

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def fingerprint(self) -> str:
        return config_fingerprint(self.to_dict())

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(**{**_shallow(self), "seed": seed})


def _shallow(cfg: ExperimentConfig) -> dict:
    return {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}


def _finite(t) -> bool:
    return isinstance(t, (int, float)) and t == t and abs(t) != float("inf")


def _pair(value, fld) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(fld, "must be a [lo, hi] pair")
    return (float(value[0]), float(value[1]))


def _expect_mapping(value, fld) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(fld, "must be an object")
    return value


def _sub(cls, data, fld):
    data = _expect_mapping(data, fld)
    unknown = set(data) - set(cls.__dataclass_fields__)
    if unknown:
        raise ConfigError(fld, f"unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(fld, str(exc)) from None


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_game(spec: GameSpec) -> games.GameInstance:
    return games.make_game(spec.name, seed=spec.seed)


def build_network(spec: NetworkSpec) -> topology.NetworkModel:
    if spec.mode == "complete":
        return topology.complete_network(spec.n)
    if spec.mode == "single-graph":
        # One frozen draw from the same family as fixed-pool.
        model = topology.erdos_renyi_pool(spec.n, 1, spec.p_range, seed=spec.seed)
        return topology.NetworkModel(pool=model.pool, mode="single-graph", n=spec.n)
    if spec.mode == "fresh-er":
        return topology.fresh_er_network(spec.n, spec.p_range)
    return topology.erdos_renyi_pool(spec.n, spec.pool_size, spec.p_range, seed=spec.seed)
