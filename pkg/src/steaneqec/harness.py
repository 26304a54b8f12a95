"""Experiment grids, Monte Carlo runs and result files.

A config describes one curve: a code, protocol and initial state sampled at
several round counts.  A preset is a list of configs covering one figure grid.

Config files are YAML, either one mapping or a list of mappings::

    code: color
    protocol: steane_full
    initial_state: zero_L
    rounds: [0, 1, 2, 3]
    noise_profile: two-qubit-only
    noise: {p_2q: 0.02}
    shots: 100000
    seed: 7

Unknown keys are rejected everywhere, including inside ``noise``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np
import yaml

from . import __version__
from .builders import PROTOCOLS, ProtocolError, check_protocol, compose_experiment, postselect_branches
from .codes import make_code
from .engine import run_many
from .noise import PROFILES, NoiseModel
from .protocol import BatchDecoder
from .stats import FidelityEstimate

log = logging.getLogger(__name__)

RESULT_SCHEMA = "steaneqec.results/1"
CSV_FIELDS = (
    "code",
    "distance",
    "protocol",
    "state",
    "round",
    "p_hat",
    "wilson_low",
    "wilson_high",
    "n_success",
    "n_kept",
    "n_discarded",
    "discard_fraction",
)
DISCARD_POLICIES = ("exclude", "include")
FLAG_RULES = ("flag_gated", "literal")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    code: str = "color"
    distance: int = 3
    protocol: str = "steane_full"
    initial_state: str = "zero_L"
    rounds: tuple[int, ...] = (0, 1, 2, 3)
    noise_profile: str = "paper-default"
    noise: dict = field(default_factory=dict)
    shots: int = 10_000
    seed: int = 0
    workers: int | None = None
    # exclude: fidelity over accepted shots; include: every shot counts
    discard_policy: str = "exclude"
    flag_rule: str = "flag_gated"
    # >1 re-prepares a rejected auxiliary state instead of discarding at once
    verification_attempts: int = 1

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(int(r) for r in self.rounds))
        object.__setattr__(self, "noise", dict(self.noise))
        self.validate()

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        try:
            code = make_code(self.code, self.distance)
            check_protocol(code, self.protocol, self.initial_state)
        except (ProtocolError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not self.rounds:
            raise ConfigError("rounds must list at least one round count")
        if min(self.rounds) < 0:
            raise ConfigError("round counts must be non-negative")
        if len(set(self.rounds)) != len(self.rounds):
            raise ConfigError(f"duplicate round counts in {list(self.rounds)}")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.protocol == "flag_postselect" and self.shots < 2 ** max(self.rounds):
            raise ConfigError(f"flag_postselect needs at least 2^rounds = {2 ** max(self.rounds)} shots")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.discard_policy not in DISCARD_POLICIES:
            raise ConfigError(f"discard_policy must be one of {DISCARD_POLICIES}")
        if self.flag_rule not in FLAG_RULES:
            raise ConfigError(f"flag_rule must be one of {FLAG_RULES}")
        if self.verification_attempts < 1:
            raise ConfigError("verification_attempts must be >= 1")
        self.noise_model()

    def noise_model(self) -> NoiseModel:
        if self.noise_profile not in PROFILES:
            raise ConfigError(f"unknown noise profile {self.noise_profile!r}; choose from {sorted(PROFILES)}")
        try:
            return NoiseModel.from_dict(self.noise, base=PROFILES[self.noise_profile])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad noise override: {exc}") from exc

    @property
    def key(self) -> str:
        return f"{self.code}-d{self.distance}/{self.protocol}/{self.initial_state}"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self, include_workers: bool = True) -> dict:
        out = dataclasses.asdict(self)
        out["rounds"] = list(self.rounds)
        if not include_workers:
            out.pop("workers")
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"an experiment config must be a mapping, got {type(data).__name__}")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}; allowed: {sorted(names)}")
        if "noise" in data and not isinstance(data["noise"], dict):
            raise ConfigError("noise must be a mapping of parameter overrides")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_configs(source: str | Path | IO[str]) -> list[ExperimentConfig]:
    """Read one config or a list of configs from a YAML file or stream."""
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    else:
        text = source.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if data is None:
        raise ConfigError("config file is empty")
    items = data if isinstance(data, list) else [data]
    return [ExperimentConfig.from_dict(item) for item in items]


# -- presets -----------------------------------------------------------------

PRESETS = ("fig3", "fig4", "figA6", "figA7")


def preset(name: str, **overrides) -> list[ExperimentConfig]:
    """Experiment grid of a figure preset; ``overrides`` apply to every config."""
    if name == "fig3":
        grid = [
            ExperimentConfig(code=code, distance=d, protocol="steane_half", initial_state="zero_L", rounds=range(6))
            for code in ("bit_flip", "phase_flip")
            for d in (3, 5)
        ]
    elif name in ("fig4", "figA6"):
        profile = "two-qubit-only" if name == "figA6" else "paper-default"
        grid = [
            ExperimentConfig(protocol=p, initial_state=s, rounds=range(4), noise_profile=profile)
            for p in ("steane_full", "flag_adaptive")
            for s in ("zero_L", "plus_L")
        ]
    elif name == "figA7":
        grid = [
            ExperimentConfig(protocol="steane_half", initial_state=s, rounds=range(6))
            for s in ("zero_L", "plus_L")
        ]
    else:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    return [c.replace(**overrides) for c in grid] if overrides else grid


# -- running -----------------------------------------------------------------


def point_seed(seed: int, key: str, rounds: int, branch: int = 0) -> int:
    """Seed of one sampled point, so curves never share a random stream."""
    seq = np.random.SeedSequence([seed, zlib.crc32(key.encode()), rounds, branch])
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class RoundResult:
    rounds: int
    estimate: FidelityEstimate

    def to_dict(self) -> dict:
        return {"round": self.rounds, **self.estimate.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "RoundResult":
        data = dict(data)
        return cls(data.pop("round"), FidelityEstimate.from_dict(data))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list[RoundResult]
    version: str = __version__
    qubits: int = 0
    wall_time: float = 0.0

    def estimate(self, rounds: int) -> FidelityEstimate:
        for p in self.points:
            if p.rounds == rounds:
                return p.estimate
        raise KeyError(f"no estimate for {rounds} rounds")

    @property
    def discard_fractions(self) -> list[float]:
        return [p.estimate.discard_fraction for p in self.points]

    def to_dict(self, include_timing: bool = False) -> dict:
        # worker count and wall time do not affect the estimates and are left
        # out by default so reruns produce identical files
        out = {
            "config": self.config.to_dict(include_workers=False),
            "version": self.version,
            "qubits": self.qubits,
            "points": [p.to_dict() for p in self.points],
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentResult":
        return cls(
            ExperimentConfig.from_dict(data["config"]),
            [RoundResult.from_dict(p) for p in data["points"]],
            data["version"],
            data.get("qubits", 0),
            data.get("wall_time", 0.0),
        )

    def rows(self) -> Iterable[dict]:
        c = self.config
        for p in self.points:
            e = p.estimate
            yield {
                "code": c.code,
                "distance": c.distance,
                "protocol": c.protocol,
                "state": c.initial_state,
                "round": p.rounds,
                "p_hat": e.p_hat,
                "wilson_low": e.wilson_low,
                "wilson_high": e.wilson_high,
                "n_success": e.n_success,
                "n_kept": e.n_kept,
                "n_discarded": e.n_discarded,
                "discard_fraction": e.discard_fraction,
            }


def _split(shots: int, parts: int) -> list[int]:
    base, extra = divmod(shots, parts)
    return [base + (i < extra) for i in range(parts)]


def run_point(config: ExperimentConfig, rounds: int, model: NoiseModel | None = None) -> tuple[FidelityEstimate, int]:
    """Sample and decode one round count; returns the estimate and qubit count."""
    model = model or config.noise_model()
    require_flag = config.flag_rule == "flag_gated"
    include = config.discard_policy == "include"
    if config.protocol == "flag_postselect":
        # each remeasurement pattern is its own circuit; shots are shared equally
        variants = postselect_branches(rounds)
        allocation = _split(config.shots, len(variants))
    else:
        variants, allocation = [None], [config.shots]
    succ = denom = disc = 0
    qubits = 0
    for index, (branch, shots) in enumerate(zip(variants, allocation)):
        exp = compose_experiment(
            config.code,
            config.protocol,
            config.initial_state,
            rounds,
            config.distance,
            branch=branch,
            attempts=config.verification_attempts,
        )
        qubits = max(qubits, exp.circuit.n_qubits)
        batch = run_many(exp.circuit, model, shots, point_seed(config.seed, config.key, rounds, index), config.workers)
        s, d, x = BatchDecoder(exp.layout, require_flag).decode(batch).counts(include)
        succ, denom, disc = succ + s, denom + d, disc + x
    return FidelityEstimate.from_counts(succ, denom, disc), qubits


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    model = config.noise_model()
    start = time.perf_counter()
    points = []
    qubits = 0
    for r in config.rounds:
        t0 = time.perf_counter()
        est, n = run_point(config, r, model)
        qubits = max(qubits, n)
        log.info(
            "%s rounds=%d F=%.4f [%.4f, %.4f] kept=%d discarded=%d (%.2fs)",
            config.key, r, est.p_hat, est.wilson_low, est.wilson_high,
            est.n_kept, est.n_discarded, time.perf_counter() - t0,
        )
        points.append(RoundResult(r, est))
    return ExperimentResult(config, points, qubits=qubits, wall_time=time.perf_counter() - start)


def run_all(configs: Sequence[ExperimentConfig]) -> list[ExperimentResult]:
    return [run_experiment(c) for c in configs]


# -- output ------------------------------------------------------------------


def results_to_json(results: Sequence[ExperimentResult], include_timing: bool = False) -> str:
    doc = {"schema": RESULT_SCHEMA, "results": [r.to_dict(include_timing) for r in results]}
    return json.dumps(doc, indent=2) + "\n"


def results_from_json(text: str) -> list[ExperimentResult]:
    doc = json.loads(text)
    if doc.get("schema") != RESULT_SCHEMA:
        raise ValueError(f"unsupported result schema {doc.get('schema')!r}")
    return [ExperimentResult.from_dict(r) for r in doc["results"]]


def results_to_csv(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for result in results:
        writer.writerows(result.rows())
    return buf.getvalue()


def emit_results(
    results: ExperimentResult | Sequence[ExperimentResult],
    fmt: str = "json",
    out: str | Path | IO[str] | None = None,
    include_timing: bool = False,
) -> str:
    """Render results as JSON or CSV; writes to ``out`` when given and returns the text."""
    if isinstance(results, ExperimentResult):
        results = [results]
    if fmt == "json":
        text = results_to_json(results, include_timing)
    elif fmt == "csv":
        text = results_to_csv(results)
    else:
        raise ValueError(f"format must be json or csv, got {fmt!r}")
    if out is None:
        return text
    if isinstance(out, (str, Path)):
        Path(out).write_text(text)
    else:
        out.write(text)
    return text


# -- fault-tolerance suite ---------------------------------------------------

FT_SUITE = (
    ("color", 3, "steane_full", "zero_L"),
    ("color", 3, "steane_full", "plus_L"),
    ("color", 3, "steane_half", "zero_L"),
    ("color", 3, "steane_half", "plus_L"),
    ("bit_flip", 3, "steane_half", "zero_L"),
    ("phase_flip", 3, "steane_half", "zero_L"),
    ("bit_flip", 5, "steane_half", "zero_L"),
    ("phase_flip", 5, "steane_half", "zero_L"),
    ("color", 3, "flag_adaptive", "zero_L"),
    ("color", 3, "flag_adaptive", "plus_L"),
)


def fault_tolerance_suite(rounds: int = 1, include_idle: bool = True) -> list:
    """Exhaustive single-fault check of every shipped protocol circuit."""
    from .faults import check_fault_tolerance

    reports = []
    for code, d, protocol, state in FT_SUITE:
        exp = compose_experiment(code, protocol, state, rounds, d)
        name = f"{code}-d{d}/{protocol}/{state}/r{rounds}"
        reports.append(check_fault_tolerance(exp, name, include_idle))
    return reports
