"""Experiment configuration: INI-style files parsed into plain structures.

A config has an [experiment] section, a [domain] section, a [target]
section, and one [kernel.<name>] section per sampler to run. Values are
kept as primitives (dicts, tuples, numbers) so configs pickle cleanly into
worker processes and serialize into run manifests. See the annotated files
under configs/ for the full schema.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .errors import ConfigError
from .geometry import BallBarrier, Barrier, PolytopeBarrier
from .samplers import DIVERGENCE_MODES, KERNEL_NAMES, KernelConfig
from .targets import Target, bimodal_target, gaussian_box_target, standard_gaussian_target

KNOWN_FUNCTIONALS = ("E_norm", "E_norm_sq")

_REQUIRED = object()


@dataclass(frozen=True)
class KernelRunSpec:
    """One sampler's settings as parsed; h_max None means autotune first."""

    name: str
    kind: str
    h_max: float | None
    h_init: float
    target_acceptance: float
    tune_iters: int
    epsilon: float
    beta: float
    randomize_step: bool
    divergence_mode: str
    dt: float | None
    total_time: float | None
    record_every: float | None

    def kernel_config(self, h_resolved: float) -> KernelConfig:
        """KernelConfig with the (possibly tuned) step size filled in."""
        return KernelConfig(kernel_name=self.kind, h_max=h_resolved, epsilon=self.epsilon,
                            beta=self.beta, randomize_step=self.randomize_step,
                            divergence_mode=self.divergence_mode)

    @property
    def needs_tuning(self) -> bool:
        return self.kind != "unadjusted_dl" and self.h_max is None


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated experiment description."""

    experiment_id: str
    chains: int
    iterations: int
    warmup: int
    thin: int
    master_seed: int
    output_dir: str | None
    initial_point: tuple[float, ...] | None
    ground_truth: tuple[str, ...]
    domain: dict[str, Any]
    target: dict[str, Any]
    kernels: tuple[KernelRunSpec, ...]

    def with_overrides(self, *, master_seed: int | None = None, chains: int | None = None,
                       iterations: int | None = None,
                       output_dir: str | None = None) -> "ExperimentConfig":
        """Apply CLI-level scale-down or seed overrides."""
        cfg = self
        if master_seed is not None:
            cfg = replace(cfg, master_seed=master_seed)
        if chains is not None:
            cfg = replace(cfg, chains=chains)
        if iterations is not None:
            warmup = min(cfg.warmup, iterations // 2)
            warmup -= warmup % cfg.thin  # keep records aligned to the thinning grid
            cfg = replace(cfg, iterations=iterations, warmup=warmup)
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        _validate(cfg)
        return cfg


def _parse_float_list(text: str) -> list[float]:
    items = text.replace(",", " ").split()
    try:
        return [float(v) for v in items]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def _parse_bounds(text: str) -> list[float]:
    if text.startswith("log:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"log bounds need log:first:last:count, got {text!r}")
        try:
            first, last, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise ConfigError(f"bad log bounds {text!r}") from exc
        return list(np.logspace(np.log10(first), np.log10(last), count))
    return _parse_float_list(text)


def _parse_bool(text: str, context: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{context}: expected a boolean, got {text!r}")


class _Section:
    """Typed accessor over one config section with contextual errors."""

    def __init__(self, parser: configparser.ConfigParser, name: str, source: str) -> None:
        self._name = name
        self._source = source
        if not parser.has_section(name):
            raise ConfigError(f"{source}: missing [{name}] section")
        self._items = dict(parser.items(name))
        self._seen: set[str] = set()

    def _raw(self, key: str, default):
        self._seen.add(key)
        if key in self._items:
            return self._items[key]
        if default is _REQUIRED:
            raise ConfigError(f"{self._source}: [{self._name}] is missing required key {key!r}")
        return None

    def get_str(self, key: str, default=_REQUIRED) -> str | None:
        raw = self._raw(key, default)
        return default if raw is None and default is not _REQUIRED else raw

    def get_int(self, key: str, default=_REQUIRED) -> int | None:
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{self._source}: [{self._name}] {key} must be an integer, got {raw!r}") from exc

    def get_float(self, key: str, default=_REQUIRED) -> float | None:
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{self._source}: [{self._name}] {key} must be a number, got {raw!r}") from exc

    def get_bool(self, key: str, default=_REQUIRED) -> bool | None:
        raw = self._raw(key, default)
        if raw is None:
            return default
        return _parse_bool(raw, f"{self._source}: [{self._name}] {key}")

    def reject_unknown(self) -> None:
        unknown = set(self._items) - self._seen
        if unknown:
            raise ConfigError(
                f"{self._source}: [{self._name}] has unrecognized keys: {', '.join(sorted(unknown))}")


def _parse_domain(section: _Section) -> dict[str, Any]:
    kind = section.get_str("kind")
    if kind == "ball":
        spec = {"kind": "ball", "dimension": section.get_int("dimension"),
                "radius": section.get_float("radius", 1.0)}
    elif kind == "box":
        spec = {"kind": "box", "bounds": _parse_bounds(section.get_str("bounds"))}
    elif kind == "polytope":
        rows_text = section.get_str("rows")
        rows = [_parse_float_list(r) for r in rows_text.split(";") if r.strip()]
        spec = {"kind": "polytope", "rows": rows}
    else:
        raise ConfigError(f"[domain] kind must be ball, box, or polytope, got {kind!r}")
    section.reject_unknown()
    return spec


def _parse_target(section: _Section) -> dict[str, Any]:
    kind = section.get_str("kind")
    beta = section.get_float("beta", 1.0)
    if kind == "bimodal":
        spec = {"kind": "bimodal", "beta": beta,
                "offset": section.get_float("offset", 0.5),
                "stiffness": section.get_float("stiffness", 3.0)}
    elif kind in ("standard_gaussian", "gaussian_box"):
        spec = {"kind": kind, "beta": beta}
    else:
        raise ConfigError(
            f"[target] kind must be standard_gaussian, gaussian_box, or bimodal, got {kind!r}")
    section.reject_unknown()
    return spec


def _parse_kernel(section: _Section, name: str, source: str, domain_kind: str) -> KernelRunSpec:
    kind = section.get_str("kind")
    if kind not in KERNEL_NAMES:
        raise ConfigError(f"{source}: [kernel.{name}] kind must be one of {KERNEL_NAMES}, got {kind!r}")

    epsilon = section.get_float("epsilon", 0.0)
    beta = section.get_float("beta", 1.0)

    if kind == "unadjusted_dl":
        dt = section.get_float("dt")
        total_time = section.get_float("total_time")
        record_every = section.get_float("record_every", 0.1)
        default_mode = "analytic" if domain_kind == "ball" else "finite_difference"
        divergence_mode = section.get_str("divergence_mode", default_mode)
        section.reject_unknown()
        if not (dt > 0.0 and total_time > 0.0 and record_every > 0.0):
            raise ConfigError(f"{source}: [kernel.{name}] dt, total_time, record_every must be positive")
        if record_every < dt:
            raise ConfigError(f"{source}: [kernel.{name}] record_every must be at least dt")
        if divergence_mode not in DIVERGENCE_MODES or divergence_mode == "none":
            raise ConfigError(f"{source}: [kernel.{name}] divergence_mode must be analytic or finite_difference")
        return KernelRunSpec(name=name, kind=kind, h_max=dt, h_init=dt, target_acceptance=0.6,
                             tune_iters=0, epsilon=epsilon, beta=beta, randomize_step=False,
                             divergence_mode=divergence_mode, dt=dt, total_time=total_time,
                             record_every=record_every)

    h_raw = section.get_str("h_max", "tune")
    if h_raw == "tune":
        h_max = None
    else:
        try:
            h_max = float(h_raw)
        except ValueError as exc:
            raise ConfigError(f"{source}: [kernel.{name}] h_max must be a number or 'tune'") from exc
        if not h_max > 0.0:
            raise ConfigError(f"{source}: [kernel.{name}] h_max must be positive")
    h_init = section.get_float("h_init", 0.1)
    target_acceptance = section.get_float("target_acceptance", 0.6)
    tune_iters = section.get_int("tune_iters", 2000)
    randomize_step = section.get_bool("randomize_step", True)
    section.reject_unknown()
    if h_max is None and tune_iters < 1000:
        raise ConfigError(f"{source}: [kernel.{name}] tune_iters must be at least 1000")
    if not (0.0 < target_acceptance <= 1.0):
        raise ConfigError(f"{source}: [kernel.{name}] target_acceptance must be in (0, 1]")
    if not h_init > 0.0:
        raise ConfigError(f"{source}: [kernel.{name}] h_init must be positive")
    return KernelRunSpec(name=name, kind=kind, h_max=h_max, h_init=h_init,
                         target_acceptance=target_acceptance, tune_iters=tune_iters,
                         epsilon=epsilon, beta=beta, randomize_step=randomize_step,
                         divergence_mode="none", dt=None, total_time=None, record_every=None)


def _domain_dimension(domain: dict[str, Any]) -> int:
    if domain["kind"] == "ball":
        return int(domain["dimension"])
    if domain["kind"] == "box":
        return len(domain["bounds"])
    return len(domain["rows"][0])


def _validate(config: ExperimentConfig) -> None:
    if not config.kernels:
        raise ConfigError("at least one [kernel.<name>] section is required")
    if config.chains < 1:
        raise ConfigError(f"chains must be at least 1, got {config.chains}")
    if not (0 <= config.master_seed < 2**64):
        raise ConfigError("master_seed must fit in 64 bits")

    mh_kernels = [k for k in config.kernels if k.kind != "unadjusted_dl"]
    if mh_kernels:
        if config.iterations < 1:
            raise ConfigError("iterations must be positive when a Metropolis kernel is configured")
        if not (0 <= config.warmup < config.iterations):
            raise ConfigError(f"warmup must be in [0, iterations), got {config.warmup}")
        if config.thin < 1:
            raise ConfigError(f"thin must be at least 1, got {config.thin}")
        if config.iterations % config.thin or config.warmup % config.thin:
            raise ConfigError("thin must divide both iterations and warmup")

    if config.target["kind"] == "bimodal" and config.thin != 1:
        raise ConfigError("bimodal experiments require thin = 1 (transition counts need full traces)")

    for fn in config.ground_truth:
        if fn not in KNOWN_FUNCTIONALS:
            raise ConfigError(f"unknown ground-truth functional {fn!r} (have {KNOWN_FUNCTIONALS})")

    dim = _domain_dimension(config.domain)
    if config.initial_point is not None and len(config.initial_point) != dim:
        raise ConfigError(
            f"initial_point has {len(config.initial_point)} coordinates for a {dim}-dimensional domain")
    if config.target["kind"] == "gaussian_box" and config.domain["kind"] != "box":
        raise ConfigError("gaussian_box target requires a box domain (it derives from the bounds)")

    # constructing domain and target surfaces any remaining shape problems
    barrier = build_barrier(config.domain)
    build_target(config.target, config.domain)
    point = np.zeros(dim) if config.initial_point is None else np.array(config.initial_point)
    if not barrier.is_interior(point):
        raise ConfigError("initial_point is not strictly inside the domain")


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate a config from INI text. See parse_config."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    exp = _Section(parser, "experiment", source)
    experiment_id = exp.get_str("id")
    chains = exp.get_int("chains")
    iterations = exp.get_int("iterations", 0)
    warmup = exp.get_int("warmup", 0)
    thin = exp.get_int("thin", 1)
    master_seed = exp.get_int("master_seed")
    output_dir = exp.get_str("output_dir", None)
    init_raw = exp.get_str("initial_point", "origin")
    truth_raw = exp.get_str("ground_truth", "")
    exp.reject_unknown()

    initial_point = None if init_raw == "origin" else tuple(_parse_float_list(init_raw))
    ground_truth = tuple(v for v in truth_raw.replace(",", " ").split() if v)

    domain = _parse_domain(_Section(parser, "domain", source))
    target = _parse_target(_Section(parser, "target", source))

    kernel_sections = [s for s in parser.sections() if s.startswith("kernel.")]
    known = {"experiment", "domain", "target", *kernel_sections}
    stray = set(parser.sections()) - known
    if stray:
        raise ConfigError(f"{source}: unrecognized sections: {', '.join(sorted(stray))}")
    if not kernel_sections:
        raise ConfigError(f"{source}: at least one [kernel.<name>] section is required")
    kernels = []
    for section_name in kernel_sections:  # configparser preserves file order
        name = section_name.split(".", 1)[1]
        if not name:
            raise ConfigError(f"{source}: kernel section needs a name after the dot")
        kernels.append(_parse_kernel(_Section(parser, section_name, source), name, source,
                                     domain["kind"]))
    names = [k.name for k in kernels]
    if len(set(names)) != len(names):
        raise ConfigError(f"{source}: kernel names must be unique, got {names}")

    config = ExperimentConfig(experiment_id=experiment_id, chains=chains, iterations=iterations,
                              warmup=warmup, thin=thin, master_seed=master_seed,
                              output_dir=output_dir, initial_point=initial_point,
                              ground_truth=ground_truth, domain=domain, target=target,
                              kernels=tuple(kernels))
    _validate(config)
    return config


def parse_config(path: str) -> ExperimentConfig:
    """Read, parse, and validate an experiment config file.

    Raises:
        ConfigError: unreadable file, malformed syntax, or failed validation.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=path)


def build_barrier(domain: dict[str, Any]) -> Barrier:
    """Construct the domain barrier described by a parsed domain spec."""
    kind = domain["kind"]
    if kind == "ball":
        return BallBarrier(int(domain["dimension"]), float(domain["radius"]))
    if kind == "box":
        return PolytopeBarrier.from_box(np.array(domain["bounds"], dtype=float))
    if kind == "polytope":
        return PolytopeBarrier(np.array(domain["rows"], dtype=float))
    raise ConfigError(f"unknown domain kind {kind!r}")


def build_target(target: dict[str, Any], domain: dict[str, Any]) -> Target:
    """Construct the target potential; box-coupled targets read the domain."""
    kind = target["kind"]
    beta = float(target.get("beta", 1.0))
    dim = _domain_dimension(domain)
    if kind == "standard_gaussian":
        return standard_gaussian_target(dim, beta=beta)
    if kind == "gaussian_box":
        return gaussian_box_target(np.array(domain["bounds"], dtype=float), beta=beta)
    if kind == "bimodal":
        return bimodal_target(dim, offset=float(target["offset"]),
                              stiffness=float(target["stiffness"]), beta=beta)
    raise ConfigError(f"unknown target kind {kind!r}")
