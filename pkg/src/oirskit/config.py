"""Scenario configuration: YAML schema, strict validation, unit handling.

A scenario file has sections beam, array, setup, targets, grid, solver,
receiver and output. Lengths are meters; values may also be strings with a
unit suffix (``"25 cm"``, ``"40 mm"``, ``"532 nm"``, ``"5 um"``) normalized
at parse time. Angles are radians, powers watts. Every key is range-checked
before any computation runs and unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field

import numpy as np
import yaml

from .beam import GaussianBeam
from .beam_split import GroupingConfig, SplitSpec, SplitTarget
from .errors import ConfigError
from .mirror_array import MirrorArray
from .phased_array import OpticalSetup, PhasedArray, RetrievalConfig

_LENGTH_UNITS = {
    "m": 1.0,
    "cm": 1e-2,
    "mm": 1e-3,
    "um": 1e-6,
    "µm": 1e-6,
    "nm": 1e-9,
}


def parse_length(value, key: str) -> float:
    """Meters from a number or a '<number> <unit>' string."""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a length, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        parts = value.split()
        try:
            if len(parts) == 1:
                return float(parts[0])
            if len(parts) == 2 and parts[1] in _LENGTH_UNITS:
                return float(parts[0]) * _LENGTH_UNITS[parts[1]]
        except ValueError:
            pass
        raise ConfigError(f"{key}: cannot parse length {value!r}")
    raise ConfigError(f"{key}: expected a length, got {type(value).__name__}")


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _integer(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _positive(value: float, key: str) -> float:
    if value <= 0:
        raise ConfigError(f"{key}: must be positive, got {value}")
    return value


class _Section:
    """One mapping section with unknown-key detection."""

    def __init__(self, name: str, data, required_keys=(), optional_keys=()):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        self.name = name
        self.data = data
        allowed = set(required_keys) | set(optional_keys)
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(
                f"section {name!r}: unknown keys {sorted(unknown)}"
            )
        missing = set(required_keys) - set(data)
        if missing:
            raise ConfigError(
                f"section {name!r}: missing required keys {sorted(missing)}"
            )

    def get(self, key, default=None):
        return self.data.get(key, default)

    def has(self, key) -> bool:
        return key in self.data

    def path(self, key) -> str:
        return f"{self.name}.{key}"


@dataclass(frozen=True)
class MaArrayConfig:
    rows: int
    cols: int
    side: float
    gap: float

    def build(self) -> MirrorArray:
        return MirrorArray.planar(self.rows, self.cols, self.side, self.gap)


@dataclass(frozen=True)
class OpaArrayConfig:
    rows: int
    cols: int
    pitch: float
    active: float
    gap_phase: float
    samples_per_pitch: int
    pad_factor: int
    phase_file: str | None

    def build(self, phase=None) -> PhasedArray:
        if phase is None:
            phase = np.zeros((self.rows, self.cols))
        return PhasedArray(phase, self.pitch, self.active, self.gap_phase)


@dataclass(frozen=True)
class SolverConfig:
    ratio_tol: float = 0.05
    restarts: int = 32
    seed: int = 0
    max_iters: int = 200
    tol: float = 1e-7
    zero_order: str = "block"
    blocker_radius: float = 2e-3
    window_margin: float = 2.0
    init: str = "backprojection"
    gain_exponent: float = 0.5
    threads: int = 1

    def grouping(self) -> GroupingConfig:
        return GroupingConfig(self.ratio_tol, self.restarts, self.seed, self.threads)

    def retrieval(self) -> RetrievalConfig:
        return RetrievalConfig(self.max_iters, self.tol, self.seed,
                               self.init, self.gain_exponent)


@dataclass(frozen=True)
class ReceiverConfig:
    center: tuple
    radius: float
    offsets: tuple
    sigma: float | None
    samples: int | None


@dataclass(frozen=True)
class ScenarioConfig:
    beam: GaussianBeam
    array_kind: str
    ma: MaArrayConfig | None
    opa: OpaArrayConfig | None
    setup: OpticalSetup | None
    targets: SplitSpec | None
    grid_window: float
    grid_resolution: int
    solver: SolverConfig
    receiver: ReceiverConfig | None
    output_dir: str
    source_hash: str = field(default="", compare=False)

    @property
    def seed(self) -> int:
        return self.solver.seed

    def with_overrides(self, seed=None, out=None, threads=None) -> "ScenarioConfig":
        solver = self.solver
        if seed is not None or threads is not None:
            solver = dataclasses.replace(
                solver,
                seed=solver.seed if seed is None else int(seed),
                threads=solver.threads if threads is None else int(threads),
            )
        return dataclasses.replace(
            self,
            solver=solver,
            output_dir=self.output_dir if out is None else str(out),
        )

    def header_lines(self) -> tuple[str, ...]:
        return (f"# config_sha256={self.source_hash} seed={self.seed}",)


_TOP_LEVEL = ("beam", "array", "setup", "targets", "grid", "solver", "receiver", "output")


def load_scenario(path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    config = parse_scenario(data)
    digest = hashlib.sha256(raw).hexdigest()
    return dataclasses.replace(config, source_hash=digest)


def parse_scenario(data) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - set(_TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown top-level sections {sorted(unknown)}")

    beam = _parse_beam(_Section(
        "beam", data.get("beam"),
        required_keys=("amplitude", "waist"),
        optional_keys=("kappa", "center", "direction"),
    )) if "beam" in data else None

    if "array" not in data:
        raise ConfigError("missing required section 'array'")
    array_kind, ma, opa = _parse_array(data["array"])

    if beam is None:
        raise ConfigError("missing required section 'beam'")

    setup = None
    if "setup" in data:
        sec = _Section("setup", data["setup"],
                       required_keys=("wavelength", "focal_length"))
        setup = OpticalSetup(
            _positive(parse_length(sec.get("wavelength"), sec.path("wavelength")),
                      sec.path("wavelength")),
            _positive(parse_length(sec.get("focal_length"), sec.path("focal_length")),
                      sec.path("focal_length")),
        )
    if array_kind == "opa" and setup is None:
        raise ConfigError("opa arrays need a 'setup' section (wavelength, focal_length)")

    targets = _parse_targets(data.get("targets")) if "targets" in data else None

    grid_window, grid_resolution = _parse_grid(data.get("grid"))
    solver = _parse_solver(data.get("solver"))
    receiver = _parse_receiver(data.get("receiver")) if "receiver" in data else None
    output_dir = _parse_output(data.get("output"))

    return ScenarioConfig(
        beam=beam,
        array_kind=array_kind,
        ma=ma,
        opa=opa,
        setup=setup,
        targets=targets,
        grid_window=grid_window,
        grid_resolution=grid_resolution,
        solver=solver,
        receiver=receiver,
        output_dir=output_dir,
    )


def _parse_beam(sec: _Section) -> GaussianBeam:
    amplitude = _positive(_number(sec.get("amplitude"), sec.path("amplitude")),
                          sec.path("amplitude"))
    waist = _positive(parse_length(sec.get("waist"), sec.path("waist")), sec.path("waist"))
    kappa = _positive(_number(sec.get("kappa", 1.0), sec.path("kappa")), sec.path("kappa"))
    center = _vector(sec.get("center", [0, 0, 0]), 3, sec.path("center"), lengths=True)
    direction = _vector(sec.get("direction", [0.0, 0.0, -1.0]), 3,
                        sec.path("direction"), lengths=False)
    if float(np.linalg.norm(direction)) == 0.0:
        raise ConfigError("beam.direction must be nonzero")
    try:
        return GaussianBeam(amplitude, waist, kappa, np.array(center), np.array(direction))
    except ValueError as exc:
        raise ConfigError(f"beam: {exc}") from exc


def _parse_array(data):
    if not isinstance(data, dict):
        raise ConfigError("section 'array' must be a mapping")
    kind = data.get("kind")
    if kind == "ma":
        sec = _Section("array", data,
                       required_keys=("kind", "rows", "cols", "side"),
                       optional_keys=("gap",))
        rows = _integer(sec.get("rows"), "array.rows")
        cols = _integer(sec.get("cols"), "array.cols")
        if rows < 1 or cols < 1:
            raise ConfigError("array.rows and array.cols must be >= 1")
        side = _positive(parse_length(sec.get("side"), "array.side"), "array.side")
        gap = parse_length(sec.get("gap", 0.0), "array.gap")
        if gap < 0:
            raise ConfigError("array.gap must be non-negative")
        return "ma", MaArrayConfig(rows, cols, side, gap), None
    if kind == "opa":
        sec = _Section("array", data,
                       required_keys=("kind", "rows", "cols", "pitch"),
                       optional_keys=("active", "fill_factor", "gap_phase",
                                      "samples_per_pitch", "pad_factor", "phase_file"))
        rows = _integer(sec.get("rows"), "array.rows")
        cols = _integer(sec.get("cols"), "array.cols")
        if rows < 1 or cols < 1:
            raise ConfigError("array.rows and array.cols must be >= 1")
        pitch = _positive(parse_length(sec.get("pitch"), "array.pitch"), "array.pitch")
        if sec.has("active") and sec.has("fill_factor"):
            raise ConfigError("array: give either 'active' or 'fill_factor', not both")
        if sec.has("active"):
            active = parse_length(sec.get("active"), "array.active")
        elif sec.has("fill_factor"):
            ff = _number(sec.get("fill_factor"), "array.fill_factor")
            if not (0 < ff <= 1):
                raise ConfigError("array.fill_factor must lie in (0, 1]")
            active = pitch * float(np.sqrt(ff))
        else:
            active = pitch
        if not (0 < active <= pitch):
            raise ConfigError("array.active must lie in (0, pitch]")
        gap_phase = _number(sec.get("gap_phase", 0.0), "array.gap_phase")
        spp = _integer(sec.get("samples_per_pitch", 8), "array.samples_per_pitch")
        if spp < 4:
            raise ConfigError("array.samples_per_pitch must be >= 4")
        pad = _integer(sec.get("pad_factor", 1), "array.pad_factor")
        if pad < 1:
            raise ConfigError("array.pad_factor must be >= 1")
        phase_file = sec.get("phase_file")
        if phase_file is not None and not isinstance(phase_file, str):
            raise ConfigError("array.phase_file must be a path string")
        return "opa", None, OpaArrayConfig(rows, cols, pitch, active, gap_phase,
                                           spp, pad, phase_file)
    raise ConfigError(f"array.kind must be 'ma' or 'opa', got {kind!r}")


def _parse_targets(data) -> SplitSpec:
    sec = _Section("targets", data, required_keys=("centers",),
                   optional_keys=("weights", "radius"))
    centers = sec.get("centers")
    if not isinstance(centers, list) or not centers:
        raise ConfigError("targets.centers must be a non-empty list")
    count = len(centers)
    weights = sec.get("weights", [1.0] * count)
    if not isinstance(weights, list) or len(weights) != count:
        raise ConfigError("targets.weights must list one weight per center")
    radius = sec.get("radius")
    if isinstance(radius, list):
        if len(radius) != count:
            raise ConfigError("targets.radius must be scalar or one per center")
        radii = [
            _positive(parse_length(r, f"targets.radius[{i}]"), f"targets.radius[{i}]")
            for i, r in enumerate(radius)
        ]
    elif radius is not None:
        r = _positive(parse_length(radius, "targets.radius"), "targets.radius")
        radii = [r] * count
    else:
        radii = [None] * count
    targets = []
    for i, center in enumerate(centers):
        if not isinstance(center, list) or len(center) not in (2, 3):
            raise ConfigError(f"targets.centers[{i}] must be a 2- or 3-vector")
        point = tuple(parse_length(c, f"targets.centers[{i}]") for c in center)
        w = _positive(_number(weights[i], f"targets.weights[{i}]"),
                      f"targets.weights[{i}]")
        try:
            targets.append(SplitTarget(point, w, radii[i]))
        except ValueError as exc:
            raise ConfigError(f"targets[{i}]: {exc}") from exc
    return SplitSpec(tuple(targets))


def _parse_grid(data):
    sec = _Section("grid", data, optional_keys=("window", "resolution"))
    window = parse_length(sec.get("window", 0.0), "grid.window") if sec.has("window") else 0.0
    if sec.has("window"):
        _positive(window, "grid.window")
    resolution = _integer(sec.get("resolution", 256), "grid.resolution")
    if resolution < 2 or resolution % 2:
        raise ConfigError("grid.resolution must be an even integer >= 2")
    return window, resolution


def _parse_solver(data) -> SolverConfig:
    sec = _Section("solver", data,
                   optional_keys=("ratio_tol", "restarts", "seed", "max_iters", "tol",
                                  "zero_order", "blocker_radius", "window_margin",
                                  "init", "gain_exponent", "threads"))
    ratio_tol = _number(sec.get("ratio_tol", 0.05), "solver.ratio_tol")
    if not (0 < ratio_tol < 0.5):
        raise ConfigError("solver.ratio_tol must lie in (0, 0.5)")
    restarts = _integer(sec.get("restarts", 32), "solver.restarts")
    if restarts < 1:
        raise ConfigError("solver.restarts must be >= 1")
    seed = _integer(sec.get("seed", 0), "solver.seed")
    max_iters = _integer(sec.get("max_iters", 200), "solver.max_iters")
    if max_iters < 1:
        raise ConfigError("solver.max_iters must be >= 1")
    tol = _number(sec.get("tol", 1e-7), "solver.tol")
    if tol < 0:
        raise ConfigError("solver.tol must be non-negative")
    zero_order = sec.get("zero_order", "block")
    if zero_order not in ("block", "keep"):
        raise ConfigError("solver.zero_order must be 'block' or 'keep'")
    blocker = parse_length(sec.get("blocker_radius", 2e-3), "solver.blocker_radius")
    _positive(blocker, "solver.blocker_radius")
    margin = _number(sec.get("window_margin", 2.0), "solver.window_margin")
    if margin < 1.0:
        raise ConfigError("solver.window_margin must be >= 1")
    init = sec.get("init", "backprojection")
    if init not in ("backprojection", "random"):
        raise ConfigError("solver.init must be 'backprojection' or 'random'")
    gain_exponent = _number(sec.get("gain_exponent", 0.5), "solver.gain_exponent")
    if not (0 <= gain_exponent <= 1):
        raise ConfigError("solver.gain_exponent must lie in [0, 1]")
    threads = _integer(sec.get("threads", 1), "solver.threads")
    if threads < 1:
        raise ConfigError("solver.threads must be >= 1")
    return SolverConfig(ratio_tol, restarts, seed, max_iters, tol,
                        zero_order, blocker, margin, init, gain_exponent, threads)


def _parse_receiver(data) -> ReceiverConfig:
    sec = _Section("receiver", data, required_keys=("radius",),
                   optional_keys=("center", "offsets", "sigma", "samples"))
    radius = _positive(parse_length(sec.get("radius"), "receiver.radius"),
                       "receiver.radius")
    center = _vector(sec.get("center", [0.0, 0.0]), 2, "receiver.center", lengths=True)
    offsets_raw = sec.get("offsets", [[0.0, 0.0]])
    if not isinstance(offsets_raw, list) or not offsets_raw:
        raise ConfigError("receiver.offsets must be a non-empty list of 2-vectors")
    offsets = tuple(
        tuple(_vector(o, 2, f"receiver.offsets[{i}]", lengths=True))
        for i, o in enumerate(offsets_raw)
    )
    sigma = None
    if sec.has("sigma"):
        sigma = parse_length(sec.get("sigma"), "receiver.sigma")
        if sigma < 0:
            raise ConfigError("receiver.sigma must be non-negative")
    samples = None
    if sec.has("samples"):
        samples = _integer(sec.get("samples"), "receiver.samples")
        if samples < 1:
            raise ConfigError("receiver.samples must be >= 1")
    if (sigma is None) != (samples is None):
        raise ConfigError("receiver.sigma and receiver.samples go together")
    return ReceiverConfig(tuple(center), radius, offsets, sigma, samples)


def _parse_output(data) -> str:
    sec = _Section("output", data, optional_keys=("directory",))
    directory = sec.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory must be a non-empty path string")
    return directory


def _vector(value, length: int, key: str, lengths: bool):
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(f"{key} must be a {length}-vector")
    if lengths:
        return [parse_length(v, key) for v in value]
    return [_number(v, key) for v in value]
