"""Optical-phased-array reflector model.

Pixelated phase-screen reflectance with a fixed gap phase, far-field
computation on the lens focal plane, output power efficiency, and iterative
phase-mask retrieval for a prescribed far field.

Both the array plane and the focal plane use the shared FieldGrid sampling
convention (even counts, cell-centered). The far-field transform evaluates
the discrete Fourier integral at the shifted frequency set matching that
convention, so its output is again a valid FieldGrid and the forward and
inverse transforms are exact inverses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beam import GaussianBeam
from .errors import InfeasibleTargetError, SamplingError
from .grid import FieldGrid

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OpticalSetup:
    """Lens and source constants: wavelength and focal length, meters."""

    wavelength: float
    focal_length: float

    def __post_init__(self):
        if self.wavelength <= 0 or self.focal_length <= 0:
            raise ValueError("wavelength and focal length must be positive")

    @property
    def wave_number(self) -> float:
        return TWO_PI / self.wavelength


@dataclass(frozen=True)
class PhasedArray:
    """Grid of square phase-shifting pixels with fixed-phase gaps.

    phase[i, j] is the adjustable phase of the pixel in row i (y), column j
    (x), wrapped to [0, 2pi) on construction. pitch is the pixel period,
    active the side of the central controllable square (active <= pitch);
    the surrounding gap frame carries the constant gap_phase.
    """

    phase: np.ndarray
    pitch: float
    active: float
    gap_phase: float = 0.0

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=float)
        if phase.ndim != 2 or phase.size == 0:
            raise ValueError("phase must be a non-empty 2-D grid")
        if not (0 < self.active <= self.pitch):
            raise ValueError("need 0 < active <= pitch")
        if not np.all(np.isfinite(phase)):
            raise ValueError("phase entries must be finite")
        object.__setattr__(self, "phase", np.mod(phase, TWO_PI))

    @property
    def rows(self) -> int:
        return self.phase.shape[0]

    @property
    def cols(self) -> int:
        return self.phase.shape[1]

    @property
    def fill_factor(self) -> float:
        return (self.active / self.pitch) ** 2

    @property
    def aperture_width(self) -> float:
        return self.cols * self.pitch

    @property
    def aperture_height(self) -> float:
        return self.rows * self.pitch

    def with_phase(self, phase) -> "PhasedArray":
        return PhasedArray(phase, self.pitch, self.active, self.gap_phase)

    @classmethod
    def uniform(cls, rows: int, cols: int, pitch: float, active: float | None = None,
                fill_factor: float | None = None, phase: float = 0.0,
                gap_phase: float = 0.0) -> "PhasedArray":
        if active is None:
            if fill_factor is None:
                active = pitch
            else:
                if not (0 < fill_factor <= 1):
                    raise ValueError("fill factor must lie in (0, 1]")
                active = pitch * math.sqrt(fill_factor)
        return cls(np.full((rows, cols), float(phase)), pitch, active, gap_phase)


@dataclass(frozen=True)
class _SampleStructure:
    """Per-sample pixel membership of a grid covering the array aperture."""

    pixel_x: np.ndarray   # (nx,) pixel column or -1 outside the aperture
    pixel_y: np.ndarray   # (ny,) pixel row or -1
    active_x: np.ndarray  # (nx,) bool, within the active span of its pixel
    active_y: np.ndarray  # (ny,) bool
    samples_per_pitch: int

    @property
    def aperture(self) -> np.ndarray:
        return (self.pixel_y[:, None] >= 0) & (self.pixel_x[None, :] >= 0)

    @property
    def active(self) -> np.ndarray:
        return (self.active_y[:, None] & self.active_x[None, :]) & self.aperture

    def pixel_ids(self, cols: int) -> np.ndarray:
        return self.pixel_y[:, None] * cols + self.pixel_x[None, :]


def _axis_structure(n: int, spacing: float, pixels: int, pitch: float, active: float):
    ratio = pitch / spacing
    spp = int(round(ratio))
    if abs(ratio - spp) > 1e-9 * ratio:
        raise SamplingError(
            f"pixel pitch {pitch} is not an integer multiple of grid spacing {spacing}"
        )
    if spp < 4:
        raise SamplingError(f"need >= 4 samples per pitch, got {spp}")
    span = pixels * spp
    if n < span:
        raise SamplingError("grid does not cover the array aperture")
    if (n - span) % 2:
        raise SamplingError("aperture cannot be centered on this grid")
    offset = np.arange(n) - (n - span) // 2
    inside = (offset >= 0) & (offset < span)
    pixel = np.where(inside, offset // spp, -1)
    local = np.mod(offset, spp) + 0.5
    act = inside & (np.abs(local - spp / 2.0) <= spp * (active / pitch) / 2.0)
    return pixel, act, spp


def sample_structure(array: PhasedArray, grid: FieldGrid) -> _SampleStructure:
    px, ax, sppx = _axis_structure(grid.nx, grid.dx, array.cols, array.pitch, array.active)
    py, ay, sppy = _axis_structure(grid.ny, grid.dy, array.rows, array.pitch, array.active)
    if sppx != sppy:
        raise SamplingError("x and y sampling densities differ")
    return _SampleStructure(px, py, ax, ay, sppx)


def build_reflectance(array: PhasedArray, incident: FieldGrid) -> FieldGrid:
    """Reflected complex amplitude t(x, y) = i(x, y) * phase screen.

    Samples inside a pixel's active square pick up that pixel's phase, gap
    samples the constant gap phase, samples outside the aperture vanish.
    Classification is by sample center, so active/gap areas quantize to
    whole sample rows.
    """
    struct = sample_structure(array, incident)
    ids = struct.pixel_ids(array.cols)
    phase = np.where(struct.active, array.phase.ravel()[np.where(ids >= 0, ids, 0)], array.gap_phase)
    factor = np.where(struct.aperture, np.exp(1j * phase), 0.0)
    return FieldGrid(incident.values * factor, incident.dx, incident.dy)


def gap_reflectance(array: PhasedArray, incident: FieldGrid) -> FieldGrid:
    """Reflectance of the gap frame alone (active pixel areas zeroed)."""
    struct = sample_structure(array, incident)
    gap = struct.aperture & ~struct.active
    factor = np.where(gap, np.exp(1j * array.gap_phase), 0.0)
    return FieldGrid(incident.values * factor, incident.dx, incident.dy)


def _axis_phases(n: int, inverse: bool):
    offset = 0.5 - n / 2.0
    idx = np.arange(n)
    sign = 1.0 if inverse else -1.0
    pre = np.exp(sign * 2j * np.pi * offset * idx / n)
    post = np.exp(sign * 2j * np.pi * offset * (idx + offset) / n)
    return pre, post


def _centered_fft2(values: np.ndarray) -> np.ndarray:
    """DFT with half-sample-centered coordinates in both domains.

    Output index k carries frequency (k - n/2 + 0.5) / (n * dx): already
    monotone and centered, so no fftshift is needed and the result lives on
    the same cell-centered convention as the input.
    """
    out = values
    for axis in (0, 1):
        n = out.shape[axis]
        pre, post = _axis_phases(n, inverse=False)
        shape = [1, 1]
        shape[axis] = n
        out = np.fft.fft(out * pre.reshape(shape), axis=axis) * post.reshape(shape)
    return out


def _centered_ifft2(values: np.ndarray) -> np.ndarray:
    out = values
    for axis in (0, 1):
        n = out.shape[axis]
        pre, post = _axis_phases(n, inverse=True)
        shape = [1, 1]
        shape[axis] = n
        out = np.fft.ifft(out * pre.reshape(shape), axis=axis) * post.reshape(shape)
    return out


def fraunhofer(fld: FieldGrid, setup: OpticalSetup) -> FieldGrid:
    """Far field on the lens focal plane.

    Focal-plane coordinates are u = lambda*f*nu_x; the amplitude scale
    dx*dy/(lambda*f) makes the transform energy-preserving, so Parseval
    holds exactly: energy out == energy in.
    """
    lf = setup.wavelength * setup.focal_length
    vals = _centered_fft2(fld.values) * (fld.dx * fld.dy / lf)
    du = lf / (fld.nx * fld.dx)
    dv = lf / (fld.ny * fld.dy)
    return FieldGrid(vals, du, dv)


def inverse_fraunhofer(fld: FieldGrid, setup: OpticalSetup) -> FieldGrid:
    """Exact inverse of fraunhofer back to the array plane."""
    lf = setup.wavelength * setup.focal_length
    dx = lf / (fld.nx * fld.dx)
    dy = lf / (fld.ny * fld.dy)
    vals = _centered_ifft2(fld.values) * (lf / (dx * dy))
    return FieldGrid(vals, dx, dy)


def non_adjustable_field(array: PhasedArray, incident: FieldGrid,
                         setup: OpticalSetup) -> FieldGrid:
    """Far field of the fixed gap frame; with a constant gap phase its
    energy concentrates at the focal point."""
    return fraunhofer(gap_reflectance(array, incident), setup)


def opa_efficiency(array: PhasedArray, incident: FieldGrid, setup: OpticalSetup) -> float:
    """Adjustable share of the output energy:
    energy(total far field - gap far field) / energy(total far field)."""
    total = fraunhofer(build_reflectance(array, incident), setup)
    gap = non_adjustable_field(array, incident, setup)
    total_energy = total.energy()
    if total_energy == 0.0:
        raise ValueError("incident field carries no energy inside the aperture")
    adjustable = FieldGrid(total.values - gap.values, total.dx, total.dy)
    return adjustable.energy() / total_energy


def gaussian_incident(array: PhasedArray, beam: GaussianBeam,
                      samples_per_pitch: int = 8, pad_factor: int = 1) -> FieldGrid:
    """Sample sqrt(kappa) * A(x, y) of a Gaussian beam over the aperture.

    |values|^2 is then the beam's power density, so grid energy is power in
    watts. pad_factor > 1 surrounds the aperture with empty margin, refining
    the focal-plane sampling."""
    nx, ny, dx = _incident_shape(array, samples_per_pitch, pad_factor)
    amp = math.sqrt(beam.kappa)
    return FieldGrid.from_function(
        nx, ny, dx,
        lambda xx, yy: amp * beam.amplitude(xx, yy),
    )


def uniform_incident(array: PhasedArray, amplitude: float = 1.0,
                     samples_per_pitch: int = 8, pad_factor: int = 1) -> FieldGrid:
    """Flat illumination over the whole grid (aperture windowing happens in
    build_reflectance)."""
    nx, ny, dx = _incident_shape(array, samples_per_pitch, pad_factor)
    return FieldGrid(np.full((ny, nx), complex(amplitude)), dx, dx)


def _incident_shape(array: PhasedArray, samples_per_pitch: int, pad_factor: int):
    if samples_per_pitch < 4:
        raise SamplingError("need >= 4 samples per pitch")
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    nx = array.cols * samples_per_pitch * pad_factor
    ny = array.rows * samples_per_pitch * pad_factor
    if nx % 2 or ny % 2:
        raise SamplingError("grid sample counts must come out even")
    return nx, ny, array.pitch / samples_per_pitch


def focal_plane_like(array: PhasedArray, incident: FieldGrid,
                     setup: OpticalSetup) -> FieldGrid:
    """Empty grid matching the far-field sampling of this configuration."""
    sample_structure(array, incident)
    lf = setup.wavelength * setup.focal_length
    du = lf / (incident.nx * incident.dx)
    dv = lf / (incident.ny * incident.dy)
    return FieldGrid(np.zeros(incident.values.shape, dtype=complex), du, dv)


@dataclass(frozen=True)
class RetrievalConfig:
    """max_iters / tol bound the iteration; seed fixes the random draws.

    init selects the starting mask: "backprojection" (phase of the
    back-propagated goal magnitude, deterministic) or "random" (seeded
    uniform pixel phases). gain_exponent > 0 turns on per-region target
    rescaling when region masks are supplied, steering achieved region
    powers onto the requested shares."""

    max_iters: int = 200
    tol: float = 1e-7
    seed: int = 0
    init: str = "backprojection"
    gain_exponent: float = 0.5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")
        if self.init not in ("backprojection", "random"):
            raise ValueError("init must be 'backprojection' or 'random'")
        if not (0 <= self.gain_exponent <= 1):
            raise ValueError("gain_exponent must lie in [0, 1]")


@dataclass(frozen=True)
class RetrievalResult:
    """Best phase mask found plus the quality trace.

    correlations[i] is the best in-window amplitude correlation seen up to
    iteration i, so the curve is non-decreasing by construction."""

    phase: np.ndarray
    correlation: float
    correlations: tuple[float, ...]
    iterations: int
    converged: bool
    achieved: FieldGrid

    def to_array(self, template: PhasedArray) -> PhasedArray:
        return template.with_phase(self.phase)


def retrieve_phase(target: FieldGrid, array: PhasedArray, incident: FieldGrid,
                   setup: OpticalSetup, config: RetrievalConfig | None = None,
                   window: np.ndarray | None = None,
                   rescale_target: bool = True,
                   region_masks=None, region_shares=None) -> RetrievalResult:
    """Iterative Fourier-transform phase retrieval with a signal window.

    Repeats: far-field transform of the current phase-only reflectance;
    replace the magnitude inside the signal window with the goal magnitude
    (target plus the fixed gap far field, which a phase mask cannot remove)
    keeping the phase; leave the field outside the window free; transform
    back; project onto the per-pixel phase-only constraint by the
    energy-weighted mean phase over each pixel's active samples.

    When region_masks and region_shares are given, the target amplitude in
    each region is rescaled every iteration by the shortfall between the
    requested and achieved power shares (damped by config.gain_exponent),
    pinning the delivered power ratio.

    The quality metric is the normalized cross-correlation of |far field|
    with the goal magnitude inside the window. The best mask is kept, so
    reported quality never decreases; iteration stops at max_iters or when
    the best value improves by less than tol. Deterministic for a fixed
    config.seed.

    With rescale_target the target is scaled onto the adjustable energy
    budget; otherwise a target exceeding that budget raises
    InfeasibleTargetError.
    """
    config = config if config is not None else RetrievalConfig()
    struct = sample_structure(array, incident)
    gap_far = non_adjustable_field(array, incident, setup)
    if target.values.shape != gap_far.values.shape:
        raise SamplingError("target grid shape does not match the forward model")
    if not math.isclose(target.dx, gap_far.dx, rel_tol=1e-9) or \
            not math.isclose(target.dy, gap_far.dy, rel_tol=1e-9):
        raise SamplingError("target grid spacing does not match the focal plane")

    budget = float(np.sum(np.abs(incident.values[struct.active]) ** 2)) * incident.cell_area
    target_energy = target.energy()
    if rescale_target:
        if target_energy <= 0:
            raise ValueError("target field carries no energy")
        target_values = target.values * math.sqrt(budget / target_energy)
    else:
        if target_energy > budget * (1.0 + 1e-9):
            raise InfeasibleTargetError(
                f"target energy {target_energy:.6g} exceeds the adjustable budget {budget:.6g}"
            )
        target_values = target.values

    if window is None:
        window = np.abs(target.values) > 0
    else:
        window = np.asarray(window, dtype=bool)
        if window.shape != target.values.shape:
            raise ValueError("signal window shape does not match the target grid")

    masks = None
    if region_masks is not None:
        masks = [np.asarray(m, dtype=bool) for m in region_masks]
        if any(m.shape != target.values.shape for m in masks):
            raise ValueError("region mask shapes do not match the target grid")
        shares = np.asarray(region_shares, dtype=float)
        if len(shares) != len(masks) or np.any(shares <= 0):
            raise ValueError("need one positive share per region mask")
        shares = shares / shares.sum()
        gains = np.ones(len(masks))

    goal = np.abs(target_values + gap_far.values)

    def scaled_goal() -> np.ndarray:
        if masks is None or config.gain_exponent == 0.0:
            return goal
        scaled = target_values.copy()
        for mask, gain in zip(masks, gains):
            scaled[mask] *= gain
        return np.abs(scaled + gap_far.values)

    phase = _initial_phase(config, array, incident, struct, goal, gap_far, setup)

    best_corr = -1.0
    best_phase = phase.copy()
    best_far = None
    curve: list[float] = []
    converged = False
    iterations = 0
    for iteration in range(1, config.max_iters + 1):
        iterations = iteration
        far = fraunhofer(build_reflectance(array.with_phase(phase), incident), setup)
        corr = _window_correlation(np.abs(far.values), goal, window)
        if corr > best_corr:
            best_corr = corr
            best_phase = phase.copy()
            best_far = far
        curve.append(best_corr)
        if iteration >= 2 and curve[-1] - curve[-2] < config.tol:
            converged = True
            break
        if masks is not None and config.gain_exponent > 0.0:
            intensity = np.abs(far.values) ** 2
            achieved = np.array([float(intensity[m].sum()) for m in masks])
            total = achieved.sum()
            if total > 0:
                achieved = np.maximum(achieved / total, 1e-12)
                gains *= (shares / achieved) ** (config.gain_exponent / 2.0)
                gains /= gains.mean()
        enforce = scaled_goal()
        constrained = np.where(window, enforce * np.exp(1j * np.angle(far.values)), far.values)
        back = inverse_fraunhofer(FieldGrid(constrained, far.dx, far.dy), setup)
        phase = _project_pixel_phase(back, incident, array, struct)

    return RetrievalResult(
        phase=np.mod(best_phase, TWO_PI),
        correlation=best_corr,
        correlations=tuple(curve),
        iterations=iterations,
        converged=converged,
        achieved=best_far,
    )


def _initial_phase(config: RetrievalConfig, array: PhasedArray, incident: FieldGrid,
                   struct: _SampleStructure, goal: np.ndarray, gap_far: FieldGrid,
                   setup: OpticalSetup) -> np.ndarray:
    if config.init == "random":
        rng = np.random.default_rng(config.seed)
        return rng.uniform(0.0, TWO_PI, (array.rows, array.cols))
    back = inverse_fraunhofer(
        FieldGrid(goal.astype(complex), gap_far.dx, gap_far.dy), setup
    )
    return _project_pixel_phase(back, incident, array, struct)


def _project_pixel_phase(back: FieldGrid, incident: FieldGrid, array: PhasedArray,
                         struct: _SampleStructure) -> np.ndarray:
    ids = struct.pixel_ids(array.cols)
    active = struct.active
    weights = (back.values * np.conj(incident.values))[active]
    flat_ids = ids[active]
    size = array.rows * array.cols
    sums = (np.bincount(flat_ids, weights=weights.real, minlength=size)
            + 1j * np.bincount(flat_ids, weights=weights.imag, minlength=size))
    return np.angle(sums).reshape(array.rows, array.cols)


def _window_correlation(a: np.ndarray, b: np.ndarray, window: np.ndarray) -> float:
    av = a[window]
    bv = b[window]
    denom = math.sqrt(float(np.sum(av**2)) * float(np.sum(bv**2)))
    if denom == 0.0:
        return 1.0 if not np.any(av) and not np.any(bv) else 0.0
    return float(np.sum(av * bv)) / denom


PHASE_CSV_MAGIC = "# opa-phase v1"


def save_phase_csv(path, array: PhasedArray, header_lines=()) -> None:
    """Phase-mask export: radians, row-major, 17 significant digits.

    The format header records cols, rows, pitch and active size; re-import
    reproduces the grid bit-identically."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(line.rstrip("\n") + "\n")
        fh.write(f"{PHASE_CSV_MAGIC} {array.cols} {array.rows} "
                 f"{array.pitch:.17g} {array.active:.17g}\n")
        np.savetxt(fh, array.phase, fmt="%.17g", delimiter=",")


def load_phase_csv(path, gap_phase: float = 0.0) -> PhasedArray:
    cols = rows = None
    pitch = active = None
    skip = 0
    with open(path) as fh:
        for line in fh:
            if line.startswith(PHASE_CSV_MAGIC):
                parts = line[len(PHASE_CSV_MAGIC):].split()
                cols, rows = int(parts[0]), int(parts[1])
                pitch, active = float(parts[2]), float(parts[3])
            if line.startswith("#"):
                skip += 1
            else:
                break
    if cols is None:
        raise ValueError(f"{path} is not a phase-mask CSV (missing header)")
    phase = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if phase.shape != (rows, cols):
        raise ValueError(f"phase grid shape {phase.shape} does not match header")
    return PhasedArray(phase, pitch, active, gap_phase)
