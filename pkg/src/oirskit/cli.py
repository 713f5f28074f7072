"""Command-line front end.

    oirskit <command> --config scenario.yaml [--seed N] [--out DIR] [--threads N]

Commands: aim, powermap, efficiency, split-ma, split-opa, retrieve-phase,
pointing-sweep. Each run writes CSV outputs plus a summary.txt into the
output directory; every file starts with a comment header carrying the
config hash and the effective seed, and repeated runs with the same config
and seed are byte-identical. The wall-clock time of the control-algorithm
stage is printed to stdout, never persisted.

Exit codes: 0 success, 2 configuration error, 3 computation error,
4 infeasible power ratio (best-found grouping still written).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, beam_split, mirror_array, phased_array
from .config import ScenarioConfig, load_scenario
from .errors import ConfigError, InfeasibleRatioError, OirsError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oirskit",
        description="Mirror-array / phased-array reflector simulation and control",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario YAML file")
    parser.add_argument("--seed", type=int, default=None, help="override solver.seed")
    parser.add_argument("--out", default=None, help="override output.directory")
    parser.add_argument("--threads", type=int, default=None, help="override solver.threads")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_scenario(args.config).with_overrides(
            seed=args.seed, out=args.out, threads=args.threads
        )
        outdir = Path(config.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](config, outdir)
        _write_summary(config, outdir, args.command, summary)
        return 0
    except ConfigError as exc:
        _report_error(exc)
        return 2
    except InfeasibleRatioError as exc:
        _report_error(exc)
        return 4
    except OirsError as exc:
        _report_error(exc)
        return 3
    except (ValueError, OSError) as exc:
        _report_error(exc)
        return 3


def _report_error(exc: Exception) -> None:
    message = " ".join(str(exc).split())
    print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)


def _write_summary(config: ScenarioConfig, outdir: Path, command: str, lines) -> None:
    text = "\n".join(config.header_lines() + (f"command: {command}",) + tuple(lines))
    (outdir / "summary.txt").write_text(text + "\n")


def _print_timing(seconds: float) -> None:
    print(f"control stage wall time: {seconds:.6f} s")


def _require_targets(config: ScenarioConfig) -> beam_split.SplitSpec:
    if config.targets is None:
        raise ConfigError("this command needs a 'targets' section")
    return config.targets


def _ma_target(config: ScenarioConfig, index: int = 0) -> np.ndarray:
    spec = _require_targets(config)
    center = spec.targets[index].center
    if len(center) != 3:
        raise ConfigError(f"targets.centers[{index}] must be a 3-vector for 'ma' commands")
    return np.array(center)


def _require_ma(config: ScenarioConfig):
    if config.array_kind != "ma" or config.ma is None:
        raise ConfigError("this command needs array.kind = 'ma'")
    return config.ma.build()


def _require_opa(config: ScenarioConfig):
    if config.array_kind != "opa" or config.opa is None:
        raise ConfigError("this command needs array.kind = 'opa'")
    phase = None
    if config.opa.phase_file is not None:
        loaded = phased_array.load_phase_csv(config.opa.phase_file, config.opa.gap_phase)
        if loaded.phase.shape != (config.opa.rows, config.opa.cols):
            raise ConfigError(
                f"phase file grid {loaded.phase.shape} does not match the configured array"
            )
        phase = loaded.phase
    array = config.opa.build(phase)
    incident = phased_array.gaussian_incident(
        array, config.beam, config.opa.samples_per_pitch, config.opa.pad_factor
    )
    return array, incident


def _ma_window(config: ScenarioConfig) -> float | None:
    return config.grid_window if config.grid_window > 0 else None


def _ma_map(config: ScenarioConfig):
    array = _require_ma(config)
    target = _ma_target(config)
    aim = mirror_array.aim_array(array, config.beam, target)
    return mirror_array.receiver_power_density(
        array, config.beam, aim,
        window=_ma_window(config), resolution=config.grid_resolution,
    )


def _opa_map(config: ScenarioConfig):
    array, incident = _require_opa(config)
    far = phased_array.fraunhofer(
        phased_array.build_reflectance(array, incident), config.setup
    )
    return far.intensity_map()


def cmd_aim(config: ScenarioConfig, outdir: Path):
    array = _require_ma(config)
    target = _ma_target(config)
    start = time.perf_counter()
    aim = mirror_array.aim_array(array, config.beam, target)
    _print_timing(time.perf_counter() - start)

    path = outdir / "rotations.csv"
    with open(path, "w", newline="") as fh:
        for line in config.header_lines():
            fh.write(line + "\n")
        fh.write("row,col,theta_rad," + ",".join(
            f"r{i}{j}" for i in range(3) for j in range(3)) + "\n")
        for el in array:
            r = aim.rotations[el.row, el.col]
            entries = ",".join(f"{v:.17g}" for v in r.ravel())
            fh.write(f"{el.row},{el.col},{aim.thetas[el.row, el.col]:.17g},{entries}\n")

    return (
        f"array: {array.rows}x{array.cols}, side {array.side:.9g} m, gap {array.gap:.9g} m",
        f"target: ({target[0]:.9g}, {target[1]:.9g}, {target[2]:.9g}) m",
        f"max deflection angle: {float(aim.thetas.max()):.9g} rad",
        f"mean deflection angle: {float(aim.thetas.mean()):.9g} rad",
        "wrote rotations.csv",
    )


def cmd_powermap(config: ScenarioConfig, outdir: Path):
    start = time.perf_counter()
    if config.array_kind == "ma":
        density = _ma_map(config)
    else:
        density = _opa_map(config)
    _print_timing(time.perf_counter() - start)
    density.to_csv(outdir / "powermap.csv", config.header_lines())
    peak_x, peak_y = density.argmax_xy()
    return (
        f"grid: {density.nx}x{density.ny}, spacing {density.dx:.9g} m",
        f"peak density: {float(density.values.max()):.9g} W/m^2 at"
        f" ({peak_x:.9g}, {peak_y:.9g}) m",
        f"power in window: {density.total_power():.9g} W",
        "wrote powermap.csv",
    )


def cmd_efficiency(config: ScenarioConfig, outdir: Path):
    start = time.perf_counter()
    if config.array_kind == "ma":
        array = _require_ma(config)
        target = _ma_target(config)
        aim = mirror_array.aim_array(array, config.beam, target)
        comparison = mirror_array.compare_efficiencies(array, config.beam, aim)
        _print_timing(time.perf_counter() - start)
        return ("mirror-array power efficiency",) + tuple(comparison.report().splitlines())
    array, incident = _require_opa(config)
    eta = phased_array.opa_efficiency(array, incident, config.setup)
    _print_timing(time.perf_counter() - start)
    return (
        "phased-array output power efficiency",
        f"fill factor: {array.fill_factor:.6f}",
        f"efficiency: {eta:.9g}",
    )


def cmd_split_ma(config: ScenarioConfig, outdir: Path):
    array = _require_ma(config)
    spec = _require_targets(config)
    for i in range(spec.count):
        _ma_target(config, i)
    matrices = beam_split.power_matrices(array, config.beam, spec)
    weights = spec.weights

    optimize_error = None
    start = time.perf_counter()
    try:
        partition = beam_split.optimize_grouping(
            matrices, weights, config.solver.grouping()
        )
    except InfeasibleRatioError as exc:
        optimize_error = exc
        partition = exc.best_partition
    elapsed = time.perf_counter() - start
    _print_timing(elapsed)

    beam_split.write_partition_csv(outdir / "partition.csv", partition,
                                   config.header_lines())
    for k in range(spec.count):
        aim = mirror_array.aim_array(array, config.beam,
                                     np.array(spec.targets[k].center), target_id=k)
        group_map = mirror_array.receiver_power_density(
            array, config.beam, aim,
            window=_ma_window(config), resolution=config.grid_resolution,
            mask=partition.assignment == k + 1,
        )
        group_map.to_csv(outdir / f"map_target_{k + 1}.csv", config.header_lines())

    print(beam_split.partition_summary(partition, weights, wall_time=elapsed))
    summary = tuple(beam_split.partition_summary(partition, weights).splitlines()) + (
        f"wrote partition.csv and {spec.count} per-target maps",
    )
    if optimize_error is not None:
        _write_summary(config, outdir, "split-ma",
                       summary + (f"INFEASIBLE: {optimize_error}",))
        raise optimize_error
    return summary


def _blocked(density, radius):
    xx, yy = np.meshgrid(density.x, density.y)
    blocked = np.where(xx**2 + yy**2 <= radius**2, 0.0, density.values)
    return type(density)(blocked, density.dx, density.dy)


def cmd_split_opa(config: ScenarioConfig, outdir: Path):
    array, incident = _require_opa(config)
    spec = _require_targets(config)
    like = phased_array.focal_plane_like(array, incident, config.setup)
    target = beam_split.compose_target_field(spec, like)
    window = beam_split.signal_window(spec, like, config.solver.window_margin)
    masks = beam_split.region_masks(spec, like)

    start = time.perf_counter()
    result = phased_array.retrieve_phase(
        target, array, incident, config.setup,
        config.solver.retrieval(), window=window,
        region_masks=masks, region_shares=spec.weights,
    )
    _print_timing(time.perf_counter() - start)

    phased_array.save_phase_csv(outdir / "phase.csv", result.to_array(array),
                                config.header_lines())
    density = result.achieved.intensity_map()
    if config.solver.zero_order == "block":
        density = _blocked(density, config.solver.blocker_radius)
    density.to_csv(outdir / "achieved_map.csv", config.header_lines())

    weights = spec.weights
    shares = weights / weights.sum()
    powers = np.array([
        analysis.received_power(density, analysis.Receiver(t.center[:2], t.radius))
        for t in spec.targets
    ])
    ratios = powers / powers.sum() if powers.sum() > 0 else np.zeros_like(powers)
    lines = [
        f"retrieval correlation: {result.correlation:.6f}"
        f" after {result.iterations} iterations (converged: {result.converged})",
        f"zero-order handling: {config.solver.zero_order}",
    ]
    for i, (p, r, s) in enumerate(zip(powers, ratios, shares), start=1):
        lines.append(
            f"region {i}: power {p:.9g} W, share {r:.6f} (target {s:.6f})"
        )
    lines.append(f"ratio deviation: {float(np.abs(ratios - shares).max()):.6g}")
    lines.append("wrote phase.csv and achieved_map.csv")
    return tuple(lines)


def cmd_retrieve_phase(config: ScenarioConfig, outdir: Path):
    array, incident = _require_opa(config)
    spec = _require_targets(config)
    like = phased_array.focal_plane_like(array, incident, config.setup)
    target = beam_split.compose_target_field(spec, like)
    window = beam_split.signal_window(spec, like, config.solver.window_margin)
    masks = beam_split.region_masks(spec, like)

    start = time.perf_counter()
    result = phased_array.retrieve_phase(
        target, array, incident, config.setup,
        config.solver.retrieval(), window=window,
        region_masks=masks, region_shares=spec.weights,
    )
    _print_timing(time.perf_counter() - start)

    phased_array.save_phase_csv(outdir / "phase.csv", result.to_array(array),
                                config.header_lines())
    return (
        f"retrieval correlation: {result.correlation:.6f}",
        f"iterations: {result.iterations} (converged: {result.converged})",
        "wrote phase.csv",
    )


def cmd_pointing_sweep(config: ScenarioConfig, outdir: Path):
    if config.receiver is None:
        raise ConfigError("pointing-sweep needs a 'receiver' section")
    rcfg = config.receiver
    start = time.perf_counter()
    density = _ma_map(config) if config.array_kind == "ma" else _opa_map(config)
    _print_timing(time.perf_counter() - start)

    receiver = analysis.Receiver(rcfg.center, rcfg.radius)
    sweep = analysis.offset_sweep(density, receiver, np.array(rcfg.offsets))
    sweep.to_csv(outdir / "sweep.csv", config.header_lines())
    nominal = sweep.powers[0] if len(sweep.powers) else float("nan")
    lines = [
        f"receiver: center ({rcfg.center[0]:.9g}, {rcfg.center[1]:.9g}) m,"
        f" radius {rcfg.radius:.9g} m",
        f"offsets swept: {len(rcfg.offsets)}"
        f" ({int(np.sum(~sweep.valid))} out of window)",
        f"first-offset power: {nominal:.9g} W",
        "wrote sweep.csv",
    ]
    if rcfg.sigma is not None:
        samples = analysis.fading_samples(
            density, receiver, rcfg.sigma, rcfg.samples, config.seed
        )
        samples.to_csv(outdir / "samples.csv", config.header_lines())
        lines.extend(samples.summary().splitlines())
        lines.append("wrote samples.csv")
    return tuple(lines)


COMMANDS = {
    "aim": cmd_aim,
    "powermap": cmd_powermap,
    "efficiency": cmd_efficiency,
    "split-ma": cmd_split_ma,
    "split-opa": cmd_split_opa,
    "retrieve-phase": cmd_retrieve_phase,
    "pointing-sweep": cmd_pointing_sweep,
}


if __name__ == "__main__":
    sys.exit(main())
