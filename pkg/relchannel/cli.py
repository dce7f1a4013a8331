#!/usr/bin/env python3
"""
CLI entry point for relchannel.

Every subcommand reads a scenario (config file plus flag overrides), runs the
computation and writes a TSV or JSON table to stdout or to --output.
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .config import POINTLIKE, Config
from .core.capacity import classical_capacity, coherent_information_single_use
from .core.channel_algebra import (
    choi_rank,
    choi_spectrum,
    complementary_apply,
    is_cptp,
    kraus_set,
)
from .core.channel_params import (
    compute_params,
    fermi_amplitude,
    glauber_leakage_result,
)
from .core.scenario import ScenarioSpec, classify_separation
from .core.vacuum import (
    casimir_force_estimates,
    casimir_terms,
    entanglement_threshold,
    ground_state_reduced,
    negativity,
    negativity_asymptotic,
    negativity_leading_order,
    vacuum_integrals,
)
from .errors import ConfigError, ConvergenceError, PhysicsError, RelChannelError
from .utils.tabular import Column, ScanResult, linspace, logspace

logger = logging.getLogger(__name__)

COMMANDS = ("channel", "capacity-scan", "negativity-scan", "casimir-scan", "fermi", "glauber")


def create_parser() -> argparse.ArgumentParser:
    """Create the command-line argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="Path to scenario file (default: config.toml if present)")
    common.add_argument("--L", dest="distance", type=float, help="Detector separation L")
    common.add_argument("--dE", dest="energy_gap", type=float, help="Detector energy gap ΔE")
    common.add_argument("--alpha", type=float, help="Coupling α of both detectors")
    common.add_argument("--mass", type=float, help="Field mass m")
    common.add_argument("--dX", dest="smearing", type=float, help="Gaussian smearing width ΔX")
    common.add_argument("--window", type=float, help="Switching window length t_f - t_i")
    common.add_argument("--method", choices=["auto", "collapse", "ladder"], default="auto",
                        help="Integration path for the channel parameters")
    common.add_argument("--seed", type=int, help="Seed for randomized searches")
    common.add_argument("--out", choices=["tsv", "json"], default="tsv", help="Output format")
    common.add_argument("--output", type=str, help="Write to this file instead of stdout")
    common.add_argument("--write-config", type=str, metavar="PATH",
                        help="Save the resolved configuration to PATH")
    common.add_argument("--debug", action="store_true", help="Enable debug logging")
    common.add_argument("--quiet", action="store_true", help="Only log errors")

    scan = argparse.ArgumentParser(add_help=False)
    scan.add_argument("--steps", "--window-steps", dest="steps", type=int, default=16,
                      help="Number of sweep points (>= 2)")
    scan.add_argument("--jobs", type=int, default=1, help="Parallel worker processes")

    parser = argparse.ArgumentParser(
        prog="relchannel",
        description="relchannel - channel between two detectors coupled to a scalar field",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  relchannel channel --config config.toml         # Full channel report
  relchannel channel --L 2 --window 1             # Spacelike scenario
  relchannel capacity-scan --L 1 --dE 1 --window-min 0.25 --window-max 4 --steps 16
  relchannel negativity-scan --dE 1 --dX 1e-3 --L-min 1e-3 --L-max 0.1 --out json
  relchannel casimir-scan --dE 1 --alpha 0.1 --L-min 10 --L-max 100 --jobs 4
  relchannel fermi --L 2 --window 1               # Emission-absorption probability
  relchannel glauber --L 2 --window 1             # Positive-frequency coupling leakage
        """,
    )
    parser.add_argument("--version", action="version", version=f"relchannel {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sub.add_parser("channel", parents=[common], help="Channel parameters, Kraus, Choi and capacity")

    capacity = sub.add_parser("capacity-scan", parents=[common, scan],
                              help="Capacity rate versus switching window length")
    capacity.add_argument("--window-min", type=float, default=0.25)
    capacity.add_argument("--window-max", type=float, default=4.0)

    neg = sub.add_parser("negativity-scan", parents=[common, scan],
                         help="Ground-state negativity versus separation")
    neg.add_argument("--L-min", dest="distance_min", type=float, default=1e-3)
    neg.add_argument("--L-max", dest="distance_max", type=float, default=1e-1)

    cas = sub.add_parser("casimir-scan", parents=[common, scan],
                         help="Ground-state interaction energy versus separation")
    cas.add_argument("--L-min", dest="distance_min", type=float, default=10.0)
    cas.add_argument("--L-max", dest="distance_max", type=float, default=100.0)
    cas.add_argument("--force", action="store_true", help="Also emit finite-difference forces")

    sub.add_parser("fermi", parents=[common], help="Fermi two-atom transition probability")
    sub.add_parser("glauber", parents=[common], help="Glauber detector coherence leakage")

    return parser


def find_config_file(config_path: Optional[str] = None) -> Optional[Path]:
    """Find the configuration file."""
    if config_path:
        config_file = Path(config_path)
        if config_file.exists():
            return config_file
        raise ConfigError(f"config file '{config_path}' not found")

    # Look for config.toml in current directory, then package directory
    current_dir = Path.cwd()
    package_dir = Path(__file__).parent.parent

    for directory in [current_dir, package_dir]:
        config_file = directory / "config.toml"
        if config_file.exists():
            return config_file

    return None


def setup_logging(debug: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if debug else logging.ERROR if quiet else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def load_config(args: argparse.Namespace) -> Config:
    """Config file (or defaults) with command-line overrides applied."""
    config_file = find_config_file(args.config)
    if config_file:
        config = Config.from_file(config_file)
        logger.debug("Loaded config from: %s", config_file)
    else:
        config = Config.default()
        logger.debug("Using default configuration")

    if args.distance is not None:
        config.set_separation(args.distance)
    if args.energy_gap is not None:
        config.channel.energy_gap = args.energy_gap
    if args.alpha is not None:
        config.set_coupling(args.alpha)
    if args.mass is not None:
        config.field.mass = args.mass
    if args.smearing is not None:
        config.set_smearing(args.smearing)
    if args.window is not None:
        config.set_window(args.window)
    if args.seed is not None:
        config.channel.seed = args.seed

    config.validate()
    if args.write_config:
        config.save_to_file(Path(args.write_config))
        logger.debug("Saved resolved config to: %s", args.write_config)
    return config


def _separation(spec: ScenarioSpec) -> str:
    if not spec.switching.is_compact:
        return "non-compact"
    return classify_separation(spec).value


def _smearing(config: Config) -> float:
    width = config.detector1.smearing
    if width == POINTLIKE:
        raise ConfigError("negativity needs smeared detectors (set --dX or [detector1] smearing)")
    return float(width)


def _status(exc: Exception) -> str:
    if isinstance(exc, ConvergenceError):
        return "convergence"
    if isinstance(exc, PhysicsError):
        return "physics"
    if isinstance(exc, ConfigError):
        return "config"
    return "error"


# --------------------------------------------------------------------------
# Scan points (module level so worker processes can unpickle them)
# --------------------------------------------------------------------------

def capacity_point(config_data: Dict[str, Any], window: float, options: Dict[str, Any]) -> Dict[str, Any]:
    config = Config.from_dict(config_data)
    config.set_window(window)
    spec = config.to_scenario()
    params = compute_params(spec, options["method"])
    capacity = classical_capacity(params)
    return {
        "window": window,
        "separation": _separation(spec),
        "P_e": params.pe,
        "A": params.a,
        "B": params.b,
        "C_abs": abs(params.c),
        "D_abs": abs(params.d),
        "capacity": capacity.bits,
        "prior": capacity.prior,
        "rate": capacity.rate,
        "error": params.max_error(),
    }


def negativity_point(config_data: Dict[str, Any], distance: float, options: Dict[str, Any]) -> Dict[str, Any]:
    config = Config.from_dict(config_data)
    gap, mass, alpha = config.channel.energy_gap, config.field.mass, config.detector1.coupling
    width = _smearing(config)
    integrals = vacuum_integrals(gap, distance, width, mass)
    rho = ground_state_reduced(alpha, integrals)
    return {
        "L": distance,
        "R": integrals.r,
        "S": integrals.s,
        "T": integrals.t,
        "R_abs_minus_S": abs(integrals.r) - integrals.s,
        "negativity": negativity(rho),
        "negativity_leading": negativity_leading_order(alpha, integrals),
        "negativity_asymptotic": alpha * alpha * negativity_asymptotic(gap, distance, width, mass),
        "error": integrals.error,
    }


def casimir_point(config_data: Dict[str, Any], distance: float, options: Dict[str, Any]) -> Dict[str, Any]:
    config = Config.from_dict(config_data)
    gap, mass, alpha = config.channel.energy_gap, config.field.mass, config.detector1.coupling
    terms = casimir_terms(gap, distance, alpha, mass=mass)
    row = {"L": distance, **terms}
    if options.get("force"):
        coarse, fine, richardson = casimir_force_estimates(gap, distance, alpha, mass)
        row.update(force=-richardson, force_spread=abs(fine - coarse))
    return row


SCAN_POINTS: Dict[str, Tuple[Callable[..., Dict[str, Any]], str]] = {
    "capacity-scan": (capacity_point, "window"),
    "negativity-scan": (negativity_point, "L"),
    "casimir-scan": (casimir_point, "L"),
}


def _run_point(command: str, config_data: Dict[str, Any], value: float, options: Dict[str, Any]) -> Dict[str, Any]:
    func, sweep = SCAN_POINTS[command]
    try:
        return func(config_data, value, options)
    except (RelChannelError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        logger.warning("%s at %s = %.6g failed: %s", command, sweep, value, e)
        message = str(e) if isinstance(e, RelChannelError) else f"{type(e).__name__}: {e}"
        return {sweep: value, "status": _status(e), "message": message}


def run_scan(command: str, config: Config, values: Sequence[float], options: Dict[str, Any], jobs: int = 1) -> List[Dict[str, Any]]:
    """Evaluate every sweep point; rows come back in sweep order."""
    data = config.to_dict()
    if jobs <= 1:
        return [_run_point(command, data, v, options) for v in values]
    n = len(values)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, [command] * n, [data] * n, values, [options] * n))


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

CAPACITY_COLUMNS = [
    Column("window", "time"), Column("separation", "-"), Column("P_e"), Column("A"), Column("B"),
    Column("C_abs"), Column("D_abs"), Column("capacity", "bit"), Column("prior"),
    Column("rate", "bit/time"), Column("error"),
]

NEGATIVITY_COLUMNS = [
    Column("L", "length"), Column("R"), Column("S"), Column("T"), Column("R_abs_minus_S"),
    Column("negativity"), Column("negativity_leading"), Column("negativity_asymptotic"), Column("error"),
]

CASIMIR_COLUMNS = [
    Column("L", "length"), Column("single", "energy"), Column("two_boson", "energy"),
    Column("crossed", "energy"), Column("resonant", "energy"), Column("energy", "energy"),
]


def _scan_metadata(config: Config) -> Dict[str, Any]:
    d1, d2 = config.detector1, config.detector2
    distance = float(np.linalg.norm(np.subtract(d1.position, d2.position)))
    return {
        "L": distance,
        "dE": config.channel.energy_gap,
        "alpha": d1.coupling,
        "mass": config.field.mass,
        "switching": config.switching.kind,
    }


def _steps(args: argparse.Namespace) -> int:
    if args.steps < 2:
        raise ConfigError(f"--steps must be >= 2, got {args.steps}")
    return args.steps


def cmd_capacity_scan(args: argparse.Namespace, config: Config) -> ScanResult:
    if not 0 < args.window_min < args.window_max:
        raise ConfigError("need 0 < --window-min < --window-max")
    values = linspace(args.window_min, args.window_max, _steps(args))
    result = ScanResult("capacity-scan", list(CAPACITY_COLUMNS), "window", metadata=_scan_metadata(config))
    result.extend(run_scan("capacity-scan", config, values, {"method": args.method}, args.jobs))
    result.sort()
    return result


def cmd_negativity_scan(args: argparse.Namespace, config: Config) -> ScanResult:
    if not 0 < args.distance_min < args.distance_max:
        raise ConfigError("need 0 < --L-min < --L-max")
    width = _smearing(config)
    values = logspace(args.distance_min, args.distance_max, _steps(args))
    metadata = _scan_metadata(config)
    metadata.pop("L")
    metadata["dX"] = width
    try:
        metadata["L_threshold"] = entanglement_threshold(config.channel.energy_gap, width, config.field.mass)
    except PhysicsError as e:
        logger.info("no entanglement threshold: %s", e)
        metadata["L_threshold"] = None
    result = ScanResult("negativity-scan", list(NEGATIVITY_COLUMNS), "L", metadata=metadata)
    result.extend(run_scan("negativity-scan", config, values, {}, args.jobs))
    result.sort()
    return result


def cmd_casimir_scan(args: argparse.Namespace, config: Config) -> ScanResult:
    if not 0 < args.distance_min < args.distance_max:
        raise ConfigError("need 0 < --L-min < --L-max")
    values = logspace(args.distance_min, args.distance_max, _steps(args))
    columns = list(CASIMIR_COLUMNS)
    if args.force:
        columns += [Column("force", "energy/length"), Column("force_spread", "energy/length")]
    metadata = _scan_metadata(config)
    metadata.pop("L")
    result = ScanResult("casimir-scan", columns, "L", metadata=metadata)
    result.extend(run_scan("casimir-scan", config, values, {"force": args.force}, args.jobs))
    result.sort()
    return result


REPORT_COLUMNS = [Column("quantity", "-"), Column("value"), Column("error")]


def cmd_channel(args: argparse.Namespace, config: Config) -> ScanResult:
    """Full characterization of the channel for one scenario."""
    spec = config.to_scenario()
    params = compute_params(spec, args.method)
    result = ScanResult("channel", list(REPORT_COLUMNS), "quantity", metadata=_scan_metadata(config))

    def add(name: str, value: Any, error: Optional[float] = None) -> None:
        result.add_row({"quantity": name, "value": value, "error": error})

    add("separation", _separation(spec))
    add("window", spec.switching.length)
    for name, value in zip(("P_e", "A", "B", "C", "D"), params.as_tuple()):
        diag = params.diagnostics.get(name)
        add(name, value, diag.error + diag.residual if diag is not None else None)
    add("radicands", list(params.radicands()))

    kraus = kraus_set(params)
    for k, op in enumerate(kraus, start=1):
        add(f"kraus_E{k}", [complex(x) for x in op.ravel()])
    add("kraus_completeness_defect", kraus.completeness_defect())
    add("choi_rank", choi_rank(params))
    add("choi_spectrum", [float(x) for x in choi_spectrum(params)])
    add("cptp", is_cptp(params))

    capacity = classical_capacity(params)
    add("capacity_bits", capacity.bits)
    add("capacity_prior", capacity.prior)
    add("rate", capacity.rate)
    add("closed_form_prior", capacity.closed_form_prior)

    coherent = coherent_information_single_use(params, seed=config.channel.seed)
    add("coherent_information_raw", coherent.nats)
    add("coherent_information", coherent.clamped)
    rho = 0.5 * np.array([[1 + coherent.bloch[2], coherent.bloch[0] - 1j * coherent.bloch[1]],
                          [coherent.bloch[0] + 1j * coherent.bloch[1], 1 - coherent.bloch[2]]])
    add("complementary_spectrum", [float(x) for x in np.linalg.eigvalsh(complementary_apply(params, rho))])

    fermi = fermi_amplitude(spec)
    add("fermi_probability", abs(complex(fermi.value)) ** 2, 2 * abs(complex(fermi.value)) * (fermi.error + fermi.residual))
    glauber = glauber_leakage_result(spec)
    add("glauber_leakage", complex(glauber.value), glauber.error + glauber.residual)
    return result


def cmd_fermi(args: argparse.Namespace, config: Config) -> ScanResult:
    spec = config.to_scenario()
    amplitude = fermi_amplitude(spec)
    magnitude = abs(complex(amplitude.value))
    result = ScanResult("fermi", [Column("L", "length"), Column("window", "time"), Column("separation", "-"),
                                  Column("fermi_probability"), Column("error")],
                        "L", metadata=_scan_metadata(config))
    result.add_row({
        "L": spec.distance,
        "window": spec.switching.length,
        "separation": _separation(spec),
        "fermi_probability": magnitude ** 2,
        "error": 2 * magnitude * (amplitude.error + amplitude.residual),
    })
    return result


def cmd_glauber(args: argparse.Namespace, config: Config) -> ScanResult:
    spec = config.to_scenario()
    leakage = glauber_leakage_result(spec)
    value = complex(leakage.value)
    result = ScanResult("glauber", [Column("L", "length"), Column("window", "time"), Column("separation", "-"),
                                    Column("leakage_re"), Column("leakage_im"), Column("error")],
                        "L", metadata=_scan_metadata(config))
    result.add_row({
        "L": spec.distance,
        "window": spec.switching.length,
        "separation": _separation(spec),
        "leakage_re": value.real,
        "leakage_im": value.imag,
        "error": leakage.error + leakage.residual,
    })
    return result


HANDLERS: Dict[str, Callable[[argparse.Namespace, Config], ScanResult]] = {
    "channel": cmd_channel,
    "capacity-scan": cmd_capacity_scan,
    "negativity-scan": cmd_negativity_scan,
    "casimir-scan": cmd_casimir_scan,
    "fermi": cmd_fermi,
    "glauber": cmd_glauber,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args(argv)
    setup_logging(args.debug, args.quiet)

    try:
        config = load_config(args)
        result = HANDLERS[args.command](args, config)
        text = result.render(args.out)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        if result.failures:
            logger.warning("%d of %d rows failed", len(result.failures), len(result.rows))
        return 0

    except KeyboardInterrupt:
        print("\n👋 relchannel stopped by user", file=sys.stderr)
        return 130
    except RelChannelError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        if args.debug:
            import traceback
            traceback.print_exc()
        return e.exit_code
    except Exception as e:
        print(f"❌ Error running relchannel {args.command}: {e}", file=sys.stderr)
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
