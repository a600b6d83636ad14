# pebkit/app.py
"""
Command-line front end.

Every command prints one JSON report to stdout; diagnostics go to stderr.
Exit codes: 0 pass, 1 verification failure, 2 input/parse error,
3 precondition violation.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
import time

import dotenv
import numpy as np
import yaml

from pebkit.channel_file import ChannelFile, read_channel_file, write_channel_file, write_transcript
from pebkit.channels import (
    ChoiMatrix,
    DensityMatrix,
    KrausSet,
    apply_kraus,
    choi_to_kraus,
    kraus_to_choi,
    kraus_to_stinespring,
    random_density,
    verify_cptp,
)
from pebkit.errors import InputError, PebkitError, PreconditionError, VerificationError
from pebkit.model.config import Config, ProtocolConfig, SearchConfig, Tolerances
from pebkit.numerics import max_abs
from pebkit.protocol import simulate_locc_exact, simulate_locc_sampled, verify_theorem
from pebkit.registry import SCHEMA_REGISTRY, make_channel
from pebkit.run_logger import RunLog, create_log
from pebkit.schmidt import (
    kraus_max_rank,
    minimize_kraus_rank,
    rank_k_representation,
    sn_bounds,
    sn_lower_bound_fidelity,
    sn_lower_bound_ppt,
)

dotenv.load_dotenv()

# Setup logging configuration early in the file
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%H:%M:%S',
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3

ROUND_TRIP_TOL = 1e-9
SAMPLE_SIGMAS = 5.0


# =============================================================================
# Configuration
# =============================================================================

def _section(cls, data: dict | None, name: str):
    data = data or {}
    if not isinstance(data, dict):
        raise InputError(f"config.{name}: expected a mapping")
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"config.{name}: unknown key(s) {sorted(unknown)}")
    values = {}
    for key, value in data.items():
        # YAML reads 1e-9 as a string; cast through the default's type
        caster = type(getattr(defaults, key))
        try:
            values[key] = caster(value)
        except (TypeError, ValueError):
            raise InputError(f"config.{name}.{key}: cannot read {value!r} as {caster.__name__}")
    return cls(**values)


def load_config(path: str | None) -> Config:
    if path is None:
        return Config()
    try:
        with open(path, 'r') as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise InputError(f"config: cannot read {path} ({e.strerror})")
    except yaml.YAMLError as e:
        raise InputError(f"config: malformed YAML in {path} ({e})")
    return Config(
        tolerances=_section(Tolerances, data.get('tolerances'), 'tolerances'),
        search=_section(SearchConfig, data.get('search'), 'search'),
        protocol=_section(ProtocolConfig, data.get('protocol'), 'protocol'),
    )


def _apply_env(config: Config) -> Config:
    raw = os.environ.get("PEBKIT_TOL")
    if raw:
        try:
            config.tolerances.cptp = float(raw)
        except ValueError:
            raise InputError(f"PEBKIT_TOL: expected a number, got {raw!r}")
    return config


# =============================================================================
# Helpers
# =============================================================================

def _load_channel(path: str, tol: float) -> KrausSet | ChoiMatrix:
    """Read a channel file and enforce the CPTP invariant of valid inputs."""
    channel = read_channel_file(path).to_channel()
    report = verify_cptp(channel, tol)
    if not report.passed:
        raise InputError(
            f"data: channel in {path} is not CPTP at tol={tol:g} (max violation {report.max_violation:.3e})"
        )
    return channel


def _as_kraus(channel: KrausSet | ChoiMatrix, tol: float) -> KrausSet:
    return channel if isinstance(channel, KrausSet) else choi_to_kraus(channel, tol)


def _as_choi(channel: KrausSet | ChoiMatrix) -> ChoiMatrix:
    return channel if isinstance(channel, ChoiMatrix) else kraus_to_choi(channel)


def _parse_params(raw: str | None) -> dict:
    params = {}
    if not raw:
        return params
    for item in raw.split(','):
        if '=' not in item:
            raise InputError(f"--params: expected key=value, got {item!r}")
        key, value = item.split('=', 1)
        params[key.strip()] = value.strip()
    return params


def _search_config(config: Config, args) -> SearchConfig:
    overrides = {}
    if getattr(args, 'restarts', None) is not None:
        overrides['restarts'] = args.restarts
    if getattr(args, 'seed', None) is not None:
        overrides['seed'] = args.seed
    return dataclasses.replace(config.search, **overrides)


def _read_state(spec: str, d: int) -> tuple[DensityMatrix, str]:
    if spec == 'maximally-mixed':
        return DensityMatrix.maximally_mixed(d), spec
    if spec.startswith('random:'):
        try:
            seed = int(spec.split(':', 1)[1])
        except ValueError:
            raise InputError(f"--input: expected random:SEED, got {spec!r}")
        return random_density(d, seed), spec
    rho = read_channel_file(spec).to_state()
    if rho.dim != d:
        raise InputError(f"d: input state has dimension {rho.dim}, channel has {d}")
    return rho, spec


def _certificate_dict(certificate) -> dict:
    return {
        "target_k": certificate.target_k,
        "achieved": certificate.achieved,
        "max_rank_found": certificate.max_rank_found,
        "residual": certificate.residual,
        "restart": certificate.restart,
        "iterations": certificate.iterations,
    }


# =============================================================================
# Commands
# =============================================================================
# Each returns (report fields, exit code).

def cmd_convert(args, config: Config, run_log: RunLog | None) -> tuple[dict, int]:
    tol = config.tolerances.cptp
    channel = _load_channel(args.in_file, tol)
    source = _as_choi(channel)
    if args.to == 'choi':
        out = ChannelFile.from_choi(source)
        back = source
    elif args.to == 'kraus':
        K = _as_kraus(channel, config.tolerances.rank)
        out = ChannelFile.from_kraus(K)
        back = kraus_to_choi(K)
    else:
        K = _as_kraus(channel, config.tolerances.rank)
        S = kraus_to_stinespring(K)
        out = ChannelFile.from_stinespring(S)
        back = kraus_to_choi(out.to_channel())
    residual = max_abs(back.matrix - source.matrix)
    if residual > ROUND_TRIP_TOL:
        raise VerificationError(f"conversion changed the Choi matrix by {residual:.3e}", max_residual=residual)

    report = {"to": args.to, "round_trip_residual": residual, "passed": True}
    if args.output:
        write_channel_file(out, args.output)
        report["output"] = args.output
    else:
        report["channel_file"] = out.to_dict()
    return report, EXIT_PASS


def cmd_verify(args, config: Config, run_log: RunLog | None) -> tuple[dict, int]:
    channel = read_channel_file(args.in_file).to_channel()
    result = verify_cptp(channel, config.tolerances.cptp)
    if not result.passed:
        logger.warning(f"{args.in_file} fails the CPTP check (max violation {result.max_violation:.3e})")
    report = {
        "representation": "kraus" if isinstance(channel, KrausSet) else "choi",
        "trace_preserving": result.trace_preserving,
        "completely_positive": result.completely_positive,
        "max_violation": result.max_violation,
        "passed": result.passed,
    }
    return report, EXIT_PASS if result.passed else EXIT_VERIFICATION


def cmd_schmidt(args, config: Config, run_log: RunLog | None) -> tuple[dict, int]:
    search = _search_config(config, args)
    K = _as_kraus(_load_channel(args.in_file, config.tolerances.cptp), config.tolerances.rank)
    J = kraus_to_choi(K)
    bounds = sn_bounds(K, search)
    report = {
        "seed": search.seed,
        "restarts": search.restarts,
        "input_max_rank": kraus_max_rank(K, search.tol),
        "canonical_max_rank": bounds.canonical_max_rank,
        "sn_upper": bounds.upper,
        "sn_lower": bounds.lower,
        "sn_lower_fidelity": sn_lower_bound_fidelity(J),
        "sn_lower_ppt": sn_lower_bound_ppt(J),
        "passed": True,
    }
    if run_log:
        for attempt in bounds.attempts:
            run_log.search_result(attempt)
        run_log.bracket(bounds.lower, bounds.upper, bounds.canonical_max_rank)
    if args.k is not None:
        certificate = minimize_kraus_rank(K, args.k, search)
        if run_log:
            run_log.search_result(certificate)
        report["certificate"] = _certificate_dict(certificate)
    return report, EXIT_PASS


def cmd_simulate(args, config: Config, run_log: RunLog | None) -> tuple[dict, int]:
    search = _search_config(config, args)
    K = _as_kraus(_load_channel(args.in_file, config.tolerances.cptp), config.tolerances.rank)
    k = args.k if args.k is not None else kraus_max_rank(K, search.tol)
    K = rank_k_representation(K, k, search)
    rho, input_name = _read_state(args.input, K.d)
    direct = apply_kraus(K, rho, config.tolerances.cptp).matrix
    report = {"k": k, "mode": args.mode, "input": input_name}

    if args.mode == 'exact':
        output, transcript = simulate_locc_exact(K, k, rho, config.protocol, tol=config.tolerances.theorem)
        residual = max_abs(output.matrix - direct)
        report.update({"residual": residual, "branches": len(transcript.outcomes),
                       "dropped_mass": transcript.dropped_mass, "passed": True})
        exit_code = EXIT_PASS
    else:
        seed = args.seed if args.seed is not None else search.seed
        output, transcript = simulate_locc_sampled(K, k, rho, seed, args.shots, config.protocol)
        deviation = np.abs(output.matrix - direct)
        # floor keeps deterministic entries (zero spread) comparable
        bound = SAMPLE_SIGMAS * transcript.standard_error + 1e-12
        passed = bool(np.all(deviation <= bound))
        report.update({
            "seed": seed,
            "shots": args.shots,
            "max_deviation": float(deviation.max()),
            "max_standard_error": float(transcript.standard_error.max()),
            "passed": passed,
        })
        exit_code = EXIT_PASS if passed else EXIT_VERIFICATION

    report["one_way"] = transcript.one_way
    if run_log:
        for o in transcript.outcomes:
            run_log.branch(o.message.alpha, o.message.m, o.message.n, o.probability)
    if args.transcript:
        write_transcript(transcript, args.transcript)
        report["transcript"] = args.transcript
    return report, exit_code


def cmd_verify_theorem(args, config: Config, run_log: RunLog | None) -> tuple[dict, int]:
    tol = args.tol if args.tol is not None else config.tolerances.theorem
    K = _as_kraus(_load_channel(args.in_file, config.tolerances.cptp), config.tolerances.rank)
    # i => ii: a rank-k representation exists (or the lower bound rules it out)
    representation = rank_k_representation(K, args.k, config.search)
    result = verify_theorem(representation, args.k, tol)
    chain = {
        "sn_lower_bound_le_k": sn_lower_bound_fidelity(kraus_to_choi(K)) <= args.k,
        "kraus_rank_le_k": kraus_max_rank(representation, config.tolerances.rank) <= args.k,
        "locc_simulation_matches": result.passed,
        "protocol_sn_lower_bound_le_k": result.lower_bound <= args.k,
    }
    passed = all(chain.values())
    print(f"k-PEB chain for {args.in_file} with k={args.k}:", file=sys.stderr)
    print(f"  (i)   Schmidt number <= k      lower bound {sn_lower_bound_fidelity(kraus_to_choi(K))}",
          file=sys.stderr)
    print(f"  (ii)  Kraus ranks <= k         max rank {kraus_max_rank(representation)}", file=sys.stderr)
    print(f"  (iii) one-way LOCC + rank-k    Choi distance {result.choi_distance:.3e}", file=sys.stderr)
    print(f"  chain {'closes' if passed else 'BROKEN'}", file=sys.stderr)
    report = {
        "k": args.k,
        "choi_distance": result.choi_distance,
        "resource_schmidt_rank": result.resource_schmidt_rank,
        "composite_max_rank": result.composite_max_rank,
        "one_way": result.one_way,
        "protocol_lower_bound": result.lower_bound,
        "chain": chain,
        "passed": passed,
    }
    return report, EXIT_PASS if passed else EXIT_VERIFICATION


def cmd_zoo(args, config: Config, run_log: RunLog | None) -> tuple[dict, int]:
    if args.list or not args.name:
        schemas = {
            name: {
                "description": s["description"],
                "required": s["required"],
                "parameters": {p: {k: v for k, v in spec.items() if k != "python_type"}
                               for p, spec in s["parameters"].items()},
            }
            for name, s in sorted(SCHEMA_REGISTRY.items())
        }
        return {"generators": schemas, "passed": True}, EXIT_PASS

    params = _parse_params(args.params)
    accepted = SCHEMA_REGISTRY.get(args.name, {}).get("parameters", {})
    if args.d is not None and "d" in accepted:
        params["d"] = args.d
    if args.seed is not None and "seed" in accepted:
        params["seed"] = args.seed
    spec = make_channel(args.name, **params)
    metadata = {
        "generator": spec.name,
        "params": spec.params,
        "known_sn_bounds": list(spec.known_sn_bounds),
        "provenance": spec.provenance,
    }
    out = ChannelFile.from_kraus(spec.kraus, metadata)
    report = {"generator": spec.name, "d": spec.d, "params": spec.params,
              "known_sn_bounds": list(spec.known_sn_bounds), "passed": True}
    if args.output:
        write_channel_file(out, args.output)
        report["output"] = args.output
    else:
        report["channel_file"] = out.to_dict()
    return report, EXIT_PASS


COMMANDS = {
    'convert': cmd_convert,
    'verify': cmd_verify,
    'schmidt': cmd_schmidt,
    'simulate': cmd_simulate,
    'verify-theorem': cmd_verify_theorem,
    'zoo': cmd_zoo,
}


# =============================================================================
# Entry point
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='pebkit', description='Quantum channel Schmidt-number toolkit')
    parser.add_argument('--config', help='YAML config file (see config/defaults.yaml)')
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('convert', help='convert between Kraus, Choi and Stinespring forms')
    p.add_argument('in_file')
    p.add_argument('--to', choices=['kraus', 'choi', 'stinespring'], required=True)
    p.add_argument('--tol', type=float)
    p.add_argument('-o', '--output')

    p = sub.add_parser('verify', help='check complete positivity and trace preservation')
    p.add_argument('in_file')
    p.add_argument('--tol', type=float)

    p = sub.add_parser('schmidt', help='bracket the Schmidt number of a channel')
    p.add_argument('in_file')
    p.add_argument('--k', type=int)
    p.add_argument('--restarts', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--tol', type=float)

    p = sub.add_parser('simulate', help='run the entanglement-assisted one-way LOCC protocol')
    p.add_argument('in_file')
    p.add_argument('--k', type=int)
    p.add_argument('--input', default='maximally-mixed', help='state file, maximally-mixed or random:SEED')
    p.add_argument('--mode', choices=['exact', 'sample'], default='exact')
    p.add_argument('--shots', type=int, default=10_000)
    p.add_argument('--seed', type=int)
    p.add_argument('--restarts', type=int)
    p.add_argument('--tol', type=float)
    p.add_argument('--transcript', help='write the protocol transcript as JSON')

    p = sub.add_parser('verify-theorem', help='close the k-PEB equivalence chain for one channel')
    p.add_argument('in_file')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--tol', type=float, help='Choi trace-distance tolerance')

    p = sub.add_parser('zoo', help='materialize a named channel generator')
    p.add_argument('name', nargs='?')
    p.add_argument('--d', type=int)
    p.add_argument('--params', help='comma-separated key=value pairs')
    p.add_argument('--seed', type=int)
    p.add_argument('--list', action='store_true')
    p.add_argument('-o', '--output')
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    started = time.perf_counter()
    report = {"command": args.command, "argv": list(argv) if argv is not None else sys.argv[1:]}
    run_log = None
    try:
        config = _apply_env(load_config(args.config))
        # verify-theorem reads --tol as the Choi distance tolerance
        if args.command != 'verify-theorem' and getattr(args, 'tol', None) is not None:
            config.tolerances.cptp = args.tol
        config.protocol.closure_tol = config.tolerances.cptp
        run_log = create_log(args.command, argv=report["argv"], seed=getattr(args, 'seed', None))
        fields, exit_code = COMMANDS[args.command](args, config, run_log)
        report["tolerances"] = dataclasses.asdict(config.tolerances)
        report.update(fields)
    except InputError as e:
        logger.error(f"input error: {e}")
        report.update({"passed": False, "error": str(e)})
        exit_code = EXIT_INPUT
    except PreconditionError as e:
        logger.error(f"precondition violated: {e}")
        report.update({"passed": False, "error": str(e), "rank": e.rank})
        exit_code = EXIT_PRECONDITION
    except VerificationError as e:
        logger.error(f"verification failed: {e}")
        report.update({"passed": False, "error": str(e), "max_residual": e.max_residual})
        exit_code = EXIT_VERIFICATION
    except PebkitError as e:
        logger.error(f"error: {e}")
        report.update({"passed": False, "error": str(e)})
        exit_code = EXIT_INPUT

    report["elapsed_s"] = round(time.perf_counter() - started, 4)
    report["exit_code"] = exit_code
    print(json.dumps(report, indent=2, default=str))
    if run_log:
        run_log.end(exit_code, report)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
