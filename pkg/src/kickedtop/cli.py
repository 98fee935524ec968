"""Command-line front end: one experiment per invocation, CSV or JSON output.

Every command accepts the common flags ``--kappa --qubits --steps --grid
--mode --backend --seed --out --format --config``.  A config file holds
``key = value`` lines (``#`` starts a comment); its values override flags
given on the command line.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

import numpy as np

from . import __version__
from .classical_map import stroboscopic_map
from .experiments import (
    BACKENDS,
    ERGODICITY_INITIALS,
    DEVICE_NOISE,
    FINITE_SIZE_INITIAL,
    MODES,
    PAULI_INSETS,
    SCHEMA_VERSION,
    GridSpec,
    InvariantViolation,
    entropy_map_scan,
    ergodicity_experiment,
    finite_size_experiment,
    full_chaos_experiment,
    pauli_bars_experiment,
    purity_experiment,
    trajectory_experiment,
)
from .floquet import FloquetParameters, step_register_array
from .metrics import fidelity
from .open_system import (
    CountRecord,
    NoiseParameters,
    measurement_probabilities,
    mle_fit,
    simulate_counts,
    tomography_settings,
)
from .output import rows_to_records, to_csv, to_json, write_text
from .spin_core import SphericalDirection, coherent_state_register

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3
INVARIANT_TOL = 1e-9

_ANGLE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+(?:\.\d*)?))?$")


class UsageError(ValueError):
    pass


def parse_angle(text: str) -> float:
    """A float, or a multiple of pi such as ``pi/2``, ``-pi/2`` or ``2pi/3``."""
    s = text.strip().replace(" ", "").lower()
    try:
        return float(s)
    except ValueError:
        pass
    m = _ANGLE.match(s)
    if not m:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}")
    coef = m.group(1)
    num = {"": 1.0, "+": 1.0, "-": -1.0}.get(coef)
    if num is None:
        num = float(coef)
    return num * math.pi / (float(m.group(2)) if m.group(2) else 1.0)


def parse_direction(text: str) -> SphericalDirection:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"direction must be THETA,PHI, got {text!r}")
    return SphericalDirection(parse_angle(parts[0]), parse_angle(parts[1]))


def parse_grid(text: str) -> GridSpec:
    try:
        return GridSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_int_list(text: str) -> list[int]:
    """``4,8,10`` or an inclusive range ``4-10``."""
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None


def parse_pair(text: str) -> tuple[int, int]:
    vals = parse_int_list(text.replace("-", ","))
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return vals[0], vals[1]


def positive_time(text: str) -> float:
    val = float(text)
    if val <= 0:
        raise argparse.ArgumentTypeError("times must be positive (use inf to disable)")
    return val


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _apply_config(args: argparse.Namespace, sub: argparse.ArgumentParser, config: dict) -> None:
    actions = {a.dest: a for a in sub._actions}
    for key, raw in config.items():
        act = actions.get(key)
        if act is None or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for this command")
        convert = act.type or str
        try:
            if isinstance(act, argparse._AppendAction):
                val = [convert(v) for v in raw.split(";") if v.strip()]
            elif isinstance(act, argparse._StoreTrueAction):
                val = raw.lower() in ("1", "true", "yes", "on")
            else:
                val = convert(raw)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if act.choices is not None and val not in act.choices:
            raise UsageError(f"config key {key!r}: {val!r} not in {list(act.choices)}")
        setattr(args, key, val)


def _noise(args, default: NoiseParameters | None = None) -> NoiseParameters | None:
    t1 = args.t1 if args.t1 is not None else (default.t1 if default else None)
    tphi = args.tphi if args.tphi is not None else (default.tphi if default else None)
    if t1 is None and tphi is None:
        return None
    base = default or NoiseParameters()
    return NoiseParameters(
        t1=math.inf if t1 is None else t1,
        tphi=math.inf if tphi is None else tphi,
        rotation_duration=args.rotation_ns if args.rotation_ns is not None else base.rotation_duration,
        interaction_duration=args.interaction_ns if args.interaction_ns is not None else base.interaction_duration,
    )


def _direction_dict(d: SphericalDirection) -> dict:
    return {"theta": d.theta, "phi": d.phi}


def _meta(args, **extra) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "command": args.command,
        "kappa": args.kappa,
        "qubits": args.qubits,
        "steps": args.steps,
        "backend": args.backend,
        "mode": args.mode,
        "seed": args.seed,
        "grid": str(args.grid) if args.grid is not None else None,
    }
    meta.update(extra)
    return meta


def _require_full_mode(args):
    if args.mode != "full":
        raise UsageError(f"{args.command} supports only --mode full")


def _map_rows(m):
    tt, pp = m.grid.mesh()
    return zip(tt.ravel(), pp.ravel(), m.values.ravel())


# Each handler returns (header, rows, meta, json_data or None).


def cmd_entropy_map(args):
    noise = _noise(args)
    m = entropy_map_scan(
        FloquetParameters(args.kappa), args.qubits, args.steps, args.grid, args.mode, noise,
        "time_average", args.backend, args.seed, args.workers,
    )
    return ["theta", "phi", "entropy"], list(_map_rows(m)), dict(m.meta, seed=args.seed), None


def cmd_snapshots(args):
    noise = _noise(args)
    maps = entropy_map_scan(
        FloquetParameters(args.kappa), args.qubits, args.steps, args.grid, args.mode, noise,
        "per_step_snapshots", args.backend, args.seed, args.workers,
    )
    rows = [(k, t, p, v) for k, m in enumerate(maps) for t, p, v in _map_rows(m)]
    meta = dict(maps[0].meta, seed=args.seed)
    meta.pop("step", None)
    return ["step", "theta", "phi", "entropy"], rows, meta, None


def cmd_trajectory(args):
    _require_full_mode(args)
    d = args.initial or FINITE_SIZE_INITIAL
    rec = trajectory_experiment(d, FloquetParameters(args.kappa), args.qubits, args.steps, args.backend)
    if np.any(rec.lengths > 1 + INVARIANT_TOL):
        raise InvariantViolation("Bloch vector longer than 1")
    rows = [(k, b.x, b.y, b.z, b.length, s) for k, (b, s) in enumerate(zip(rec.bloch, rec.entropy))]
    return ["step", "x", "y", "z", "length", "entropy"], rows, _meta(args, initial=_direction_dict(d)), None


def cmd_classical_map(args):
    _require_full_mode(args)
    cloud = stroboscopic_map(args.kappa, args.trajectories, args.steps, args.seed)
    rows = zip(cloud.traj, cloud.step, cloud.theta, cloud.phi)
    meta = _meta(args, qubits=None, backend="classical", trajectories=args.trajectories, rng=cloud.rng)
    return ["traj", "step", "theta", "phi"], list(rows), meta, None


def _check_unit_interval(values, what):
    values = np.asarray(values)
    if np.any(values < -INVARIANT_TOL) or np.any(values > 1 + INVARIANT_TOL):
        raise InvariantViolation(f"{what} outside [0, 1]")


def cmd_ergodicity(args):
    _require_full_mode(args)
    initials = args.initial or list(ERGODICITY_INITIALS)
    series = ergodicity_experiment(
        FloquetParameters(args.kappa), args.qubits, initials, args.steps, not args.exclude_initial
    )
    rows = []
    for i, s in enumerate(series):
        _check_unit_interval(s.overlaps, "overlap")
        rows.extend((i, k, v) for k, v in s)
    meta = _meta(
        args, backend="dicke", initials=[_direction_dict(d) for d in initials],
        include_initial=not args.exclude_initial,
    )
    return ["series", "step", "value"], rows, meta, None


def cmd_finite_size(args):
    _require_full_mode(args)
    d = args.initial or FINITE_SIZE_INITIAL
    lo, hi = args.window
    table = finite_size_experiment(FloquetParameters(args.kappa), args.sizes, (lo, hi), d)
    rows = list(zip(table.qubits, table.sigma))
    meta = _meta(
        args, qubits=list(args.sizes), steps=hi, backend="dicke", window=[lo, hi],
        initial=_direction_dict(d), loglog_slope=table.loglog_slope(),
    )
    return ["qubits", "sigma"], rows, meta, None


def cmd_full_chaos(args):
    _require_full_mode(args)
    res = full_chaos_experiment(
        args.kappa, args.sizes, args.grid, args.steps, args.trajectories, args.cloud_steps, args.seed
    )
    rows = [(n, t, p, v) for n, m in res.maps.items() for t, p, v in _map_rows(m)]
    cloud = res.cloud
    cloud_header = ["traj", "step", "theta", "phi"]
    cloud_rows = list(zip(cloud.traj, cloud.step, cloud.theta, cloud.phi))
    meta = _meta(
        args, qubits=list(args.sizes), backend="dicke", trajectories=args.trajectories,
        cloud_steps=args.cloud_steps, rng=cloud.rng,
    )
    if args.cloud_out:
        text = to_csv(cloud_header, cloud_rows) if args.format == "csv" else to_json(
            dict(meta, command="full-chaos-cloud"), rows_to_records(cloud_header, cloud_rows)
        )
        write_text(text, args.cloud_out)
    header = ["qubits", "theta", "phi", "entropy"]
    data = {"maps": rows_to_records(header, rows), "cloud": rows_to_records(cloud_header, cloud_rows)}
    return header, rows, meta, data


def cmd_pauli_bars(args):
    _require_full_mode(args)
    insets = args.initial or list(PAULI_INSETS)
    tables = pauli_bars_experiment(insets, args.kappa, args.steps, args.qubits)
    rows = [(i, label, v) for i, t in enumerate(tables) for label, v in t.items()]
    meta = _meta(args, backend="register", insets=[_direction_dict(d) for d in insets])
    return ["inset", "pauli_string", "expectation"], rows, meta, None


def cmd_purity(args):
    _require_full_mode(args)
    noise = _noise(args, DEVICE_NOISE)
    p = FloquetParameters(args.kappa)
    series = purity_experiment(p, noise, args.steps, args.initial, args.qubits)
    rows = []
    for i, s in enumerate(series):
        lo = 1.0 / 2**args.qubits - INVARIANT_TOL
        if np.any(s.values < lo) or np.any(s.values > 1 + INVARIANT_TOL):
            raise InvariantViolation("purity outside [1/dim, 1]")
        rows.extend((i, k, v) for k, v in enumerate(s.values))
    meta = _meta(
        args, backend="register-density", insets=[_direction_dict(s.initial) for s in series],
        noise={
            "t1": noise.t1, "tphi": noise.tphi,
            "rotation_duration": noise.rotation_duration, "interaction_duration": noise.interaction_duration,
        },
    )
    return ["series", "step", "value"], rows, meta, None


def _tomography_truth(args) -> np.ndarray:
    n = args.qubits
    if args.state == "zero":
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1.0
    elif args.state == "ghz":
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = psi[-1] = 1 / math.sqrt(2)
    else:
        d = args.initial or FINITE_SIZE_INITIAL
        psi = coherent_state_register(n, d).amplitudes
        p = FloquetParameters(args.kappa)
        for _ in range(args.steps):
            psi = step_register_array(psi, n, p)
    return np.outer(psi, psi.conj())


def _load_records(path: str) -> list[CountRecord]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc.get("data", doc)
        if isinstance(doc, dict):
            doc = doc.get("records", [])
    return [CountRecord.from_dict(d) for d in doc]


def cmd_tomography_demo(args):
    _require_full_mode(args)
    truth = None
    if args.counts:
        records = _load_records(args.counts)
        settings = [r.setting for r in records]
        freqs = np.stack([r.counts for r in records]).astype(float)
    else:
        truth = _tomography_truth(args)
        settings = tomography_settings(args.qubits)
        if args.exact:
            records = []
            freqs = measurement_probabilities(truth, settings)
        else:
            records = simulate_counts(truth, settings, args.shots, args.seed)
            freqs = np.stack([r.counts for r in records]).astype(float)
    result = mle_fit(settings, freqs, max_iter=args.max_iter)
    fitted = measurement_probabilities(result.rho.elements, settings)
    fid = None if truth is None else fidelity(result.rho.elements, truth)
    rows = []
    for i, s in enumerate(settings):
        for o in range(fitted.shape[1]):
            count = int(records[i].counts[o]) if records else freqs[i, o]
            rows.append((str(s).replace(",", " "), o, count, fitted[i, o]))
    header = ["setting", "outcome", "count", "fitted_probability"]
    meta = _meta(
        args, backend="register-density", state=None if args.counts else args.state,
        shots=None if args.exact or args.counts else args.shots, exact=bool(args.exact),
        fidelity=fid, iterations=result.iterations, converged=result.converged,
    )
    rho = result.rho.elements
    data = {
        "records": [r.to_dict() for r in records],
        "fitted": rows_to_records(header, rows),
        "rho_real": rho.real,
        "rho_imag": rho.imag,
    }
    if fid is not None:
        print(f"fidelity {fid:.6f}", file=sys.stderr)
    return header, rows, meta, data


COMMANDS = {
    "entropy-map": (cmd_entropy_map, "time-averaged entropy over a grid of initial states",
                    dict(kappa=0.5, steps=20)),
    "snapshots": (cmd_snapshots, "per-step entropy maps for steps 0..steps", dict(kappa=0.5, steps=20)),
    "trajectory": (cmd_trajectory, "qubit-averaged Bloch vector and entropy per step", dict(kappa=2.5, steps=20)),
    "classical-map": (cmd_classical_map, "stroboscopic cloud of the classical top", dict(kappa=2.5, steps=200)),
    "ergodicity": (cmd_ergodicity, "overlap of running time averages with the microcanonical state",
                   dict(kappa=2.5, steps=10)),
    "finite-size": (cmd_finite_size, "entropy fluctuations versus qubit count", dict(kappa=2.5, steps=500)),
    "full-chaos": (cmd_full_chaos, "kappa=5 entropy maps for several sizes plus the classical cloud",
                   dict(kappa=5.0, steps=100, grid=GridSpec(16, 16))),
    "pauli-bars": (cmd_pauli_bars, "Pauli expectation tables for two evolved states", dict(kappa=0.5, steps=10)),
    "purity": (cmd_purity, "purity under decoherence for a pair of initial states", dict(kappa=0.5, steps=10)),
    "tomography-demo": (cmd_tomography_demo, "simulate tomography counts and reconstruct by MLE",
                        dict(kappa=2.5, steps=5)),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--kappa", type=float, help="kick strength")
    g.add_argument("--qubits", type=int, default=3)
    g.add_argument("--steps", type=int, help="number of Floquet periods")
    g.add_argument("--grid", type=parse_grid, default=GridSpec(), help="TxP, e.g. 31x61")
    g.add_argument("--mode", choices=MODES, default="full")
    g.add_argument("--backend", choices=BACKENDS, default="dicke")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="output path (default stdout)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--config", default=None, help="key = value file; overrides flags")

    noise = argparse.ArgumentParser(add_help=False)
    ng = noise.add_argument_group("decoherence (nanoseconds)")
    ng.add_argument("--t1", type=positive_time)
    ng.add_argument("--tphi", type=positive_time)
    ng.add_argument("--rotation-ns", type=positive_time)
    ng.add_argument("--interaction-ns", type=positive_time)

    parser = argparse.ArgumentParser(prog="kickedtop", description="Quantum kicked top experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    for name, (_, help_text, defaults) in COMMANDS.items():
        parents = [common, noise] if name in ("entropy-map", "snapshots", "purity") else [common]
        sp = subs.add_parser(name, parents=parents, help=help_text, description=help_text)
        if name in ("entropy-map", "snapshots"):
            sp.add_argument("--workers", type=int, default=None, help="thread pool size for the grid scan")
        if name in ("trajectory", "finite-size", "tomography-demo"):
            sp.add_argument("--initial", type=parse_direction, help="THETA,PHI (pi allowed, e.g. pi/2,-pi/2)")
        if name in ("ergodicity", "pauli-bars", "purity"):
            sp.add_argument("--initial", type=parse_direction, action="append",
                            help="THETA,PHI; repeat for several states")
        if name == "ergodicity":
            sp.add_argument("--exclude-initial", action="store_true",
                            help="average over steps 1..N instead of 0..N")
        if name == "finite-size":
            sp.add_argument("--sizes", type=parse_int_list, default=list(range(4, 11)))
            sp.add_argument("--window", type=parse_pair, default=(10, 500), help="LO,HI step window")
        if name == "full-chaos":
            sp.add_argument("--sizes", type=parse_int_list, default=[4, 8, 10])
            sp.add_argument("--cloud-steps", type=int, default=200)
            sp.add_argument("--cloud-out", default=None, help="also write the classical cloud here")
        if name in ("classical-map", "full-chaos"):
            sp.add_argument("--trajectories", type=int, default=500)
        if name == "tomography-demo":
            sp.add_argument("--state", choices=("zero", "ghz", "evolved"), default="ghz")
            sp.add_argument("--shots", type=int, default=10_000)
            sp.add_argument("--exact", action="store_true", help="fit exact probabilities instead of counts")
            sp.add_argument("--counts", default=None, help="JSON file of count records to reconstruct")
            sp.add_argument("--max-iter", type=int, default=10_000)
        sp.set_defaults(**defaults)
    return parser


def _validate(args):
    if args.qubits is not None and args.qubits < 1:
        raise UsageError("--qubits must be >= 1")
    if args.steps is not None and args.steps < 0:
        raise UsageError("--steps must be >= 0")
    if args.command == "finite-size":
        lo, hi = args.window
        if not 0 <= lo <= hi:
            raise UsageError("--window needs 0 <= LO <= HI")
        if sorted(set(args.sizes)) != list(args.sizes):
            raise UsageError("--sizes must be strictly increasing")
        args.steps = hi


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    handler = COMMANDS[args.command][0]
    try:
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            try:
                config = read_config(args.config)
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from None
            _apply_config(args, sub, config)
        _validate(args)
        header, rows, meta, data = handler(args)
        if args.format == "csv":
            text = to_csv(header, rows)
        else:
            text = to_json(meta, data if data is not None else rows_to_records(header, rows))
        write_text(text, args.out)
    except InvariantViolation as exc:
        print(f"kickedtop: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, OSError) as exc:
        print(f"kickedtop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())
