"""Command-line interface.

    motional-dipoles rates   --config run.json [--output out.csv]
    motional-dipoles shifts  --config run.json [--cutoff 1e-3]
    motional-dipoles fock    --config run.json
    motional-dipoles evolve  --config run.json
    motional-dipoles verify

Configs are JSON.  Lengths are dimensionless (multiplied by ``k0``), angles
are in degrees and times in units of ``1/gamma0``.  An optional ``units``
block (``gamma0`` in 1/s, ``wavelength`` in m) adds SI columns to the output.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import collections
import csv
import hashlib
import io
import json
import logging
import math
import re
import sys
import warnings
from contextlib import nullcontext

import jsonschema
import numpy as np

from . import __version__
from .coefficients import CUTOFF_FLOOR, CutoffWarning, build_coefficient_set, LARGE_ETA
from .estimators import FockDecayRates, GaussianDecayRates, RegularizedShifts
from .exceptions import ConfigError, MotionalDipolesError
from .lindblad import evolve, excited_state, ground_state, pure_state, single_excitation_state
from .motional_states import Ensemble, Fock, Gaussian, PointLike, Thermal
from .verification import run_verification

__all__ = ["main", "CONFIG_SCHEMA", "load_config"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

_grid = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "transition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["pi", "sigma+", "sigma-"]},
                "alpha_deg": {"type": "number", "minimum": 0, "maximum": 180},
            },
        },
        "units": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma0": {"type": "number", "exclusiveMinimum": 0},
                "wavelength": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "ensemble": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variant"],
            "properties": {
                "variant": {"enum": ["pointlike", "gaussian", "fock", "thermal"]},
                "statistics": {"enum": ["separable", "symmetric", "antisymmetric"]},
                "centers": {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 6},
                "eta": {"type": "number", "exclusiveMinimum": 0},
                "n": {
                    "oneOf": [
                        {"type": "integer", "minimum": 0},
                        {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                    ]
                },
                "nbar": {"type": "number", "minimum": 0},
                "n_atoms": {"type": "integer", "minimum": 1, "maximum": 6},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"xi": _grid, "eta": _grid},
        },
        "fock": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "levels": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
                "eta": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            },
        },
        "cutoff": {"type": "number", "minimum": CUTOFF_FLOOR},
        "cutoffs": {"type": "array", "items": {"type": "number", "minimum": CUTOFF_FLOOR}, "minItems": 1},
        "method": {"enum": ["auto", "closed", "quadrature"]},
        "output": {"type": "string"},
        "evolve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "n_times": {"type": "integer", "minimum": 2},
                "reltol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-3},
                "initial": {
                    "oneOf": [
                        {"enum": ["ground", "excited"]},
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {"excited": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
                            "required": ["excited"],
                        },
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {"amplitudes": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
                            "required": ["amplitudes"],
                        },
                    ]
                },
            },
        },
    },
}


def _line_of(text, path):
    """Best-effort source line of a JSON field, for diagnostics."""
    keys = [p for p in path if isinstance(p, str)]
    pos = 0
    for key in keys:
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            break
        pos = m.start()
    return text.count("\n", 0, pos) + 1


def _field(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out or "<root>"


def load_config(path) -> dict:
    """Parse and validate a JSON config; raise :class:`ConfigError` with line/field diagnostics."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [
            f"{path}:{_line_of(text, list(e.absolute_path))}: {_field(list(e.absolute_path))}: {e.message}"
            for e in errors
        ]
        raise ConfigError("\n".join(lines))
    for section, key in (("sweep", "xi"), ("sweep", "eta"), ("fock", "eta")):
        grid = config.get(section, {}).get(key)
        if grid is not None and any(b <= a for a, b in zip(grid, grid[1:])):
            path_ = [section, key]
            raise ConfigError(f"{path}:{_line_of(text, path_)}: {_field(path_)}: grid must be strictly increasing")
    return config


def _require(config, *path):
    node = config
    for key in path:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"missing required field {_field(list(path))}")
        node = node[key]
    return node


def _transition(config):
    t = config.get("transition", {})
    return t.get("kind", "pi"), math.radians(t.get("alpha_deg", 90.0))


def _ensemble(config):
    spec = _require(config, "ensemble")
    variant = spec["variant"]
    stats = spec.get("statistics", "separable")
    if variant == "thermal":
        if any(c != 0 for c in spec.get("centers", [0.0])):
            raise ConfigError("ensemble.centers: thermal atoms share the trap center at 0")
        n_atoms = spec.get("n_atoms", len(spec.get("centers", [0.0, 0.0])))
        states = [Thermal(spec.get("nbar", 0.0), _require(config, "ensemble", "eta"))] * n_atoms
    else:
        centers = _require(config, "ensemble", "centers")
        if variant == "pointlike":
            states = [PointLike(z) for z in centers]
        elif variant == "gaussian":
            eta = _require(config, "ensemble", "eta")
            states = [Gaussian(z, eta) for z in centers]
        else:
            eta = _require(config, "ensemble", "eta")
            n = spec.get("n", 0)
            ns = [n] * len(centers) if isinstance(n, int) else n
            if len(ns) != len(centers):
                raise ConfigError("ensemble.n: one excitation number per center is required")
            states = [Fock(k, z, eta) for k, z in zip(ns, centers)]
    try:
        return Ensemble((tuple(states),), (1.0,), stats)
    except MotionalDipolesError as exc:
        raise ConfigError(f"ensemble: {exc}") from None


def _config_hash(config) -> str:
    # where the table is written does not change its contents
    config = {k: v for k, v in config.items() if k != "output"}
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _fmt(v) -> str:
    return "nan" if isinstance(v, float) and math.isnan(v) else f"{v:.17g}"


def _write_table(out, command, config, header, rows, notes=()):
    out.write(f"# motional-dipoles {__version__}\n")
    out.write(f"# command: {command}\n")
    out.write(f"# config-sha256: {_config_hash(config)}\n")
    for note in notes:
        out.write(f"# {note}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(float(v)) for v in row])


def _tag_counts(tags) -> str:
    counts = collections.Counter(tags)
    return ", ".join(f"{k}={counts[k]}" for k in sorted(counts))


def _si_columns(config):
    units = config.get("units", {})
    return units.get("wavelength"), units.get("gamma0")


def cmd_rates(config, workers):
    xi = _require(config, "sweep", "xi")
    eta = _require(config, "sweep", "eta")
    kind, alpha = _transition(config)
    method = config.get("method", "auto")
    grid = np.array([(x, e) for x in xi for e in eta], dtype=float)
    table = GaussianDecayRates(kind, alpha, method, n_jobs=workers).fit_transform(grid)
    tags = [
        "classical" if e == 0 else ("quadrature" if method == "quadrature" or (method == "auto" and e > LARGE_ETA) else "closed")
        for _, e in grid
    ]
    header = ["xi", "eta", "gamma_sep", "gamma_plus", "gamma_minus"]
    rows = np.column_stack([grid, table])
    wavelength, _ = _si_columns(config)
    if wavelength:
        header += ["r_m", "ell0_m"]
        rows = np.column_stack([rows, grid * wavelength / (2 * math.pi)])
    notes = [f"transition: {kind}, alpha_deg = {math.degrees(alpha):.17g}", f"method-tags: {_tag_counts(tags)}",
             "units: rates in gamma0, lengths times k0"]
    return header, rows, notes


def cmd_shifts(config, workers):
    xi = _require(config, "sweep", "xi")
    eta = _require(config, "sweep", "eta")
    kind, alpha = _transition(config)
    cutoffs = config.get("cutoffs") or [config.get("cutoff", 1e-2)]
    grid = np.array([(x, e) for x in xi for e in eta], dtype=float)
    est = RegularizedShifts(kind, alpha, cutoffs, n_jobs=workers)
    table = est.fit_transform(grid)
    header = ["xi", "eta", *est.get_feature_names_out()]
    tags = [
        ("divergent" if math.isnan(v) else "classical") if e == 0 else "convolution"
        for (_, e), row in zip(grid, table) for v in row
    ]
    notes = [f"transition: {kind}, alpha_deg = {math.degrees(alpha):.17g}", f"method-tags: {_tag_counts(tags)}",
             "cutoffs (k0*eps): " + " ".join(repr(float(c)) for c in cutoffs),
             "units: shifts in gamma0, lengths times k0"]
    return header, np.column_stack([grid, table]), notes


def cmd_fock(config, workers):
    levels = config.get("fock", {}).get("levels", [[0, 0], [1, 1], [10, 10]])
    eta = _require(config, "fock", "eta")
    kind, alpha = _transition(config)
    est = FockDecayRates(kind, alpha, levels, n_jobs=workers)
    values, methods = est.fit(np.array(eta, dtype=float)[:, None]).transform_with_methods(np.array(eta, dtype=float)[:, None])
    header = ["eta", *est.get_feature_names_out()]
    tags = [m for row in methods for m in row]
    notes = [f"transition: {kind}, alpha_deg = {math.degrees(alpha):.17g}", f"method-tags: {_tag_counts(tags)}",
             "units: rates in gamma0, coincident trap centers"]
    return header, np.column_stack([np.array(eta, dtype=float), values]), notes


def _initial_state(config, n):
    init = config.get("evolve", {}).get("initial", "excited")
    if init == "excited":
        return excited_state(n)
    if init == "ground":
        return ground_state(n)
    if "amplitudes" in init:
        if len(init["amplitudes"]) != n:
            raise ConfigError("evolve.initial.amplitudes: one amplitude per atom is required")
        if not any(init["amplitudes"]):
            raise ConfigError("evolve.initial.amplitudes: amplitudes must not all vanish")
        return single_excitation_state(init["amplitudes"])
    excited = init["excited"]
    if any(i >= n for i in excited):
        raise ConfigError("evolve.initial.excited: atom index out of range")
    psi = np.zeros(2**n)
    psi[sum(1 << (n - 1 - i) for i in set(excited))] = 1.0
    return pure_state(psi)


def cmd_evolve(config, workers):
    ensemble = _ensemble(config)
    kind, alpha = _transition(config)
    ev = config.get("evolve", {})
    t_end = ev.get("t_end", 10.0)
    times = np.linspace(0.0, t_end, ev.get("n_times", 101))
    coeffs = build_coefficient_set(
        ensemble, kind, alpha, cutoff=config.get("cutoff", 1e-2), method=config.get("method", "auto"), n_jobs=workers
    )
    rho0 = _initial_state(config, ensemble.n_atoms)
    traj = evolve(rho0, coeffs, t_end, reltol=ev.get("reltol", 1e-8), times=times)
    header = traj.header()
    rows = np.array(list(traj.rows()))
    _, gamma0 = _si_columns(config)
    if gamma0:
        header.append("time_s")
        rows = np.column_stack([rows, rows[:, 0] / gamma0])
    meta = coeffs.metadata
    gtags = [t for i, r in enumerate(meta["gamma_method"]) for j, t in enumerate(r) if i < j]
    notes = [
        f"transition: {kind}, alpha_deg = {math.degrees(alpha):.17g}, cutoff = {_fmt(meta['cutoff'])}",
        f"method-tags: {_tag_counts(gtags)}",
        "gamma: " + json.dumps([[float(_fmt(v)) for v in r] for r in coeffs.gamma]),
        "delta: " + json.dumps([[float(_fmt(v)) for v in r] for r in coeffs.delta]),
        f"gamma-min-eigenvalue: {_fmt(meta['min_eigenvalue'])}",
        f"trace-drift: {traj.metadata['trace_drift']:.3e}",
        "units: time in 1/gamma0",
    ]
    return header, rows, notes


COMMANDS = {"rates": cmd_rates, "shifts": cmd_shifts, "fock": cmd_fock, "evolve": cmd_evolve}


def _parser():
    parser = argparse.ArgumentParser(prog="motional-dipoles", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("rates", "shifts", "fock", "evolve", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", required=name != "verify")
        p.add_argument("--output", metavar="PATH")
        p.add_argument("--workers", metavar="N", type=int, default=1)
        p.add_argument("--method", choices=["auto", "closed", "quadrature"])
        p.add_argument("--cutoff", metavar="K0EPS", type=float)
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "verify":
            p.add_argument("--inject-fault", metavar="REL", type=float, default=0.0,
                           help=argparse.SUPPRESS)
    return parser


def _apply_overrides(config, args):
    config = dict(config)
    if args.method:
        config["method"] = args.method
    if args.cutoff is not None:
        if not args.cutoff >= CUTOFF_FLOOR:
            raise ConfigError(f"--cutoff: {args.cutoff} is below the floor {CUTOFF_FLOOR}")
        config["cutoff"] = args.cutoff
        config.pop("cutoffs", None)
    if args.output:
        config["output"] = args.output
    return config


def _run_verify(args):
    out = open(args.output, "w", encoding="utf-8") if args.output else nullcontext(sys.stdout)
    with out as stream:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CutoffWarning)
            results = run_verification(closed_form_bias=args.inject_fault, stream=stream)
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=stream)
    return EXIT_OK if not failed else EXIT_NUMERICAL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            return _run_verify(args)
        config = _apply_overrides(load_config(args.config), args)
        header, rows, notes = COMMANDS[args.command](config, args.workers)
        buf = io.StringIO()
        _write_table(buf, args.command, config, header, rows, notes)
        if config.get("output"):
            with open(config["output"], "w", encoding="utf-8", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MotionalDipolesError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK
