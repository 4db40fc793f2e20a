"""Command-line front end: config parsing, subcommand dispatch, CSV/JSON output.

    qwm <simulate|spectrum|compare|sweep|triplet|oracle-check>
        [--config FILE] [--set key=value]... [--format csv|json]
        [--out PATH] [--jobs N]

Config files are flat ``key = value`` INI text with bracketed sections:
``[params]`` holds the physical parameters (keys matching the
SystemParams field names), plus at most one subcommand section with
runtime options.  Flags override file values, which override defaults;
the provenance of every effective value is recorded in the output.
Every artifact embeds the effective configuration and tool version, and
contains no wall-clock data, so identical inputs reproduce identical
bytes.  Exit codes: 0 success, 1 validation error, 2 convergence
failure.  QWM_LOG={error,warn,info,debug} controls diagnostics on
standard error; results go only to --out or standard output.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import logging
import os
import sys

import numpy as np

from . import __version__, cascade, oracle, source, spectra
from ._rk import NonFinite, StepSizeUnderflow
from .cascade import NotConverged
from .harmonics import odd_k_range
from .params import InvalidParam, SystemParams, validate
from .spectra import SweepFailed

log = logging.getLogger("qwm")

COMMANDS = ("simulate", "spectrum", "compare", "sweep", "triplet", "oracle-check")

_PARAM_KEYS = {
    "gamma_s": float, "gamma_pr": float, "omega_rabi_s": float, "omega_rabi_pr": float,
    "delta": float, "delta_omega": float, "mu": float, "rabi_convention": str,
}

_PARAM_DEFAULTS = {
    "gamma_s": 1.0, "gamma_pr": 1.0, "omega_rabi_s": 0.0, "omega_rabi_pr": 0.0,
    "delta": 0.0, "delta_omega": 0.0, "mu": 1.0, "rabi_convention": "",
}


def _float_list(text: str):
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


_OPTION_SCHEMAS = {
    "simulate": {
        "tau_max": (float, 50.0), "n_samples": (int, 500),
        "rtol": (float, 1e-9), "atol": (float, 1e-12),
    },
    "spectrum": {
        "k_max": (int, 7), "n_samples": (int, 2048),
        "rtol": (float, 1e-9), "atol": (float, 1e-12),
        "residual_tol": (float, 1e-6), "transient": (float, 0.0),
    },
    "compare": {
        "k_max": (int, 7), "n_samples": (int, 2048),
        "rtol": (float, 1e-9), "atol": (float, 1e-12), "transient": (float, 0.0),
    },
    "sweep": {
        "omega_s_min": (float, 0.1), "omega_s_max": (float, 1000.0), "n_omega_s": (int, 25),
        "omega_pr_min": (float, 0.01), "omega_pr_max": (float, 10.0), "n_omega_pr": (int, 25),
        "k_max": (int, 7), "n_samples": (int, 2048),
        "rtol": (float, 1e-9), "atol": (float, 1e-12), "transient": (float, 0.0),
    },
    "triplet": {
        "n_omega": (int, 0), "omega_min": (float, -10.0), "omega_max": (float, 10.0),
    },
    "oracle-check": {
        "tau_max": (float, 20.0), "n_check": (int, 64),
        "rtol": (float, 1e-12), "atol": (float, 1e-13),
        "gamma_ratios": (_float_list, "0.1,1,10"),
        "drive_ratios": (_float_list, "0.5,5,50"),
        "probe_drives": (_float_list, "0,0.2"),
        "delta_omega": (float, 0.1), "mu": (float, 1.0),
    },
}


class ParseError(ValueError):
    """Config text could not be interpreted."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ConflictingSubcommands(ValueError):
    """More than one subcommand block active for a single run."""


class RunConfig:
    """Effective configuration of one run, with value provenance."""

    def __init__(self, command: str):
        self.command = command
        self.param_values = dict(_PARAM_DEFAULTS)
        self.options = {k: (conv(d) if isinstance(d, str) and conv is _float_list else d)
                        for k, (conv, d) in _OPTION_SCHEMAS[command].items()}
        self.provenance = {f"params.{k}": "default" for k in self.param_values}
        self.provenance.update({f"{command}.{k}": "default" for k in self.options})
        self.format = "csv"
        self.out = None
        self.jobs = 1
        self.params = None  # ValidatedParams, set by finalize()

    def set_param(self, key, raw, origin, where=""):
        if key not in _PARAM_KEYS:
            raise ParseError(f"unknown parameter key {key!r}", where)
        try:
            value = _PARAM_KEYS[key](raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {exc}", where) from exc
        self.param_values[key] = value
        self.provenance[f"params.{key}"] = origin

    def set_option(self, key, raw, origin, where=""):
        schema = _OPTION_SCHEMAS[self.command]
        if key not in schema:
            raise ParseError(f"unknown option {key!r} for {self.command}", where)
        conv = schema[key][0]
        try:
            self.options[key] = conv(raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {exc}", where) from exc
        self.provenance[f"{self.command}.{key}"] = origin

    def finalize(self):
        values = dict(self.param_values)
        conv = values.pop("rabi_convention")
        self.params = validate(SystemParams(rabi_convention=conv or None, **values))
        return self

    def effective_sections(self):
        out = {"params": dict(self.param_values)}
        out[self.command] = {
            k: (",".join(repr(x) for x in v) if isinstance(v, list) else v)
            for k, v in self.options.items()
        }
        return out


def parse_config(command: str, path: str | None = None, overrides=()) -> RunConfig:
    """Build the effective RunConfig from defaults, file, and --set flags.

    Raises
    ------
    ParseError
        Malformed file or unknown/untyped keys.
    ConflictingSubcommands
        The file carries a section for a different subcommand (or more
        than one): exactly one subcommand block may be active.
    """
    cfg = RunConfig(command)
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh, source=path)
        except OSError as exc:
            raise ParseError(str(exc), path) from exc
        except configparser.Error as exc:
            lineno = getattr(exc, "lineno", None)
            where = f"{path}:{lineno}" if lineno else path
            raise ParseError(exc.message.splitlines()[0], where) from exc
        cmd_sections = [s for s in parser.sections() if s in COMMANDS]
        if len(cmd_sections) > 1 or (cmd_sections and cmd_sections[0] != command):
            raise ConflictingSubcommands(
                f"config file activates {cmd_sections}, but the run is {command!r}"
            )
        for section in parser.sections():
            if section not in COMMANDS and section != "params":
                raise ParseError(f"unknown section [{section}]", path)
        if parser.has_section("params"):
            for key, raw in parser.items("params"):
                cfg.set_param(key, raw, "file", f"{path} [params]")
        if parser.has_section(command):
            for key, raw in parser.items(command):
                cfg.set_option(key, raw, "file", f"{path} [{command}]")

    for item in overrides:
        if "=" not in item:
            raise ParseError(f"--set expects key=value, got {item!r}", "--set")
        key, raw = item.split("=", 1)
        key = key.strip()
        raw = raw.strip()
        if "." in key:
            section, key = key.split(".", 1)
            if section == "params":
                cfg.set_param(key, raw, "flag", "--set")
            elif section == command:
                cfg.set_option(key, raw, "flag", "--set")
            else:
                raise ParseError(f"unknown section {section!r}", "--set")
        elif key in _PARAM_KEYS:
            cfg.set_param(key, raw, "flag", "--set")
        else:
            cfg.set_option(key, raw, "flag", "--set")
    return cfg.finalize()


def _header_lines(cfg: RunConfig):
    lines = [f"qwmix {__version__}", f"command = {cfg.command}"]
    for section, values in cfg.effective_sections().items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in values.items())
    lines.append("provenance: " + " ".join(
        f"{k}={v}" for k, v in sorted(cfg.provenance.items()) if v != "default"
    ))
    return lines


def _json_doc(cfg: RunConfig, results: dict) -> str:
    doc = {
        "version": __version__,
        "command": cfg.command,
        "config": cfg.effective_sections(),
        "provenance": cfg.provenance,
        "results": results,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_table(cfg, stream, columns, rows):
    if cfg.format == "json":
        stream.write(_json_doc(cfg, {"columns": list(columns),
                                     "rows": [list(r) for r in rows]}))
        return
    for line in _header_lines(cfg):
        stream.write(f"# {line}\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(repr(c) if isinstance(c, float) else str(c) for c in row) + "\n")


def _steady_kwargs(cfg):
    kw = {
        "rtol": cfg.options["rtol"], "atol": cfg.options["atol"],
        "n_samples": cfg.options["n_samples"],
    }
    if cfg.options.get("transient"):
        kw["transient"] = cfg.options["transient"]
    if "residual_tol" in cfg.options:
        kw["residual_tol"] = cfg.options["residual_tol"]
    return kw


def _run_simulate(cfg, stream):
    traj = cascade.integrate(
        cfg.params, cascade.ground_state(), (0.0, cfg.options["tau_max"]),
        rtol=cfg.options["rtol"], atol=cfg.options["atol"],
        n_samples=cfg.options["n_samples"],
    )
    if cfg.format == "json":
        results = {
            "tau": [float(t) for t in traj.taus],
            "moments": {
                name: {"re": traj.states[:, i].real.tolist(),
                       "im": traj.states[:, i].imag.tolist()}
                for i, name in enumerate(cascade.MOMENT_NAMES)
            },
        }
        stream.write(_json_doc(cfg, results))
    else:
        cascade.trajectory_to_csv(traj, stream, header_lines=_header_lines(cfg))


def _run_spectrum(cfg, stream):
    traj = cascade.steady_periodic(cfg.params, **_steady_kwargs(cfg))
    spec = spectra.harmonic_project(traj, odd_k_range(cfg.options["k_max"]))
    if cfg.format == "json":
        results = {
            "peaks": {str(k): {"re": v.real, "im": v.imag, "intensity": abs(v) ** 2}
                      for k, v in spec.peaks.items()},
            "delta_omega": spec.delta_omega,
            "projection_residual": spec.residual,
            "periodicity_residual": traj.residual,
        }
        stream.write(_json_doc(cfg, results))
    else:
        rows = [(k, f, re, im, inten) for (k, f, re, im, inten) in spec.as_rows()]
        _write_table(cfg, stream, ("k", "frequency", "re", "im", "intensity"), rows)


def _run_compare(cfg, stream):
    kw = _steady_kwargs(cfg)
    result = spectra.compare_spectra(cfg.params, k_max=cfg.options["k_max"], **kw)
    for note in result.warnings:
        log.warning("%s", note)
    rows = [
        (r["k"], r["abs_numeric"], r["abs_analytic"], r["rel_diff"], str(r["retained"]).lower())
        for r in result.rows()
    ]
    _write_table(cfg, stream, ("k", "abs_numeric", "abs_analytic", "rel_diff", "retained"), rows)


def _run_sweep(cfg, stream):
    o = cfg.options
    grid_s = np.logspace(np.log10(o["omega_s_min"]), np.log10(o["omega_s_max"]), o["n_omega_s"])
    grid_pr = np.logspace(np.log10(o["omega_pr_min"]), np.log10(o["omega_pr_max"]), o["n_omega_pr"])
    kw = {"rtol": o["rtol"], "atol": o["atol"], "n_samples": o["n_samples"]}
    if o.get("transient"):
        kw["transient"] = o["transient"]
    result = spectra.sweep2d(cfg.params, grid_s, grid_pr, k_max=o["k_max"],
                             jobs=cfg.jobs, **kw)
    if cfg.format == "json":
        # Re-emit through the standard envelope so the config block is embedded.
        doc = json.loads(result.to_json())
        stream.write(_json_doc(cfg, doc))
    else:
        result.to_csv(stream, header_lines=_header_lines(cfg))


def _run_triplet(cfg, stream):
    p = cfg.params
    d = source.dressed_coefficients(p.delta, p.omega_rabi_s, p.gamma_s)
    w = source.triplet_weights(d)
    rows = [
        ("c", d.c), ("s", d.s), ("omega_prime", d.omega_prime),
        ("gamma_0", d.gamma_0), ("gamma_prime", d.gamma_prime),
        ("rho11_bar", d.rho11_bar), ("rho22_bar", d.rho22_bar),
        ("i_rc", w.i_rc), ("i_ri", w.i_ri), ("i_f", w.i_f), ("i_t", w.i_t),
        ("f_rr_coh", w.f_rr_coh), ("f_rr_incoh", w.f_rr_incoh), ("f_ft", w.f_ft),
    ]
    if cfg.format == "json":
        results = {"quantities": {k: v for k, v in rows}}
        if cfg.options["n_omega"] > 0:
            om = np.linspace(cfg.options["omega_min"], cfg.options["omega_max"],
                             cfg.options["n_omega"])
            results["spectra"] = {"omega": om.tolist()}
            for comp in ("R", "F", "T"):
                vals = source.triplet_spectrum(d, w, om, comp)
                results["spectra"][comp] = {"re": vals.real.tolist(), "im": vals.imag.tolist()}
        stream.write(_json_doc(cfg, results))
        return
    _write_table(cfg, stream, ("quantity", "value"), rows)
    if cfg.options["n_omega"] > 0:
        om = np.linspace(cfg.options["omega_min"], cfg.options["omega_max"],
                         cfg.options["n_omega"])
        stream.write("component,omega,re,im\n")
        for comp in ("R", "F", "T"):
            vals = source.triplet_spectrum(d, w, om, comp)
            for x, v in zip(om, vals):
                stream.write(f"{comp},{x!r},{v.real!r},{v.imag!r}\n")


def _run_oracle_check(cfg, stream):
    o = cfg.options
    taus = np.linspace(0.0, o["tau_max"], o["n_check"] + 1)
    rows = []
    worst = 0.0
    for g in o["gamma_ratios"]:
        for r in o["drive_ratios"]:
            for opr in o["probe_drives"]:
                p = cfg.params.replace(
                    gamma_s=g, omega_rabi_s=r * g, omega_rabi_pr=opr,
                    delta_omega=o["delta_omega"], mu=o["mu"],
                )
                tr_m = cascade.integrate(p, cascade.ground_state(), (0.0, o["tau_max"]),
                                         rtol=o["rtol"], atol=o["atol"], sample_times=taus)
                tr_d = oracle.evolve_density(oracle.ground_density(4), (0.0, o["tau_max"]), p,
                                             rtol=o["rtol"], atol=o["atol"], sample_times=taus)
                mom = np.stack([oracle.moments_from_density(rho) for rho in tr_d.rhos])
                dev = float(np.max(np.abs(tr_m.states - mom)))
                worst = max(worst, dev)
                rows.append((g, r, opr, dev))
                log.info("gamma_s=%g ratio=%g omega_pr=%g max_dev=%.3e", g, r, opr, dev)
    rows.append(("max", "", "", worst))
    _write_table(cfg, stream, ("gamma_s", "omega_s_over_gamma_s", "omega_rabi_pr", "max_deviation"), rows)


_HANDLERS = {
    "simulate": _run_simulate,
    "spectrum": _run_spectrum,
    "compare": _run_compare,
    "sweep": _run_sweep,
    "triplet": _run_triplet,
    "oracle-check": _run_oracle_check,
}

_VALIDATION_ERRORS = (InvalidParam, ParseError, ConflictingSubcommands, ValueError)
_CONVERGENCE_ERRORS = (NotConverged, StepSizeUnderflow, NonFinite, SweepFailed,
                       oracle.PositivityViolation)


def run(cfg: RunConfig) -> int:
    """Execute a finalized RunConfig; write the artifact; return exit code."""
    buffer = io.StringIO()
    try:
        _HANDLERS[cfg.command](cfg, buffer)
    except _CONVERGENCE_ERRORS as exc:
        _emit_error(cfg, exc)
        return 2
    except _VALIDATION_ERRORS as exc:
        _emit_error(cfg, exc)
        return 1
    _deliver(cfg, buffer.getvalue())
    return 0


def _deliver(cfg, text):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        log.info("wrote %s", cfg.out)
    else:
        sys.stdout.write(text)


def _emit_error(cfg, exc):
    log.error("%s: %s", type(exc).__name__, exc)
    if cfg.format == "json":
        envelope = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, InvalidParam):
            envelope["error"]["field"] = exc.field
        _deliver(cfg, json.dumps(envelope, indent=2, sort_keys=True) + "\n")


def _setup_logging():
    level = os.environ.get("QWM_LOG", "warn").lower()
    numeric = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}.get(level, logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=numeric,
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwm",
        description="Cascaded two-qubit wave-mixing simulator and analytics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (params key or section.key)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.command, args.config, args.set)
    except _VALIDATION_ERRORS as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        if args.format == "json":
            envelope = {"error": {"type": type(exc).__name__, "message": str(exc)}}
            if isinstance(exc, InvalidParam):
                envelope["error"]["field"] = exc.field
            text = json.dumps(envelope, indent=2, sort_keys=True) + "\n"
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
        return 1
    cfg.format = args.format
    cfg.out = args.out
    cfg.jobs = args.jobs
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
