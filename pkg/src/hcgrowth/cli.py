"""Command-line entry point.

Every command writes one JSON document (to ``--out`` or stdout) and exits
0 on success, 1 when a checked inequality or expected verdict fails, and 2
on unreadable or malformed input.  Failures also print a one-line JSON
error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import LabeledSample, fuzz_bounds, rademacher_bound
from .catalog import run_dichotomy
from .errors import HCGrowthError, SchemaError
from .gamma import gamma_of, validate_bound_shape
from .growth import fit_growth
from .mingap import compute_gap, hset_from_dict, instance_from_dict
from .phi import spec_from_dict
from .serialize import curve_csv, curve_from_dict, curve_to_dict, dumps, rows_csv
from .transform import DEFAULT_TRUNCATION, N_TAU_GRID, parse_t_grid, sample_curve

DESCRIPTION = """Numerical checks of surrogate-loss consistency bounds.

Every command writes one JSON document (to --out or stdout).  Exit status:
0 success, 1 a checked inequality or expected verdict failed, 2 unreadable
or malformed input.  Failures also print a JSON error record on stderr."""

COMMANDS = ("transform", "growth", "check-gamma", "mingap", "verify", "radbound", "dichotomy")
PATH_KEYS = ("spec", "curve", "instance", "hset", "sample", "out", "csv")


class InvariantFailure(Exception):
    """A command ran but its checked property did not hold."""


class InputError(Exception):
    """Unreadable or malformed input (exit status 2)."""


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for key in PATH_KEYS:
            if self.options.get(key) is not None:
                self.options[key] = str(Path(self.options[key]).resolve())


def config_from_dict(d: dict, parser: argparse.ArgumentParser) -> RunConfig:
    """Build a config from a JSON object, rejecting keys the command does not take."""
    if not isinstance(d, dict) or "command" not in d:
        raise InputError("config needs a 'command' field")
    cmd = d["command"]
    if cmd not in COMMANDS:
        raise InputError(f"unknown command {cmd!r}")
    defaults = vars(parser.parse_args([cmd]))
    given = {k.replace("-", "_"): v for k, v in d.items() if k not in ("command", "schema")}
    extra = (set(given) - set(defaults)) | ({"config"} & set(given))
    if extra:
        raise InputError(f"unknown config keys for {cmd}: {sorted(extra)}")
    opts = {k: v for k, v in defaults.items() if k not in ("command", "config")}
    opts.update(given)
    return RunConfig(cmd, opts)


def _load_json(path, what):
    if path is None:
        raise InputError(f"--{what} is required")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} file {path} is not valid JSON: {exc}") from None


def _parse(what, fn, payload):
    try:
        return fn(payload)
    except (HCGrowthError, TypeError, ValueError, KeyError) as exc:
        raise InputError(f"{what}: {exc}") from None


def _window(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"window must be lo:hi, got {text!r}") from None
    return lo, hi


def _emit(opts, payload):
    text = dumps(payload)
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)


def _write_csv(opts, text):
    if opts.get("csv"):
        Path(opts["csv"]).write_text(text)


def cmd_transform(o):
    spec = _parse("spec", spec_from_dict, _load_json(o["spec"], "spec"))
    _parse("t-grid", parse_t_grid, o["t_grid"])
    curve = sample_curve(spec, o["t_grid"], o["truncation"], o["n_grid"])
    _emit(o, curve_to_dict(curve))
    _write_csv(o, curve_csv(curve))
    bad = [p.t for p in curve.samples if not p.ok]
    if bad:
        raise InvariantFailure(f"{len(bad)} samples did not converge cleanly")


def cmd_growth(o):
    curve = _parse("curve", curve_from_dict, _load_json(o["curve"], "curve"))
    rep = fit_growth(curve, _window(o["window"]))
    _emit(o, rep.to_dict())


def cmd_check_gamma(o):
    curve = _parse("curve", curve_from_dict, _load_json(o["curve"], "curve"))
    val = validate_bound_shape(curve, gamma_of(curve.spec, o["variant"]), o["tol"])
    _emit(o, val.to_dict())
    if not val.valid:
        raise InvariantFailure(f"Gamma(T(t)) < t at {len(val.violations)} samples")


def cmd_mingap(o):
    inst = _parse("instance", instance_from_dict, _load_json(o["instance"], "instance"))
    hs = _parse("hset", hset_from_dict, _load_json(o["hset"], "hset"))
    spec = _parse("spec", spec_from_dict, _load_json(o["spec"], "spec"))
    _parse("hset", lambda h: h.validate_for(spec, inst), hs)
    _emit(o, compute_gap(inst, hs, spec).to_dict())


def cmd_verify(o):
    summary = fuzz_bounds(o["seed"], o["draws"], o["families"], o["closure"], o["gamma_variant"])
    _emit(o, summary)
    if summary["violations"]:
        raise InvariantFailure(f"{summary['violations']} bound violations")


def _sample_from_dict(d, n_points, n_classes):
    pairs = d.get("sample")
    if not isinstance(pairs, list) or not pairs:
        raise SchemaError("sample file needs a non-empty 'sample' list of [point, label] pairs")
    arr = np.asarray(pairs)
    if arr.ndim != 2 or arr.shape[1] != 2 or not np.issubdtype(arr.dtype, np.integer):
        raise SchemaError("'sample' entries must be integer [point, label] pairs")
    if arr[:, 0].min() < 0 or arr[:, 0].max() >= n_points:
        raise SchemaError(f"sample point index outside [0, {n_points})")
    if arr[:, 1].min() < 0 or arr[:, 1].max() >= n_classes:
        raise SchemaError(f"sample label index outside [0, {n_classes})")
    return LabeledSample(arr[:, 0], arr[:, 1])


def cmd_radbound(o):
    sdoc = _load_json(o["sample"], "sample")
    if not isinstance(sdoc, dict):
        raise InputError("sample: expected a JSON object")
    extra = set(sdoc) - {"instance", "sample", "schema"}
    if extra:
        raise InputError(f"sample: unknown keys {sorted(extra)}")
    idoc = sdoc.get("instance") if o.get("instance") is None else _load_json(o["instance"], "instance")
    if idoc is None:
        raise InputError("sample: no instance given (embed 'instance' or pass --instance)")
    inst = _parse("instance", instance_from_dict, idoc)
    sample = _parse("sample", lambda d: _sample_from_dict(d, inst.m, inst.n_classes), sdoc)
    hs = _parse("hset", hset_from_dict, _load_json(o["hset"], "hset"))
    spec = _parse("spec", spec_from_dict, _load_json(o["spec"], "spec"))
    _parse("hset", lambda h: h.validate_for(spec, inst), hs)
    est, value = rademacher_bound(sample, hs, spec, None, o["delta"], inst, o["method"], o["trials"], o["seed"])
    _emit(o, {"spec_id": spec.spec_id, "m": sample.m, "delta": o["delta"], "rademacher": est.to_dict(),
              "bound": value})


def cmd_dichotomy(o):
    rows = run_dichotomy(_window(o["window"]), o["points"], o["truncation"])
    _emit(o, {"window": list(_window(o["window"])), "rows": rows})
    _write_csv(o, rows_csv(rows, ["spec_id", "exponent", "verdict", "c_lower", "C_upper", "expected"]))
    wrong = [r["spec_id"] for r in rows if not r["ok"]]
    if wrong:
        raise InvariantFailure(f"unexpected verdict for {wrong}")


HANDLERS = {
    "transform": cmd_transform, "growth": cmd_growth, "check-gamma": cmd_check_gamma, "mingap": cmd_mingap,
    "verify": cmd_verify, "radbound": cmd_radbound, "dichotomy": cmd_dichotomy,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hcgrowth", description=DESCRIPTION,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="JSON file holding {command, option: value, ...}; replaces the command line")
    sub = p.add_subparsers(dest="command")

    def add(name, help_text, *, out=True):
        sp = sub.add_parser(name, help=help_text.split("\n")[0], description=help_text,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        if out:
            sp.add_argument("--out", help="output JSON path (stdout if omitted)")
        return sp

    sp = add("transform", "Sample the tight transformation T(t) of a surrogate.\n\n"
             "T(t) is the smallest conditional surrogate gap compatible with a zero-one\n"
             "gap of t, reduced to a one-dimensional inner infimum and an outer infimum\n"
             "over the softmax or zero-sum shift.  Square-root bounds follow from T = Theta(t^2).")
    sp.add_argument("--spec", help="surrogate spec JSON {family, phi_id, n, tau}")
    sp.add_argument("--t-grid", default="log:1e-4:0.5:40", help="log:a:b:n, lin:a:b:n or a comma list")
    sp.add_argument("--truncation", type=float, default=DEFAULT_TRUNCATION, help="outer range [0, A] for constrained losses")
    sp.add_argument("--n-grid", type=int, default=N_TAU_GRID, help="outer grid size before refinement")
    sp.add_argument("--csv", help="CSV mirror path (t,T,a_star,tau_star)")

    sp = add("growth", "Fit the growth exponent of T(t) near zero.\n\n"
             "A log-log least-squares slope near 2 means the surrogate is smooth enough\n"
             "for a square-root bound; a slope near 1 means the transformation is linear.")
    sp.add_argument("--curve", help="curve JSON written by 'transform'")
    sp.add_argument("--window", default="1e-3:1e-1", help="fit window lo:hi")

    sp = add("check-gamma", "Check a cataloged bound function Gamma against a sampled curve.\n\n"
             "Gamma is valid if Gamma(T(t)) >= t at every sample, which is what turns a\n"
             "surrogate gap into a zero-one gap bound.  Exits 1 if it fails anywhere.")
    sp.add_argument("--curve", help="curve JSON written by 'transform'")
    sp.add_argument("--variant", choices=("table", "rescaled"), default="table",
                    help="'rescaled' multiplies the constrained constants by 2 - 1/(n-1)")
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("mingap", "Compute minimizability gaps on a finite instance.\n\n"
             "Reports the best-in-class error, the expected pointwise best conditional\n"
             "error, their difference (the minimizability gap), the approximation error\n"
             "and the pointwise-infimum difference.  The gap equals approximation error\n"
             "minus that difference, and vanishes for pointwise box classes.")
    sp.add_argument("--instance", help="instance JSON {points: [{weight, conditional}], n}")
    sp.add_argument("--hset", help="hypothesis set JSON {kind, lambda, grid_step, tables, closure}")
    sp.add_argument("--spec", help="surrogate spec JSON")

    sp = add("verify", "Fuzz the zero-one bound with minimizability gaps.\n\n"
             "On random finite instances checks, for every hypothesis h,\n"
             "  E01(h) - E01* + M01 <= Gamma(E(h) - E* + M),\n"
             "and counts violations.  Exits 1 on any violation.")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--draws", type=int, default=10000)
    sp.add_argument("--families", default="all", help="'all' or a comma list of margin,comp-sum,constrained")
    sp.add_argument("--closure", choices=("list", "box", "complete"), default="complete",
                    help="which class the pointwise infima range over")
    sp.add_argument("--gamma-variant", choices=("table", "rescaled"), default="table")

    sp = add("radbound", "Assemble the finite-sample zero-one bound from a labeled sample.\n\n"
             "Estimates the empirical Rademacher complexity R of the loss class and\n"
             "reports Gamma(4R + 2B sqrt(log(2/delta)/(2m)) + M) - M01, which holds\n"
             "with probability at least 1 - delta for the empirical minimizer.")
    sp.add_argument("--sample", help="JSON {instance?, sample: [[point, label], ...]}")
    sp.add_argument("--instance", help="instance JSON, if not embedded in the sample file")
    sp.add_argument("--hset", help="explicit-list hypothesis set JSON")
    sp.add_argument("--spec", help="surrogate spec JSON")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--method", choices=("auto", "exact", "monte-carlo"), default="auto")
    sp.add_argument("--trials", type=int, default=10 ** 5)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("dichotomy", "Fit growth exponents over the whole surrogate catalog.\n\n"
             "Smooth surrogates should come out quadratic and polyhedral ones linear;\n"
             "one table row per spec: spec_id, exponent, verdict, c_lower, C_upper.\n"
             "Exits 1 if any verdict differs from the expected one.")
    sp.add_argument("--window", default="1e-3:1e-1")
    sp.add_argument("--points", type=int, default=24, help="log-spaced samples inside the window")
    sp.add_argument("--truncation", type=float, default=DEFAULT_TRUNCATION)
    sp.add_argument("--csv", help="CSV table path")
    return p


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit": code}, sort_keys=True) + "\n")
    return code


def run(config: RunConfig) -> int:
    try:
        HANDLERS[config.command](config.options)
    except InvariantFailure as exc:
        return _fail(1, "invariant-violation", str(exc))
    except InputError as exc:
        return _fail(2, "schema-error", str(exc))
    except OSError as exc:
        return _fail(2, "io-error", str(exc))
    except HCGrowthError as exc:
        return _fail(1, exc.kind, str(exc))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            config = config_from_dict(_load_json(args.config, "config"), parser)
        elif args.command is None:
            parser.print_help()
            return 2
        else:
            opts = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
            config = RunConfig(args.command, opts)
    except InputError as exc:
        return _fail(2, "schema-error", str(exc))
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
