"""Command-line interface: ``wsspulse {design,evaluate,sweep,mc-validate,frame-report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import scipy.linalg

from . import harness
from .channel import ScatteringFunction, flat_scattering
from .cpmaps import SystemConfig, db_to_linear, evaluate
from .frames import FrameError, frame_bounds
from .io import FormatError, json_safe, read_pulse, read_scattering, write_json, write_pulse
from .optim import (DEFAULT_DELTA, DEFAULT_MAX_ITER, METHODS, SolverError, gain_optimize,
                    lattice_for, match_grid_discrete, matched_gaussian, sinr_optimize,
                    tighten_design)
from .tfcore import Lattice

log = logging.getLogger("wsspulse")

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

METHOD_ALIASES = {"gain": "gain_opt", "sinr": "sinr_opt", "lower-bound": "gain_lower_bound",
                  "tightened": "tightened_gain_opt", "gaussian": "matched_gaussian"}


class UsageError(Exception):
    """Invalid configuration; maps to exit status 2."""


@dataclass
class RunConfig:
    L: int = 512
    epsilon: float = 0.5
    sigma2_db: float = -20.0
    scattering: str | None = None
    lattice: str | None = None
    N: int | None = None
    scheme: str | None = None
    method: str = "sinr_opt"
    delta: float = DEFAULT_DELTA
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0
    threads: int | None = None
    families: str | None = None
    K: int = 10000
    out: str | None = None

    def validate(self) -> None:
        if self.L < 2:
            raise UsageError(f"L must be at least 2, got {self.L}")
        if not self.epsilon > 0:
            raise UsageError(f"epsilon must be positive, got {self.epsilon}")
        if not np.isfinite(self.sigma2_db):
            raise UsageError("sigma2-db must be finite")
        if self.delta <= 0:
            raise UsageError("delta must be positive")
        if self.max_iter < 1:
            raise UsageError("max-iter must be at least 1")
        if self.scheme not in (None, "complex", "real"):
            raise UsageError(f"scheme must be complex or real, got {self.scheme!r}")
        m = METHOD_ALIASES.get(self.method, self.method)
        if m not in METHODS:
            raise UsageError(f"unknown method {self.method!r}; choose from "
                             f"{', '.join(sorted(set(METHODS) | set(METHOD_ALIASES)))}")
        self.method = m


_FIELD_TYPES = {"L": int, "epsilon": float, "sigma2_db": float, "N": int, "delta": float,
                "max_iter": int, "seed": int, "threads": int, "K": int}


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys are allowed."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        try:
            out[key] = _FIELD_TYPES.get(key, str)(val)
        except ValueError:
            raise UsageError(f"{path}:{no}: bad value for {key}: {val!r}") from None
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def parse_scattering(spec: str | None, L: int) -> ScatteringFunction:
    """``flat:tau=5,bd=12``, ``identity`` or a path to a scattering JSON file."""
    if not spec:
        raise UsageError("a scattering function is required (--scattering)")
    if spec == "identity":
        return flat_scattering(L, 0, 0)
    if spec.startswith("flat:"):
        try:
            kv = dict(item.split("=", 1) for item in spec[5:].split(",") if item)
            tau, bd = int(kv.pop("tau")), int(kv.pop("bd"))
        except (KeyError, ValueError):
            raise UsageError(f"bad scattering spec {spec!r}; expected flat:tau=<int>,bd=<int>") from None
        if kv:
            raise UsageError(f"unknown scattering parameters {sorted(kv)}")
        try:
            return flat_scattering(L, tau, bd)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        C = read_scattering(spec)
    except FormatError as exc:
        raise UsageError(str(exc)) from None
    if C.L != L:
        raise UsageError(f"scattering file has L={C.L} but L={L} was requested")
    return C


def resolve_lattice(cfg: RunConfig, C: ScatteringFunction | None) -> Lattice:
    try:
        if cfg.lattice:
            a, b = (int(s) for s in cfg.lattice.split(","))
            return Lattice(a, b, cfg.L)
        if cfg.N is not None:
            return lattice_for(cfg.L, cfg.epsilon, cfg.N)
        tau_d = C.tau_d if C is not None else 0
        B_D = C.B_D if C is not None else 0
        return lattice_for(cfg.L, cfg.epsilon, match_grid_discrete(cfg.L, cfg.epsilon, tau_d, B_D))
    except ValueError as exc:
        raise UsageError(f"invalid lattice: {exc}") from None


def system_config(cfg: RunConfig) -> SystemConfig:
    C = parse_scattering(cfg.scattering, cfg.L)
    Lat = resolve_lattice(cfg, C)
    scheme = cfg.scheme or ("real" if Lat.epsilon == 2 else "complex")
    return SystemConfig(C, Lat, db_to_linear(cfg.sigma2_db), scheme)


def _load_pair(args, L: int):
    try:
        g, y = read_pulse(args.g), read_pulse(args.gamma)
    except FormatError as exc:
        raise UsageError(str(exc)) from None
    for p, name in ((g, args.g), (y, args.gamma)):
        if p.L != L:
            raise UsageError(f"{name}: pulse length {p.L} does not match L={L}")
    return g, y


def _emit(obj, out: str | None) -> None:
    if out:
        write_json(obj, out)
    print(json.dumps(json_safe(obj), indent=1))


# --- subcommands ------------------------------------------------------------

def cmd_design(args) -> int:
    cfg = build_config(args)
    scfg = system_config(cfg)
    if cfg.method == "sinr_opt" and scfg.sigma2 <= 0:
        raise UsageError("SINR optimization needs positive noise power")
    res = _design(scfg, cfg)
    ev = evaluate(scfg, res.g, res.gamma)
    prefix = cfg.out or "design"
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_pulse(res.g, f"{prefix}_g.json")
    write_pulse(res.gamma, f"{prefix}_gamma.json")
    meta = res.metadata()
    meta.update({"gain": ev.gain, "interference": ev.interference, "sinr_db": ev.sinr_db,
                 "L": scfg.L, "lattice": [scfg.Lat.a, scfg.Lat.b], "epsilon": scfg.Lat.epsilon,
                 "sigma2_db": cfg.sigma2_db, "scheme": scfg.scheme, "scattering": cfg.scattering})
    write_json(meta, f"{prefix}_meta.json")
    print(f"{res.method}: objective {meta['objective']!r} after {meta['iterations']} iterations; "
          f"wrote {prefix}_g.json, {prefix}_gamma.json, {prefix}_meta.json")
    return EXIT_OK


def _design(scfg: SystemConfig, cfg: RunConfig):
    _, y0 = matched_gaussian(scfg)
    if cfg.method == "gain_opt":
        return gain_optimize(scfg, y0, cfg.delta, cfg.max_iter)
    if cfg.method == "sinr_opt":
        return sinr_optimize(scfg, y0, cfg.delta, cfg.max_iter)
    if cfg.method == "tightened_gain_opt":
        return tighten_design(gain_optimize(scfg, y0, cfg.delta, cfg.max_iter), scfg)
    return harness.design_family(scfg, cfg.method)


def cmd_evaluate(args) -> int:
    cfg = build_config(args)
    scfg = system_config(cfg)
    g, y = _load_pair(args, scfg.L)
    ev = evaluate(scfg, g, y)
    report = {"gain": ev.gain, "interference": ev.interference, "sinr": ev.sinr,
              "sinr_db": ev.sinr_db, "frame": frame_bounds(y, scfg.Lat).to_json(),
              "lattice": [scfg.Lat.a, scfg.Lat.b], "scheme": scfg.scheme}
    _emit(report, cfg.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    fams = cfg.families.split(",") if cfg.families else list(METHODS)
    fams = [METHOD_ALIASES.get(f.strip(), f.strip()) for f in fams if f.strip()]
    bad = [f for f in fams if f not in METHODS]
    if bad:
        raise UsageError(f"unknown families {bad}")
    try:
        scenarios = harness.build_sweep(cfg.epsilon, cfg.L, cfg.sigma2_db)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = cfg.out or "sweep.csv"
    results = harness.run_sweep(scenarios, fams, out=out, base_seed=cfg.seed, threads=cfg.threads)
    failed = sum(not r.ok for r in results)
    print(f"wrote {len(results)} rows to {out} ({failed} failed)")
    return EXIT_NUMERICAL if results and failed == len(results) else EXIT_OK


def cmd_mc_validate(args) -> int:
    cfg = build_config(args)
    if cfg.K < harness.MIN_REALIZATIONS:
        raise UsageError(f"K must be at least {harness.MIN_REALIZATIONS}, got {cfg.K}")
    scfg = system_config(cfg)
    g, y = _load_pair(args, scfg.L)
    rec = harness.mc_validate(scfg, g, y, cfg.K, cfg.seed)
    _emit(rec.to_json(), cfg.out)
    return EXIT_OK if rec.passed(4.0) else EXIT_VALIDATION


def cmd_frame_report(args) -> int:
    cfg = build_config(args)
    C = parse_scattering(cfg.scattering, cfg.L) if cfg.scattering else None
    Lat = resolve_lattice(cfg, C)
    try:
        y = read_pulse(args.gamma)
    except FormatError as exc:
        raise UsageError(str(exc)) from None
    if y.L != cfg.L:
        raise UsageError(f"{args.gamma}: pulse length {y.L} does not match L={cfg.L}")
    _emit(frame_bounds(y, Lat).to_json(), cfg.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--L", type=int, dest="L", help="signal dimension (default 512)")
    p.add_argument("--epsilon", type=float, help="lattice efficiency L/(ab) (default 0.5)")
    p.add_argument("--sigma2-db", type=float, dest="sigma2_db", help="noise power in dB (default -20)")
    p.add_argument("--scattering", help="flat:tau=T,bd=B | identity | scattering JSON path")
    p.add_argument("--lattice", help="explicit lattice steps 'a,b' (overrides --N)")
    p.add_argument("--N", type=int, dest="N", help="number of subcarriers (default: grid matching)")
    p.add_argument("--scheme", choices=("complex", "real"), help="default: real iff epsilon = 2")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (prefix for design)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsspulse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("design", parents=[common], help="optimize or construct a pulse pair")
    p.add_argument("--method", help="sinr | gain | lower-bound | tightened | gaussian | iota | rectangular")
    p.add_argument("--delta", type=float, help="relative stopping threshold")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.set_defaults(func=cmd_design)

    for name, func, hlp in (("evaluate", cmd_evaluate, "gain, interference, SINR and frame bounds"),
                            ("mc-validate", cmd_mc_validate, "Monte-Carlo check of gain and interference")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--g", required=True, help="receive pulse JSON")
        p.add_argument("--gamma", required=True, help="transmit pulse JSON")
        if name == "mc-validate":
            p.add_argument("--K", type=int, dest="K", help="number of realizations (>= 100)")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", parents=[common], help="run the delay/Doppler ratio sweep")
    p.add_argument("--families", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--threads", type=int, help="worker threads (default $WSSPULSE_THREADS or 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("frame-report", parents=[common], help="frame bounds of a transmit pulse")
    p.add_argument("--gamma", required=True, help="pulse JSON")
    p.set_defaults(func=cmd_frame_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wsspulse {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, FrameError, np.linalg.LinAlgError, scipy.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"wsspulse {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"wsspulse {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
