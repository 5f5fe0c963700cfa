"""Command-line front door: config parsing, experiment orchestration, CSV
emission, and exit-code discipline.

Exit codes: 0 ok/condition holds, 1 config error, 2 numerical failure,
3 verification trend failure, 4 condition fails, 5 borderline equality.
"""

import argparse
import configparser
import math
import os
import re
import sys as _sys

from . import criteria, diagnostics, model, poincare
from .criteria import IrrationalFrequency, RationalFrequency
from .errors import ConfigError, IsochronError
from .flow import FlowSpec, PhaseState, strobe_orbit
from .model import (ArctanPerturbation, AsymmetricLinear, BonheureFabry,
                    ForcingSpec, Harmonic, OscillatorSystem, ZeroPerturbation)
from .numerics import QuadratureSpec
from .poincare import write_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICS = 2
EXIT_TREND = 3
EXIT_FAILS = 4
EXIT_BORDERLINE = 5

_COMMANDS = ("check", "simulate", "poincare", "phi", "sweep", "verify")
_FOURIER_KEY = re.compile(r"^(cos|sin)([0-9]+)$")

_SYSTEM_KEYS = {"potential", "a", "b", "sigma", "k", "perturbation", "scale"}
_COMMAND_KEYS = {
    "check": {"tol", "q_max", "grid"},
    "simulate": {"x0", "y0", "t0", "n_periods"},
    "poincare": {"i0", "t0_count", "revolutions"},
    "phi": {"samples", "m"},
    "sweep": {"n_periods", "escape_threshold", "energies", "angles",
              "action_lo", "action_hi"},
    "verify": {"mode", "ladder", "t0_count"},
}


def _parse_float(section, key, raw):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc


def _parse_int(section, key, raw):
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from exc


def load_config(path: str) -> configparser.ConfigParser:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    known = {"system", *_COMMANDS}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
    if "system" not in parser:
        raise ConfigError("config needs a [system] section")
    for cmd in _COMMANDS:
        if cmd in parser:
            for key in parser[cmd]:
                if key not in _COMMAND_KEYS[cmd]:
                    raise ConfigError(f"unknown key {key!r} in [{cmd}]")
    return parser


def build_system(parser: configparser.ConfigParser) -> OscillatorSystem:
    sec = parser["system"]
    cos, sin = {}, {}
    for key, raw in sec.items():
        match = _FOURIER_KEY.match(key)
        if match:
            idx = int(match.group(2))
            value = _parse_float("system", key, raw)
            (cos if match.group(1) == "cos" else sin)[idx] = value
        elif key not in _SYSTEM_KEYS:
            raise ConfigError(f"unknown key {key!r} in [system]")
    kind = sec.get("potential", "").strip().lower()
    try:
        if kind == "asymmetric_linear":
            potential = AsymmetricLinear(_parse_float("system", "a", sec.get("a", "")),
                                         _parse_float("system", "b", sec.get("b", "")))
        elif kind == "bonheure_fabry":
            potential = BonheureFabry(_parse_float("system", "sigma", sec.get("sigma", "0")))
        elif kind == "harmonic":
            potential = Harmonic(_parse_float("system", "k", sec.get("k", "1")))
        else:
            raise ConfigError(f"unknown potential kind {kind!r} "
                              "(expected asymmetric_linear | bonheure_fabry | harmonic)")
    except ValueError as exc:
        raise ConfigError(f"invalid potential parameters: {exc}") from exc

    pkind = sec.get("perturbation", "zero").strip().lower()
    if pkind == "zero":
        perturbation = ZeroPerturbation()
    elif pkind == "arctan":
        perturbation = ArctanPerturbation(_parse_float("system", "scale",
                                                       sec.get("scale", "1")))
    else:
        raise ConfigError(f"unknown perturbation kind {pkind!r} (expected zero | arctan)")

    if sin and min(sin) < 1:
        raise ConfigError("sin0 is not a valid forcing key")
    k_max = max([0, *cos.keys(), *sin.keys()])
    fourier_cos = tuple(cos.get(k, 0.0) for k in range(k_max + 1))
    fourier_sin = tuple(sin.get(k, 0.0) for k in range(1, k_max + 1))
    try:
        forcing = ForcingSpec(fourier_cos, fourier_sin)
    except ValueError as exc:
        raise ConfigError(f"invalid forcing: {exc}") from exc
    return OscillatorSystem(potential, perturbation, forcing)


def _section(parser, name):
    return parser[name] if name in parser else {}


def _tol_overrides(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--tol expects name=value, got {item!r}")
        name, _, raw = item.partition("=")
        name = name.strip()
        if name not in ("quad_abs", "quad_rel", "root_abs", "flow_rel",
                        "flow_abs", "condition"):
            raise ConfigError(f"unknown tolerance override {name!r}")
        try:
            out[name] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"--tol {name} value {raw!r} is not a number") from exc
    return out


def _flow_spec(tols):
    kw = {}
    if "flow_rel" in tols:
        kw["rel_tol"] = tols["flow_rel"]
    if "flow_abs" in tols:
        kw["abs_tol"] = tols["flow_abs"]
    return FlowSpec(**kw) if kw else None


def cmd_check(sys_: OscillatorSystem, parser, out_dir, tols):
    sec = _section(parser, "check")
    tol = float(sec.get("tol", tols.get("condition", 1e-8)))
    q_max = int(sec.get("q_max", 10**6))
    freq = criteria.classify_system(sys_, q_max=q_max)
    if isinstance(freq, RationalFrequency):
        report = criteria.check_resonant(sys_, (freq.m, freq.n), tol=tol,
                                         n_grid=int(sec.get("grid", 512)))
        branch = "resonant"
    else:
        report = criteria.check_nonresonant(sys_, tol=tol)
        branch = "non-resonant"
    text = report.to_text()
    print(text)
    verdict = report.verdict
    if verdict == "yes":
        print(f"verdict: bounded ({branch} branch condition holds)")
    elif verdict == "no":
        print(f"verdict: condition fails ({branch} branch)")
    else:
        print(f"verdict: borderline ({branch} branch, within tolerance of equality)")
    with open(os.path.join(out_dir, "check_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    write_csv(os.path.join(out_dir, "zero_set.csv"), ("theta", "phi_prime"),
              report.zero_set_rows())
    return {"yes": EXIT_OK, "no": EXIT_FAILS}.get(verdict, EXIT_BORDERLINE)


def cmd_simulate(sys_: OscillatorSystem, parser, out_dir, tols):
    sec = _section(parser, "simulate")
    s0 = PhaseState(float(sec.get("x0", 1.0)), float(sec.get("y0", 0.0)),
                    float(sec.get("t0", 0.0)))
    n = int(sec.get("n_periods", 100))
    res = strobe_orbit(sys_, s0, n, _flow_spec(tols))
    rows = [[k + 1, s.t, s.x, s.y] for k, s in enumerate(res.states)]
    write_csv(os.path.join(out_dir, "simulate.csv"), ("k", "t", "x", "y"), rows)
    if res.escaped:
        print(f"orbit escaped: {res.note}")
    print(f"wrote {len(rows)} strobe points to simulate.csv")
    return EXIT_OK


def _resolve_resonance(sys_: OscillatorSystem):
    freq = criteria.classify_system(sys_)
    if isinstance(freq, RationalFrequency):
        return (freq.m, freq.n)
    return None


def cmd_poincare(sys_: OscillatorSystem, parser, out_dir, tols):
    sec = _section(parser, "poincare")
    i0 = float(sec.get("i0", 1e4))
    t0_count = int(sec.get("t0_count", 8))
    mq = _resolve_resonance(sys_)
    raw_rev = str(sec.get("revolutions", "auto"))
    if raw_rev != "auto":
        revolutions = int(raw_rev)
    else:
        revolutions = mq[1] if mq is not None else 1
    spec = _flow_spec(tols)
    rows = []
    for t0 in [2.0 * math.pi * j / t0_count for j in range(t0_count)]:
        rec = poincare._return_record(sys_, revolutions, t0, i0, spec)
        rows.append([rec.t0, rec.t1, rec.rho0, rec.rho1, rec.elapsed, rec.eps])
    write_csv(os.path.join(out_dir, "poincare.csv"),
              ("t0", "t1", "rho0", "rho1", "elapsed", "eps"), rows)
    print(f"wrote {len(rows)} return records to poincare.csv")
    return EXIT_OK


def cmd_phi(sys_: OscillatorSystem, parser, out_dir, tols):
    sec = _section(parser, "phi")
    raw_m = str(sec.get("m", "auto"))
    if raw_m == "auto":
        mq = _resolve_resonance(sys_)
        if mq is None:
            raise ConfigError("phi needs m explicitly for irrational frequencies")
        m = mq[0]
    else:
        m = int(raw_m)
    samples = int(sec.get("samples", 64))
    a, b = sys_.slopes
    qspec = QuadratureSpec(abs_tol=tols.get("quad_abs", 1e-10),
                           rel_tol=tols.get("quad_rel", 1e-10))
    rows = []
    for j in range(samples):
        theta = 2.0 * math.pi * j / samples
        rows.append([theta, criteria.phi_f(sys_.forcing, m, a, b, theta, qspec)])
    write_csv(os.path.join(out_dir, "phi.csv"), ("theta", "phi"), rows)
    print(f"wrote {samples} samples to phi.csv")
    return EXIT_OK


def cmd_sweep(sys_: OscillatorSystem, parser, out_dir, tols):
    sec = _section(parser, "sweep")
    grid = diagnostics.default_grid(
        sys_,
        energies=int(sec.get("energies", 8)),
        angles=int(sec.get("angles", 8)),
        action_lo=float(sec.get("action_lo", 10.0)),
        action_hi=float(sec.get("action_hi", 1e5)))
    cfg = diagnostics.SweepConfig(
        initial_grid=tuple(grid),
        n_periods=int(sec.get("n_periods", 10_000)),
        escape_threshold=float(sec.get("escape_threshold", 1e6)),
        flow=_flow_spec(tols) or diagnostics._SWEEP_FLOW)
    verdicts = diagnostics.sweep(sys_, cfg)
    diagnostics.verdicts_to_csv(verdicts, os.path.join(out_dir, "sweep.csv"))
    escaped = sum(v.classification == "escaped" for v in verdicts)
    undecided = sum(v.classification == "undecided" for v in verdicts)
    print(f"swept {len(verdicts)} orbits: {escaped} escaped, "
          f"{undecided} undecided -> sweep.csv")
    return EXIT_OK


def cmd_verify(sys_: OscillatorSystem, parser, out_dir, tols):
    sec = _section(parser, "verify")
    mode = str(sec.get("mode", "auto"))
    if mode == "auto":
        mode = "resonant" if _resolve_resonance(sys_) is not None else "nonresonant"
    ladder = [float(v) for v in str(sec.get("ladder", "1e2,1e3,1e4")).split(",")]
    t0_count = int(sec.get("t0_count", 4))
    t0_grid = [2.0 * math.pi * j / t0_count for j in range(t0_count)]
    table = poincare.verify_map_asymptotics(sys_, mode, t0_grid, ladder,
                                            mq=_resolve_resonance(sys_),
                                            spec=_flow_spec(tols))
    table.to_csv(os.path.join(out_dir, "verify.csv"))
    ok = table.trend_ok()
    for t0, seq in table.residual_ladder().items():
        print(f"t0={t0:.6g}: residuals " + " -> ".join(f"{r:.3e}" for r in seq))
    print(f"trend {'ok: residuals decrease along the ladder' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_TREND


_DISPATCH = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "poincare": cmd_poincare,
    "phi": cmd_phi,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="isochron",
        description="forced isochronous oscillator laboratory")
    ap.add_argument("command", choices=_COMMANDS)
    ap.add_argument("--config", required=True, help="path to the run config")
    ap.add_argument("--out", default=".", help="output directory for CSV artifacts")
    ap.add_argument("--seed", type=int, default=None,
                    help="reserved; all algorithms are deterministic")
    ap.add_argument("--tol", action="append", metavar="NAME=VALUE",
                    help="tolerance override (quad_abs, quad_rel, root_abs, "
                         "flow_rel, flow_abs, condition)")
    args = ap.parse_args(argv)
    try:
        parser = load_config(args.config)
        tols = _tol_overrides(args.tol)
        system = build_system(parser)
        os.makedirs(args.out, exist_ok=True)
        return _DISPATCH[args.command](system, parser, args.out, tols)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except IsochronError as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    raise SystemExit(main())
