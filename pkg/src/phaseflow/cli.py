"""Command-line driver: ``phaseflow <subcommand> [options]``.

Exit status: 0 success, 1 domain error, 2 usage error. Errors are printed to
stderr as ``error[Code]: message``.
"""
from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io, quantization, reference, transform, validation
from .classical import FlowConfig
from .core import (
    Harmonic, PhaseField, WavepacketFamily, coherent_sigma, l2_relative, make_grid, make_model,
    make_position_grid,
)
from .core.models import MODEL_KINDS
from .dynamics import GaugeSpec, se_evolve
from .errors import PhaseflowError, UsageError

SUBCOMMANDS = ("lift", "project", "evolve", "quantize", "kernel", "suppression", "validate")
MODEL_PARAMS = ("m", "omega", "omega1", "omega2", "lam")


@dataclass
class RunConfig:
    model: str = "harmonic"
    model_params: dict = field(default_factory=dict)
    sigma: float | None = None
    hbar: float = 1.0
    gauge: str = "none"
    q_range: tuple = (-8.0, 8.0)
    p_range: tuple = (-8.0, 8.0)
    n_q: int = 161
    n_p: int = 161
    x_range: tuple = (-12.0, 12.0)
    n_x: int = 1024
    t: float = 1.0
    dt: float = 1e-3
    remap_every: int = 0
    out: str | None = None
    seed: int = 42
    timestamp: bool = True

    def build_model(self):
        return make_model(self.model, **self.model_params)

    def family(self, model=None) -> WavepacketFamily:
        model = model or self.build_model()
        sigma = self.sigma
        if sigma is None:
            sigma = coherent_sigma(model, self.hbar) if isinstance(model, Harmonic) else np.sqrt(self.hbar / 2)
        return WavepacketFamily(sigma=sigma, hbar=self.hbar, gauge=self.gauge)

    def phase_grid(self):
        return make_grid(self.q_range, self.p_range, self.n_q, self.n_p)

    def position_grid(self):
        return make_position_grid(self.x_range, self.n_x)

    def flow(self) -> FlowConfig:
        return FlowConfig(dt=self.dt, remap_every=self.remap_every)


def _pair(text: str, name: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{name} expects numbers separated by commas, got {text!r}") from None
    if len(vals) != 2:
        raise UsageError(f"{name} expects two comma-separated numbers, got {text!r}")
    return vals


def _floats(text: str, name: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name} expects comma-separated numbers, got {text!r}") from None


CONFIG_KEYS = {
    ("model", "kind"): ("model", str),
    ("family", "sigma"): ("sigma", float),
    ("family", "hbar"): ("hbar", float),
    ("family", "gauge"): ("gauge", str),
    ("grid", "n_q"): ("n_q", int),
    ("grid", "n_p"): ("n_p", int),
    ("position", "n_x"): ("n_x", int),
    ("run", "t"): ("t", float),
    ("run", "dt"): ("dt", float),
    ("run", "remap_every"): ("remap_every", int),
    ("run", "out"): ("out", str),
    ("run", "seed"): ("seed", int),
}


def load_config(path: str, cfg: RunConfig) -> RunConfig:
    """Apply a ``key = value`` file with ``[model]``, ``[family]``, ``[grid]``, ``[position]``, ``[run]`` sections."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path!r}")
    known = {"model", "family", "grid", "position", "run"}
    for sec in cp.sections():
        if sec not in known:
            raise UsageError(f"unknown config section [{sec}]")
    updates = {}
    params = dict(cfg.model_params)
    try:
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                if (sec, key) in CONFIG_KEYS:
                    attr, typ = CONFIG_KEYS[(sec, key)]
                    updates[attr] = typ(raw)
                elif sec == "model" and key in MODEL_PARAMS:
                    params[key] = float(raw)
                elif sec == "grid" and key in ("q_min", "q_max", "p_min", "p_max"):
                    updates[key] = float(raw)
                elif sec == "position" and key in ("x_min", "x_max"):
                    updates[key] = float(raw)
                else:
                    raise UsageError(f"unknown config key {key!r} in [{sec}]")
    except ValueError as exc:
        raise UsageError(f"bad value in {path!r}: {exc}") from None
    q = (updates.pop("q_min", cfg.q_range[0]), updates.pop("q_max", cfg.q_range[1]))
    p = (updates.pop("p_min", cfg.p_range[0]), updates.pop("p_max", cfg.p_range[1]))
    x = (updates.pop("x_min", cfg.x_range[0]), updates.pop("x_max", cfg.x_range[1]))
    return replace(cfg, model_params=params, q_range=q, p_range=p, x_range=x, **updates)


def _add_common(sp):
    g = sp.add_argument_group("run configuration")
    g.add_argument("--config", help="key = value config file; flags override it")
    g.add_argument("--model", choices=sorted(MODEL_KINDS))
    for name in MODEL_PARAMS:
        g.add_argument(f"--{name}", type=float, help=f"model parameter {name}")
    g.add_argument("--sigma", type=float, help="wavepacket width (default: coherent width for harmonic)")
    g.add_argument("--hbar", type=float)
    g.add_argument("--gauge", choices=["none", "energy", "kvn"])
    g.add_argument("--q-range", help="qmin,qmax")
    g.add_argument("--p-range", help="pmin,pmax")
    g.add_argument("--n-q", type=int)
    g.add_argument("--n-p", type=int)
    g.add_argument("--x-range", help="xmin,xmax")
    g.add_argument("--n-x", type=int)
    g.add_argument("--t", type=float, help="propagation time")
    g.add_argument("--dt", type=float, help="RK4 time step")
    g.add_argument("--remap-every", type=int, help="RK4 steps between interpolations (0: once)")
    g.add_argument("--out", help="output file (default: stdout for tables)")
    g.add_argument("--seed", type=int)
    g.add_argument("--no-timestamp", action="store_true", help="omit the generated-at comment line")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phaseflow", description="Phase-space semiclassical toolkit")
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.required = True

    sp = sub.add_parser("lift", help="lift a state to phase space (binary field)")
    _add_common(sp)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", help="n=K: K-th eigenstate of the model")
    src.add_argument("--packet", help="q,p: a single wavepacket")

    sp = sub.add_parser("project", help="project a binary field back to a wavefunction (CSV)")
    _add_common(sp)
    sp.add_argument("--input", required=True)

    sp = sub.add_parser("evolve", help="first-order propagation of a phase-space state")
    _add_common(sp)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", help="n=K: lifted K-th eigenstate")
    src.add_argument("--blob", help="q,p[,width]: real Gaussian bump")
    src.add_argument("--input", help="binary field file")
    sp.add_argument("--field-out", help="write the final field here (binary)")

    sp = sub.add_parser("quantize", help="Bohr-Sommerfeld levels")
    _add_common(sp)
    sp.add_argument("--nmax", type=int, default=10)
    sp.add_argument("--compare-exact", action="store_true")

    sp = sub.add_parser("kernel", help="projection kernel between two phase-space points")
    _add_common(sp)
    sp.add_argument("--z", required=True, help="q,p")
    sp.add_argument("--zp", required=True, help="q',p'")

    sp = sub.add_parser("suppression", help="off-shell suppression profile at a probe point")
    _add_common(sp)
    sp.add_argument("--probe", required=True, help="q,p")
    sp.add_argument("--offsets", help="comma-separated E - H values (default: 13 points up to 3 * 2hbar/T)")

    sp = sub.add_parser("validate", help="run invariant suites")
    _add_common(sp)
    sp.add_argument("--suite", default="all", help="all or comma-separated: " + ",".join(validation.SUITES))
    return ap


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    upd = {}
    if args.model is not None and args.model != cfg.model:
        upd["model"] = args.model
        upd["model_params"] = {}
    params = dict(upd.get("model_params", cfg.model_params))
    for name in MODEL_PARAMS:
        v = getattr(args, name)
        if v is not None:
            params[name] = v
    upd["model_params"] = params
    for attr in ("sigma", "hbar", "gauge", "n_q", "n_p", "n_x", "t", "dt", "remap_every", "out", "seed"):
        v = getattr(args, attr)
        if v is not None:
            upd[attr] = v
    for attr, flag in (("q_range", "q_range"), ("p_range", "p_range"), ("x_range", "x_range")):
        v = getattr(args, flag)
        if v is not None:
            upd[attr] = _pair(v, "--" + flag.replace("_", "-"))
    if args.no_timestamp:
        upd["timestamp"] = False
    cfg = replace(cfg, **upd)
    # validate everything before any computation
    model = cfg.build_model()
    cfg.family(model)
    cfg.phase_grid()
    cfg.position_grid()
    cfg.flow()
    return cfg


def _emit_table(cfg: RunConfig, header, rows, out=None):
    text = io.csv_text(header, rows, cfg.timestamp)
    path = out or cfg.out
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _level(text: str) -> int:
    if not text.startswith("n="):
        raise UsageError(f"--state expects n=K, got {text!r}")
    try:
        n = int(text[2:])
    except ValueError:
        raise UsageError(f"--state expects an integer level, got {text!r}") from None
    if n < 0:
        raise UsageError("level must be >= 0")
    return n


def _eigenstate(cfg, model, n):
    if model.D != 1:
        raise UsageError("lifting and propagation from the command line are one-dimensional")
    return reference.eigensolve(model, cfg.position_grid(), n + 1, cfg.hbar)[n].state


def cmd_lift(args, cfg):
    model = cfg.build_model()
    fam = cfg.family(model)
    if args.state:
        psi = _eigenstate(cfg, model, _level(args.state))
    else:
        from .core import make_wavepacket
        q, p = _pair(args.packet, "--packet")
        psi = make_wavepacket(WavepacketFamily(fam.sigma, fam.hbar), q, p, cfg.position_grid())
    eta = transform.lift(psi, fam, cfg.phase_grid(), "separable")
    if not cfg.out:
        raise UsageError("lift writes a binary field; pass --out")
    io.write_field(cfg.out, eta)
    print(f"norm_sq={io.FLOAT_FMT % eta.norm_sq(fam.hbar)}")
    return 0


def cmd_project(args, cfg):
    eta = io.read_field(args.input)
    model = cfg.build_model()
    psi = transform.project(eta, cfg.family(model), cfg.position_grid(), "separable")
    _emit_table(cfg, ["x", "re", "im"], io.wavefunction_rows(psi))
    return 0


def cmd_evolve(args, cfg):
    model = cfg.build_model()
    fam = cfg.family(model)
    if args.input:
        eta = io.read_field(args.input)
    elif args.state:
        psi = _eigenstate(cfg, model, _level(args.state))
        eta = transform.lift(psi, WavepacketFamily(fam.sigma, fam.hbar), cfg.phase_grid(), "separable")
    else:
        vals = _floats(args.blob, "--blob")
        if len(vals) not in (2, 3):
            raise UsageError("--blob expects q,p or q,p,width")
        w = vals[2] if len(vals) == 3 else 1.0
        grid = cfg.phase_grid()
        q, p = grid.mesh()
        eta = PhaseField(grid, np.exp(-((q[0] - vals[0]) ** 2 + (p[0] - vals[1]) ** 2) / (2 * w * w)))
    out = se_evolve(eta, model, cfg.t, cfg.flow(), GaugeSpec(cfg.gauge), cfg.hbar)
    if args.field_out:
        io.write_field(args.field_out, out)
    row = (cfg.t, l2_relative(out.values, eta.values), eta.norm_sq(cfg.hbar), out.norm_sq(cfg.hbar))
    _emit_table(cfg, ["t", "l2_difference", "norm_sq_initial", "norm_sq_final"], [row])
    return 0


def cmd_quantize(args, cfg):
    model = cfg.build_model()
    res = quantization.bohr_sommerfeld_levels(model, args.nmax, cfg.hbar, compare_exact=args.compare_exact)
    labels = ["n"] if model.D == 1 else [f"n{i + 1}" for i in range(model.D)]
    header = labels + ["E_semiclassical"]
    if args.compare_exact:
        header += ["E_exact", "rel_error"]
    rows = []
    for k, qn in enumerate(res.quantum_numbers):
        row = list(qn) + [res.energies[k]]
        if args.compare_exact:
            row += [res.exact[k], res.relative_errors[k]]
        rows.append(row)
    _emit_table(cfg, header, rows)
    return 0


def cmd_kernel(args, cfg):
    fam = cfg.family()
    z, zp = _pair(args.z, "--z"), _pair(args.zp, "--zp")
    k = transform.probe_kernel(fam, z, zp)
    _emit_table(cfg, ["q", "p", "q_prime", "p_prime", "re", "im", "abs"],
                [[*z, *zp, k.value.real, k.value.imag, abs(k.value)]])
    return 0


def cmd_suppression(args, cfg):
    model = cfg.build_model()
    fam = cfg.family(model)
    probe = _pair(args.probe, "--probe")
    T = transform.timescale(model, fam, probe)
    offsets = (_floats(args.offsets, "--offsets") if args.offsets
               else list(np.linspace(-3, 3, 13) * 2 * cfg.hbar / T))
    curve = transform.suppression_profile(model, fam, probe, offsets)
    expected = np.exp(-(curve.offsets**2) * T**2 / (4 * cfg.hbar**2))
    _emit_table(cfg, ["offset", "ratio", "gaussian"], list(zip(curve.offsets, curve.ratios, expected)))
    msg = (f"analytic_T={io.FLOAT_FMT % curve.analytic_T} fitted_T={io.FLOAT_FMT % curve.fitted_T} "
           f"chirp_T={io.FLOAT_FMT % curve.chirp_T}")
    print(msg, file=sys.stdout if cfg.out else sys.stderr)
    return 0


def cmd_validate(args, cfg):
    names = list(validation.SUITES) if args.suite == "all" else [s.strip() for s in args.suite.split(",")]
    for s in names:
        if s not in validation.SUITES:
            raise UsageError(f"unknown suite {s!r}; choose from all,{','.join(validation.SUITES)}")
    results = validation.run_suites(names)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed} passed, {failed} failed")
    return 1 if failed else 0


COMMANDS = {
    "lift": cmd_lift, "project": cmd_project, "evolve": cmd_evolve, "quantize": cmd_quantize,
    "kernel": cmd_kernel, "suppression": cmd_suppression, "validate": cmd_validate,
}


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except PhaseflowError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[IOError]: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
