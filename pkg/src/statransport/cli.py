"""Command-line front end.

Every command writes its outputs next to a ``<out>.manifest.json`` holding
the argument vector, parsed parameters, seeds, tool version and SHA-256
digests of inputs and outputs. ``statransport rerun <manifest>`` replays it
into a scratch directory and checks the outputs are byte-identical.

Exit codes: 0 success, 2 validation failure (bad arguments, violated trap
boundary conditions, changed inputs, irreproducible outputs), 3 solver or
fit failure.
"""
import argparse
from dataclasses import dataclass, field
import hashlib
import json
import math
from pathlib import Path
import shutil
import sys
import tempfile

import numpy as np

from . import __version__, kernels
from .analysis import FitError, extract_sloshing, fit_decaying_sine
from .correction import (CorrectionError, amplitude_sweep, apply_correction, frequency_sensitivity_sweep,
                         solve_correction)
from .potential import (DEFAULT_WAIST, DEFAULT_WAVELENGTH, EnsembleMoments, ForceModel, TrapConfig,
                        effective_frequency, load_trap_config)
from .simulator import (EnsembleState, IntegratorConfig, ProbeDataset, default_wait_grid,
                        sample_thermal_ensemble, simulate_transport, stop_and_probe_scan,
                        temperature_for_spread)
from .sloshing import QuadratureError, amplitude_vs_duration_sweep, sloshing_residual
from .trajectory import (POSITION_COLUMNS, Family, Frame, TransportRequest, build_trap_plan,
                         check_boundaries, plan_descriptor, plan_from_descriptor, quintic_plan,
                         read_plan_csv, septic_plan, write_plan_csv)
from .units import parse_grid, parse_quantity

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3


class UsageError(ValueError):
    """Invalid combination of command-line parameters."""


# ---------------------------------------------------------------------------
# Manifests


def sha256_of(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path, data):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


@dataclass
class RunManifest:
    """Everything needed to replay a command bit-identically."""

    command: str
    argv: list
    params: dict
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    out_prefix: str = ""
    version: str = __version__
    backend: str = kernels.BACKEND

    def to_dict(self):
        return {"tool": "statransport", "version": self.version, "backend": self.backend,
                "command": self.command, "argv": list(self.argv), "params": self.params,
                "seeds": self.seeds, "inputs": self.inputs, "outputs": self.outputs,
                "out_prefix": self.out_prefix}

    def write(self, path):
        write_json(path, self.to_dict())

    @classmethod
    def read(cls, path):
        data = json.loads(Path(path).read_text())
        return cls(data["command"], data["argv"], data["params"], data.get("seeds", {}),
                   data.get("inputs", {}), data.get("outputs", {}), data.get("out_prefix", ""),
                   data.get("version", ""), data.get("backend", ""))


class _Run:
    """Collects inputs and outputs of one command invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.prefix = str(args.out)
        self.inputs = {}
        self.outputs = []
        self.seeds = {}
        self.add_input(getattr(args, "trap_config", None))

    def path(self, suffix):
        p = Path(self.prefix + suffix)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(p)
        return p

    def add_input(self, path):
        if path is not None:
            self.inputs[str(path)] = sha256_of(path)

    def finish(self):
        params = {k: v for k, v in vars(self.args).items() if k not in ("func", "out")}
        manifest = RunManifest(self.args.command, self.argv, _jsonable(params), self.seeds, self.inputs,
                               {str(p): sha256_of(p) for p in self.outputs}, self.prefix)
        manifest.write(self.prefix + ".manifest.json")
        for p in self.outputs:
            print(p)
        return manifest


# ---------------------------------------------------------------------------
# Argument helpers


def _length(text):
    return parse_quantity(text, "length", "m")


def _time(text):
    return parse_quantity(text, "time", "s")


def _freq(text):
    return parse_quantity(text, "frequency", "hz")


def _temperature(text):
    return parse_quantity(text, "temperature", "k")


def _typed(func):
    def convert(text):
        try:
            return func(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    convert.__name__ = func.__name__.lstrip("_")
    return convert


LENGTH, TIME, FREQ, TEMPERATURE = _typed(_length), _typed(_time), _typed(_freq), _typed(_temperature)


def _add_trap_args(parser):
    g = parser.add_argument_group("trap")
    g.add_argument("--f0", type=FREQ, help="axial trap frequency (Hz unless suffixed)")
    g.add_argument("--trap-config", type=Path, help="trap description (.json/.toml/.yaml)")
    g.add_argument("--waist", type=LENGTH, default=DEFAULT_WAIST, help="beam waist (default 19.45um)")
    g.add_argument("--wavelength", type=LENGTH, default=DEFAULT_WAVELENGTH, help="wavelength (default 1064nm)")
    g.add_argument("--aspect-ratio", type=float, help="radial/axial frequency ratio")


def _add_request_args(parser, with_plan_file=True):
    g = parser.add_argument_group("transport")
    if with_plan_file:
        g.add_argument("--plan", type=Path, help="plan descriptor (.json) or plan CSV; replaces --family")
    g.add_argument("--family", help="trajectory family: sine, triangular, quintic, septic, "
                                    "quintic-trap, septic-trap")
    g.add_argument("--d", type=LENGTH, help="transport distance (m unless suffixed)")
    g.add_argument("--tf", type=TIME, help="transport duration (s unless suffixed)")
    g.add_argument("--tf-f0", type=float, help="duration in trap periods, t_f * f0")
    g.add_argument("--omega1", type=FREQ,
                   help="design frequency omega1/2pi for atom-derived families (default f0)")


def _trap_config(args, fallback_omega0=None):
    aspect = getattr(args, "aspect_ratio", None)
    if args.trap_config is None and args.f0 is None and fallback_omega0 is not None:
        cfg = TrapConfig.from_axial_frequency(fallback_omega0, args.waist, args.wavelength)
    elif args.trap_config is not None:
        cfg = load_trap_config(args.trap_config)
        if args.f0 is not None and not math.isclose(cfg.omega0, 2 * math.pi * args.f0, rel_tol=1e-9):
            raise UsageError(f"--f0 {args.f0} Hz disagrees with the trap config ({cfg.omega0 / 2 / math.pi:.9g} Hz)")
    else:
        if args.f0 is None:
            raise UsageError("give --f0 or --trap-config")
        cfg = TrapConfig.from_axial_frequency(2 * math.pi * args.f0, args.waist, args.wavelength)
    return cfg.with_aspect_ratio(aspect) if aspect is not None else cfg


def _request(args, omega0):
    if args.d is None:
        raise UsageError("--d (distance) is required")
    if (args.tf is None) == (args.tf_f0 is None):
        raise UsageError("give exactly one of --tf or --tf-f0")
    duration = args.tf if args.tf is not None else args.tf_f0 / (omega0 / (2 * math.pi))
    try:
        return TransportRequest(args.d, duration, omega0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _inline_plan(args, omega0):
    if args.family is None:
        raise UsageError("give --family (or --plan)")
    req = _request(args, omega0)
    omega1 = 2 * math.pi * args.omega1 if args.omega1 is not None else None
    if omega1 is not None and args.family not in ("quintic", "septic"):
        raise UsageError(f"--omega1 applies to atom-derived families (quintic, septic), not {args.family}")
    try:
        return build_trap_plan(args.family, req, omega1)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def load_plan(path, omega0=None):
    """Plan from a descriptor JSON (as written by ``plan``/``correct``) or a plan CSV."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        return plan_from_descriptor(data.get("plan", data))
    plan, _ = read_plan_csv(path, omega0=omega0)
    return plan


def _plan_source(args, run, omega0):
    if getattr(args, "plan", None) is not None:
        if args.family is not None:
            raise UsageError("--plan and --family are mutually exclusive")
        run.add_input(args.plan)
        try:
            return load_plan(args.plan, omega0)
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{args.plan}: {exc}") from None
    return _inline_plan(args, omega0)


def _config_and_plan(args, run):
    """Trap config and plan; a plan file may supply the frequency."""
    if args.trap_config is None and args.f0 is None and getattr(args, "plan", None) is not None:
        plan = _plan_source(args, run, None)
        return _trap_config(args, plan.request.omega0), plan
    cfg = _trap_config(args)
    return cfg, _plan_source(args, run, cfg.omega0)


def _sloshing_dict(plan, omega0):
    res = sloshing_residual(plan, omega0)
    return {"amplitude_m": res.amplitude, "amplitude_over_d": res.amplitude / abs(plan.distance),
            "phase_rad": res.phase, "omega0_rad_s": omega0}


def _waveform_metadata(plan, rate, extra=None):
    meta = {"family": plan.family.value, "frame": plan.frame.value, "distance_m": repr(plan.distance),
            "duration_s": repr(plan.duration), "omega0_rad_s": repr(plan.request.omega0),
            "rate_hz": repr(float(rate))}
    meta.update(extra or {})
    return meta


def _write_plan_outputs(run, plan, rate, extra_json=None, report=None):
    write_plan_csv(plan, run.path(".waveform.csv"), rate, _waveform_metadata(plan, rate), POSITION_COLUMNS)
    write_plan_csv(plan, run.path(".plan.csv"), rate, _waveform_metadata(plan, rate))
    desc = {"plan": plan_descriptor(plan), "sloshing": _sloshing_dict(plan, plan.request.omega0),
            "rate_hz": rate}
    if report is not None:
        desc["boundary"] = report.to_dict()
    desc.update(extra_json or {})
    write_json(run.path(".json"), desc)
    return desc


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# Commands


def cmd_plan(args, run):
    """Trap waveform, boundary report and predicted sloshing of one transport."""
    cfg = _trap_config(args)
    plan = _inline_plan(args, cfg.omega0)
    report = check_boundaries(plan, tol=args.tol)
    desc = _write_plan_outputs(run, plan, args.rate, report=report)
    amp = desc["sloshing"]["amplitude_over_d"]
    if amp > args.zero_tol:
        _warn(f"predicted sloshing amplitude {desc['sloshing']['amplitude_m'] * 1e6:.6g} um > 0")
    atom_fail = [k for k in report.failures() if not k.startswith("trap_")]
    if atom_fail:
        _warn(f"atom boundary conditions not met: {', '.join(atom_fail)}")
    run.finish()
    if not report.trap_passed:
        print("error: trap does not start and end at rest "
              f"({', '.join(k for k in report.failures() if k.startswith('trap_'))} beyond tol {args.tol:g})",
              file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_correct(args, run):
    """Null the sloshing of a base plan with a ramped sinusoid."""
    run.add_input(args.base)
    base = load_plan(args.base)
    omega_eff = 2 * math.pi * args.f0_eff if args.f0_eff is not None else base.request.omega0
    omega_c = 2 * math.pi * args.f_c if args.f_c is not None else None
    try:
        sol = solve_correction(base, omega_eff, omega_c=omega_c, tol=args.tol)
    except (CorrectionError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    plan = apply_correction(base, sol.params)
    solver = sol.to_dict()
    solver["omega_eff_rad_s"] = omega_eff
    solver["condition"] = sol.condition
    solver["residual_over_d"] = sol.residual.amplitude / abs(base.distance)
    extra = {"solver": solver, "sloshing_at_omega_eff": _sloshing_dict(plan, omega_eff)}
    _write_plan_outputs(run, plan, args.rate, extra)
    run.finish()
    return EXIT_OK


def cmd_sweep(args, run):
    """Parameter sweeps as CSV tables."""
    meta = {"kind": args.kind}
    if args.kind == "duration":
        if args.family is None or args.f0 is None:
            raise UsageError("sweep duration needs --family and --f0")
        grid = parse_grid(args.grid or "0.5:6:1101", "number")
        table = amplitude_vs_duration_sweep(args.family, args.f0, grid, args.d or 1.0)
        meta.update(family=args.family, f0_hz=repr(args.f0))
    elif args.kind == "amplitude":
        cfg, base = _config_and_plan(args, run)
        omega0 = cfg.omega0
        omega_c = 2 * math.pi * args.f_c if args.f_c is not None else omega0
        if args.phi0 is None:
            try:
                phi0 = solve_correction(base, omega0, omega_c=omega_c).params.phi0
            except CorrectionError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_SOLVER
        else:
            phi0 = parse_quantity(args.phi0, "angle", "deg")
        grid = parse_grid(args.grid or "0:200um:201", "length", "m")
        table = amplitude_sweep(base, phi0, omega0, grid, omega_c)
        meta.update(phi0_rad=repr(phi0), omega_c_rad_s=repr(omega_c), omega0_rad_s=repr(omega0))
    else:
        if args.family not in ("quintic", "septic"):
            raise UsageError("sweep frequency needs --family quintic or septic (atom-frame polynomial)")
        cfg = _trap_config(args)
        req = _request(args, cfg.omega0)
        atom = (quintic_plan if args.family == "quintic" else septic_plan)(req, Frame.ATOM)
        ratios = parse_grid(args.grid or "0.8:1.2:81", "number")
        table = frequency_sensitivity_sweep(atom, cfg.omega0, ratios * cfg.omega0)
        meta.update(family=args.family, omega0_rad_s=repr(cfg.omega0))
    table.write_csv(run.path(".csv"), meta)
    run.finish()
    return EXIT_OK


def _ensemble(args, cfg, model, run):
    if args.temperature is not None and args.temperature_spread is not None:
        raise UsageError("--temperature and --temperature-spread are mutually exclusive")
    if args.temperature is None and args.temperature_spread is None:
        return None
    temperature = args.temperature
    if temperature is None:
        try:
            temperature = temperature_for_spread(cfg, args.temperature_spread, model)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    run.seeds["ensemble"] = args.seed
    try:
        return sample_thermal_ensemble(cfg, temperature, args.n, args.seed, model)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_ensemble_args(parser):
    g = parser.add_argument_group("ensemble")
    g.add_argument("--temperature", type=TEMPERATURE, help="ensemble temperature (K unless suffixed)")
    g.add_argument("--temperature-spread", type=LENGTH, help="choose the temperature giving this RMS axial spread")
    g.add_argument("--n", type=int, default=2000, help="particles (default 2000)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--model", default="harmonic", help="harmonic, quartic or full-gaussian")
    g.add_argument("--steps-per-period", type=int, default=1000)


def cmd_simulate(args, run):
    """Transport an ensemble (or a single particle at rest) and record observables."""
    cfg, plan = _config_and_plan(args, run)
    model = ForceModel.parse(args.model)
    ensemble = _ensemble(args, cfg, model, run)
    if ensemble is None:
        ensemble = EnsembleState(np.zeros(1), np.zeros(1), 0.0, None, model)
    tf = plan.duration
    t_end = tf + args.post_time
    obs = simulate_transport(ensemble, plan, cfg, model, IntegratorConfig(args.steps_per_period),
                             t_end=t_end, record_every=args.record_every)
    obs.table().write_csv(run.path(".observables.csv"), {"model": model.value, "t_stop_s": repr(tf)})
    summary = {
        "model": model.value, "n": len(ensemble), "temperature_K": ensemble.temperature,
        "initial_axial_rms_m": math.sqrt(ensemble.axial_variance()),
        "final_com_m": obs.com[-1], "final_excitation_J": obs.e_exc[-1],
        "surviving_fraction": obs.surviving_fraction[-1],
        "predicted": _sloshing_dict(plan, cfg.omega0),
        "trap": cfg.to_dict(),
    }
    if args.temperature is not None or args.temperature_spread is not None:
        mom = EnsembleMoments.from_axial(cfg, ensemble.axial_variance(), dof=args.radial_dof)
        summary["moments"] = {"axial_var_m2": mom.axial_var, "radial_var_m2": mom.radial_var}
        for variant in ("linear", "sqrt"):
            try:
                summary[f"effective_omega_{variant}_rad_s"] = effective_frequency(cfg, mom, variant)
            except ValueError as exc:
                summary[f"effective_omega_{variant}_rad_s"] = f"invalid: {exc}"
    t_post, com_post = obs.after(tf)
    if args.post_time > 0 and t_post.size >= 8 and cfg.omega0 * t_post[-1] >= math.pi:
        try:
            fit = fit_decaying_sine(t_post, com_post - plan(tf))
            summary["post_stop_fit"] = fit.to_dict()
            summary["post_stop_frequency_hz"] = fit.omega / (2 * math.pi)
        except FitError as exc:
            summary["post_stop_fit"] = f"failed: {exc}"
    write_json(run.path(".summary.json"), summary)
    run.finish()
    return EXIT_OK


def cmd_probe(args, run):
    """Synthetic stop-and-probe dataset: transport, wait, expand, image."""
    cfg, plan = _config_and_plan(args, run)
    model = ForceModel.parse(args.model)
    waits = parse_grid(args.waits, "time", "s") if args.waits else default_wait_grid(cfg.omega0)
    ensemble = _ensemble(args, cfg, model, run)
    run.seeds["noise"] = args.seed
    data = stop_and_probe_scan(plan, cfg, model, waits, args.t_e, args.repetitions, args.noise, args.seed,
                               ensemble, IntegratorConfig(args.steps_per_period))
    data.write_csv(run.path(".csv"))
    run.finish()
    return EXIT_OK


def cmd_fit(args, run):
    """Decaying-sine fit of a stop-and-probe dataset."""
    run.add_input(args.data)
    data = ProbeDataset.read_csv(args.data)
    omega = 2 * math.pi * args.fix_f if args.fix_f is not None else None
    tau = math.inf if args.no_decay else args.fix_tau
    try:
        res, fit = extract_sloshing(data, t_e=args.t_e, omega=omega, tau=tau)
    except (FitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = fit.to_dict()
    out["phi_sigma_rad"] = fit.phi_sigma
    out["sloshing"] = {"amplitude_m": res.amplitude, "phase_rad": res.phase}
    write_json(run.path(".json"), out)
    run.finish()
    return EXIT_OK


def _replace_out(argv, new_prefix):
    argv = list(argv)
    for i, tok in enumerate(argv):
        if tok == "--out":
            argv[i + 1] = new_prefix
            return argv
        if tok.startswith("--out="):
            argv[i] = "--out=" + new_prefix
            return argv
    raise UsageError("manifest argv has no --out")


def cmd_rerun(args):
    """Replay a manifest into a scratch directory and compare output digests."""
    manifest = RunManifest.read(args.manifest)
    for path, digest in manifest.inputs.items():
        if not Path(path).exists() or sha256_of(path) != digest:
            print(f"error: input {path} is missing or changed since the manifest was written", file=sys.stderr)
            return EXIT_VALIDATION
    scratch = Path(tempfile.mkdtemp(prefix="statransport-rerun-"))
    try:
        new_prefix = str(scratch / Path(manifest.out_prefix).name)
        code = main(_replace_out(manifest.argv, new_prefix), _nested=True)
        if code != EXIT_OK and manifest.command != "plan":
            print(f"error: replay exited with {code}", file=sys.stderr)
            return code
        ok = True
        for path, digest in manifest.outputs.items():
            replay = new_prefix + path[len(manifest.out_prefix):]
            same = Path(replay).exists() and sha256_of(replay) == digest
            ok &= same
            print(f"{'identical' if same else 'DIFFERENT'} {path}")
        return EXIT_OK if ok else EXIT_VALIDATION
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


# ---------------------------------------------------------------------------
# Parser


def build_parser():
    parser = argparse.ArgumentParser(prog="statransport", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="trap waveform + boundary report")
    _add_request_args(p, with_plan_file=False)
    _add_trap_args(p)
    p.add_argument("--rate", type=_typed(lambda s: parse_quantity(s, "rate", "hz")), default=1000.0,
                   help="waveform sample rate (default 1kHz)")
    p.add_argument("--tol", type=float, default=1e-10, help="boundary tolerance (normalized)")
    p.add_argument("--zero-tol", type=float, default=1e-9, help="|R|/d regarded as zero sloshing")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("correct", help="spectral correction of a base plan")
    p.add_argument("base", type=Path, help="base plan descriptor (.json) or plan CSV")
    p.add_argument("--f0-eff", type=FREQ, help="frequency whose sloshing is nulled (default the plan's f0)")
    p.add_argument("--f-c", type=FREQ, help="correction frequency (default f0-eff)")
    p.add_argument("--tol", type=float, default=1e-9, help="required residual |R|/d")
    p.add_argument("--rate", type=_typed(lambda s: parse_quantity(s, "rate", "hz")), default=1000.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("sweep", help="duration, amplitude or frequency sweeps")
    p.add_argument("kind", choices=("duration", "amplitude", "frequency"))
    _add_request_args(p)
    _add_trap_args(p)
    p.add_argument("--grid", help="duration: t_f*f0 values; amplitude: A0 values; frequency: omega1/omega0 "
                                  "(start:stop:count or comma list)")
    p.add_argument("--phi0", help="correction phase (deg unless suffixed); default the solver's optimum")
    p.add_argument("--f-c", type=FREQ, help="correction frequency (default f0)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="transport an ensemble through a plan")
    _add_request_args(p)
    _add_trap_args(p)
    _add_ensemble_args(p)
    p.add_argument("--post-time", type=TIME, default=0.0, help="hold time after the transport")
    p.add_argument("--record-every", type=int, default=10)
    p.add_argument("--radial-dof", type=int, default=2, choices=(1, 2),
                   help="radial degrees of freedom in the aspect-ratio estimate of <r^2>")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("probe", help="synthetic stop-and-probe dataset")
    _add_request_args(p)
    _add_trap_args(p)
    _add_ensemble_args(p)
    p.add_argument("--waits", help="waiting times after t_f (default 11 over two periods)")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--noise", type=LENGTH, default=0.0, help="position noise sigma")
    p.add_argument("--t-e", type=TIME, default=0.0, help="ballistic expansion time")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("fit", help="decaying-sine fit of a probe dataset")
    p.add_argument("data", type=Path)
    p.add_argument("--t-e", type=TIME, help="override the dataset expansion time")
    p.add_argument("--fix-f", type=FREQ, help="hold the oscillation frequency fixed")
    p.add_argument("--fix-tau", type=TIME, help="hold the decay time fixed")
    p.add_argument("--no-decay", action="store_true", help="fit an undamped sine")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rerun", help="replay a manifest and verify byte-identical outputs")
    p.add_argument("manifest", type=Path)
    return parser


def main(argv=None, _nested=False):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        if _nested:
            raise UsageError("manifests cannot replay rerun")
        return cmd_rerun(args)
    try:
        return args.func(args, _Run(args, argv))
    except UsageError as exc:
        if _nested:
            raise
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
