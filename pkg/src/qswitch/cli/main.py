"""``qswitch`` command-line entry point.

Every subcommand reads one JSON config (``--config``) and writes a report
to stdout or ``--output``. Failures print a single ``error: ...`` line on
stderr and exit with 2 (config), 3 (numerical) or 4 (validation).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .. import channel, fom, oracle
from ..errors import ParameterError, QSwitchError, ValidationFailure
from ..models import (
    DispersiveParams,
    QubitParams,
    ThreeModeParams,
    TwoModeParams,
    dynamics_matrix,
    model_to_dict,
    purcell_reduce,
)
from .config import OptimizeSpec, SweepSpec, load_config, parse_model, task_section
from .optimize import run_optimize
from .sweep import rows_to_csv, rows_to_json, run_sweep, sweep_columns


def _scaled(value: float, efficiency: float | None) -> float:
    return value if efficiency is None else value * efficiency


def _validity(model) -> dict:
    out = {}
    if isinstance(model, TwoModeParams):
        out["cooperativity"] = model.cooperativity
    elif isinstance(model, ThreeModeParams):
        out["purcell_ratio"] = purcell_reduce(model).ratio
        out["coupling_efficiency"] = model.efficiency
    elif isinstance(model, DispersiveParams):
        out["dispersive_ratio"] = model.dispersive_ratio
        out["g"] = model.g
        out["kappa_p"] = model.kappa_p
        out["coupling_efficiency"] = model.efficiency
    elif isinstance(model, QubitParams):
        out["fast_emission_ratio"] = model.fast_emission().ratio
        out["fast_emission_ok"] = model.fast_emission().ok
    return out


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, allow_nan=False) + "\n"


def cmd_fom(data, args) -> str:
    model = parse_model(data)
    task = task_section(data, ("methods",))
    methods = task.get("methods", fom.applicable_methods(model))
    if not isinstance(methods, list):
        raise ParameterError("task.methods must be a list")
    results = []
    for m in methods:
        res = fom.evaluate(model, m)
        results.append({"method": res.method, "value": _scaled(res.value, args.efficiency),
                        "epsilon": res.epsilon})
    report = {
        "model": model_to_dict(model),
        "efficiency": 1.0 if args.efficiency is None else args.efficiency,
        "results": results,
        "validity": _validity(model),
    }
    if args.format == "json":
        return _dump(report)
    if args.format == "csv":
        rows = [{"method": r["method"], "value": r["value"]} for r in results]
        return rows_to_csv(rows, ["method", "value"])
    lines = [f"model: {model_to_dict(model)}"]
    for r in results:
        extra = f"  (epsilon={r['epsilon']!r})" if r["epsilon"] is not None else ""
        lines.append(f"{r['method']:>16}: {r['value']!r}{extra}")
    for k, v in report["validity"].items():
        lines.append(f"{k:>16}: {v!r}")
    return "\n".join(lines) + "\n"


def cmd_sweep(data, args) -> str:
    spec = SweepSpec.from_config(data)
    rows = run_sweep(spec)
    if args.efficiency is not None:
        for row in rows:
            row["value"] = row["value"] * args.efficiency
    if args.format == "json":
        return rows_to_json(rows) + "\n"
    return rows_to_csv(rows, sweep_columns(spec))


def cmd_optimize(data, args) -> str:
    spec = OptimizeSpec.from_config(data)
    rep = run_optimize(spec)
    names = list(spec.bounds)
    report = {
        "argmax": dict(zip(names, rep.x)),
        "value": _scaled(rep.value, args.efficiency),
        "evaluations": rep.evaluations,
        "prescan": {"argmax": dict(zip(names, rep.prescan_x)),
                    "value": _scaled(rep.prescan_value, args.efficiency)},
        "converged": rep.converged,
    }
    if args.format == "csv":
        rows = [{"parameter": n, "value": v} for n, v in report["argmax"].items()]
        rows.append({"parameter": "objective", "value": report["value"]})
        return rows_to_csv(rows, ["parameter", "value"])
    return _dump(report)


def cmd_profile(data, args) -> str:
    model = parse_model(data)
    task = task_section(data, ("kind", "dt"))
    kind = task.get("kind", "output")
    dt = task.get("dt")
    if dt is not None and not (isinstance(dt, (int, float)) and dt > 0):
        raise ParameterError("task.dt must be a positive number")
    K = dynamics_matrix(model)
    label = " ".join(f"{k}={v!r}" for k, v in model_to_dict(model).items())
    if kind == "output":
        prof = fom.output_profile(K, dt=dt, label=label)
    elif kind == "input":
        prof = fom.input_profile(K, dt=dt, label=label)
    else:
        raise ParameterError("task.kind must be 'output' or 'input'")
    if args.format == "json":
        return _dump({"kind": prof.kind, "norm_error": prof.norm_error,
                      "t": prof.times.tolist(), "re": prof.amplitudes.real.tolist(),
                      "im": prof.amplitudes.imag.tolist()})
    return prof.to_csv(f"{kind} profile {label}")


def _parse_state(raw, n_max: int) -> channel.FockDensityMatrix:
    if not isinstance(raw, dict) or len(raw) == 0:
        raise ParameterError("task.state must be an object")
    if "fock" in raw:
        if set(raw) != {"fock"}:
            raise ParameterError("fock state takes no other keys")
        n = raw["fock"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise ParameterError("fock index must be an integer")
        return channel.FockDensityMatrix.fock(n, n_max)
    if "coherent" in raw:
        if set(raw) != {"coherent"}:
            raise ParameterError("coherent state takes no other keys")
        z = raw["coherent"]
        if not (isinstance(z, list) and len(z) == 2):
            raise ParameterError("coherent amplitude must be [re, im]")
        return channel.FockDensityMatrix.coherent(complex(z[0], z[1]), n_max)
    return channel.FockDensityMatrix.from_json(raw)


def cmd_channel(data, args) -> str:
    model = parse_model(data, required=False)
    task = task_section(data, ("f", "state", "n_max", "s0", "theta"))
    f = task.get("f", "model")
    source = "config"
    if f == "model":
        if model is None:
            raise ParameterError("task.f defaults to the model figure of merit; give a model or f")
        f = fom.evaluate(model).value
        source = "model"
    if isinstance(f, bool) or not isinstance(f, (int, float)):
        raise ParameterError("task.f must be a number or 'model'")
    f = float(min(max(f, 0.0), 1.0)) if source == "model" else float(f)
    if args.efficiency is not None:
        f *= args.efficiency
    report: dict = {"f": f, "f_source": source}
    n_max = task.get("n_max", channel.DEFAULT_NMAX)
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise ParameterError("task.n_max must be a positive integer")
    budgets = []
    if "s0" in task:
        s0 = task["s0"]
        s0 = s0 if isinstance(s0, list) else [s0]
        theta = float(task.get("theta", 0.0))
        budgets = [channel.squeezing_out(float(s), f, theta) for s in s0]
        report["squeezing"] = [
            {"s0": b.s_in, "s_out": b.s_out,
             "s_max": "unbounded" if b.unbounded else b.s_max}
            for b in budgets
        ]
    if "state" in task:
        rho = _parse_state(task["state"], n_max)
        out = channel.apply_loss_channel(rho, f)
        report["input"] = {"mean_photon": channel.mean_photon(rho),
                           "wigner_origin": channel.wigner_negativity_probe(rho)}
        report["output"] = {"mean_photon": channel.mean_photon(out),
                            "wigner_origin": channel.wigner_negativity_probe(out),
                            "rho": json.loads(out.to_json())}
    if args.format == "csv":
        if not budgets:
            raise ParameterError("csv output needs task.s0")
        return channel.budgets_to_csv(budgets)
    return _dump(report)


def cmd_oracle(data, args) -> str:
    model = parse_model(data)
    if not isinstance(model, TwoModeParams):
        raise ParameterError("the oracle simulates two_mode models only")
    task = task_section(data, ("n_modes", "bandwidth", "dt", "t_final", "tolerance",
                               "min_overlap"))
    ref = oracle.BathDiscretization.reference(model)
    disc = oracle.BathDiscretization(
        int(task.get("n_modes", ref.n_modes)), float(task.get("bandwidth", ref.bandwidth))
    )
    tol = float(task.get("tolerance", 2e-3))
    min_overlap = float(task.get("min_overlap", 0.999))
    traj = oracle.simulate(model, disc, task.get("t_final"), task.get("dt"))
    psi = oracle.emitted_wavepacket(traj)
    expected = fom.fom_closed_two_mode(model).value
    overlap = math.nan
    if psi.mass > 0 and model.g != 0:
        u = fom.output_profile(dynamics_matrix(model))
        overlap = oracle.mode_overlap(psi, u)
    mismatch = abs(psi.mass - expected)
    norm_err = traj.max_norm_error
    passed = mismatch <= tol and norm_err <= oracle.NORM_TOL and (
        math.isnan(overlap) or overlap >= min_overlap
    )
    report = {
        "p_waveguide": psi.mass, "f_closed": expected, "abs_error": mismatch,
        "tolerance": tol, "overlap": overlap, "max_norm_error": norm_err,
        "n_modes": disc.n_modes, "bandwidth": disc.bandwidth, "dt": traj.dt,
        "t_final": traj.t_final, "pass": passed,
    }
    if args.format == "csv":
        text = traj.to_csv()
    else:
        text = _dump(report)
    if not passed:
        _write(text, args)
        raise ValidationFailure(
            f"oracle mismatch: P_wg={psi.mass!r} vs F={expected!r}, overlap={overlap!r}, "
            f"norm error={norm_err!r}"
        )
    return text


COMMANDS = {
    "fom": cmd_fom,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "profile": cmd_profile,
    "channel": cmd_channel,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qswitch",
        description="Figures of merit for opening a high-Q cavity through a scatterer.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config path")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--efficiency", type=float, default=None,
                        help="waveguide coupling efficiency multiplying reported values")
    common.add_argument("--seed", type=int, default=None, help="reserved")
    common.add_argument("--quiet", action="store_true", help="no stdout when --output is set")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _write(text: str, args) -> None:
    if args.output:
        Path(args.output).write_text(text, newline="\n")
        if not args.quiet:
            sys.stdout.write(f"wrote {args.output}\n")
    else:
        sys.stdout.write(text)


DEFAULT_FORMAT = {"fom": None, "sweep": "csv", "optimize": "json", "profile": "csv",
                  "channel": "json", "oracle": "json"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = DEFAULT_FORMAT[args.command]
    try:
        if args.efficiency is not None and not 0 <= args.efficiency <= 1:
            raise ParameterError("--efficiency must lie in [0, 1]")
        data = load_config(args.config)
        text = COMMANDS[args.command](data, args)
        _write(text, args)
    except QSwitchError as exc:
        msg = " ".join(str(exc).split())
        sys.stderr.write(f"error: {msg}\n")
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        sys.stderr.write(f"error: linear algebra failure: {exc}\n")
        return 3
    except BrokenPipeError:
        # The reader closed stdout early (for example ``| head``); not an error.
        sys.stdout = open(os.devnull, "w")
    return 0
