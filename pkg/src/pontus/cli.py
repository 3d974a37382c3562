"""Command-line interface: JSON-configured runs emitting CSV/JSON artifacts.

Exit codes: 0 success, 1 configuration error, 2 singular generator,
3 non-convergence.  The environment variable PONTUS_LOG selects the log
level.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .core import FieldVector, ParameterPoint, RateTriple
from .dynamics import (
    IntegratorConfig,
    assemble_generator,
    steady_state,
    trajectory_to_csv,
    velocity_field_grid,
    velocity_field_to_csv,
)
from .errors import ConfigError, NotConverged, PontusError, SingularGenerator
from .mpemba import (
    classify_continuous,
    classify_two_step,
    gain,
    relevant_crossings,
    two_step_distances,
)
from .nonmarkov import (
    CHANNELS,
    boundary_curve,
    channel_report,
    markov_boundary_alpha,
    nm_measure_quadrature,
)
from .protocols import (
    DEFAULT_EPS,
    ExponentialCosineSchedule,
    run_continuous,
    run_direct,
    run_two_step,
)
from .sweep import (
    GridAxis,
    SweepSpec,
    gain_map_sidecar,
    gain_map_to_csv,
    sweep_kappa_omega,
    sweep_kappa_theta,
)

log = logging.getLogger("pontus.cli")

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SINGULAR = 2
EXIT_NOT_CONVERGED = 3

_TOP_KEYS = {
    "schema",
    "points",
    "protocol",
    "epsilon",
    "integrator",
    "sweep",
    "nm",
    "velocity_field",
    "output",
}


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")


def _vec3(value, path):
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"{path}: expected a list of three numbers")
    return np.asarray(value, dtype=float)


def _number(value, path, minimum=None, strict=False):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number")
    v = float(value)
    if minimum is not None and (v <= minimum if strict else v < minimum):
        op = ">" if strict else ">="
        raise ConfigError(f"{path}: must be {op} {minimum}")
    return v


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _check_keys(cfg, _TOP_KEYS, "config")
    if cfg.get("schema") != SCHEMA_VERSION:
        raise ConfigError(
            f"config.schema: expected {SCHEMA_VERSION}, got {cfg.get('schema')!r}"
        )
    return cfg


def _parameter_point(cfg, name) -> ParameterPoint:
    points = cfg.get("points")
    if not isinstance(points, dict):
        raise ConfigError("config.points: missing or not an object")
    if name not in points:
        raise ConfigError(f"config.points: no point named {name!r}")
    entry = points[name]
    _check_keys(entry, {"h", "gamma"}, f"config.points.{name}")
    if "h" not in entry or "gamma" not in entry:
        raise ConfigError(f"config.points.{name}: needs both h and gamma")
    return ParameterPoint(
        FieldVector.from_array(_vec3(entry["h"], f"config.points.{name}.h")),
        RateTriple.from_array(_vec3(entry["gamma"], f"config.points.{name}.gamma")),
        name,
    )


def _integrator(cfg, args) -> IntegratorConfig:
    section = cfg.get("integrator", {})
    _check_keys(
        section,
        {"rel_tol", "abs_tol", "max_step", "t_cap", "sample_stride"},
        "config.integrator",
    )
    kwargs = {}
    if "rel_tol" in section:
        kwargs["rel_tol"] = _number(section["rel_tol"], "integrator.rel_tol", 0, True)
    if "abs_tol" in section:
        kwargs["abs_tol"] = _number(section["abs_tol"], "integrator.abs_tol", 0, True)
    if section.get("max_step") is not None and "max_step" in section:
        kwargs["max_step"] = _number(section["max_step"], "integrator.max_step", 0, True)
    if "t_cap" in section:
        kwargs["t_cap"] = _number(section["t_cap"], "integrator.t_cap", 0, True)
    if "sample_stride" in section:
        kwargs["sample_stride"] = _number(
            section["sample_stride"], "integrator.sample_stride", 0, True
        )
    if args.t_cap is not None:
        kwargs["t_cap"] = args.t_cap
    return IntegratorConfig(**kwargs)


def _epsilon(cfg, args) -> float:
    if args.epsilon is not None:
        return args.epsilon
    if "epsilon" in cfg:
        return _number(cfg["epsilon"], "config.epsilon", 0, True)
    return DEFAULT_EPS


def _axis(section, key, spacing_default, path) -> GridAxis:
    if key not in section:
        raise ConfigError(f"{path}: missing axis {key!r}")
    d = section[key]
    _check_keys(d, {"min", "max", "n", "spacing"}, f"{path}.{key}")
    lo = _number(d.get("min"), f"{path}.{key}.min")
    hi = _number(d.get("max"), f"{path}.{key}.max")
    n = d.get("n")
    if not isinstance(n, int) or n < 2:
        raise ConfigError(f"{path}.{key}.n: expected an integer >= 2")
    spacing = d.get("spacing", spacing_default)
    if spacing == "log":
        return GridAxis.log(key, lo, hi, n)
    if spacing == "linear":
        return GridAxis.linear(key, lo, hi, n)
    raise ConfigError(f"{path}.{key}.spacing: expected 'log' or 'linear'")


def _point_dict(p: ParameterPoint) -> dict:
    return {"h": list(p.h.as_array()), "gamma": list(p.gamma.as_array())}


def _result_dict(res, trajectory_file=None) -> dict:
    return {
        "protocol": res.kind,
        "tau": res.tau,
        "converged": res.converged,
        "inconclusive": res.inconclusive,
        "timed_out": res.timed_out,
        "epsilon": res.epsilon,
        "threshold_crossings": res.n_threshold_crossings,
        "trajectory_file": trajectory_file,
    }


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


# ---------------------------------------------------------------- handlers


def cmd_steady_state(cfg, args, out_dir) -> int:
    p = _parameter_point(cfg, args.point)
    g = assemble_generator(p)
    r = steady_state(g)
    arr = r.as_array()
    _emit(
        {
            "schema": SCHEMA_VERSION,
            "point": p.label,
            "r_ss": list(arr),
            "residual": float(np.linalg.norm(g.Lambda @ arr + g.b)),
        }
    )
    return EXIT_OK


def _simulate_two_step_scan(cfg, proto, eps, integ, out_dir, label):
    scan = proto["t_i_scan"]
    _check_keys(scan, {"start", "stop", "step"}, "config.protocol.t_i_scan")
    start = _number(scan.get("start"), "t_i_scan.start", 0, True)
    stop = _number(scan.get("stop"), "t_i_scan.stop", 0, True)
    step = _number(scan.get("step"), "t_i_scan.step", 0, True)
    pS = _parameter_point(cfg, "S")
    pA = _parameter_point(cfg, "A")
    pF = _parameter_point(cfg, "F")
    baseline = run_direct(pS, pF, eps, integ)
    if not baseline.converged:
        raise NotConverged("direct baseline did not converge")

    first = {}
    rows = []
    t_i = start
    while t_i <= stop + 1e-12:
        res = run_two_step(pS, pA, pF, t_i, eps, integ)
        if res.converged:
            cls = classify_two_step(res, baseline).value
            rows.append({"t_i": t_i, "tau": res.tau, "class": cls})
            if cls not in first and cls != "no-effect":
                first[cls] = {"t_i": t_i, "tau": res.tau}
                traj_file = f"{label}_{cls}_trajectory.csv"
                trajectory_to_csv(res.trajectory, out_dir / traj_file)
                first[cls]["trajectory_file"] = traj_file
        else:
            rows.append({"t_i": t_i, "tau": None, "class": "timeout"})
        t_i = round(t_i + step, 12)

    base_file = f"{label}_direct_trajectory.csv"
    trajectory_to_csv(baseline.trajectory, out_dir / base_file)
    report = {
        "schema": SCHEMA_VERSION,
        "protocol": "two-step-scan",
        "epsilon": eps,
        "tau_direct": baseline.tau,
        "direct_trajectory_file": base_file,
        "first_realizations": first,
        "scan": rows,
        "params": {
            "S": _point_dict(pS),
            "A": _point_dict(pA),
            "F": _point_dict(pF),
        },
    }
    path = out_dir / f"{label}_result.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    _emit(report)
    return EXIT_OK


def cmd_simulate(cfg, args, out_dir) -> int:
    proto = cfg.get("protocol")
    if proto is None:
        raise ConfigError("config.protocol: required for simulate")
    _check_keys(
        proto,
        {"kind", "t_i", "t_i_scan", "kappa", "omega", "with_baseline", "label"},
        "config.protocol",
    )
    kind = proto.get("kind")
    if kind not in ("direct", "two-step", "continuous"):
        raise ConfigError(
            "config.protocol.kind: expected direct, two-step, or continuous"
        )
    eps = _epsilon(cfg, args)
    integ = _integrator(cfg, args)
    label = proto.get("label") or kind
    with_baseline = bool(proto.get("with_baseline", False)) or args.with_baseline

    if kind == "two-step" and "t_i_scan" in proto:
        return _simulate_two_step_scan(cfg, proto, eps, integ, out_dir, label)

    pS = _parameter_point(cfg, "S")
    pF = _parameter_point(cfg, "F")
    params = {"S": _point_dict(pS), "F": _point_dict(pF)}
    if kind == "direct":
        res = run_direct(pS, pF, eps, integ)
    elif kind == "two-step":
        if "t_i" not in proto:
            raise ConfigError("config.protocol: two-step needs t_i or t_i_scan")
        pA = _parameter_point(cfg, "A")
        t_i = _number(proto["t_i"], "protocol.t_i", 0, True)
        params["A"] = _point_dict(pA)
        params["t_i"] = t_i
        res = run_two_step(pS, pA, pF, t_i, eps, integ)
    else:
        kappa = _number(proto.get("kappa"), "protocol.kappa", 0)
        omega = _number(proto.get("omega", 0.0), "protocol.omega", 0)
        params["kappa"] = kappa
        params["omega"] = omega
        res = run_continuous(pS, pF, kappa, omega, eps, integ)

    traj_file = f"{label}_trajectory.csv"
    trajectory_to_csv(res.trajectory, out_dir / traj_file)
    out = {"schema": SCHEMA_VERSION, **_result_dict(res, traj_file), "params": params}

    if with_baseline and kind != "direct":
        baseline = run_direct(pS, pF, eps, integ)
        base_file = f"{label}_direct_trajectory.csv"
        trajectory_to_csv(baseline.trajectory, out_dir / base_file)
        out["baseline"] = _result_dict(baseline, base_file)
        if res.converged and baseline.converged:
            gv = gain(baseline.tau, res.tau)
            cls_info = {"gain": gv.g}
            if kind == "continuous":
                cls_info["class"] = classify_continuous(res, baseline).value
                cls_info["crossings"] = relevant_crossings(res, baseline)
            else:
                cls_info["class"] = classify_two_step(res, baseline).value
                d_s, d_i, d_sf = two_step_distances(res, baseline)
                cls_info.update({"d_S": d_s, "d_I": d_i, "d_SF": d_sf})
                cls_info["crossings"] = relevant_crossings(res, baseline)
            out["classification"] = cls_info

    out["config"] = {
        "schema": SCHEMA_VERSION,
        "points": {k: _point_dict(_parameter_point(cfg, k)) for k in cfg["points"]},
        "protocol": dict(proto),
        "epsilon": eps,
        "integrator": {
            "rel_tol": integ.rel_tol,
            "abs_tol": integ.abs_tol,
            "t_cap": integ.t_cap,
            "sample_stride": integ.sample_stride,
        },
    }
    with open(out_dir / f"{label}_result.json", "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2)
    _emit(out)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_gain_map(cfg, args, out_dir) -> int:
    section = cfg.get("sweep")
    if section is None:
        raise ConfigError("config.sweep: required for gain-map")
    _check_keys(
        section,
        {
            "kind",
            "rates_s",
            "rates_f",
            "h",
            "kappa",
            "theta",
            "omega",
            "omega_fixed",
            "label",
        },
        "config.sweep",
    )
    kind = section.get("kind")
    if kind not in ("kappa-theta", "kappa-omega"):
        raise ConfigError("config.sweep.kind: expected kappa-theta or kappa-omega")
    rates_s = RateTriple.from_array(_vec3(section.get("rates_s"), "sweep.rates_s"))
    rates_f = RateTriple.from_array(_vec3(section.get("rates_f"), "sweep.rates_f"))
    kappa_axis = _axis(section, "kappa", "log", "config.sweep")
    label = section.get("label") or kind
    eps = _epsilon(cfg, args)
    integ = _integrator(cfg, args)

    if kind == "kappa-theta":
        second = _axis(section, "theta", "linear", "config.sweep")
        spec = SweepSpec(
            rates_s=rates_s,
            rates_f=rates_f,
            kappa_axis=kappa_axis,
            second_axis=second,
            omega=float(section.get("omega_fixed", 0.0)),
            eps=eps,
            cfg=integ,
        )
        runner = sweep_kappa_theta
    else:
        if "h" not in section:
            raise ConfigError("config.sweep.h: required for kappa-omega sweeps")
        second = _axis(section, "omega", "linear", "config.sweep")
        spec = SweepSpec(
            rates_s=rates_s,
            rates_f=rates_f,
            kappa_axis=kappa_axis,
            second_axis=second,
            h=FieldVector.from_array(_vec3(section["h"], "sweep.h")),
            eps=eps,
            cfg=integ,
        )
        runner = sweep_kappa_omega

    total_cells = len(kappa_axis.values) * len(second.values)

    def progress(done, total):
        if done % max(1, total // 20) == 0 or done == total:
            print(f"gain-map: {done}/{total} cells", file=sys.stderr)

    log.info("sweep %s over %d cells", kind, total_cells)
    gm = runner(spec, jobs=args.jobs, progress=progress)

    csv_path = out_dir / f"{label}_gainmap.csv"
    gain_map_to_csv(gm, csv_path)
    sidecar = gain_map_sidecar(gm)
    sidecar["csv_file"] = csv_path.name
    with open(out_dir / f"{label}_gainmap.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
    n_failed = sum(s != "ok" for row in gm.status for s in row)
    print(
        f"gain-map: wrote {csv_path} ({total_cells} cells, {n_failed} non-ok)",
        file=sys.stderr,
    )
    return EXIT_OK


def _nm_section(cfg):
    section = cfg.get("nm")
    if section is None:
        raise ConfigError("config.nm: required for nm subcommands")
    _check_keys(
        section,
        {"rates_s", "rates_f", "kappa", "omega", "kappa_grid"},
        "config.nm",
    )
    rates_s = _vec3(section.get("rates_s"), "nm.rates_s")
    rates_f = _vec3(section.get("rates_f"), "nm.rates_f")
    return section, rates_s, rates_f


def cmd_nm_measure(cfg, args, out_dir) -> int:
    section, rates_s, rates_f = _nm_section(cfg)
    kappa = _number(section.get("kappa"), "nm.kappa", 0, True)
    omega = _number(section.get("omega", 0.0), "nm.omega", 0)

    schedule = ExponentialCosineSchedule(
        gamma_s=RateTriple.from_array(rates_s),
        gamma_f=RateTriple.from_array(rates_f),
        h=FieldVector(0.0, 0.0, 0.0),
        kappa=kappa,
        omega=omega,
    )
    dg = np.abs(rates_s - rates_f)
    channels = []
    total = 0.0
    for idx, name in enumerate(CHANNELS):
        rep = channel_report(rates_s[idx], rates_f[idx], kappa, omega, name)
        horizon = (
            math.log(max(dg[idx], 1e-300) / (kappa * 1e-12)) / kappa
            if dg[idx] > 0
            else 1.0
        )
        quad_val = nm_measure_quadrature(schedule, name, horizon)
        channels.append(
            {
                "channel": name,
                "f_value": rep.f_value,
                "f_quadrature": quad_val,
                "n_intervals": rep.n_intervals,
                "intervals": [list(iv) for iv in rep.intervals],
            }
        )
        total += rep.f_value
    _emit(
        {
            "schema": SCHEMA_VERSION,
            "kappa": kappa,
            "omega": omega,
            "channels": channels,
            "f_total": total,
        }
    )
    return EXIT_OK


def cmd_nm_boundary(cfg, args, out_dir) -> int:
    section, rates_s, rates_f = _nm_section(cfg)
    if "kappa_grid" not in section:
        raise ConfigError("config.nm.kappa_grid: required for nm-boundary")
    axis = _axis(section, "kappa_grid", "log", "config.nm")

    per_channel = []
    for idx, name in enumerate(CHANNELS):
        try:
            alpha = markov_boundary_alpha(rates_s[idx], rates_f[idx])
            per_channel.append({"channel": name, "alpha": alpha})
        except PontusError as exc:
            per_channel.append(
                {"channel": name, "alpha": None, "note": f"no-solution: {exc}"}
            )
    curve = boundary_curve(rates_s, rates_f, axis.values)
    _emit(
        {
            "schema": SCHEMA_VERSION,
            "channels": per_channel,
            "boundary": [[k, w] for k, w in curve],
        }
    )
    return EXIT_OK


def cmd_velocity_field(cfg, args, out_dir) -> int:
    section = cfg.get("velocity_field")
    if section is None:
        raise ConfigError("config.velocity_field: required for velocity-field")
    _check_keys(
        section, {"point", "spacing", "max_radius", "label"}, "config.velocity_field"
    )
    ref = section.get("point", "F")
    if isinstance(ref, str):
        p = _parameter_point(cfg, ref)
    else:
        _check_keys(ref, {"h", "gamma"}, "config.velocity_field.point")
        p = ParameterPoint(
            FieldVector.from_array(_vec3(ref.get("h"), "velocity_field.point.h")),
            RateTriple.from_array(
                _vec3(ref.get("gamma"), "velocity_field.point.gamma")
            ),
        )
    spacing = _number(section.get("spacing", 0.05), "velocity_field.spacing", 0, True)
    max_radius = _number(
        section.get("max_radius", 1.0), "velocity_field.max_radius", 0, True
    )
    label = section.get("label") or "velocity"
    rows = velocity_field_grid(assemble_generator(p), spacing, max_radius)
    path = out_dir / f"{label}_velocity.csv"
    velocity_field_to_csv(rows, path)
    print(f"velocity-field: wrote {path} ({len(rows)} grid points)", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pontus",
        description="Relaxation protocols for an open two-level system",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run config")
    parser.add_argument("--output", default=".", help="directory for emitted files")
    parser.add_argument(
        "--epsilon", type=float, default=None, help="trace-distance cutoff"
    )
    parser.add_argument("--t-cap", type=float, default=None, help="integration cap")
    parser.add_argument(
        "--jobs", type=int, default=os.cpu_count(), help="sweep worker processes"
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="reserved; runs are deterministic"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady-state", help="attractor of one parameter point")
    p.add_argument("--point", default="F", help="which configured point (default F)")

    p = sub.add_parser("simulate", help="run one protocol")
    p.add_argument(
        "--with-baseline",
        action="store_true",
        help="co-run the direct protocol and classify the speed-up",
    )

    sub.add_parser("gain-map", help="sweep the gain over a parameter plane")
    sub.add_parser("nm-measure", help="non-Markovianity of a rate schedule")
    sub.add_parser("nm-boundary", help="Markovian boundary over a kappa grid")
    sub.add_parser("velocity-field", help="velocity magnitudes on a ball grid")
    return parser


_HANDLERS = {
    "steady-state": cmd_steady_state,
    "simulate": cmd_simulate,
    "gain-map": cmd_gain_map,
    "nm-measure": cmd_nm_measure,
    "nm-boundary": cmd_nm_boundary,
    "velocity-field": cmd_velocity_field,
}


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, os.environ.get("PONTUS_LOG", "WARNING").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if not hasattr(args, "with_baseline"):
        args.with_baseline = False
    try:
        cfg = load_config(args.config)
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](cfg, args, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularGenerator as exc:
        print(f"singular generator: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
