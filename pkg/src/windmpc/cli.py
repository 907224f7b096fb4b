"""Command-line interface.

Subcommands: ``simulate`` (one controller over one profile), ``compare``
(both controllers over a shared profile, with comparison plots),
``lincheck`` (analytic linear model vs finite-difference Jacobian) and
``qpbench`` (active-set solver vs enumeration oracle). Exit codes:
0 success, 1 config error, 2 simulation failure, 3 verification failure.
"""

import argparse
import math
import sys
import time

import numpy as np

from .config import build_config, parse_wind_spec, read_kv_file
from .control import build_model_set
from .errors import ConfigError, SimulationError
from .experiment import run_experiment, torque_total_variation
from .linearize import continuous_model, discretize, equilibrium, \
    verify_linearization
from .mpc import MpcWeights, verify_condensation
from .output import emit
from .qp import run_benchmark
from .turbine import TurbineParams, power_coefficient


def _add_run_options(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--wind",
                        help="profile spec: constant:V | steps | turbulent[:MEAN]")
    parser.add_argument("--seed", type=int, help="profile seed")
    parser.add_argument("--duration", type=float, help="profile length, s")
    parser.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windmpc",
        description="Closed-loop maximum-power MPC experiments for a "
                    "variable-speed wind turbine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one controller over one profile")
    p_sim.add_argument("--controller", choices=("online", "offline"),
                       default="online")
    _add_run_options(p_sim)

    p_cmp = sub.add_parser("compare",
                           help="run both controllers over a shared profile")
    _add_run_options(p_cmp)

    p_lin = sub.add_parser("lincheck",
                           help="verify the analytic linear model against "
                                "a finite-difference Jacobian")
    p_lin.add_argument("--v-range", default="4:11:0.1",
                       help="mean wind sweep lo:hi:step, m/s")

    p_qp = sub.add_parser("qpbench",
                          help="verify the QP solver against the "
                               "enumeration oracle on random instances")
    p_qp.add_argument("--instances", type=int, default=500)
    p_qp.add_argument("--seed", type=int, default=0)
    return parser


def _run_sim(args) -> int:
    file_values = read_kv_file(args.config) if args.config else {}
    overrides = {"seed": args.seed, "duration": args.duration,
                 "controller": getattr(args, "controller", None) or "both"}
    if args.wind:
        kind, level, std = parse_wind_spec(args.wind)
        overrides["wind_kind"] = kind
        if level is not None:
            overrides["wind_level"] = level
        if std is not None:
            overrides["wind_std"] = std
    config = build_config(file_values, overrides)
    results = run_experiment(config)
    paths = emit(results, args.out)
    for name, (log, metrics) in results.items():
        print(f"{name}: {len(log)} samples | rms power error "
              f"{metrics.rms_power_error:.6g} W | rms speed error "
              f"{metrics.rms_speed_error:.6g} rad/s | violations "
              f"{metrics.constraint_violations} | mean step "
              f"{metrics.step_time_mean * 1e3:.3f} ms | torque variation "
              f"{torque_total_variation(log):.6g} N*m")
    if len(results) == 2:
        off, on = results["offline"][1], results["online"][1]
        better = on.rms_power_error <= off.rms_power_error
        print(f"online rms power error <= offline: {better}")
    print(f"wrote {len(paths)} files to {args.out}")
    return 0


def _parse_v_range(spec):
    try:
        lo, hi, step = (float(part) for part in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"bad --v-range {spec!r}; expected lo:hi:step") from exc
    if step <= 0.0 or hi < lo:
        raise ConfigError(f"bad --v-range {spec!r}")
    return np.arange(lo, hi + 0.5 * step, step)


def _lincheck(args) -> int:
    params = TurbineParams()
    grid = _parse_v_range(args.v_range)
    t0 = time.perf_counter()

    cp_peak = power_coefficient(params.lambda_opt, params.beta_opt)
    lams = np.arange(2.0, 14.0 + 1e-9, 0.01)
    lam_star = float(lams[np.argmax(power_coefficient(lams, params.beta_opt))])
    cp_ok = (abs(cp_peak - params.cp_opt) <= 5e-3 * params.cp_opt
             and abs(lam_star - params.lambda_opt) <= 0.1)

    worst, worst_v = 0.0, float(grid[0])
    for v_bar in grid:
        err = verify_linearization(float(v_bar), params)
        if err > worst:
            worst, worst_v = err, float(v_bar)

    dm = discretize(continuous_model(equilibrium(float(grid[0]), params), params),
                    params.t_s)
    pitch_err = abs(dm.a_d[4, 4] - math.exp(-params.t_s / params.tau))
    gen_err = abs(dm.a_d[3, 3] - math.exp(-params.t_s / params.tau_g))

    ms = build_model_set(8.0, params, MpcWeights())
    cond_err = verify_condensation(ms.am, MpcWeights())

    elapsed = time.perf_counter() - t0
    ok = (cp_ok and worst < 1e-4 and pitch_err < 1e-9 and gen_err < 1e-9
          and cond_err < 1e-8)
    print(f"model verification over {len(grid)} operating points "
          f"in {elapsed:.2f} s")
    print(f"  Cp peak {cp_peak:.5f} (target {params.cp_opt}, 0.5%), grid "
          f"argmax lambda {lam_star:.2f} (target {params.lambda_opt} +- 0.1)")
    print(f"  worst Jacobian mismatch {worst:.3e} (relative) at "
          f"v = {worst_v:.2f} m/s [tolerance 1e-4]")
    print(f"  ZOH pitch diagonal error {pitch_err:.3e}, generator diagonal "
          f"error {gen_err:.3e} [tolerance 1e-9]")
    print(f"  condensed-cost equivalence mismatch {cond_err:.3e} over 100 "
          f"random draws [tolerance 1e-8]")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 3


def _qpbench(args) -> int:
    t0 = time.perf_counter()
    failures, worst = run_benchmark(args.instances, args.seed)
    elapsed = time.perf_counter() - t0
    print(f"qp benchmark: {args.instances} instances, seed {args.seed}, "
          f"{elapsed:.2f} s")
    print(f"  failures {failures}, worst deviation from the enumeration "
          f"oracle {worst:.3e} [tolerance 1e-6]")
    print("PASS" if failures == 0 else "FAIL")
    return 0 if failures == 0 else 3


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("simulate", "compare"):
            return _run_sim(args)
        if args.command == "lincheck":
            return _lincheck(args)
        return _qpbench(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"simulation failed at step {exc.step}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
