"""Command-line entry point: ``fbdof run | formulas | verify-all``.

Exit status: 0 when every assertion passes, 1 when one fails, 2 on usage or
configuration errors.
"""

import argparse
import sys
import time

from .analysis import (achieved_quadruple, frac_str, kic_dof, kx_global_dof, kx_partial_dof,
                       mat_dof, outer_bound_ok, x2_dof)
from .errors import ConfigError
from .harness import ExperimentConfig, default_output_dir, run_experiment, verify_all
from .schemes import SCHEMES, check_params, mat_plan, run_scheme, select_regime


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="fbdof", description=(
        "Simulate feedback and delayed-CSI coding schemes and verify their DoF."))
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("config")
    run.add_argument("--output-dir", default=None)
    _common(run)

    form = sub.add_parser("formulas", help="print exact DoF and the outer-bound table")
    form.add_argument("--scheme", required=True, choices=SCHEMES)
    form.add_argument("-M", type=int)
    form.add_argument("-N", type=int)
    form.add_argument("-K", type=int)

    ver = sub.add_parser("verify-all", help="run the full acceptance matrix")
    ver.add_argument("--output-dir", default=None)
    _common(ver)
    return parser


def _formula_lines(scheme, params):
    if scheme == "x2_mimo":
        m, n = params["M"], params["N"]
        dof = x2_dof(m, n)
        t = run_scheme(scheme, params, noiseless=True)
        quad = achieved_quadruple(t)
        ob = outer_bound_ok(quad, m, n)
        lines = [frac_str(dof),
                 f"regime {select_regime(m, n).regime}: {t.n_symbols} symbols / {t.n_slots} slots",
                 f"{'message':<8} {'DoF':>8}"]
        names = ("d11", "d12", "d22", "d21")
        lines += [f"{name:<8} {frac_str(d):>8}" for name, d in zip(names, quad)]
        lines += [f"{'bound':<8} {'slack':>8} ok",
                  f"{'OB1':<8} {frac_str(ob.slack1):>8} {ob.slack1 >= 0}",
                  f"{'OB2':<8} {frac_str(ob.slack2):>8} {ob.slack2 >= 0}"]
        return lines
    k = params["K"]
    dof = {"kx_partial": kx_partial_dof, "kx_global": kx_global_dof,
           "mat_bc": mat_dof, "k_ic": kic_dof}[scheme](k)
    lines = [frac_str(dof)]
    if scheme != "kx_partial":
        plan = mat_plan(k)
        lines.append(f"replication {plan.replication}, phase slots {list(plan.slots_per_phase)}")
    return lines


def cmd_formulas(args):
    raw = {key: getattr(args, key) for key in ("M", "N", "K") if getattr(args, key) is not None}
    params = check_params(args.scheme, raw)
    print("\n".join(_formula_lines(args.scheme, params)))
    return 0


def cmd_run(args):
    cfg = ExperimentConfig.from_file(args.config, master_seed=args.seed,
                                     output_dir=args.output_dir)
    summary, paths = run_experiment(cfg, jobs=args.jobs)
    print(f"{cfg.name}: ratio {summary['ratio']} (predicted {summary['predicted']}), "
          f"rank pass {summary['rank_pass']}"
          + (f", slope {summary['slope']}" if summary["slope"] is not None else ""))
    for f in summary["failures"]:
        print(f"FAIL {f}")
    for path in paths.values():
        print(f"wrote {path}")
    return 0 if summary["passed"] else 1


def cmd_verify_all(args):
    seed = 0 if args.seed is None else args.seed
    out = args.output_dir or default_output_dir()
    start = time.perf_counter()

    def show(res):
        print(f"{res.line()}  ({time.perf_counter() - start:.1f}s)", flush=True)

    results = verify_all(seed, args.jobs, out, progress=show)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed; "
          f"results in {out}")
    return 0 if ok else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("fbdof: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return {"run": cmd_run, "formulas": cmd_formulas,
                "verify-all": cmd_verify_all}[args.command](args)
    except ConfigError as exc:
        print(f"fbdof: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
