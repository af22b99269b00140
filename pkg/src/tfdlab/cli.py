"""Command-line runner: ``tfdlab <subcommand> [--config FILE] [--outdir DIR]``.

Each subcommand reads a ``key = value`` config file, runs one workflow and
writes CSV/JSON outputs plus ``manifest.json`` into the output directory.
Exit status: 0 on success, 1 on invalid input, 2 when a solver fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .configfile import ConfigError, ConfigFile, Key, as_bool, choice, expression, load_config, optional, resolve
from .core import CoefficientField, ProblemConfig, make_time_grid, make_uniform_grid
from .exceptions import PreconditionViolation, SolverFailure
from .io import read_csv, write_csv, write_field_csv, write_json, write_kernel_csv, write_trace_csv

log = logging.getLogger("tfdlab")

_PDE = {
    "alpha": Key(float, 0.5, "fractional order in (0, 1)"),
    "ell": Key(float, 1.0, "interval length"),
    "T": Key(float, 1.0, "time horizon"),
    "nx": Key(int, 100, "spatial cells"),
    "nt": Key(int, 400, "time steps"),
    "right_bc": Key(choice("neumann", "dirichlet"), "neumann"),
    "right_value": Key(optional(float), None, "constant flux/value at x = ell"),
    "seed": Key(int, 0),
}

SCHEMAS = {
    "ml": {
        "alpha": Key(float, 0.5),
        "z_min": Key(float, -10.0),
        "z_max": Key(float, 0.0),
        "nz": Key(int, 101),
        "rel_tol": Key(float, 1e-10),
        "seed": Key(int, 0),
    },
    "forward": dict(
        _PDE,
        p_expr=Key(expression(), "0"),
        a_expr=Key(expression(), "1"),
        left_flux=Key(expression("t"), "0"),
        solver=Key(choice("l1", "spectral", "both"), "l1"),
        n_modes=Key(optional(int), None),
    ),
    "kernel": {
        "ell": Key(float, 1.0),
        "nx": Key(int, 100),
        "p_expr": Key(expression(), "0"),
        "q_expr": Key(expression(), "1"),
        "tol": Key(float, 1e-12),
        "max_iter": Key(int, 100),
        "seed": Key(int, 0),
    },
    "transmute": dict(
        _PDE,
        p_expr=Key(expression(), "0"),
        q_expr=Key(expression(), "1"),
        a_expr=Key(expression(), "1"),
        left_flux=Key(expression("t"), "0"),
        tol=Key(float, 1e-12),
        ablate=Key(as_bool, True),
    ),
    "uniqueness": dict(
        _PDE,
        p_expr=Key(expression(), None),
        q_expr=Key(expression(), None),
        a_expr=Key(expression(), "1"),
        factor=Key(float, 100.0),
    ),
    "reconstruct": {
        "alpha": Key(float, 0.9),
        "ell": Key(float, 2.0),
        "T": Key(float, 4.0),
        "nx": Key(int, 40),
        "nt": Key(int, 200),
        "right_bc": Key(choice("neumann", "dirichlet"), "neumann"),
        "p_true_expr": Key(expression(), "1 + sin(pi*x/2)"),
        "a_expr": Key(expression(), "1"),
        "sigma": Key(float, 0.01),
        "seed": Key(int, 0),
        "n_params": Key(int, 10),
        "lambda_reg": Key(str, "auto", "float, or 'auto' for the discrepancy principle"),
        "tau": Key(float, 1.0),
        "max_iter": Key(int, 200),
        "gtol": Key(float, 1e-8),
        "p0": Key(float, 0.0, "constant starting guess"),
        "p0_csv": Key(optional(str), None, "result CSV whose p_estimate seeds the start"),
        "instance": Key(optional(str), None, "instance JSON to invert instead of synthesising"),
    },
    "convergence": dict(
        _PDE,
        p_expr=Key(expression(), "1"),
        a_expr=Key(expression(), "1"),
        mode=Key(choice("time", "space"), "time"),
        levels=Key(int, 4),
    ),
}

_SCENARIO_KEYS = ("p_expr", "q_expr", "a_expr")


def _problem(c: dict) -> ProblemConfig:
    return ProblemConfig(alpha=c["alpha"], ell=c["ell"], horizon=c["T"], right_bc=c["right_bc"],
                         right_value=c.get("right_value"))


def _field(expr, grid, label):
    return CoefficientField.from_function(expr, grid, label)


def _flux(expr):
    return None if expr.expression in ("0", "0.0") else expr


# ---------------------------------------------------------------- workflows


def run_ml(c: dict, out: Path) -> list:
    from .mittag_leffler import mittag_leffler_report

    z = np.linspace(c["z_min"], c["z_max"], c["nz"])
    rep = mittag_leffler_report(c["alpha"], z, c["rel_tol"])
    path = write_csv(out / "ml.csv", {"z": z, "E": rep["values"], "error_estimate": rep["errors"],
                                       "accurate": rep["accurate"].astype(float)},
                     {"alpha": c["alpha"], "rel_tol": c["rel_tol"]})
    print(f"E_{c['alpha']}(z) on [{c['z_min']}, {c['z_max']}]: {int(rep['accurate'].sum())}/{z.size} values certified")
    return [path]


def run_forward(c: dict, out: Path) -> list:
    from .forward_l1 import extract_trace, solve_ibvp
    from .spectral import eigendecompose, projection_residual, spectral_solve

    cfg = _problem(c)
    grid = make_uniform_grid(cfg.ell, c["nx"])
    p, a = _field(c["p_expr"], grid, "p"), _field(c["a_expr"], grid, "a")
    outputs, summary = [], {"config": cfg.echo(), "N": c["nx"], "M": c["nt"]}
    sol = None
    if c["solver"] in ("l1", "both"):
        sol = solve_ibvp(cfg, p, a, c["nt"], left_flux=_flux(c["left_flux"]))
        outputs.append(write_field_csv(sol, out / "field_l1.csv"))
        outputs.append(write_trace_csv(extract_trace(sol), out / "trace_l1.csv", sol.echo()))
    if c["solver"] in ("spectral", "both"):
        if cfg.right_value is not None or _flux(c["left_flux"]) is not None:
            raise PreconditionViolation("the spectral solver needs homogeneous boundary data")
        eig = eigendecompose(p, cfg.right_bc, c["n_modes"])
        spec = spectral_solve(eig, a, cfg.alpha, make_time_grid(cfg.horizon, c["nt"]), cfg)
        outputs.append(write_field_csv(spec, out / "field_spectral.csv"))
        outputs.append(write_trace_csv(extract_trace(spec), out / "trace_spectral.csv", spec.echo()))
        summary["projection_residual"] = projection_residual(eig, a)
        if sol is not None:
            d = np.abs(sol.values - spec.values)
            summary["max_abs_difference"] = float(d.max())
            summary["max_abs_difference_final_time"] = float(d[:, -1].max())
    outputs.append(write_json(out / "summary.json", summary))
    print(f"forward: wrote {len(outputs)} files to {out}")
    return outputs


def run_kernel(c: dict, out: Path) -> list:
    from .goursat import diagonal_integral, kernel_pde_residual, solve_kernel

    grid = make_uniform_grid(c["ell"], c["nx"])
    p, q = _field(c["p_expr"], grid, "p"), _field(c["q_expr"], grid, "q")
    K = solve_kernel(p, q, tol=c["tol"], max_iter=c["max_iter"])
    diag_err = float(np.abs(K.diagonal - diagonal_integral(p, q)[::2]).max())
    summary = dict(K.diagnostics(), diagonal_error=diag_err, pde_residual=kernel_pde_residual(K),
                   max_abs_K=float(np.nanmax(np.abs(K.values))))
    outputs = [write_kernel_csv(K, out / "kernel.csv"), write_json(out / "summary.json", summary)]
    print(f"kernel: {K.iterations} sweeps, final update {K.final_update:.2e}, PDE residual {summary['pde_residual']:.3e}")
    return outputs


def run_transmute(c: dict, out: Path) -> list:
    from .forward_l1 import extract_trace, solve_ibvp
    from .goursat import solve_kernel
    from .transmutation import apply_transform, transformed_equation_residual

    cfg = _problem(c)
    grid = make_uniform_grid(cfg.ell, c["nx"])
    p, q, a = _field(c["p_expr"], grid, "p"), _field(c["q_expr"], grid, "q"), _field(c["a_expr"], grid, "a")
    u = solve_ibvp(cfg, p, a, c["nt"], left_flux=_flux(c["left_flux"]))
    K = solve_kernel(p, q, tol=c["tol"])
    v = apply_transform(u, K)
    trace = extract_trace(u)
    sup, res = transformed_equation_residual(v, q, trace, return_field=True)
    summary = {"config": cfg.echo(), "N": c["nx"], "M": c["nt"], "residual": sup, "kernel": K.diagnostics()}
    if c["ablate"]:
        summary["residual_without_boundary_term"] = transformed_equation_residual(
            v, q, trace, include_boundary_term=False)
    X, T = np.meshgrid(grid.nodes[1:-1], u.tgrid.nodes[2:], indexing="ij")
    outputs = [
        write_field_csv(v.as_solution(), out / "transformed.csv"),
        write_csv(out / "residual.csv", {"x": X, "t": T, "residual": res}, u.echo()),
        write_json(out / "summary.json", summary),
    ]
    print(f"transmute: sup residual {sup:.3e}")
    return outputs


def _uniqueness_scenario(args):
    name, raw, base = args
    from .uniqueness import distinguishability

    c = dict(base)
    c.update(resolve(raw, {k: SCHEMAS["uniqueness"][k] for k in _SCENARIO_KEYS}))
    if c["p_expr"] is None or c["q_expr"] is None:
        raise ConfigError(f"scenario {name!r} needs both p_expr and q_expr")
    cfg = _problem(c)
    grid = make_uniform_grid(cfg.ell, c["nx"])
    rep = distinguishability(_field(c["p_expr"], grid, "p"), _field(c["q_expr"], grid, "q"),
                             _field(c["a_expr"], grid, "a"), cfg, c["nt"], c["factor"], scenario=name)
    rep.config.update({k: c[k].expression for k in _SCENARIO_KEYS})
    return rep


def run_uniqueness(c: dict, out: Path, cfgfile: Optional[ConfigFile], jobs: int = 1) -> list:
    sections = dict(cfgfile.sections) if cfgfile is not None else {}
    base = {k: v for k, v in c.items()}
    if not sections:
        sections = {"default": {}}
    # scenario keys in a section override the global ones
    glob_raw = {k: cfgfile.values[k] for k in _SCENARIO_KEYS if cfgfile is not None and k in cfgfile.values}
    tasks = []
    for name, raw in sections.items():
        bad = sorted(set(raw) - set(_SCENARIO_KEYS))
        if bad:
            line = cfgfile.lines.get((name, bad[0]), "?")
            raise ConfigError(f"{cfgfile.source}:{line}: unknown key {bad[0]!r} in scenario [{name}]; "
                              f"valid keys: {', '.join(_SCENARIO_KEYS)}")
        tasks.append((name, dict(glob_raw, **raw), {k: v for k, v in base.items() if k not in _SCENARIO_KEYS}))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_uniqueness_scenario, tasks))
    else:
        reports = [_uniqueness_scenario(t) for t in tasks]
    outputs = []
    for rep in reports:
        curve = write_csv(out / f"trace_{rep.scenario}.csv", rep.curves, rep.config)
        outputs.append(curve)
        gap = rep.metric("trace_gap")
        rel = "≤ floor" if gap.relation == "<=" else f"> {rep.config['factor']:g}×floor"
        print(f"[{rep.scenario}] gap {rel}: {'PASS' if gap.passed else 'FAIL'}  "
              f"(gap={gap.value:.3e}, floor={rep.metric('noise_floor').value:.3e})")
    text = "\n\n".join(r.to_text() for r in reports) + "\n"
    (out / "report.txt").write_text(text)
    outputs.append(out / "report.txt")
    outputs.append(write_json(out / "report.json", {"scenarios": [r.to_dict() for r in reports],
                                                    "passed": all(r.passed for r in reports)}))
    return outputs


def run_reconstruct(c: dict, out: Path) -> list:
    from . import reconstruction as rc

    opt = rc.OptimizerConfig(max_iter=c["max_iter"], gtol=c["gtol"])
    if c["instance"]:
        inst = rc.load_instance(c["instance"])
    else:
        cfg = ProblemConfig(alpha=c["alpha"], ell=c["ell"], horizon=c["T"], right_bc=c["right_bc"])
        inst = rc.synthesize_data(c["p_true_expr"], c["a_expr"], cfg, c["nx"], c["nt"], sigma=c["sigma"],
                                  rng_seed=c["seed"], n_params=c["n_params"])
    p0 = np.full(inst.n_params, c["p0"])
    if c["p0_csv"]:
        _, cols = read_csv(c["p0_csv"])
        if "x" not in cols or "p_estimate" not in cols:
            raise ConfigError(f"{c['p0_csv']}: expected columns x and p_estimate")
        p0 = np.interp(inst.param_nodes, cols["x"], cols["p_estimate"])
    outputs = list(rc.save_instance(inst, out))
    extra = {}
    if c["lambda_reg"].strip().lower() == "auto":
        lam, res, scan = rc.discrepancy_principle(inst, tau=c["tau"], optimizer=opt, p0=p0)
        extra["discrepancy_scan"] = scan
        extra["noise_norm"] = inst.noise_norm()
        inst = inst.with_lambda(lam)
    else:
        try:
            lam = float(c["lambda_reg"])
        except ValueError:
            raise ConfigError(f"lambda_reg must be a number or 'auto', got {c['lambda_reg']!r}") from None
        inst = inst.with_lambda(lam)
        res = rc.reconstruct(inst, opt, p0=p0)
    outputs += list(rc.save_result(res, inst, out, extra=extra))
    msg = f"reconstruct: lambda={lam:.3e}, {res.iterations} iterations ({res.message})"
    if inst.p_true is not None:
        msg += f", relative L2 error {rc.relative_l2_error(res.p_estimate, inst.p_true):.4f}"
    print(msg)
    return outputs


def run_convergence(c: dict, out: Path) -> list:
    """Time mode: error at ``T`` against the semi-discrete spectral solution
    on the same grid while ``nt`` doubles. Space mode: ``nx`` doubles at
    fixed ``nt`` and successive solutions are compared on the coarse nodes
    (their common time error cancels to leading order)."""
    from .forward_l1 import solve_ibvp
    from .spectral import eigendecompose, spectral_solve

    cfg = _problem(c)
    if cfg.right_value is not None:
        raise PreconditionViolation("convergence studies need homogeneous boundary data")
    levels = c["levels"] + (1 if c["mode"] == "space" else 0)
    rows = {"N": [], "M": [], "error": []}
    finals = []
    for k in range(levels):
        nx = c["nx"] * (2**k if c["mode"] == "space" else 1)
        nt = c["nt"] * (2**k if c["mode"] == "time" else 1)
        grid = make_uniform_grid(cfg.ell, nx)
        p, a = _field(c["p_expr"], grid, "p"), _field(c["a_expr"], grid, "a")
        u = solve_ibvp(cfg, p, a, nt)
        if c["mode"] == "time":
            ref = spectral_solve(eigendecompose(p, cfg.right_bc, nx - 1), a, cfg.alpha, 1, cfg).values[:, -1]
            rows["N"].append(nx)
            rows["M"].append(nt)
            rows["error"].append(float(np.abs(u.values[:, -1] - ref).max()))
        else:
            finals.append(u.values[:, -1])
            if k > 0:
                rows["N"].append(nx // 2)
                rows["M"].append(nt)
                rows["error"].append(float(np.abs(finals[-2] - finals[-1][::2]).max()))
    e = np.array(rows["error"])
    ratios = e[:-1] / e[1:]
    orders = np.log2(ratios)
    outputs = [
        write_csv(out / "convergence.csv", rows, dict(cfg.echo(), mode=c["mode"])),
        write_json(out / "summary.json", {"mode": c["mode"], "errors": e, "ratios": ratios, "observed_orders": orders}),
    ]
    for n, m, err in zip(rows["N"], rows["M"], e):
        print(f"N={n:5d} M={m:6d} error={err:.3e}")
    print("observed orders: " + ", ".join(f"{o:.2f}" for o in orders))
    return outputs


WORKFLOWS = {
    "ml": run_ml,
    "forward": run_forward,
    "kernel": run_kernel,
    "transmute": run_transmute,
    "uniqueness": run_uniqueness,
    "reconstruct": run_reconstruct,
    "convergence": run_convergence,
}


# ---------------------------------------------------------------- plumbing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfdlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tfdlab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name, schema in SCHEMAS.items():
        keys = ", ".join(schema)
        sp = sub.add_parser(name, help=f"run the {name} workflow", description=f"config keys: {keys}")
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--outdir", help="output directory (default: runs/<subcommand>)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers for independent scenarios")
        if name == "ml":
            sp.add_argument("--alpha", type=float, help="order, for a single evaluation")
            sp.add_argument("--z", type=float, help="argument, for a single evaluation")
    return parser


def _write_manifest(args, cfgfile, c, out: Path, outputs) -> Path:
    out = out.resolve()
    names = sorted({str(Path(p).resolve().relative_to(out)) for p in outputs})
    manifest = {
        "subcommand": args.command,
        "config": None if cfgfile is None else cfgfile.source,
        "config_sha256": None if cfgfile is None else cfgfile.sha256,
        "outdir": str(out),
        "seed": c.get("seed"),
        "version": __version__,
        "outputs": names,
    }
    return write_json(out / "manifest.json", manifest)


def _ml_scalar(args) -> int:
    from .mittag_leffler import ml_eval

    if args.alpha is None or args.z is None:
        raise ConfigError("ml needs both --alpha and --z for a single evaluation")
    value, info = ml_eval(args.alpha, args.z, full_output=True)
    print(format(value, ".16g"))
    if not info["accurate"]:
        print(f"warning: error estimate {info['error_estimate']:.2e} exceeds tolerance", file=sys.stderr)
    return 0


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ml" and args.config is None and (args.alpha is not None or args.z is not None):
            return _ml_scalar(args)
        cfgfile = load_config(args.config) if args.config else None
        schema = SCHEMAS[args.command]
        raw = dict(cfgfile.values) if cfgfile else {}
        if cfgfile and cfgfile.sections and args.command != "uniqueness":
            first = next(iter(cfgfile.sections))
            raise ConfigError(f"{cfgfile.source}: sections such as [{first}] are only valid for uniqueness")
        c = resolve(raw, schema, cfgfile, context=f" for {args.command}")
        if args.seed is not None:
            c["seed"] = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        out = Path(args.outdir or Path("runs") / args.command)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "uniqueness":
            outputs = run_uniqueness(c, out, cfgfile, args.jobs)
        else:
            outputs = WORKFLOWS[args.command](c, out)
        _write_manifest(args, cfgfile, c, out, outputs)
        return 0
    except (PreconditionViolation, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
