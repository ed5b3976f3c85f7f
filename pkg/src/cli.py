import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import psutil

from config import load_scenario
from core.material import DamageLaw, classify_hardening
from core.solver import Algorithm, run_quasi_static
from errors import CavingError, EvolutionError
from scenarios import default_registry
from scenarios.compression import localization_ratio
from utils.export import export_history, export_steps, export_sweep, export_vtk
from utils.gradcheck import GRADIENT_TOLERANCE, HESSIAN_TOLERANCE, run_gradcheck
from utils.logger import setup_logger

ERROR_PREFIX = "caving-error:"


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caving", description="Shear-compression gradient damage solver")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and export fields and error history")
    run.add_argument("--config", required=True, help="scenario file or preset name")
    run.add_argument("--algorithm", choices=[a.value for a in Algorithm])
    run.add_argument("--cl", type=float, help="relaxation constant of the fast algorithm")
    run.add_argument("--output", help="output directory (overrides scenario.output_dir)")

    hardening = sub.add_parser("hardening", help="classify hardening/softening of a damage law")
    hardening.add_argument("--model", type=int, required=True, choices=[1, 2, 3, 4])
    hardening.add_argument("--p", type=float, default=4.0)
    hardening.add_argument("--k", type=float, default=2.0)
    hardening.add_argument("--samples", type=int, default=1000)

    gradcheck = sub.add_parser("gradcheck", help="finite-difference check of gradient and Hessian")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--instances", type=int, default=20)

    compare = sub.add_parser("compare", help="run the alternate and fast algorithms on one scenario")
    compare.add_argument("--config", required=True, help="scenario file or preset name")
    compare.add_argument("--cl", type=float)

    sweep = sub.add_parser("sweep", help="max alpha per step for several dissipation constants w11")
    sweep.add_argument("--config", required=True, help="scenario file or preset name")
    sweep.add_argument("--w11", required=True, type=_float_list, help="comma-separated values, e.g. 1e2,1e3,1e4")
    sweep.add_argument("--algorithm", choices=[a.value for a in Algorithm])
    sweep.add_argument("--cl", type=float)
    sweep.add_argument("--output", help="output directory (overrides scenario.output_dir)")
    return parser


def _scenario(args):
    scenario = load_scenario(args.config)
    overrides = {}
    if getattr(args, "algorithm", None):
        overrides["algorithm"] = Algorithm(args.algorithm)
    if args.cl is not None:
        overrides["c_l"] = args.cl
    if overrides:
        scenario = dataclasses.replace(scenario, solver=dataclasses.replace(scenario.solver, **overrides))
    return scenario


def _memory_mb() -> float:
    return psutil.Process().memory_info().rss / 2**20


def _export_histories(history, out: Path, timing: bool) -> None:
    export_history(history, out / "history.csv", timing=timing)
    export_steps(history, out / "steps.csv", timing=timing)


def cmd_run(args, logger: logging.Logger) -> int:
    scenario = _scenario(args)
    logger.info(f"📦 Loaded scenario {scenario.scenario.name} ({scenario.scenario.kind}, M={scenario.scenario.steps})")
    program = default_registry().build(scenario)
    out = Path(args.output or scenario.scenario.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    def on_step(state, record):
        if scenario.output.vtk:
            export_vtk(state.mesh, state, out / f"state_{state.step:04d}.vtk")

    cfg = scenario.solver
    logger.info(f"🚀 Running {cfg.algorithm.value} algorithm (c_l={cfg.c_l:g}, tol_outer={cfg.tol_outer:g})")
    try:
        states, history = run_quasi_static(program, cfg, on_step)
    except EvolutionError as err:
        if scenario.output.history and len(err.history):
            _export_histories(err.history, out, scenario.output.timing)
        raise
    if scenario.output.history:
        _export_histories(history, out, scenario.output.timing)

    final = states[-1]
    logger.info(f"✅ Done: {len(states)} step(s), {history.total_outer} outer iteration(s), "
                f"{history.total_blends} blend(s), max alpha {final.max_alpha:.4f}, "
                f"{sum(r.kkt_violations for r in history)} KKT violation(s), "
                f"{sum(r.damage_failures for r in history)} damage failure(s), "
                f"wall time {history.wall_time:.2f} s, memory {_memory_mb():.1f} MiB")
    if scenario.scenario.kind == "compression" and scenario.seed.enabled:
        s = scenario.seed
        ratio = localization_ratio(final.mesh, final.alpha, program.params.law, (s.x0, s.y0), (s.x1, s.y1),
                                   4.0 * program.params.ell)
        print(f"localization ratio: {ratio:.6f}")
    if not history.converged:
        logger.warning("⚠️ Some steps did not reach tol_outer; see steps.csv")
    return 0


def cmd_hardening(args, logger: logging.Logger) -> int:
    report = classify_hardening(DamageLaw(args.model, 1.0, p=args.p, k=args.k), samples=args.samples)
    for line in report.describe():
        print(line)
    return 0


def cmd_gradcheck(args, logger: logging.Logger) -> int:
    report = run_gradcheck(seed=args.seed, instances=args.instances)
    print(f"gradient max relative error: {report.gradient_error:.3e} (tolerance {GRADIENT_TOLERANCE:g})")
    print(f"hessian max relative error: {report.hessian_error:.3e} (tolerance {HESSIAN_TOLERANCE:g})")
    if not report.passed:
        print(f"{ERROR_PREFIX} finite-difference check failed", file=sys.stderr)
        return 1
    return 0


def cmd_compare(args, logger: logging.Logger) -> int:
    base = _scenario(args)
    registry = default_registry()
    results = {}
    for algorithm in (Algorithm.ALTERNATE, Algorithm.FAST):
        scenario = dataclasses.replace(base, solver=dataclasses.replace(base.solver, algorithm=algorithm))
        logger.info(f"🚀 Running {algorithm.value} on {scenario.scenario.name}")
        states, history = run_quasi_static(registry.build(scenario), scenario.solver)
        results[algorithm] = (states, history)

    for algorithm, (states, history) in results.items():
        print(f"{algorithm.value}: outer iterations {history.total_outer}, blends {history.total_blends}, "
              f"max alpha {states[-1].max_alpha:.6f}, wall time {history.wall_time:.2f} s")
    alternate, fast = results[Algorithm.ALTERNATE][1], results[Algorithm.FAST][1]
    print(f"iteration ratio (alternate/fast): {alternate.total_outer / max(fast.total_outer, 1):.3f}")
    print(f"speedup (wall time): {alternate.wall_time / max(fast.wall_time, 1e-12):.3f}")
    return 0


def cmd_sweep(args, logger: logging.Logger) -> int:
    base = _scenario(args)
    registry = default_registry()
    curves = {}
    for w11 in args.w11:
        scenario = dataclasses.replace(base, material=dataclasses.replace(base.material, w11=w11)).validate()
        logger.info(f"🚀 Running {scenario.scenario.name} with w11={w11:g}")
        states, _ = run_quasi_static(registry.build(scenario), scenario.solver)
        curves[w11] = [s.max_alpha for s in states]
        print(f"w11={w11:g}: max alpha " + " ".join(f"{a:.4f}" for a in curves[w11]))
    path = export_sweep(curves, Path(args.output or base.scenario.output_dir) / "sweep.csv")
    logger.info(f"✅ Wrote {path}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "hardening": cmd_hardening,
    "gradcheck": cmd_gradcheck,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logger = setup_logger(args.log_level)
    try:
        return COMMANDS[args.command](args, logger)
    except (CavingError, OSError) as err:
        logger.error(f"❌ {args.command} failed: {err}")
        print(f"{ERROR_PREFIX} {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
