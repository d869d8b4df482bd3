"""Command-line front end: analytic risk queries, Monte-Carlo simulation,
experiment runs with CSV/SVG/manifest outputs, and re-plotting."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import yaml

from . import __version__
from .core import (
    CovarianceSpec,
    LinearESN,
    ProblemDims,
    RidgeIdentity,
    SecondOrderStats,
    materialize_covariance,
    memory_teacher,
)
from .experiments import config_from_mapping, run_experiment
from .readout import empirical_risk
from .reservoir import esn_second_order_stats, generate_reservoir
from .tables import read_csv, write_csv
from .theory import (
    LeakKernel,
    TheoryError,
    esn_spectral_risk,
    risk_from_stats,
    solve_fixed_point,
)

_KIND_TO_EXPERIMENT = {
    "double-descent": "double_descent",
    "memory-grid": "memory_grid",
    "lambda-sweep": "lambda_sweep",
}


def _add_model_flags(parser: argparse.ArgumentParser, simulate: bool) -> None:
    fmap = parser.add_mutually_exclusive_group(required=True)
    fmap.add_argument("--ridge", action="store_true", help="raw-input features (z = u)")
    fmap.add_argument("--esn", action="store_true", help="linear echo-state features")
    cov = parser.add_mutually_exclusive_group()
    cov.add_argument("--isotropic", action="store_true", help="identity input covariance (default)")
    cov.add_argument("--ar1", type=float, metavar="C", help="AR(1) Toeplitz covariance c^|i-j|")
    cov.add_argument("--power-law", type=float, metavar="A", dest="power_law",
                     help="diagonal covariance with eigenvalues i^-A")
    parser.add_argument("-T", type=int, required=True, help="input signal length")
    parser.add_argument("-N", type=int, required=True, help="training sample count")
    parser.add_argument("-n", type=int, default=None,
                        help="feature dimension (reservoir size; simulation only)")
    parser.add_argument("--sigma2", type=float, default=1.0, help="label noise variance")
    parser.add_argument("--theta-norm", type=float, default=1.0,
                        help="Euclidean norm of the teacher vector (0 = null teacher)")
    parser.add_argument("--rho", type=float, default=0.5, help="teacher memory decay in (0, 1]")
    parser.add_argument("--phi", type=float, default=None, help="ESN leak factor in (0, 1]")
    parser.add_argument("--kernel-power", type=float, default=2.0,
                        help="leak-kernel exponent scale (default 2)")
    parser.add_argument("--kernel-growing", action="store_true",
                        help="flip the leak-kernel exponent sign (grows into the past)")
    parser.add_argument("--lambda", type=float, required=True, dest="lam",
                        help="ridge regularization (> 0)")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    if simulate:
        parser.add_argument("--M", type=int, default=2000, help="test pairs per trial")
        parser.add_argument("--trials", type=int, default=20, help="independent train/test trials")
        parser.add_argument("--resample-reservoir", action="store_true",
                            help="draw a fresh reservoir every trial")


def _validate_model_args(args) -> None:
    if args.T < 1 or args.N < 1:
        raise ValueError("T and N must be >= 1")
    if args.lam <= 0:
        raise ValueError(f"--lambda must be positive, got {args.lam}")
    if args.ridge:
        if args.phi is not None:
            raise ValueError("--phi only applies to --esn")
        if args.n is not None and args.n != args.T:
            raise ValueError("raw-input features force n == T")
    if args.esn and args.phi is None:
        args.phi = 0.9


def _covariance(args, T: int) -> CovarianceSpec:
    if args.ar1 is not None:
        return CovarianceSpec.ar1(T, args.ar1)
    if args.power_law is not None:
        return CovarianceSpec.power_law(T, args.power_law)
    return CovarianceSpec.isotropic(T)


def _kernel(args) -> LeakKernel:
    return LeakKernel(power=args.kernel_power, decaying=not args.kernel_growing)


def _analytic(args) -> dict:
    teacher = memory_teacher(args.T, args.rho, args.sigma2, norm=args.theta_norm)
    sigma_u = materialize_covariance(_covariance(args, args.T))
    if args.ridge:
        fp = solve_fixed_point(sigma_u, args.N, args.lam)
        risk = risk_from_stats(
            SecondOrderStats.ridge(sigma_u), teacher.theta_star, args.sigma2, fp
        )
        alpha, delta = fp.alpha, fp.delta
    else:
        risk, spectral = esn_spectral_risk(
            sigma_u, teacher.theta_star, args.sigma2, args.phi, args.lam, args.N,
            _kernel(args),
        )
        alpha, delta = spectral.alpha, spectral.delta
    return {
        "model": "ridge" if args.ridge else "esn",
        "bias2": risk.bias2,
        "variance": risk.variance,
        "noise": risk.noise,
        "total": risk.total,
        "alpha": alpha,
        "delta": delta,
    }


def cmd_theory(args) -> int:
    out = _analytic(args)
    print(f"model={out['model']} T={args.T} N={args.N} lambda={args.lam:g}"
          + (f" phi={args.phi:g}" if args.esn else ""))
    for key in ("bias2", "variance", "noise", "total", "alpha", "delta"):
        print(f"{key}={out[key]:.10g}")
    if args.csv:
        cols = ["model", "T", "N", "lam", "phi", "bias2", "variance", "noise",
                "total", "alpha", "delta"]
        values = dict(out, T=args.T, N=args.N, lam=args.lam,
                      phi=args.phi if args.esn else None)
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            cells = []
            for c in cols:
                v = values[c]
                if c == "model":
                    cells.append(v)
                elif c in ("T", "N"):
                    cells.append("%d" % v)
                else:
                    cells.append("nan" if v is None else "%.17g" % v)
            fh.write(",".join(cells) + "\n")
    return 0


def cmd_simulate(args) -> int:
    teacher = memory_teacher(args.T, args.rho, args.sigma2, norm=args.theta_norm)
    cov = _covariance(args, args.T)
    if args.ridge:
        dims = ProblemDims.ridge(args.T, args.N)
        fmap: RidgeIdentity | LinearESN = RidgeIdentity()
        analytic = _analytic(args)
    else:
        if args.n is None:
            raise ValueError("--esn simulation needs a reservoir dimension -n")
        dims = ProblemDims.esn(args.T, args.n, args.N)
        fmap = LinearESN(n=args.n, phi=args.phi,
                         resample_reservoir=args.resample_reservoir)
        # analytic reference uses the same fixed reservoir realization
        res = generate_reservoir(args.n, args.phi, fmap.weights, args.seed)
        stats = esn_second_order_stats(res, materialize_covariance(cov))
        fp = solve_fixed_point(stats.sigma_z, args.N, args.lam)
        risk = risk_from_stats(stats, teacher.theta_star, args.sigma2, fp)
        analytic = {"total": risk.total, "alpha": fp.alpha, "delta": fp.delta}
    mc = empirical_risk(dims, cov, teacher, fmap, args.lam,
                        M=args.M, trials=args.trials, seed=args.seed)
    gap = (mc.estimate - analytic["total"]) / analytic["total"] if analytic["total"] else float("nan")
    print(f"model={'ridge' if args.ridge else 'esn'} T={args.T} N={args.N} "
          f"lambda={args.lam:g} seed={args.seed}")
    print(f"estimate={mc.estimate:.10g}")
    print(f"stderr={mc.stderr:.10g}")
    print(f"trials={mc.trials} M={mc.M}")
    print(f"analytic_total={analytic['total']:.10g}")
    print(f"relative_gap={gap:.6g}")
    return 0


def _config_digest(mapping: dict) -> str:
    canonical = json.dumps(mapping, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def cmd_experiment(args) -> int:
    experiment = _KIND_TO_EXPERIMENT[args.kind]
    mapping: dict = {}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a mapping")
        if loaded.get("experiment", experiment) != experiment:
            raise ValueError(
                f"config is for {loaded['experiment']!r}, requested {experiment!r}"
            )
        mapping = loaded
    mapping["experiment"] = experiment
    if args.seed is not None:
        mapping["seed"] = args.seed
    cfg = config_from_mapping(mapping)

    outdir = Path(args.out if args.out is not None else Path("results") / args.kind)
    outdir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()

    result = run_experiment(cfg)

    csv_path = outdir / "results.csv"
    write_csv(csv_path, result.experiment, result.rows, cfg.monte_carlo.enabled)

    from . import plotting  # deferred: pulls in matplotlib

    svg_path = outdir / "plot.svg"
    records = [asdict(r) for r in result.rows]
    plotting.save_svg(
        plotting.render(result.experiment, records, result.annotations), svg_path
    )

    manifest = {
        "tool": "esn-rmt",
        "version": __version__,
        "experiment": result.experiment,
        "seed": cfg.seed,
        "config_digest": _config_digest(result.config),
        "config": result.config,
        "annotations": result.annotations,
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "outputs": ["results.csv", "plot.svg", "manifest.json"],
    }
    manifest_path = outdir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    print(f"wrote {manifest_path}")
    for key, value in sorted(result.annotations.items()):
        print(f"{key}={value}")
    if result.annotations.get("note"):
        print("warning: " + result.annotations["note"], file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    csv_path = Path(args.results)
    experiment, records = read_csv(csv_path)
    annotations = {}
    manifest_path = csv_path.parent / "manifest.json"
    if manifest_path.exists():
        with open(manifest_path, encoding="utf-8") as fh:
            annotations = json.load(fh).get("annotations", {})

    from . import plotting

    out = Path(args.out) if args.out is not None else csv_path.parent / "plot.svg"
    plotting.save_svg(plotting.render(experiment, records, annotations), out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esn-rmt",
        description="Asymptotic risk of linear ESN / ridge students, with "
                    "Monte-Carlo cross-checks and experiment sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"esn-rmt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_theory = sub.add_parser("theory", help="print the analytic risk decomposition")
    _add_model_flags(p_theory, simulate=False)
    p_theory.add_argument("--csv", type=str, default=None, help="also write a one-row CSV")
    p_theory.set_defaults(func=cmd_theory)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo risk estimate vs analytic prediction")
    _add_model_flags(p_sim, simulate=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_exp = sub.add_parser("experiment", help="run an experiment family end to end")
    p_exp.add_argument("kind", choices=sorted(_KIND_TO_EXPERIMENT))
    p_exp.add_argument("--config", type=str, default=None, help="YAML config file")
    p_exp.add_argument("--out", type=str, default=None, help="output directory")
    p_exp.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_exp.set_defaults(func=cmd_experiment)

    p_plot = sub.add_parser("plot", help="re-render the SVG figure from a results.csv")
    p_plot.add_argument("results", type=str)
    p_plot.add_argument("--out", type=str, default=None, help="output SVG path")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "ridge"):
            _validate_model_args(args)
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TheoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
