"""
homsol command line
classify, verify, spectrum and hunt pipelines with JSON run reports
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.config import APP_INFO, HUNT, LOGGING, REPORT, SAMPLING, SPECTRUM, TOLERANCES, RunConfig
from app.parsing import parse_grid, parse_operator_spec
from core.analytics import calculate_hunt_metrics, create_hunt_dataframe, generate_report_summary
from core.classifier import HarmonicPolynomialFamily, SingularHarmonicFamily, classify
from core.errors import ClassificationError, HomsolError
from core.homogeneous import GridProfile, HomogeneousFunction, PolynomialProfile
from core.hunter import HuntConfig, hunt
from core.poly_core import Multinomial, parse_polynomial, poly_eval_batch
from core.spherical_spectrum import build_lb, profile_eigencheck, spectrum_summary
from core.verifier import (
    SampleSet,
    residual_sup,
    verify_cone_vertex,
    verify_eigen_relation,
    verify_homogeneity,
    verify_linearized,
    verify_scaling_identity,
)

logger = logging.getLogger("homsol")

COMMANDS = ("classify", "verify", "spectrum", "hunt")

# Profiles whose eigen-relation the spectrum command checks, by degree
SPECTRUM_PROFILES = {
    2: {1: "x1", 2: "x1^2 - x2^2", 3: "x1^3 - 3*x1*x2^2"},
    3: {1: "x3", 2: "x1^2 - x2^2", 3: "x1^3 - 3*x1*x2^2"},
}

SOLUTION_TOLERANCE = 1e-9


class UsageError(Exception):
    """Bad or missing command-line input"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("--op", help="operator spec: linear:A=[[..]], speclag:c=<float>, perturbed:eps=<float>")
    shared.add_argument("--n", type=int, help="dimension")
    shared.add_argument("--d", type=float, help="homogeneity degree")
    shared.add_argument("--tol", type=float, help="tolerance for |F(0)|")
    shared.add_argument("--ellipticity-floor", dest="ellipticity_floor", type=float)
    shared.add_argument("--integer-tol", dest="integer_tol", type=float)
    shared.add_argument("--seed", type=int, help="sample / optimizer seed")
    shared.add_argument("--samples", type=int, help="number of sample points")
    shared.add_argument("--out", help="report path")
    shared.add_argument("--config", help="JSON RunConfig (or an earlier report) to start from")

    parser = _Parser(prog="homsol", description="Homogeneous solutions of F(D^2 u) = 0")
    parser.add_argument("--version", action="version", version=f"{APP_INFO['name']} {APP_INFO['version']}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    commands.add_parser("classify", parents=[shared], help="predicted solution family")
    verify = commands.add_parser("verify", parents=[shared], help="check the family (or --poly) against F")
    verify.add_argument("--poly", help="candidate polynomial, e.g. 'x1^3 - 3*x1*x2^2'")
    spectrum = commands.add_parser("spectrum", parents=[shared], help="discrete Laplace-Beltrami spectrum")
    spectrum.add_argument("--grid", help="m (circle) or nlat x nlon (sphere)")
    spectrum.add_argument("--k", type=int, help="number of eigenvalues")
    hunter = commands.add_parser("hunt", parents=[shared], help="residual minimization over profiles")
    hunter.add_argument("--lmax", type=int)
    hunter.add_argument("--seeds", type=int)
    hunter.add_argument("--max-iters", dest="max_iters", type=int)
    hunter.add_argument("--restarts", type=int)
    return parser


def _require(config: RunConfig, *names: str) -> None:
    missing = [f"--{name}" for name in names if getattr(config, name) is None]
    if missing:
        raise UsageError(f"{config.command} needs {', '.join(missing)}")


def _classification(config: RunConfig):
    _require(config, "op", "n", "d")
    op = parse_operator_spec(config.op, config.n)
    report = classify(op, config.n, config.d, tol=config.tol, ellipticity_floor=config.ellipticity_floor,
                      integer_tol=config.integer_tol, seed=config.seed)
    return op, report


def run_classify(config: RunConfig) -> Dict:
    _, report = _classification(config)
    checks = report.diagnostics.get("family_checks", {})
    residuals = {}
    if checks.get("elements"):
        worst = max(e["sampled_residual"] for e in checks["elements"])
        residuals["linearized"] = {
            "sup_residual": worst,
            "tolerance": TOLERANCES["linearized_check"],
            "passed": checks["all_passed"],
        }
    return {"family": report.family.to_dict(), "diagnostics": report.to_dict()["diagnostics"], "residuals": residuals}


def run_verify(config: RunConfig) -> Dict:
    op, report = _classification(config)
    samples = SampleSet.annulus(config.n, config.samples or SAMPLING["count"], config.seed)
    residuals: Dict[str, Dict] = {}
    family = report.family
    if isinstance(family, (HarmonicPolynomialFamily, SingularHarmonicFamily)):
        names = family.basis if isinstance(family, HarmonicPolynomialFamily) else family.generators
        for index, (name, u) in enumerate(zip(names, family.elements())):
            if index >= REPORT["max_listed_elements"]:
                break
            entry = residual_sup(u, op, samples).to_dict(SOLUTION_TOLERANCE)
            entry["element"] = str(name)
            residuals[f"element[{index}]"] = entry
    else:
        zero = HomogeneousFunction.from_polynomial(Multinomial(config.n))
        residuals["zero_function"] = residual_sup(zero, op, samples).to_dict(SOLUTION_TOLERANCE)

    if config.poly:
        poly = parse_polynomial(config.poly, nvars=config.n)
        u = HomogeneousFunction(config.n, config.d, PolynomialProfile(poly))
        thetas = SampleSet.sphere(config.n, SAMPLING["classifier_points"] * 10, config.seed)
        residuals["candidate"] = residual_sup(u, op, samples).to_dict(SOLUTION_TOLERANCE)
        residuals["candidate"]["element"] = str(poly)
        residuals["candidate_homogeneity"] = verify_homogeneity(u, config.d, samples).to_dict(TOLERANCES["polynomial_identity"])
        if report.linearization is not None:
            residuals["candidate_linearized"] = verify_linearized(u, report.linearization, samples).to_dict(TOLERANCES["linearized_check"])
        residuals["candidate_eigen_relation"] = verify_eigen_relation(u, thetas).to_dict(1e-6)
        residuals["candidate_scaling"] = verify_scaling_identity(u, samples).to_dict(1e-8)
        cone = verify_cone_vertex(u, op, samples)
        residuals["candidate_cone_vertex"] = cone.to_dict()
    return {"family": family.to_dict(), "diagnostics": report.to_dict()["diagnostics"], "residuals": residuals}


def run_spectrum(config: RunConfig) -> Dict:
    _require(config, "n")
    grid = parse_grid(config.grid or SPECTRUM["default_grid"].get(config.n, ""), config.n)
    lb = build_lb(grid)
    summary = spectrum_summary(lb, config.k)
    constant = lb.apply(np.ones(grid.size))
    diagnostics = {
        "symmetry_error": lb.symmetry_error(),
        "constant_residual": float(np.max(np.abs(constant))),
        "largest_eigenvalue_of_L": -min(summary["eigenvalues"]),
    }
    residuals = {}
    for degree, text in SPECTRUM_PROFILES[grid.n].items():
        poly = parse_polynomial(text, nvars=grid.n)
        g = GridProfile.from_function(grid, lambda pts: poly_eval_batch(poly, pts))
        value = profile_eigencheck(g, degree, lb)
        residuals[f"eigencheck_degree_{degree}"] = {"profile": text, "relative_residual": value}
    return {"spectrum": summary, "diagnostics": diagnostics, "residuals": residuals}


def run_hunt(config: RunConfig) -> Dict:
    _require(config, "op", "n", "d")
    cfg = HuntConfig(
        op=config.op,
        n=config.n,
        d=config.d,
        lmax=config.lmax,
        seeds=config.seeds,
        rng_seed=config.seed,
        max_iters=config.max_iters,
        restarts=config.restarts,
        samples=config.samples or HUNT["samples"],
    )
    results = hunt(cfg)
    hunt_df = create_hunt_dataframe(results)
    metrics = calculate_hunt_metrics(hunt_df)
    best = min(results, key=lambda r: r.best_residual)
    return {
        "hunt_results": [r.to_dict() for r in results],
        "diagnostics": {
            "hunt_metrics": metrics,
            "exploratory": cfg.exploratory,
            "basis_size": len(best.best_coefficients),
            "note": "residual minimizers approaching the harmonic family is an empirical check, not a proven property",
        },
        "residuals": {
            "best": {"seed": best.seed, "rms": best.best_residual, "sup_residual": best.sup_residual},
        },
    }


PIPELINES: Dict[str, Callable[[RunConfig], Dict]] = {
    "classify": run_classify,
    "verify": run_verify,
    "spectrum": run_spectrum,
    "hunt": run_hunt,
}


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_report(report: Dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=REPORT["indent"], default=_json_default)


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """defaults <- --config file <- explicit flags"""
    config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {key: value for key, value in vars(args).items() if key != "config"}
    return config.merged(overrides)


def run(argv: Optional[List[str]] = None) -> int:
    """Execute one command; returns the process exit code"""
    logging.basicConfig(level=LOGGING["level"], format=LOGGING["format"])
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_run_config(args)
        report = PIPELINES[config.command](config)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except UsageError as e:
        print(f"❌ usage: {e}", file=sys.stderr)
        return 1
    except ClassificationError as e:
        print(f"❌ classification error: {e}", file=sys.stderr)
        return 2
    except (HomsolError, OSError, json.JSONDecodeError) as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return 1

    report["config"] = config.to_dict()
    report["version"] = APP_INFO["version"]
    out = config.out or REPORT["output"]
    try:
        write_report(report, out)
    except OSError as e:
        print(f"❌ cannot write report: {e}", file=sys.stderr)
        return 1
    print(generate_report_summary(report))
    print(f"✅ Report written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
