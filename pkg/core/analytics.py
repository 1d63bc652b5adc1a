"""
Report Analytics Module
Tabulates hunt runs and eigenvalue spectra, and renders human summaries of reports
"""

import pandas as pd
from typing import Dict, Iterable, List, Optional

from app.config import SPECTRUM


def cluster_eigenvalues(values: Iterable[float], rtol: float = SPECTRUM["cluster_rtol"]) -> pd.DataFrame:
    """Group sorted eigenvalues into clusters of nearly equal values"""
    series = pd.Series(sorted(float(v) for v in values), dtype=float)
    if series.empty:
        return pd.DataFrame(columns=["value", "multiplicity", "low", "high"])

    # A new cluster starts where the gap exceeds rtol relative to the previous value (floor 1)
    gaps = series.diff() > rtol * series.shift().abs().clip(lower=1.0)
    cluster_id = gaps.cumsum()
    grouped = series.groupby(cluster_id)
    clusters = pd.DataFrame({
        "value": grouped.mean(),
        "multiplicity": grouped.count(),
        "low": grouped.min(),
        "high": grouped.max(),
    }).reset_index(drop=True)
    return clusters


def create_hunt_dataframe(results: List) -> pd.DataFrame:
    """One row per hunt seed"""
    rows = []
    for result in results:
        rows.append({
            "seed": result.seed,
            "best_residual": result.best_residual,
            "sup_residual": result.sup_residual,
            "distance_to_harmonic": result.distance_to_harmonic,
            "iterations": len(result.residual_trace),
            "exploratory": result.exploratory,
        })
    return pd.DataFrame(rows, columns=[
        "seed", "best_residual", "sup_residual", "distance_to_harmonic", "iterations", "exploratory",
    ])


def calculate_hunt_metrics(hunt_df: pd.DataFrame, residual_threshold: float = 1e-6,
                           distance_threshold: float = 1e-2) -> Dict:
    """Summarize hunt runs: how many solved, and whether every solved run is harmonic"""
    if hunt_df.empty:
        return {}

    solved = hunt_df[hunt_df["best_residual"] < residual_threshold]
    violations = solved[solved["distance_to_harmonic"] >= distance_threshold]

    return {
        "runs": int(len(hunt_df)),
        "solved": int(len(solved)),
        "best_residual": float(hunt_df["best_residual"].min()),
        "worst_residual": float(hunt_df["best_residual"].max()),
        "median_distance": float(hunt_df["distance_to_harmonic"].median()),
        "max_solved_distance": float(solved["distance_to_harmonic"].max()) if not solved.empty else None,
        "theorem_consistent": violations.empty,
        "violating_seeds": [int(s) for s in violations["seed"]],
        "residual_threshold": residual_threshold,
        "distance_threshold": distance_threshold,
    }


def _status(ok: bool) -> str:
    return "✅" if ok else "❌"


def _family_lines(family: Dict) -> List[str]:
    kind = family.get("kind", "?")
    lines = [f"Family: {kind}"]
    if kind == "HarmonicPolynomialFamily":
        lines.append(f"- Basis size: {family.get('size', 0)} (expected {family.get('expected_size', '?')})")
        for element in family.get("basis", [])[:8]:
            lines.append(f"  {element}")
        if family.get("size", 0) > 8:
            lines.append(f"  ... {family['size'] - 8} more")
    elif kind == "SingularHarmonicFamily":
        lines.append(f"- ell = {family.get('ell')}: {family.get('description', '')}")
        lines.append(f"- Flags: {', '.join(family.get('flags', []))}")
    elif kind == "NoSolutions":
        lines.append(f"- Reason: {family.get('reason', '')}")
    return lines


def generate_report_summary(report: Dict) -> str:
    """Render a text summary of a run report"""
    if not report:
        return "Empty report"

    config = report.get("config", {})
    lines = [f"homsol {report.get('version', '?')} - {config.get('command', '?')}"]
    if config.get("op"):
        lines.append(f"Operator: {config['op']}  n={config.get('n')}  d={config.get('d')}")

    if "family" in report:
        lines += _family_lines(report["family"])

    if "spectrum" in report:
        spectrum = report["spectrum"]
        lines.append(f"Spectrum on {spectrum.get('grid')} grid (n={spectrum.get('n')})")
        for cluster in spectrum.get("clusters", []):
            close = cluster["relative_error"] < 0.02
            lines.append(
                f"{_status(close)} lambda ~ {cluster['value']:.4f} x{cluster['multiplicity']}"
                f" (l={cluster['degree']}, predicted {cluster['predicted']:.1f})"
            )

    if "hunt_results" in report:
        metrics = report.get("diagnostics", {}).get("hunt_metrics", {})
        lines.append(f"Hunt: {metrics.get('runs', 0)} runs, {metrics.get('solved', 0)} below residual threshold")
        if metrics:
            lines.append(f"- Best residual: {metrics['best_residual']:.3e}")
            lines.append(f"{_status(metrics['theorem_consistent'])} solved runs lie in the harmonic family")

    residuals = report.get("residuals", {})
    for name, entry in residuals.items():
        if isinstance(entry, dict) and "passed" in entry:
            lines.append(f"{_status(entry['passed'])} {name}: sup {entry.get('sup_residual', 0):.3e}")

    return "\n".join(lines)
