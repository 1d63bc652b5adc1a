"""
Configuration and constants for homsol
Tolerances, finite-difference steps, sampling and solver defaults, run configuration
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Optional

# Load environment variables
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass  # dotenv is optional

APP_INFO = {
    "name": "homsol",
    "version": "0.1.0",
}

# Numerical tolerances
TOLERANCES = {
    "f_at_zero": 1e-12,
    "ellipticity_floor": 0.0,
    "integer": 1e-9,
    "richardson": 1e-5,
    "linearized_check": 1e-9,
    "polynomial_identity": 1e-10,
    "unit_vector": 1e-12,
    "origin": 1e-14,
    "spd_ratio": 1e-12,
    "symmetry": 1e-12,
}

# Central-difference steps
FD_STEPS = {
    "hessian": 1e-4,
    "gradient": 1e-5,
    "operator_gradient": 1e-4,
    "linearization": (1e-3, 1e-4),
}

# Cyclic Jacobi eigensolver
EIGEN = {
    "max_sweeps": 50,
    "off_diagonal_rtol": 1e-12,
}

# Sample sets on the annulus 0.5 <= |x| <= 2
SAMPLING = {
    "count": 1000,
    "seed": 42,
    "annulus": (0.5, 2.0),
    "radii": (0.5, 1.0, 2.0),
    "scales": (0.5, 2.0),
    "classifier_points": 20,
    "singular_points": 100,
    "origin_margin": 1e-6,
}

# Discrete Laplace-Beltrami operator
SPECTRUM = {
    "min_resolution": 8,
    "dense_cap": 5000,
    "default_grid": {2: "64", 3: "48x96"},
    "k": 20,
    "cluster_rtol": 0.1,
}

# Residual hunter
HUNT = {
    "samples": 500,
    "lmax": 4,
    "seeds": 10,
    "rng_seed": 0,
    "max_iters": 1500,
    "restarts": 1,
    "simplex_step": 0.05,
    "tol_residual": 1e-12,
    "tol_step": 1e-14,
}

REPORT = {
    "output": "homsol_report.json",
    "indent": 2,
    "max_listed_elements": 64,
}

LOGGING = {
    "level": os.getenv("HOMSOL_LOG_LEVEL", "WARNING").upper(),
    "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
}


def get_thread_count() -> int:
    """Worker cap from HOMSOL_THREADS (0 or unset means one worker per CPU)"""
    raw = os.getenv("HOMSOL_THREADS", "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested


@dataclass
class RunConfig:
    """Everything needed to reproduce one CLI run"""

    command: str = "classify"
    op: Optional[str] = None
    n: Optional[int] = None
    d: Optional[float] = None
    tol: float = TOLERANCES["f_at_zero"]
    ellipticity_floor: float = TOLERANCES["ellipticity_floor"]
    integer_tol: float = TOLERANCES["integer"]
    seed: int = SAMPLING["seed"]
    samples: Optional[int] = None
    grid: Optional[str] = None
    k: int = SPECTRUM["k"]
    lmax: int = HUNT["lmax"]
    seeds: int = HUNT["seeds"]
    max_iters: int = HUNT["max_iters"]
    restarts: int = HUNT["restarts"]
    poly: Optional[str] = None
    out: str = REPORT["output"]
    extra: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "RunConfig":
        """Build from a RunConfig mapping or from a report that embeds one"""
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        known = {f.name for f in fields(cls)}
        return cls(**{key: value for key, value in data.items() if key in known})

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def merged(self, overrides: Dict) -> "RunConfig":
        """Copy with every non-None override applied"""
        values = self.to_dict()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return RunConfig.from_dict(values)
