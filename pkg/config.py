"""Configuration settings for the dualgraph toolkit."""
import math
import os
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()

# Logging
LOG_CONFIG: Dict[str, Any] = {
    "name": "dualgraph",
    "level": os.getenv("DUALGRAPH_LOG_LEVEL", "INFO"),
    "file": os.getenv("DUALGRAPH_LOG_FILE") or None,
    "format": "[%(asctime)s] %(levelname)s [%(name)s.%(funcName)s:%(lineno)d] %(message)s",
}

# Secular root search (spectrum, window spectra, matching oracle)
SOLVER_DEFAULTS: Dict[str, Any] = {
    "e_min": 0.0,
    "e_max": 25.0,
    "grid_step": 0.05,
    # half-width of the exclusion window, in k units
    "excl_window": 1e-4,
    # eigenvalues of M(E*) below this count towards the multiplicity
    "mult_tol": 1e-6,
    # bisection stops at |dE| < root_tol * max(1, |E|)
    "root_tol": 1e-12,
    # relative singular value threshold for the matching oracle
    "null_tol": 1e-7,
    "max_bisection_steps": 200,
}

# Exceptional point scan
EXCEPTIONAL_CONFIG: Dict[str, Any] = {
    # grid step per edge is pi^2 / (divisor * length^2)
    "step_divisor": 8.0,
    "xtol": 1e-13,
}

# Finite-difference oracle
FD_DEFAULTS: Dict[str, Any] = {
    "mesh": 0.01,
    "n_eigs": 8,
    "richardson": True,
    # mesh must resolve the shortest edge: h < l0 / ratio
    "min_points_ratio": 8,
    # extra eigenvalues requested beyond n_eigs so the list can end at a spectral gap
    "margin": 4,
    # neighbours closer than this (relative) belong to one cluster and are never split
    "cluster_rtol": 1e-3,
    "lobpcg_tol": 1e-9,
    "lobpcg_maxiter": 1000,
}

# Band structure
BAND_DEFAULTS: Dict[str, Any] = {
    "bloch_grid": 64,
    "q_bound": 12,
    "edge_tol": 1e-8,
    "e_step": 0.01,
}

# Oracle comparison
COMPARE_DEFAULTS: Dict[str, Any] = {
    "tol": 1e-6,
}

# Output rendering
OUTPUT_CONFIG: Dict[str, Any] = {
    "formats": ("json", "csv"),
    "default_format": "json",
    "separator": ",",
    "comment": "#",
    "float_format": "%.12g",
    "sample_density": 50,
}

# Exit codes
EXIT_CODES: Dict[str, int] = {
    "ok": 0,
    "oracle_failure": 1,
    "config_error": 2,
    "numerical_error": 3,
}

# Model presets selectable by name from the CLI
MODEL_PRESETS: Dict[str, Dict[str, Any]] = {
    "square": {
        "family": "rect",
        "l1": 1.0,
        "l2": 1.0,
        "coupling": 0.0,
        "kind": "delta",
        "flux": 0.0,
    },
    "rect": {
        "family": "rect",
        "l1": 1.0,
        "l2": 0.5,
        "coupling": 0.0,
        "kind": "delta",
        "flux": 0.0,
    },
    "magnetic-rect": {
        "family": "rect",
        "l1": 1.0,
        "l2": 1.0,
        "coupling": 0.0,
        "kind": "delta",
        "flux": math.pi,
    },
    "comb": {
        "family": "comb",
        "spacing": 1.0,
        "tooth": 1.0,
        "omega": 0.0,
        "coupling": 0.0,
        "kind": "delta",
        "rule": "constant",
    },
    "maryland": {
        "family": "comb",
        "spacing": 1.0,
        "tooth": 1.0,
        "omega": 0.0,
        "coupling": 0.0,
        "kind": "delta",
        "rule": "maryland",
    },
}

# Default finite windows (inclusive index ranges)
WINDOW_DEFAULTS: Dict[str, Any] = {
    "rect": ((0, 4), (0, 4)),
    "comb": (-5, 5),
}
