from __future__ import annotations

import math

import numpy as np

MEASURE_TOL = 1e-12
INVARIANCE_TOL = 1e-10
HULL_TOL = 1e-7
PARTITION_TOL = 1e-12
POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000
GELFAND_SLACK = 1e-9
SIMPLE_REL_TOL = 1e-10
KKT_TOL = 1e-8
KKT_FLAG_TOL = 1e-6
FACTORIZATION_TOL = 1e-12
NORM_IDENTITY_REL_TOL = 1e-10

NEG_INF = -math.inf


def safe_log(values) -> np.ndarray:
    """Elementwise ln with ln 0 = -inf and no warnings."""
    arr = np.asarray(values, dtype=float)
    out = np.full(arr.shape, NEG_INF)
    positive = arr > 0
    out[positive] = np.log(arr[positive])
    return out


def integrate_log(weights, log_values) -> float:
    """mu(f) for f possibly -inf, with 0 * (-inf) = 0 on mu-null sets."""
    w = np.asarray(weights, dtype=float)
    f = np.asarray(log_values, dtype=float)
    charged = w > 0
    if np.any(np.isneginf(f[charged])):
        return NEG_INF
    return float(np.dot(w[charged], f[charged]))
