"""Kernel selection: compiled extension when importable, numpy/Python otherwise.

Set ``POSAUCTION_PURE=1`` in the environment to force the pure path (used by
the benchmark to compare both implementations).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure
from .quadrature import QuadratureConfig

if os.environ.get("POSAUCTION_PURE"):
    _fast = None
else:
    try:
        from . import _fast  # type: ignore[attr-defined]
    except ImportError:
        _fast = None

USING_COMPILED = _fast is not None

# Families the compiled quadrature understands; anything else (empirical
# tables, user-defined distributions) takes the generic Python path.
_FAMILY_CODES = {"uniform": 0, "power": 1, "truncexp": 2}


def _coded_family(dist):
    if _fast is None:
        return None
    fam = getattr(dist, "_family", None)
    if fam is None:
        return None
    name, params = fam
    code = _FAMILY_CODES.get(name)
    if code is None:
        return None
    return code, np.asarray(params, dtype=np.float64)


def greedy_assign_batch(bids: np.ndarray) -> np.ndarray:
    bids = np.ascontiguousarray(bids, dtype=np.float64)
    if _fast is not None:
        return _fast.greedy_assign_batch(bids)
    return _pure.greedy_assign_batch(bids)


def vcg_truthful_revenue_batch(values: np.ndarray, betas: np.ndarray) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.float64)
    betas = np.ascontiguousarray(betas, dtype=np.float64)
    if _fast is not None:
        return _fast.vcg_truthful_revenue_batch(values, betas)
    return _pure.vcg_truthful_revenue_batch(values, betas)


def z_quadrature(dist, m: int, v: float, Fv: float, cfg: QuadratureConfig) -> float:
    coded = _coded_family(dist)
    if coded is not None:
        code, params = coded
        return _fast.z_raw(code, params, int(m), float(v), float(Fv),
                           cfg.abs_tol, cfg.rel_tol, cfg.max_depth)
    return _pure.z_raw(dist, int(m), float(v), float(Fv), cfg)


def bstar_quadrature(dist, exps_f, exps_g, coeffs, v: float, Fv: float,
                     cfg: QuadratureConfig) -> float:
    coded = _coded_family(dist)
    if coded is not None:
        code, params = coded
        return _fast.bstar_raw(
            code,
            params,
            np.asarray(exps_f, dtype=np.int64),
            np.asarray(exps_g, dtype=np.int64),
            np.asarray(coeffs, dtype=np.float64),
            float(v),
            float(Fv),
            cfg.abs_tol,
            cfg.rel_tol,
            cfg.max_depth,
        )
    return _pure.bstar_raw(dist, exps_f, exps_g, coeffs, float(v), float(Fv), cfg)
