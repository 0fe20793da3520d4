"""Kernel backend selection and operator packing.

Resolvents are flattened into ``(kind, params, k)`` triples so the
iteration loops can run without touching Python objects.  The compiled
extension is used when it imports; otherwise the numpy fallback runs the
same loops.  Setting ``RESAVG_BACKEND=python`` selects the fallback at
import even when the extension is built.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _pykernels, catalog
from .operators import AffineMonotone, MonotoneOperator, Subdifferential

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

KIND_AFFINE = 0
KIND_SOFT = 1
KIND_BOX = 2
KIND_BALL = 3
KIND_HALFSPACE = 4
KIND_AFFINE_SET = 5
KIND_POINT = 6

MODE_AVERAGE = 0
MODE_COMPOSE = 1

STATUS_CONVERGED = 0
STATUS_MAX_ITERS = 1
STATUS_DIVERGED = 2

_BACKENDS = {"python": _pykernels}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active = _BACKENDS.get(os.environ.get("RESAVG_BACKEND", "compiled"), _pykernels)


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def set_backend(name: str) -> None:
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}") from None


@dataclass(frozen=True, eq=False)
class PackedResolvent:
    kind: int
    params: np.ndarray
    dim: int
    k: int = 0


def pack_resolvent(A: MonotoneOperator, gamma: float = 1.0) -> PackedResolvent:
    """Flatten ``J_{gamma A}`` into a kernel-friendly parameter vector."""
    if not isinstance(A, (AffineMonotone, Subdifferential)):
        raise TypeError(f"cannot pack {type(A).__name__}")
    n = A.dim
    if isinstance(A, AffineMonotone):
        R = np.linalg.inv(np.eye(n) + gamma * A.M)
        return PackedResolvent(KIND_AFFINE, np.concatenate([R.ravel(), -gamma * (R @ A.b)]), n)
    f = A.f
    g = gamma / f.divisor
    if isinstance(f, catalog.Quadratic):
        R = np.linalg.inv(np.eye(n) + g * f.Q)
        return PackedResolvent(KIND_AFFINE, np.concatenate([R.ravel(), -g * (R @ f.q)]), n)
    if isinstance(f, catalog.AbsSum):
        return PackedResolvent(KIND_SOFT, g * f.weights, n)
    if isinstance(f, catalog.IndicatorBox):
        return PackedResolvent(KIND_BOX, np.concatenate([f.lo, f.hi]), n)
    if isinstance(f, catalog.IndicatorBall):
        return PackedResolvent(KIND_BALL, np.append(f.center, f.radius), n)
    if isinstance(f, catalog.IndicatorHalfspace):
        a = f.normal
        return PackedResolvent(KIND_HALFSPACE, np.concatenate([a, [f.offset, a @ a]]), n)
    if isinstance(f, catalog.IndicatorAffine):
        U = f.basis
        return PackedResolvent(KIND_AFFINE_SET, np.concatenate([f.anchor, U.ravel()]), n, U.shape[1])
    if isinstance(f, catalog.IndicatorPoint):
        return PackedResolvent(KIND_POINT, f.p.copy(), n)
    raise TypeError(f"unknown catalog entry {type(f).__name__}")


def apply_resolvent(P: PackedResolvent, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=float)
    return _active.apply_resolvent(P.kind, np.ascontiguousarray(P.params), P.k, x)


def iterate(mode: int, first: PackedResolvent, second: PackedResolvent, lambda1: float,
            x0: np.ndarray, step_tol: float, max_iters: int, divergence_norm: float, thin: int):
    """Run one of the fixed-point loops.

    ``MODE_AVERAGE``: ``x <- l1 first(x) + (1 - l1) second(x)``.
    ``MODE_COMPOSE``: ``x <- first(second(x))``, also recording ``second(x)``.

    Returns ``(final, final_aux, steps, stored_index, stored_x, stored_aux,
    status, iterations)``.
    """
    return _active.iterate(
        mode, first.kind, np.ascontiguousarray(first.params), first.k,
        second.kind, np.ascontiguousarray(second.params), second.k,
        float(lambda1), np.array(x0, dtype=float), float(step_tol), int(max_iters),
        float(divergence_norm), int(thin),
    )
