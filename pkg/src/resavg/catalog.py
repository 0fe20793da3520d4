"""Closed-form catalog of proper lsc convex functions on R^n.

Every function carries a positive ``divisor`` so that ``f`` stands for
``f_raw / divisor``.  Scaling by the divisor only changes the effective
prox step (``gamma / divisor``) and the conjugate argument, so a single
code path handles both ``f`` and ``f / lambda``.

Values are plain floats; ``math.inf`` encodes the +infinity of indicator
functions and of conjugates outside their domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

# membership tolerance for indicator evaluation
MEMBERSHIP_TOL = 1e-9
# domain tolerance for support functions / conjugates, scaled by 1 + |phi|
CONJUGATE_DOMAIN_TOL = 1e-9
ORTHONORMAL_TOL = 1e-12
PSD_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when points of different dimensions are mixed."""


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally checking its size."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError("points must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must have finite coordinates")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"dimension mismatch: expected {dim}, got {arr.size}")
    return arr


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_divisor(divisor: float) -> None:
    if not (divisor > 0 and math.isfinite(divisor)):
        raise ValueError(f"divisor must be positive and finite, got {divisor}")


@dataclass(frozen=True, eq=False)
class Quadratic:
    """``0.5 <x, Qx> + <q, x> + c`` with ``Q`` symmetric positive semidefinite."""

    Q: np.ndarray
    q: np.ndarray
    c: float = 0.0
    divisor: float = 1.0

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        q = as_point(self.q)
        if Q.shape != (q.size, q.size):
            raise DimensionError(f"Q has shape {Q.shape}, q has size {q.size}")
        if not np.allclose(Q, Q.T, atol=1e-12, rtol=0):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -PSD_TOL:
            raise ValueError("Q must be positive semidefinite")
        _check_divisor(self.divisor)
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "q", _frozen(q))
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return self.q.size


@dataclass(frozen=True, eq=False)
class AbsSum:
    """Weighted l1 norm ``sum_i w_i |x_i|``."""

    weights: np.ndarray
    divisor: float = 1.0

    def __post_init__(self):
        w = as_point(self.weights)
        if np.any(w <= 0):
            raise ValueError("AbsSum weights must be positive")
        _check_divisor(self.divisor)
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self) -> int:
        return self.weights.size


@dataclass(frozen=True, eq=False)
class IndicatorBox:
    """Indicator of ``{x : lo <= x <= hi}``; infinite bounds are allowed."""

    lo: np.ndarray
    hi: np.ndarray
    divisor: float = 1.0

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("lo and hi must be vectors of equal size")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError("box requires lo <= hi")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("box must be nonempty")
        _check_divisor(self.divisor)
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lo.size


@dataclass(frozen=True, eq=False)
class IndicatorBall:
    """Indicator of the closed Euclidean ball ``B(center, radius)``."""

    center: np.ndarray
    radius: float
    divisor: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("ball radius must be positive")
        _check_divisor(self.divisor)
        object.__setattr__(self, "center", _frozen(as_point(self.center)))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True, eq=False)
class IndicatorHalfspace:
    """Indicator of ``{x : <normal, x> <= offset}``."""

    normal: np.ndarray
    offset: float
    divisor: float = 1.0

    def __post_init__(self):
        a = as_point(self.normal)
        if not np.any(a != 0):
            raise ValueError("halfspace normal must be nonzero")
        _check_divisor(self.divisor)
        object.__setattr__(self, "normal", _frozen(a))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size


@dataclass(frozen=True, eq=False)
class IndicatorAffine:
    """Indicator of ``anchor + span(basis)``.

    ``basis`` is ``n x k`` with orthonormal columns; ``k = 0`` is allowed
    (then the set is the single point ``anchor``).
    """

    anchor: np.ndarray
    basis: np.ndarray
    divisor: float = 1.0

    def __post_init__(self):
        p = as_point(self.anchor)
        U = np.asarray(self.basis, dtype=float)
        if U.ndim == 1:
            U = U.reshape(-1, 1)
        if U.size == 0:
            U = np.zeros((p.size, 0))
        if U.ndim != 2 or U.shape[0] != p.size:
            raise DimensionError(f"basis must be {p.size} x k, got {U.shape}")
        if U.shape[1] > p.size:
            raise ValueError("basis has more columns than the dimension")
        if not np.allclose(U.T @ U, np.eye(U.shape[1]), atol=ORTHONORMAL_TOL, rtol=0):
            raise ValueError("basis columns must be orthonormal")
        _check_divisor(self.divisor)
        object.__setattr__(self, "anchor", _frozen(p))
        object.__setattr__(self, "basis", _frozen(U))

    @classmethod
    def from_directions(cls, anchor, directions, divisor: float = 1.0) -> "IndicatorAffine":
        """Build from arbitrary spanning direction vectors (given as rows)."""
        D = np.atleast_2d(np.asarray(directions, dtype=float))
        if D.size == 0:
            return cls(anchor, np.zeros((np.size(anchor), 0)), divisor)
        U, s, _ = np.linalg.svd(D.T, full_matrices=False)
        rank = int(np.sum(s > 1e-12 * max(1.0, s.max())))
        return cls(anchor, U[:, :rank], divisor)

    @property
    def dim(self) -> int:
        return self.anchor.size


@dataclass(frozen=True, eq=False)
class IndicatorPoint:
    """Indicator of the singleton ``{p}``."""

    p: np.ndarray
    divisor: float = 1.0

    def __post_init__(self):
        _check_divisor(self.divisor)
        object.__setattr__(self, "p", _frozen(as_point(self.p)))

    @property
    def dim(self) -> int:
        return self.p.size


ConvexFunction = Union[
    Quadratic, AbsSum, IndicatorBox, IndicatorBall, IndicatorHalfspace,
    IndicatorAffine, IndicatorPoint,
]
INDICATORS = (IndicatorBox, IndicatorBall, IndicatorHalfspace, IndicatorAffine, IndicatorPoint)


def scaled(f: ConvexFunction, lam: float) -> ConvexFunction:
    """Return ``f / lam`` (divisors multiply)."""
    return replace(f, divisor=f.divisor * lam)


def is_indicator(f: ConvexFunction) -> bool:
    return isinstance(f, INDICATORS)


# ---------------------------------------------------------------- projections

def project(f: ConvexFunction, x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the set behind an indicator function."""
    if isinstance(f, IndicatorBox):
        return np.clip(x, f.lo, f.hi)
    if isinstance(f, IndicatorBall):
        d = x - f.center
        nd = np.linalg.norm(d)
        if nd <= f.radius:
            return x.copy()
        return f.center + (f.radius / nd) * d
    if isinstance(f, IndicatorHalfspace):
        a = f.normal
        excess = a @ x - f.offset
        if excess <= 0:
            return x.copy()
        return x - (excess / (a @ a)) * a
    if isinstance(f, IndicatorAffine):
        U = f.basis
        return f.anchor + U @ (U.T @ (x - f.anchor))
    if isinstance(f, IndicatorPoint):
        return f.p.copy()
    raise TypeError(f"{type(f).__name__} is not an indicator")


def _member(f: ConvexFunction, x: np.ndarray) -> bool:
    tol = MEMBERSHIP_TOL
    if isinstance(f, IndicatorBox):
        return bool(np.all(x >= f.lo - tol) and np.all(x <= f.hi + tol))
    if isinstance(f, IndicatorBall):
        return bool(np.linalg.norm(x - f.center) <= f.radius + tol)
    if isinstance(f, IndicatorHalfspace):
        return bool((f.normal @ x - f.offset) / np.linalg.norm(f.normal) <= tol)
    return bool(np.linalg.norm(x - project(f, x)) <= tol)


# ------------------------------------------------------------------ operations

def eval(f: ConvexFunction, x) -> float:  # noqa: A001 - mirrors the math name
    """Value of ``f(x)`` (already divided by the divisor)."""
    x = as_point(x, f.dim)
    if isinstance(f, Quadratic):
        return float(0.5 * x @ (f.Q @ x) + f.q @ x + f.c) / f.divisor
    if isinstance(f, AbsSum):
        return float(f.weights @ np.abs(x)) / f.divisor
    return 0.0 if _member(f, x) else math.inf


def prox(f: ConvexFunction, gamma: float, x) -> np.ndarray:
    """Proximal point ``argmin_y f(y) + |x - y|^2 / (2 gamma)``.

    For indicators this is the projection and ``gamma`` plays no role.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x = as_point(x, f.dim)
    g = gamma / f.divisor
    if isinstance(f, Quadratic):
        A = np.eye(f.dim) + g * f.Q
        return np.linalg.solve(A, x - g * f.q)
    if isinstance(f, AbsSum):
        t = g * f.weights
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return project(f, x)


def conjugate_eval(f: ConvexFunction, phi) -> float:
    """Fenchel conjugate of the scaled function, ``(f/d)*(phi) = f*(d phi) / d``."""
    phi = as_point(phi, f.dim)
    d = f.divisor
    s = d * phi
    tol = CONJUGATE_DOMAIN_TOL * (1.0 + np.linalg.norm(s))
    if isinstance(f, Quadratic):
        r = s - f.q
        Qp = np.linalg.pinv(f.Q, rcond=1e-12, hermitian=True)
        z = Qp @ r
        if np.linalg.norm(f.Q @ z - r) > tol:
            return math.inf
        return float(0.5 * r @ z - f.c) / d
    if isinstance(f, AbsSum):
        return 0.0 if np.all(np.abs(s) <= f.weights + tol) else math.inf
    if isinstance(f, IndicatorBox):
        total = 0.0
        for si, lo, hi in zip(s, f.lo, f.hi):
            bound = hi if si > 0 else lo
            if math.isfinite(bound):
                total += si * bound
            elif abs(si) > tol:
                return math.inf
        return total / d
    if isinstance(f, IndicatorBall):
        return float(s @ f.center + f.radius * np.linalg.norm(s)) / d
    if isinstance(f, IndicatorHalfspace):
        a = f.normal
        t = (s @ a) / (a @ a)
        if t < -tol / np.linalg.norm(a) or np.linalg.norm(s - t * a) > tol:
            return math.inf
        return max(t, 0.0) * f.offset / d
    if isinstance(f, IndicatorAffine):
        U = f.basis
        if U.shape[1] and np.linalg.norm(U.T @ s) > tol:
            return math.inf
        return float(s @ f.anchor) / d
    if isinstance(f, IndicatorPoint):
        return float(s @ f.p) / d
    raise TypeError(f"unknown catalog entry {type(f).__name__}")


def moreau(f: ConvexFunction, gamma: float, x) -> tuple[float, np.ndarray]:
    """Moreau envelope value and gradient at ``x``."""
    x = as_point(x, f.dim)
    p = prox(f, gamma, x)
    diff = x - p
    fp = 0.0 if is_indicator(f) else eval(f, p)
    return fp + float(diff @ diff) / (2.0 * gamma), diff / gamma


def minimizer(f: ConvexFunction) -> np.ndarray | None:
    """The unique minimizer of ``f`` when it exists in closed form, else None."""
    if isinstance(f, Quadratic):
        if np.linalg.eigvalsh(f.Q).min() <= PSD_TOL:
            return None
        return np.linalg.solve(f.Q, -f.q)
    if isinstance(f, AbsSum):
        return np.zeros(f.dim)
    if isinstance(f, IndicatorPoint):
        return f.p.copy()
    return None
