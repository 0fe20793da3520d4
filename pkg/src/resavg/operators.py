"""Resolvents, Yosida approximations and averages of monotone operators.

Two operator families are supported: subdifferentials of catalog functions
and monotone affine maps ``x -> Mx + b``.  Scaling an operator by ``1/lam``
reuses the catalog divisor for subdifferentials and divides ``M, b`` for
affine maps, so ``J_{A/lam}`` is just another resolvent call.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import optimize

from . import catalog
from .catalog import ConvexFunction, DimensionError, as_point

MONOTONE_TOL = 1e-10
LAMBDA_MIN = 1e-6


@dataclass(frozen=True, eq=False)
class Subdifferential:
    f: ConvexFunction

    @property
    def dim(self) -> int:
        return self.f.dim


@dataclass(frozen=True, eq=False)
class AffineMonotone:
    """``x -> Mx + b`` with ``M + M^T`` positive semidefinite."""

    M: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        b = as_point(self.b)
        if M.shape != (b.size, b.size):
            raise DimensionError(f"M has shape {M.shape}, b has size {b.size}")
        sym = 0.5 * (M + M.T)
        if np.linalg.eigvalsh(sym).min() < -MONOTONE_TOL:
            raise ValueError("affine operator is not monotone: sym(M) is not PSD")
        M.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.b.size

    def __call__(self, x) -> np.ndarray:
        return self.M @ as_point(x, self.dim) + self.b


MonotoneOperator = Union[Subdifferential, AffineMonotone]


@dataclass(frozen=True)
class Weights:
    """Convex weights; ``lambda2`` is always ``1 - lambda1``."""

    lambda1: float

    def __post_init__(self):
        lam = float(self.lambda1)
        if not (LAMBDA_MIN <= lam <= 1.0 - LAMBDA_MIN):
            raise ValueError(f"lambda1 must lie in [{LAMBDA_MIN}, 1 - {LAMBDA_MIN}], got {lam}")
        object.__setattr__(self, "lambda1", lam)

    @property
    def lambda2(self) -> float:
        return 1.0 - self.lambda1


@dataclass(frozen=True, eq=False)
class ResolventAverage:
    """The operator whose resolvent is ``l1 J_{gA1} + l2 J_{gA2}``."""

    a1: MonotoneOperator
    a2: MonotoneOperator
    w: Weights
    gamma: float = 1.0

    def __post_init__(self):
        if self.a1.dim != self.a2.dim:
            raise DimensionError("operators live in different dimensions")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def dim(self) -> int:
        return self.a1.dim


class Order(str, enum.Enum):
    EF = "EF"  # J_{A1/l2} o J_{A2/l1}
    FE = "FE"  # J_{A2/l1} o J_{A1/l2}


def subdifferential(f: ConvexFunction) -> Subdifferential:
    return Subdifferential(f)


def scale(A: MonotoneOperator, lam: float) -> MonotoneOperator:
    """Return ``A / lam``."""
    if not lam > 0:
        raise ValueError("scaling factor must be positive")
    if isinstance(A, Subdifferential):
        return Subdifferential(catalog.scaled(A.f, lam))
    return AffineMonotone(A.M / lam, A.b / lam)


def resolvent(A: MonotoneOperator, gamma: float, x) -> np.ndarray:
    """``J_{gamma A}(x) = (Id + gamma A)^{-1}(x)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if isinstance(A, Subdifferential):
        return catalog.prox(A.f, gamma, x)
    x = as_point(x, A.dim)
    try:
        return np.linalg.solve(np.eye(A.dim) + gamma * A.M, x - gamma * A.b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("resolvent solve failed; operator is not monotone") from exc


def yosida(A: MonotoneOperator, gamma: float, x) -> np.ndarray:
    x = as_point(x, A.dim)
    return (x - resolvent(A, gamma, x)) / gamma


def average_map(RA: ResolventAverage, x) -> np.ndarray:
    x = as_point(x, RA.dim)
    l1, l2 = RA.w.lambda1, RA.w.lambda2
    return l1 * resolvent(RA.a1, RA.gamma, x) + l2 * resolvent(RA.a2, RA.gamma, x)


def yosida_average_residual(RA: ResolventAverage, z) -> np.ndarray:
    """``l1 Y(A1)(z) + l2 Y(A2)(z)``; vanishes exactly on the fixed points of the average."""
    z = as_point(z, RA.dim)
    l1, l2 = RA.w.lambda1, RA.w.lambda2
    return l1 * yosida(RA.a1, RA.gamma, z) + l2 * yosida(RA.a2, RA.gamma, z)


def scaled_pair(A1: MonotoneOperator, A2: MonotoneOperator, w: Weights):
    """``(A1 / l2, A2 / l1)``, the operators behind the compositions."""
    if A1.dim != A2.dim:
        raise DimensionError("operators live in different dimensions")
    return scale(A1, w.lambda2), scale(A2, w.lambda1)


def composition_map(A1: MonotoneOperator, A2: MonotoneOperator, w: Weights,
                    order: Order | str, x) -> np.ndarray:
    order = Order(order)
    B1, B2 = scaled_pair(A1, A2, w)
    x = as_point(x, A1.dim)
    if order is Order.EF:
        return resolvent(B1, 1.0, resolvent(B2, 1.0, x))
    return resolvent(B2, 1.0, resolvent(B1, 1.0, x))


# ------------------------------------------------------------ proximal average

class ProximalAverageError(RuntimeError):
    """Inner minimisation did not settle; carries the best value reached."""

    def __init__(self, message: str, best_value: float, residual: float):
        super().__init__(f"{message} (best value {best_value!r}, last improvement {residual!r})")
        self.best_value = best_value
        self.residual = residual


def coordinate_minimize(fun: Callable[[np.ndarray], float], x0, *, value_tol: float = 1e-8,
                        max_sweeps: int = 200, xtol: float = 1e-11) -> tuple[np.ndarray, float]:
    """Cyclic coordinate descent with golden-section line searches.

    Each coordinate search starts from the bracket ``(x_i, x_i + 1)`` and lets
    :func:`scipy.optimize.bracket` expand it.  Sweeps stop once a sweep
    improves the value by at most ``value_tol``.
    """
    x = np.array(x0, dtype=float)
    best = float(fun(x))
    improvement = np.inf
    for _ in range(max_sweeps):
        start = best
        for i in range(x.size):
            xi = x[i]

            def line(t, i=i):
                x[i] = t
                return fun(x)

            try:
                res = optimize.minimize_scalar(line, bracket=(xi, xi + 1.0), method="golden",
                                               options={"xtol": xtol})
            except (RuntimeError, ValueError) as exc:
                x[i] = xi
                raise ProximalAverageError(f"line search failed: {exc}", best, improvement) from exc
            if res.fun < best:
                x[i] = res.x
                best = float(res.fun)
            else:
                x[i] = xi
        improvement = start - best
        if improvement <= value_tol:
            return x, best
    raise ProximalAverageError("coordinate descent did not converge", best, improvement)


def _finite_valued(f: ConvexFunction) -> bool:
    return isinstance(f, (catalog.Quadratic, catalog.AbsSum))


def proximal_average_value(f1: ConvexFunction, f2: ConvexFunction, w: Weights,
                           gamma: float, z, *, value_tol: float = 1e-8,
                           max_sweeps: int = 200) -> float:
    """Value of the proximal average at ``z``.

    ``inf_x l1 f1(x) + l2 f2(y) + l1 l2 |x - y|^2 / (2 gamma)`` with
    ``y = (z - l1 x) / l2``.  Two quadratics are handled by a linear solve;
    otherwise the infimum is found numerically, which needs finite-valued
    functions.
    """
    if f1.divisor != 1.0 or f2.divisor != 1.0:
        raise ValueError("proximal average expects unscaled functions (divisor 1)")
    if f1.dim != f2.dim:
        raise DimensionError("functions live in different dimensions")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    z = as_point(z, f1.dim)
    l1, l2 = w.lambda1, w.lambda2

    def objective(x):
        y = (z - l1 * x) / l2
        d = x - y
        return (l1 * catalog.eval(f1, x) + l2 * catalog.eval(f2, y)
                + l1 * l2 * float(d @ d) / (2.0 * gamma))

    if isinstance(f1, catalog.Quadratic) and isinstance(f2, catalog.Quadratic):
        # stationarity in x: (Q1 + b Q2 + (1+b)/gamma) x = Q2 a + q2 - q1 + a/gamma
        a, b = z / l2, l1 / l2
        H = f1.Q + b * f2.Q + (1.0 + b) / gamma * np.eye(z.size)
        rhs = f2.Q @ a + f2.q - f1.q + a / gamma
        return objective(np.linalg.solve(H, rhs))
    if not (_finite_valued(f1) and _finite_valued(f2)):
        raise TypeError("numeric proximal average needs finite-valued functions")
    _, value = coordinate_minimize(objective, z, value_tol=value_tol, max_sweeps=max_sweeps)
    return value


def formulation_minima(f1: ConvexFunction, f2: ConvexFunction, w: Weights, start=None) -> dict[str, float]:
    """Minimum values of the five equivalent minimisation problems.

    Keys: ``joint`` (coupled two-block problem), ``proximal_average``
    (scaled by ``1/(l1 l2)``), ``envelope_first``, ``envelope_second`` and
    ``envelope_average`` (scaled by ``1/(l1 l2)``).  All minimisations are
    numeric; they are meant for low-dimensional cross-checks.
    """
    l1, l2 = w.lambda1, w.lambda2
    n = f1.dim
    x0 = np.zeros(n) if start is None else as_point(start, n)
    g1f, g2f = catalog.scaled(f1, l2), catalog.scaled(f2, l1)

    def joint(v):
        x, y = v[:n], v[n:]
        d = x - y
        return catalog.eval(g1f, x) + catalog.eval(g2f, y) + 0.5 * float(d @ d)

    def prox_avg(v):
        return proximal_average_value(f1, f2, w, 1.0, v) / (l1 * l2)

    def env_first(v):
        return catalog.eval(g1f, v) + catalog.moreau(g2f, 1.0, v)[0]

    def env_second(v):
        return catalog.moreau(g1f, 1.0, v)[0] + catalog.eval(g2f, v)

    def env_avg(v):
        return (l1 * catalog.moreau(f1, 1.0, v)[0] + l2 * catalog.moreau(f2, 1.0, v)[0]) / (l1 * l2)

    return {
        "joint": coordinate_minimize(joint, np.concatenate([x0, x0]))[1],
        "proximal_average": coordinate_minimize(prox_avg, x0)[1],
        "envelope_first": coordinate_minimize(env_first, x0)[1],
        "envelope_second": coordinate_minimize(env_second, x0)[1],
        "envelope_average": coordinate_minimize(env_avg, x0)[1],
    }
