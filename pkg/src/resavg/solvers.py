"""Fixed-point drivers for the resolvent average.

All three drivers reduce to two kernel loops (average and composition) in
:mod:`resavg._backend`; traces are assembled here.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .catalog import as_point
from .operators import (
    MonotoneOperator, Order, ResolventAverage, Weights, scaled_pair,
)


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"


_STATUS = {
    _backend.STATUS_CONVERGED: Status.CONVERGED,
    _backend.STATUS_MAX_ITERS: Status.MAX_ITERS,
    _backend.STATUS_DIVERGED: Status.DIVERGED,
}


@dataclass(frozen=True)
class StoppingRule:
    step_tol: float = 1e-10
    residual_tol: float = 1e-9
    max_iters: int = 100_000
    divergence_norm: float = 1e12
    thin: int = 1

    def __post_init__(self):
        for name in ("step_tol", "residual_tol", "divergence_norm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if int(self.thin) != self.thin or self.thin < 1:
            raise ValueError("thin must be a positive integer")


@dataclass
class IterationTrace:
    """Iterates of one sequence.

    ``iterates[j]`` is the iterate with index ``iterate_indices[j]``; with
    thinning only every ``thin``-th index is kept, plus the final one.
    ``step_norms[i]`` is ``|x_{i+1} - x_i|``.  ``residual`` is the fixed-point
    residual ``|T(final) - final|`` of the driving map, checked against
    ``residual_tol * (1 + |final|)`` before a run is reported as converged.
    """

    iterates: np.ndarray
    iterate_indices: np.ndarray
    step_norms: np.ndarray
    status: Status
    final: np.ndarray
    iterations_used: int
    residual: float = float("nan")

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


@dataclass
class AlternatingResult:
    trace_x: IterationTrace
    trace_y: IterationTrace
    averaged_limit: np.ndarray


@dataclass
class CompositionResult:
    trace: IterationTrace
    recovered_fix: np.ndarray
    partner: np.ndarray = field(repr=False)  # the other resolvent applied to ``final``


def detect_divergence(x, rule: StoppingRule) -> bool:
    """True once an iterate has left the ball of radius ``divergence_norm``.

    The kernels apply the same test after every step.
    """
    return bool(np.linalg.norm(x) >= rule.divergence_norm)


def _trace(final, steps, idx, xs, status, niter, residual, rule) -> IterationTrace:
    st = _STATUS[status]
    if st is Status.CONVERGED and not residual <= rule.residual_tol * (1.0 + np.linalg.norm(final)):
        st = Status.MAX_ITERS  # step test passed but the fixed-point residual did not
    return IterationTrace(xs, idx, steps, st, final, int(niter), float(residual))


def _compose_residual(outer, inner, x) -> float:
    return float(np.linalg.norm(_backend.apply_resolvent(outer, _backend.apply_resolvent(inner, x)) - x))


def _y_steps(aux: np.ndarray) -> np.ndarray:
    # differences between kept y-iterates; exact per-step norms when thin == 1
    return np.linalg.norm(np.diff(aux, axis=0), axis=1)


def run_proximal_point(RA: ResolventAverage, x0, rule: StoppingRule = StoppingRule()) -> IterationTrace:
    """Iterate ``x <- l1 J_{g A1} x + l2 J_{g A2} x``."""
    x0 = as_point(x0, RA.dim)
    first = _backend.pack_resolvent(RA.a1, RA.gamma)
    second = _backend.pack_resolvent(RA.a2, RA.gamma)
    final, _, steps, idx, xs, _, status, niter = _backend.iterate(
        _backend.MODE_AVERAGE, first, second, RA.w.lambda1, x0,
        rule.step_tol, rule.max_iters, rule.divergence_norm, rule.thin)
    l1 = RA.w.lambda1
    nxt = l1 * _backend.apply_resolvent(first, final) + (1.0 - l1) * _backend.apply_resolvent(second, final)
    return _trace(final, steps, idx, xs, status, niter, np.linalg.norm(nxt - final), rule)


def _compose(outer: MonotoneOperator, inner: MonotoneOperator, x0, rule: StoppingRule):
    po, pi = _backend.pack_resolvent(outer), _backend.pack_resolvent(inner)
    out = _backend.iterate(_backend.MODE_COMPOSE, po, pi, 0.5, x0, rule.step_tol,
                           rule.max_iters, rule.divergence_norm, rule.thin)
    final, aux = out[0], out[1]
    # residuals of the x-map at final and of the reverse composition at aux
    return out, _compose_residual(po, pi, final), _compose_residual(pi, po, aux)


def run_alternating(A1: MonotoneOperator, A2: MonotoneOperator, w: Weights, x0,
                    rule: StoppingRule = StoppingRule()) -> AlternatingResult:
    """``y_n = J_{A2/l1} x_n`` then ``x_{n+1} = J_{A1/l2} y_n``.

    ``trace_y.final`` is ``J_{A2/l1}`` of ``trace_x.final``, so the final
    pair is as close to a member of S as the x-sequence allows.
    """
    B1, B2 = scaled_pair(A1, A2, w)
    x0 = as_point(x0, A1.dim)
    (final, aux, steps, idx, xs, auxs, status, niter), rx, ry = _compose(B1, B2, x0, rule)
    trace_x = _trace(final, steps, idx, xs, status, niter, rx, rule)
    trace_y = _trace(aux, _y_steps(auxs), idx.copy(), auxs, status, niter, ry, rule)
    limit = w.lambda1 * final + w.lambda2 * aux
    return AlternatingResult(trace_x, trace_y, limit)


def iterate_composition(outer: MonotoneOperator, inner: MonotoneOperator, x0,
                        rule: StoppingRule = StoppingRule()) -> tuple[IterationTrace, np.ndarray]:
    """Iterate ``x <- J_outer J_inner x`` with no scaling; returns the trace
    and ``J_inner`` of the final iterate."""
    x0 = as_point(x0, outer.dim)
    (final, partner, steps, idx, xs, _, status, niter), r, _ = _compose(outer, inner, x0, rule)
    return _trace(final, steps, idx, xs, status, niter, r, rule), partner


def run_composition(A1: MonotoneOperator, A2: MonotoneOperator, w: Weights, order: Order | str,
                    x0, rule: StoppingRule = StoppingRule()) -> CompositionResult:
    """Iterate one of the two scaled resolvent compositions and map the limit
    onto the fixed points of the average."""
    order = Order(order)
    B1, B2 = scaled_pair(A1, A2, w)
    x0 = as_point(x0, A1.dim)
    l1, l2 = w.lambda1, w.lambda2
    if order is Order.EF:
        (final, partner, steps, idx, xs, _, status, niter), r, _ = _compose(B1, B2, x0, rule)
        recovered = l1 * final + l2 * partner
    else:
        (final, partner, steps, idx, xs, _, status, niter), r, _ = _compose(B2, B1, x0, rule)
        recovered = l1 * partner + l2 * final
    return CompositionResult(_trace(final, steps, idx, xs, status, niter, r, rule), recovered, partner)
