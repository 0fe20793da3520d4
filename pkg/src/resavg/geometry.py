"""Gap vector, dual solution and the maps between the fixed-point sets.

The sets are never materialised.  A report holds one representative of each
(E, F, S and the fixed points of the average) together with named residuals
certifying the identities that tie them together.  Sign conventions:
``u_star = y - x``, ``v_star = -u_star`` and ``phi_bar = v_star = x - y``
for ``(x, y)`` in S.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import catalog
from .catalog import ConvexFunction, as_point
from .operators import (
    MonotoneOperator, Order, ResolventAverage, Subdifferential, Weights,
    composition_map, resolvent, scaled_pair, yosida, yosida_average_residual,
)
from .solvers import (
    AlternatingResult, IterationTrace, Status, StoppingRule, iterate_composition,
    run_alternating, run_proximal_point,
)

DEFAULT_TOL = 1e-8


class FixedPointSetEmpty(RuntimeError):
    """The alternating iteration diverged: E, F, S and Fix are all empty."""


class NotAFixedPoint(ValueError):
    pass


class UnsupportedCase(TypeError):
    pass


@dataclass(frozen=True)
class GapData:
    u_star: np.ndarray
    v_star: np.ndarray
    phi_bar: np.ndarray

    @classmethod
    def from_pair(cls, x: np.ndarray, y: np.ndarray) -> "GapData":
        u = y - x
        return cls(u, -u, -u)


@dataclass
class GeometryReport:
    e_rep: np.ndarray
    f_rep: np.ndarray
    s_rep: tuple[np.ndarray, np.ndarray]
    fix_rep: np.ndarray
    gap: GapData
    identity_residuals: dict[str, float] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOL
    solver_status: Status = Status.CONVERGED
    alternating: AlternatingResult | None = field(default=None, repr=False)

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.identity_residuals.items() if not v <= self.tolerance]

    @property
    def verified(self) -> bool:
        return bool(self.identity_residuals) and not self.failures


def random_starts(x0: np.ndarray, count: int, seed: int = 0) -> list[np.ndarray]:
    """``count`` pseudo-random points around ``x0`` for gap-uniqueness checks."""
    rng = np.random.default_rng(seed)
    scale = 1.0 + np.linalg.norm(x0)
    return [x0 + scale * rng.uniform(-2.0, 2.0, size=x0.size) for _ in range(count)]


def compute_geometry(A1: MonotoneOperator, A2: MonotoneOperator, w: Weights, x0,
                     rule: StoppingRule = StoppingRule(), *, tol: float = DEFAULT_TOL,
                     restarts: Sequence | int = 1, seed: int = 0) -> GeometryReport:
    """Locate representatives of E, F, S and Fix by alternating resolvents
    and certify the identities linking them.

    ``restarts`` are extra starting points (or how many to draw with
    ``seed``) used to test that the gap vector does not depend on the start.
    """
    x0 = as_point(x0, A1.dim)
    alt = run_alternating(A1, A2, w, x0, rule)
    if alt.trace_x.status is Status.DIVERGED:
        raise FixedPointSetEmpty("fixed point sets empty: alternating resolvents diverged")
    x, y = alt.trace_x.final, alt.trace_y.final
    report = GeometryReport(
        e_rep=x, f_rep=y, s_rep=(x, y), fix_rep=w.lambda1 * x + w.lambda2 * y,
        gap=GapData.from_pair(x, y), tolerance=tol, solver_status=alt.trace_x.status,
        alternating=alt,
    )
    if isinstance(restarts, (int, np.integer)):
        starts = random_starts(x0, int(restarts), seed)
    else:
        starts = [as_point(s, A1.dim) for s in restarts]
    report.identity_residuals = verify_relative_geometry(A1, A2, w, report, tol, restarts=starts, rule=rule)
    return report


def map_E_to_fix(x, A2: MonotoneOperator, w: Weights) -> np.ndarray:
    """``x -> l1 x + l2 J_{A2/l1} x``, a bijection from E onto Fix."""
    x = as_point(x, A2.dim)
    _, B2 = scaled_pair(A2, A2, w)
    return w.lambda1 * x + w.lambda2 * resolvent(B2, 1.0, x)


def map_F_to_fix(y, A1: MonotoneOperator, w: Weights) -> np.ndarray:
    """``y -> l1 J_{A1/l2} y + l2 y``, a bijection from F onto Fix."""
    y = as_point(y, A1.dim)
    B1, _ = scaled_pair(A1, A1, w)
    return w.lambda1 * resolvent(B1, 1.0, y) + w.lambda2 * y


def decompose_fix(z, A1: MonotoneOperator, A2: MonotoneOperator, w: Weights,
                  tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Split a fixed point of the average into its pair ``(J_A1 z, J_A2 z)`` in S."""
    z = as_point(z, A1.dim)
    scale = 1.0 + np.linalg.norm(z)
    res = np.linalg.norm(yosida_average_residual(ResolventAverage(A1, A2, w), z))
    if res > tol * scale:
        raise NotAFixedPoint(f"not a fixed point of the average (residual {res:.3e})")
    e, f = resolvent(A1, 1.0, z), resolvent(A2, 1.0, z)
    B1, B2 = scaled_pair(A1, A2, w)
    miss = max(np.linalg.norm(resolvent(B1, 1.0, f) - e), np.linalg.norm(resolvent(B2, 1.0, e) - f))
    if miss > 10 * tol * scale:
        raise NotAFixedPoint(f"decomposed pair is not in S (residual {miss:.3e})")
    return e, f


def verify_relative_geometry(A1: MonotoneOperator, A2: MonotoneOperator, w: Weights,
                             report: GeometryReport, tol: float = DEFAULT_TOL, *,
                             restarts: Sequence | None = None,
                             rule: StoppingRule = StoppingRule()) -> dict[str, float]:
    """Residuals of the relative-geometry identities at the report's points.

    Every residual is an absolute error divided by ``1 + |fix_rep|``, so it
    can be compared with ``tol`` directly.
    """
    l1, l2 = w.lambda1, w.lambda2
    e, f, z = report.e_rep, report.f_rep, report.fix_rep
    u, v = report.gap.u_star, report.gap.v_star
    B1, B2 = scaled_pair(A1, A2, w)
    norm = np.linalg.norm
    scale = 1.0 + norm(z)

    h1 = map_E_to_fix(e, A2, w)
    h2 = map_F_to_fix(f, A1, w)
    res = {
        "fix_from_E": max(norm(h1 - z), norm(h1 - (e + l2 * u))),
        "fix_from_F": max(norm(h2 - z), norm(h2 - (f - l1 * u))),
        "fix_convex_combination": norm(l1 * e + l2 * f - z),
        "composition_E": norm(composition_map(A1, A2, w, Order.EF, e) - e),
        "composition_F": norm(composition_map(A1, A2, w, Order.FE, f) - f),
        "average_fixed_point": norm(yosida_average_residual(ResolventAverage(A1, A2, w), z)),
        "roundtrip_E": norm(resolvent(A1, 1.0, h1) - e),
        "roundtrip_F": norm(resolvent(A2, 1.0, h2) - f),
        "roundtrip_S": max(norm(resolvent(A1, 1.0, z) - e), norm(resolvent(A2, 1.0, z) - f)),
        "bijection_E_to_F": norm(resolvent(B2, 1.0, e) - (e + u)),
        "bijection_F_to_E": norm(resolvent(B1, 1.0, f) - (f + v)),
        "yosida_first_at_fix": norm(yosida(A1, 1.0, z) / l2 - u),
        "yosida_second_at_fix": norm(yosida(A2, 1.0, z) / l1 - v),
        "scaled_yosida_at_E": norm(yosida(B2, 1.0, e) - v),
        "scaled_yosida_at_F": norm(yosida(B1, 1.0, f) - u),
    }
    if restarts:
        gaps = []
        for start in restarts:
            alt = run_alternating(A1, A2, w, start, rule)
            gaps.append(norm((alt.trace_y.final - alt.trace_x.final) - u))
        res["gap_uniqueness"] = max(gaps)
    return {k: float(r / scale) for k, r in res.items()}


def _as_function(obj) -> ConvexFunction:
    if isinstance(obj, Subdifferential):
        return obj.f
    if isinstance(obj, catalog.INDICATORS + (catalog.Quadratic, catalog.AbsSum)):
        return obj
    raise UnsupportedCase(f"{type(obj).__name__} is not a subdifferential")


def dual_objective(f1, f2, w: Weights, phi) -> float:
    """``(f1/l2)*(-phi) + (f2/l1)*(phi) + |phi|^2 / 2``; +inf off the dual domain."""
    f1, f2 = _as_function(f1), _as_function(f2)
    if f1.divisor != 1.0 or f2.divisor != 1.0:
        raise ValueError("dual objective expects unscaled functions (divisor 1)")
    phi = as_point(phi, f1.dim)
    return (catalog.conjugate_eval(catalog.scaled(f1, w.lambda2), -phi)
            + catalog.conjugate_eval(catalog.scaled(f2, w.lambda1), phi)
            + 0.5 * float(phi @ phi))


def primal_objective(f1, f2, w: Weights, x, y) -> float:
    """``f1(x)/l2 + f2(y)/l1 + |x - y|^2 / 2``."""
    f1, f2 = _as_function(f1), _as_function(f2)
    d = as_point(x, f1.dim) - as_point(y, f1.dim)
    return (catalog.eval(catalog.scaled(f1, w.lambda2), x)
            + catalog.eval(catalog.scaled(f2, w.lambda1), y) + 0.5 * float(d @ d))


def dual_solution(report: GeometryReport) -> np.ndarray:
    x, y = report.s_rep
    phi = x - y
    if not np.allclose(phi, -report.gap.u_star, atol=1e-15, rtol=0):
        raise AssertionError("dual solution disagrees with the gap vector")
    return phi


def subgradient_residuals(f1, f2, w: Weights, report: GeometryReport, samples: int = 500,
                          seed: int = 0) -> dict[str, float]:
    """Residuals of the subgradient description of E and F via the dual solution.

    The two sampled entries are the worst violation of the subgradient
    inequality over ``samples`` random points (0 when it holds everywhere).
    """
    f1, f2 = _as_function(f1), _as_function(f2)
    l1, l2 = w.lambda1, w.lambda2
    g1, g2 = catalog.scaled(f1, l2), catalog.scaled(f2, l1)
    e, f = report.e_rep, report.f_rep
    phi = dual_solution(report)
    norm = np.linalg.norm
    rng = np.random.default_rng(seed)

    def worst_violation(g, base, slope):
        gb = catalog.eval(g, base)
        worst = 0.0
        for k in range(samples):
            spread = 1e-3 if k % 2 else 1.0 + norm(base)
            yk = base + spread * rng.standard_normal(base.size)
            gap = gb + slope @ (yk - base) - catalog.eval(g, yk)
            worst = max(worst, gap)
        return worst

    return {
        "dual_from_E": norm(phi - (e - catalog.prox(g2, 1.0, e))),
        "dual_from_F": norm(-phi - (f - catalog.prox(g1, 1.0, f))),
        "subgradient_first": worst_violation(g1, e, -phi),
        "subgradient_second": worst_violation(g2, f, phi),
    }


def verify_subgradient_characterization(f1, f2, w: Weights, report: GeometryReport,
                                        tol: float = DEFAULT_TOL, samples: int = 500,
                                        seed: int = 0) -> bool:
    res = subgradient_residuals(f1, f2, w, report, samples, seed)
    return all(r <= tol for r in res.values())


class CounterexampleResult(NamedTuple):
    claim_holds: bool  # unscaled compositions miss the average's fixed point
    witness: tuple[np.ndarray, np.ndarray]  # (unscaled recovery, true fixed point)
    alternative_fix: np.ndarray  # fixed point of l1 Prox_{l2 f1} + l2 Prox_{l1 f2}
    alternative_residual: float  # its distance to the unscaled recovery

    @property
    def alternative_holds(self) -> bool:
        return self.alternative_residual <= DEFAULT_TOL * (1.0 + np.linalg.norm(self.witness[0]))


def counterexample_unscaled(f1, f2, w: Weights, rule: StoppingRule = StoppingRule(),
                            tol: float = DEFAULT_TOL, x0=None) -> CounterexampleResult:
    """Compare recovery from *unscaled* prox compositions with the average's fixed point.

    Also checks that weighting the functions as ``l2 f1, l1 f2`` makes the
    unscaled recovery exact.
    """
    f1, f2 = _as_function(f1), _as_function(f2)
    l1, l2 = w.lambda1, w.lambda2
    start = np.zeros(f1.dim) if x0 is None else as_point(x0, f1.dim)
    P1, P2 = Subdifferential(f1), Subdifferential(f2)

    trace, y = iterate_composition(P1, P2, start, rule)
    candidate = l1 * trace.final + l2 * y
    fix = run_proximal_point(ResolventAverage(P1, P2, w), start, rule).final
    claim = bool(np.linalg.norm(candidate - fix) > 10 * tol)

    alt = ResolventAverage(Subdifferential(catalog.scaled(f1, 1.0 / l2)),
                           Subdifferential(catalog.scaled(f2, 1.0 / l1)), w)
    alt_fix = run_proximal_point(alt, start, rule).final
    return CounterexampleResult(claim, (candidate, fix), alt_fix,
                                float(np.linalg.norm(alt_fix - candidate)))
