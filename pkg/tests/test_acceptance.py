"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible in
``pytest -v`` output) and then asserts.  Running this file directly prints
the same lines without pytest.
"""
import sys
import time

import numpy as np
import pytest
from scipy import optimize

from resavg import catalog as C
from resavg.geometry import compute_geometry, counterexample_unscaled, dual_objective, dual_solution
from resavg.operators import (
    Order, ResolventAverage, Subdifferential, Weights, average_map, composition_map,
    formulation_minima,
)
from resavg.solvers import run_alternating, run_composition, run_proximal_point

from oracles import (
    KINDS, finite_difference_grad, grid_min_2d, random_function, random_pair, scalar_min,
)

sd = Subdifferential
X2 = C.Quadratic(np.eye(1) * 2, np.zeros(1))  # x^2
XM1 = C.Quadratic(np.eye(1) * 2, np.array([-2.0]), 1.0)  # (x - 1)^2
ABS = C.AbsSum(np.ones(1))  # |x|
DISK = C.IndicatorBall(np.array([0.0, 2.0]), 1.0)
LINE = C.IndicatorAffine.from_directions(np.zeros(2), np.array([[1.0, 0.0]]))


@pytest.fixture
def say(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def four_runs(a1, a2, w, x0):
    """Recovered fixed points, iteration counts and wall times of the four drivers."""
    out = {}
    t = time.perf_counter()
    tr = run_proximal_point(ResolventAverage(a1, a2, w), x0)
    out["proximal_point"] = (tr.final, tr.iterations_used, time.perf_counter() - t, tr.converged)
    t = time.perf_counter()
    alt = run_alternating(a1, a2, w, x0)
    out["alternating"] = (alt.averaged_limit, alt.trace_x.iterations_used, time.perf_counter() - t, alt.trace_x.converged)
    for order in (Order.EF, Order.FE):
        t = time.perf_counter()
        res = run_composition(a1, a2, w, order, x0)
        out[f"composition_{order.value}"] = (res.recovered_fix, res.trace.iterations_used,
                                             time.perf_counter() - t, res.trace.converged)
    return out


def affine_fixed_point(T):
    """Exact fixed point of an affine self-map of the line, from two evaluations."""
    b = T(np.zeros(1))[0]
    a = T(np.ones(1))[0] - b
    return b / (1.0 - a)


# ---------------------------------------------------------------- 1

def check_disk_line():
    worst, problems = 0.0, []
    for lam in (0.25, 0.5, 0.75):
        w = Weights(lam)
        x0 = [5.0, 7.0]
        for name, (fix, iters, secs, conv) in four_runs(sd(DISK), sd(LINE), w, x0).items():
            err = np.linalg.norm(fix - [0.0, lam])
            worst = max(worst, err)
            if not (conv and err <= 1e-7 and iters <= 200 and secs < 0.1):
                problems.append(f"{name}@{lam}: err={err:.1e} iters={iters} t={secs:.3f}s")
        e = run_composition(sd(DISK), sd(LINE), w, Order.EF, x0).trace.final
        f = run_composition(sd(DISK), sd(LINE), w, Order.FE, x0).trace.final
        de, df = np.linalg.norm(e - [0, 1]), np.linalg.norm(f - [0, 0])
        worst = max(worst, de, df)
        if de > 1e-7 or df > 1e-7:
            problems.append(f"E/F reps @{lam}: {de:.1e}, {df:.1e}")
    return not problems, f"max error {worst:.2e}" + (f"; {problems}" if problems else "")


def test_criterion_1_disk_line(say):
    ok, detail = check_disk_line()
    say(1, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 2

def check_quadratics():
    closed, iterative = 0.0, 0.0
    for lam in (0.1, 0.25, 0.5, 0.9):
        w = Weights(lam)
        l2 = w.lambda2
        want = {"E": l2 / 3, "F": (2 + l2) / 3, "Fix": l2, "phi": -2 / 3}
        # closed-form fixtures: the maps are affine, so their fixed points solve a linear equation
        got = {
            "E": affine_fixed_point(lambda x: composition_map(sd(X2), sd(XM1), w, Order.EF, x)),
            "F": affine_fixed_point(lambda x: composition_map(sd(X2), sd(XM1), w, Order.FE, x)),
            "Fix": affine_fixed_point(lambda x: average_map(ResolventAverage(sd(X2), sd(XM1), w), x)),
        }
        got["phi"] = got["E"] - got["F"]
        closed = max(closed, *(abs(got[k] - want[k]) for k in want))
        rep = compute_geometry(sd(X2), sd(XM1), w, [3.0])
        it = {"E": rep.e_rep[0], "F": rep.f_rep[0], "Fix": rep.fix_rep[0], "phi": dual_solution(rep)[0]}
        iterative = max(iterative, *(abs(it[k] - want[k]) for k in want))
        for fix, *_ in four_runs(sd(X2), sd(XM1), w, [3.0]).values():
            iterative = max(iterative, abs(fix[0] - l2))
    ok = closed <= 1e-8 and iterative <= 1e-7
    return ok, f"closed-form max error {closed:.2e} (tol 1e-8), iterative max error {iterative:.2e} (tol 1e-7)"


def test_criterion_2_quadratics(say):
    ok, detail = check_quadratics()
    say(2, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 3

def check_abs_quadratic():
    worst = 0.0
    for lam in (0.25, 0.5, 0.75):
        w = Weights(lam)
        l2 = w.lambda2
        rep = compute_geometry(sd(ABS), sd(XM1), w, [3.0])
        want = (0.0, 2 / (2 + lam), 2 * l2 / (2 + lam), -2 / (2 + lam))
        got = (rep.e_rep[0], rep.f_rep[0], rep.fix_rep[0], dual_solution(rep)[0])
        worst = max(worst, *(abs(a - b) for a, b in zip(got, want)))
        for fix, *_ in four_runs(sd(ABS), sd(XM1), w, [3.0]).values():
            worst = max(worst, abs(fix[0] - want[2]))
    return worst <= 1e-7, f"max error {worst:.2e} (tol 1e-7)"


def test_criterion_3_abs_quadratic(say):
    ok, detail = check_abs_quadratic()
    say(3, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 4

def check_counterexample():
    w = Weights(0.25)
    l2 = w.lambda2
    res = counterexample_unscaled(X2, XM1, w)
    cand, fix = res.witness[0][0], res.witness[1][0]
    target = 0.25 + l2 / 2
    e_cand = abs(cand - target)
    gap = abs(cand - l2)
    e_alt = abs(res.alternative_fix[0] - target)
    ok = res.claim_holds and e_cand <= 1e-8 and gap >= 0.05 and e_alt <= 1e-8 and abs(fix - l2) <= 1e-8
    return ok, (f"unscaled recovery {cand:.10f} (expected {target}), distance to fixed point {gap:.4f}, "
                f"weighted variant error {e_alt:.2e}")


def test_criterion_4_counterexample(say):
    ok, detail = check_counterexample()
    say(4, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 5

SUITE_NAMES = ("fix_from_E", "fix_from_F", "fix_convex_combination", "gap_uniqueness",
               "roundtrip_E", "roundtrip_F", "roundtrip_S", "bijection_E_to_F", "bijection_F_to_E")
FAMILIES = ("quadratics", "quadratic_indicator", "indicators_meet", "indicators_apart")


def check_identity_suite(pairs=100, lambdas=5, seed=2024):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = dict.fromkeys(SUITE_NAMES, 0.0)
    unconverged = 0
    for i in range(pairs):
        family = FAMILIES[i % len(FAMILIES)]
        dim = 1 + i % 3
        a1, a2 = random_pair(rng, family, dim)
        for lam in rng.uniform(0.05, 0.95, lambdas):
            x0 = rng.uniform(-5, 5, dim)
            rep = compute_geometry(a1, a2, Weights(float(lam)), x0, restarts=4, seed=int(rng.integers(2**31)))
            unconverged += not rep.solver_status == "Converged"
            scale = 1.0 + np.linalg.norm(rep.fix_rep)  # report absolute residuals
            for k in SUITE_NAMES:
                worst[k] = max(worst[k], rep.identity_residuals[k] * scale)
    secs = time.perf_counter() - t0
    bad = {k: v for k, v in worst.items() if not v <= 1e-6}
    ok = not bad and secs < 30 and unconverged == 0
    return ok, (f"{pairs} pairs x {lambdas} weights in {secs:.1f}s, largest residual "
                f"{max(worst.values()):.2e} ({max(worst, key=worst.get)})"
                + (f"; over tolerance {bad}" if bad else "") + (f"; {unconverged} unconverged" if unconverged else ""))


def test_criterion_5_identity_suite(say):
    ok, detail = check_identity_suite()
    say(5, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 6

def _grid_dual_2d(f1, f2, w, lo, hi):
    fun = np.vectorize(lambda a, b: dual_objective(f1, f2, w, [a, b]))
    return grid_min_2d(fun, lo, hi, n=101, rounds=7, shrink=10.0)[0]


def _grid_projection_of_origin(member, lo, hi):
    """Closest point to 0 of a planar set given by a vectorized membership test."""
    def dist(X, Y):
        return np.where(member(X, Y), np.hypot(X, Y), np.inf)
    return grid_min_2d(dist, lo, hi, n=401, rounds=5, shrink=40.0)[0]


def check_dual():
    worst_dual, worst_proj = 0.0, 0.0
    # 1-D fixtures
    for f1, lam in ((X2, 0.25), (X2, 0.6), (ABS, 0.5), (ABS, 0.25)):
        w = Weights(lam)
        phi = dual_solution(compute_geometry(sd(f1), sd(XM1), w, [1.0]))[0]
        brute, _ = scalar_min(lambda t: dual_objective(f1, XM1, w, [t]), -10, 10, n=4001)
        worst_dual = max(worst_dual, abs(brute - phi))
    # disk and line
    w = Weights(0.5)
    phi = dual_solution(compute_geometry(sd(DISK), sd(LINE), w, [5.0, 7.0]))
    brute = _grid_dual_2d(DISK, LINE, w, [-4, -4], [4, 4])
    worst_dual = max(worst_dual, np.linalg.norm(brute - phi))
    # C2 - C1 = {(s, -b) : (a, b) in disk} is the strip -d2 in [1, 3]
    proj = _grid_projection_of_origin(lambda X, Y: (-Y >= 1) & (-Y <= 3), [-4, -4], [4, 4])
    worst_proj = max(worst_proj, np.linalg.norm(-proj - phi))
    # disjoint boxes: C2 - C1 is the box [lo2 - hi1, hi2 - lo1]
    rng = np.random.default_rng(11)
    for _ in range(5):
        lo1 = rng.uniform(-2, 0, 2)
        hi1 = lo1 + rng.uniform(0.2, 1.0, 2)
        lo2 = hi1 + rng.uniform(-0.5, 1.5, 2)
        hi2 = lo2 + rng.uniform(0.2, 1.0, 2)
        b1, b2 = C.IndicatorBox(lo1, hi1), C.IndicatorBox(lo2, hi2)
        w = Weights(float(rng.uniform(0.1, 0.9)))
        phi = dual_solution(compute_geometry(sd(b1), sd(b2), w, rng.uniform(-3, 3, 2)))
        dlo, dhi = lo2 - hi1, hi2 - lo1
        proj = _grid_projection_of_origin(
            lambda X, Y: (X >= dlo[0]) & (X <= dhi[0]) & (Y >= dlo[1]) & (Y <= dhi[1]), [-5, -5], [5, 5])
        worst_proj = max(worst_proj, np.linalg.norm(-proj - phi))
    ok = worst_dual <= 1e-5 and worst_proj <= 1e-4
    return ok, f"dual argmin vs gap {worst_dual:.2e} (tol 1e-5), projection of origin vs gap {worst_proj:.2e} (tol 1e-4)"


def test_criterion_6_dual(say):
    ok, detail = check_dual()
    say(6, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 7

def _brute_prox_of_average(f1v, f2v, l1, q, half=6.0, xhalf=15.0):
    """Prox and envelope of the proximal average at q by nested brute force.

    Inner: infimum over x of l1 f1(x) + l2 f2(y) + l1 l2 (x-y)^2/2, y = (z - l1 x)/l2.
    Outer: minimize p(z) + (z - q)^2 / 2.
    """
    l2 = 1.0 - l1
    xs = np.linspace(-xhalf, xhalf, 6001)

    def inner_vals(z, x):
        y = (z - l1 * x) / l2
        return l1 * f1v(x) + l2 * f2v(y) + 0.5 * l1 * l2 * (x - y) ** 2

    def p(z):
        vals = inner_vals(z, xs)
        k = int(np.argmin(vals))
        a, b = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
        r = optimize.minimize_scalar(lambda x: inner_vals(z, x), bounds=(a, b), method="bounded",
                                     options={"xatol": 1e-13})
        return min(r.fun, vals[k])

    zs = np.linspace(q - half, q + half, 1201)
    coarse = inner_vals(zs[:, None], xs[None, :]).min(axis=1) + 0.5 * (zs - q) ** 2
    k = int(np.argmin(coarse))
    r = optimize.minimize_scalar(lambda z: p(z) + 0.5 * (z - q) ** 2, bounds=(zs[k - 1], zs[k + 1]),
                                 method="bounded", options={"xatol": 1e-12})
    return r.x, r.fun


def _env(f, q):
    return C.moreau(f, 1.0, [q])[0]


def check_proximal_average():
    fixtures = [
        (X2, XM1, lambda x: x ** 2, lambda x: (x - 1) ** 2, 0.25),
        (X2, XM1, lambda x: x ** 2, lambda x: (x - 1) ** 2, 0.5),
        (ABS, XM1, np.abs, lambda x: (x - 1) ** 2, 0.5),
        (ABS, XM1, np.abs, lambda x: (x - 1) ** 2, 0.75),
    ]
    prox_err, env_err, spread = 0.0, 0.0, 0.0
    queries = np.linspace(-3.0, 3.0, 20)
    for f1, f2, f1v, f2v, lam in fixtures:
        w = Weights(lam)
        RA = ResolventAverage(sd(f1), sd(f2), w)
        for q in queries:
            z, val = _brute_prox_of_average(f1v, f2v, lam, q)
            prox_err = max(prox_err, abs(z - average_map(RA, [q])[0]))
            env_err = max(env_err, abs(val - (w.lambda1 * _env(f1, q) + w.lambda2 * _env(f2, q))))
        vals = list(formulation_minima(f1, f2, w).values())
        spread = max(spread, max(vals) - min(vals))
    ok = prox_err <= 1e-4 and env_err <= 1e-6 and spread <= 1e-6
    return ok, (f"prox of average {prox_err:.2e} (tol 1e-4), envelope {env_err:.2e} (tol 1e-6), "
                f"formulation minima spread {spread:.2e} (tol 1e-6)")


def test_criterion_7_proximal_average(say):
    ok, detail = check_proximal_average()
    say(7, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 8

def check_hygiene(pairs=1000, points=100, seed=99):
    rng = np.random.default_rng(seed)
    worst_slack, worst_fd = -np.inf, 0.0
    for kind in KINDS:
        for _ in range(pairs):
            dim = int(rng.integers(1, 4))
            f = C.scaled(random_function(rng, kind, dim), float(rng.uniform(0.2, 3.0)))
            gamma = float(rng.uniform(0.1, 3.0))
            x, y = rng.standard_normal((2, dim)) * 3
            d = C.prox(f, gamma, x) - C.prox(f, gamma, y)
            worst_slack = max(worst_slack, d @ d - d @ (x - y))
        for _ in range(points):
            dim = int(rng.integers(1, 4))
            f = random_function(rng, kind, dim)
            gamma = float(rng.uniform(0.2, 3.0))
            x = rng.standard_normal(dim) * 3
            g = C.moreau(f, gamma, x)[1]
            fd = finite_difference_grad(lambda v: C.moreau(f, gamma, v)[0], x)
            worst_fd = max(worst_fd, np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1.0))
    ok = worst_slack <= 1e-10 and worst_fd <= 1e-5
    return ok, (f"firm nonexpansiveness worst slack {worst_slack:.2e} (tol 1e-10), "
                f"envelope gradient worst relative error {worst_fd:.2e} (tol 1e-5)")


def test_criterion_8_hygiene(say):
    ok, detail = check_hygiene()
    say(8, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    checks = [check_disk_line, check_quadratics, check_abs_quadratic, check_counterexample,
              check_identity_suite, check_dual, check_proximal_average, check_hygiene]
    failed = 0
    for n, check in enumerate(checks, 1):
        ok, detail = check()
        failed += not ok
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    sys.exit(1 if failed else 0)
