"""Pure numpy implementation of the iteration kernels (fallback backend)."""
import math

import numpy as np

AFFINE, SOFT, BOX, BALL, HALFSPACE, AFFINE_SET, POINT = range(7)


def apply_resolvent(kind, p, k, x):
    n = x.shape[0]
    if kind == AFFINE:
        return p[: n * n].reshape(n, n) @ x + p[n * n:]
    if kind == SOFT:
        return np.sign(x) * np.maximum(np.abs(x) - p, 0.0)
    if kind == BOX:
        return np.minimum(np.maximum(x, p[:n]), p[n:])
    if kind == BALL:
        d = x - p[:n]
        nd = math.sqrt(d @ d)
        r = p[n]
        if nd <= r:
            return x.copy()
        return p[:n] + (r / nd) * d
    if kind == HALFSPACE:
        a = p[:n]
        s = a @ x - p[n]
        if s <= 0:
            return x.copy()
        return x - (s / p[n + 1]) * a
    if kind == AFFINE_SET:
        c = p[:n]
        U = p[n:].reshape(n, k)
        return c + U @ (U.T @ (x - c))
    if kind == POINT:
        return p[:n].copy()
    raise ValueError(f"unknown resolvent kind {kind}")


def iterate(mode, kind_a, pa, ka, kind_b, pb, kb, lambda1, x0, step_tol,
            max_iters, divergence_norm, thin):
    compose = mode == 1
    l2 = 1.0 - lambda1
    x = np.array(x0, dtype=float)
    steps = []
    idx, xs, auxs = [], [], []
    status = 1
    niter = 0
    if math.sqrt(x @ x) >= divergence_norm:
        status = 2
    else:
        for it in range(max_iters):
            if compose:
                y = apply_resolvent(kind_b, pb, kb, x)
                if it % thin == 0:
                    idx.append(it)
                    xs.append(x)
                    auxs.append(y)
                xn = apply_resolvent(kind_a, pa, ka, y)
            else:
                if it % thin == 0:
                    idx.append(it)
                    xs.append(x)
                xn = lambda1 * apply_resolvent(kind_a, pa, ka, x) + l2 * apply_resolvent(kind_b, pb, kb, x)
            d = xn - x
            step = math.sqrt(d @ d)
            steps.append(step)
            x = xn
            niter = it + 1
            if math.sqrt(x @ x) >= divergence_norm:
                status = 2
                break
            if step <= step_tol:
                status = 0
                break
    aux = apply_resolvent(kind_b, pb, kb, x) if compose else None
    idx.append(niter)
    xs.append(x)
    if compose:
        auxs.append(aux)
    n = x.shape[0]
    return (
        x, aux, np.array(steps, dtype=float), np.array(idx, dtype=np.int64),
        np.array(xs).reshape(-1, n), np.array(auxs).reshape(-1, n) if compose else None,
        status, niter,
    )
