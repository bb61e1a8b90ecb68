"""Independent oracles shared by the unit and acceptance tests."""

import numpy as np
import scipy.sparse as sp


def central_difference(f, params, h=1e-5):
    """Numerical gradient of scalar ``f`` w.r.t. every entry of every array in ``params``."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = f()
            flat[i] = old - h
            down = f()
            flat[i] = old
            gflat[i] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def relative_error(analytic, numeric):
    """Largest absolute gap scaled by the larger gradient's max magnitude."""
    a = np.concatenate([np.ravel(x) for x in analytic])
    b = np.concatenate([np.ravel(x) for x in numeric])
    return float(np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), 1e-8))


def small_problem(rng, n=None, V=None, k=None, sparse=True):
    n = n or int(rng.integers(5, 15))
    V = V or int(rng.integers(3, 8))
    k = k or int(rng.integers(1, 4))
    X = rng.normal(size=(n, V)) * (rng.random((n, V)) < 0.6)
    Y = (rng.random((n, k)) < 0.5).astype(np.int8)
    return (sp.csr_matrix(X) if sparse else X), Y


def brute_force_counts(pred, truth):
    """Cell-by-cell confusion recount with plain Python loops."""
    tp = fp = fn = tn = 0
    for prow, trow in zip(pred.tolist(), truth.tolist()):
        for p, t in zip(prow, trow):
            if p and t:
                tp += 1
            elif p:
                fp += 1
            elif t:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def brute_force_prf(pred, truth):
    tp, fp, fn, _ = brute_force_counts(pred, truth)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


# (criterion number, "PASS"/"FAIL", detail) rows printed at the end of the session
ACCEPTANCE_RESULTS = []
