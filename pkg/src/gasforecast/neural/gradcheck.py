"""Central finite-difference verification of analytic gradients."""

from typing import NamedTuple

import numpy as np


class GradCheckResult(NamedTuple):
    max_rel_error: float
    worst_param: str
    worst_index: tuple


def loss_and_grads(network, x, y):
    pred, cache = network.forward(x)
    diff = pred - y
    return float(np.mean(diff * diff)), network.backward(cache, 2.0 * diff / diff.size)


def gradient_check(network, x, y, h=1e-4, analytic=None, floor=1e-6):
    """Compare analytic MSE gradients with central differences on every coordinate.

    The relative error of a coordinate is ``|a - n| / max(|a|, |n|, floor)``.
    The floor keeps round-off in the difference quotient (about
    ``eps * loss / h``) from dominating coordinates whose gradient is itself
    near zero. ``h = 1e-4`` balances that round-off against the ``h**2``
    truncation term for 64-bit losses of order one. ``analytic`` overrides the network's own gradients, which is
    how the checker itself is tested.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).reshape(len(x), -1)
    if analytic is None:
        _, analytic = loss_and_grads(network, x, y)
    worst = GradCheckResult(0.0, "", ())
    for name, p in network.params.items():
        g = analytic[name]
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            up = np.mean((network.forward(x)[0] - y) ** 2)
            p[idx] = old - h
            down = np.mean((network.forward(x)[0] - y) ** 2)
            p[idx] = old
            num = (up - down) / (2.0 * h)
            err = abs(g[idx] - num) / max(abs(g[idx]), abs(num), floor)
            if err > worst.max_rel_error:
                worst = GradCheckResult(float(err), name, idx)
    network.touch()
    return worst
