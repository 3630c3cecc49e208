"""Central finite-difference check of the hand-written backward passes."""

from __future__ import annotations

import numpy as np

from .layers import Layer, cross_entropy


def grad_check(layer: Layer, x: np.ndarray, theta: str | None = None, h: float = 1e-5,
               labels: np.ndarray | None = None, n_coords: int = 40, seed: int = 0) -> float:
    """Max relative error between analytic and numeric gradients.

    ``theta`` names a parameter of ``layer``; ``None`` checks the input
    gradient.  Without ``labels`` the scalar loss is ``sum(out * r)`` for a
    fixed random ``r``; with labels it is softmax cross-entropy on the
    output.  Run in float64.
    """
    if not 1e-6 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-6, 1e-3]")
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    out = layer.forward(x)
    r = rng.standard_normal(out.shape)

    def loss_and_grad(inp):
        o = layer.forward(inp)
        if labels is not None:
            return cross_entropy(o, labels)
        return float((o * r).sum()), r

    _, g = loss_and_grad(x)
    dx = layer.backward(g)
    analytic = dx if theta is None else layer.grads[theta]
    target = x if theta is None else layer.params[theta]
    flat = target.reshape(-1)
    coords = rng.choice(flat.size, size=min(n_coords, flat.size), replace=False)
    worst = 0.0
    for c in coords:
        old = flat[c]
        flat[c] = old + h
        lp, _ = loss_and_grad(x)
        flat[c] = old - h
        lm, _ = loss_and_grad(x)
        flat[c] = old
        num = (lp - lm) / (2 * h)
        a = analytic.reshape(-1)[c]
        denom = max(abs(a) + abs(num), 1e-8)
        worst = max(worst, abs(a - num) / denom)
    return worst
