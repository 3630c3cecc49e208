"""SGD with momentum, Adam, and a reduce-on-plateau schedule.

Weight decay is applied as an L2 term added to the gradient.
"""

from __future__ import annotations

import numpy as np


class Optimizer:
    def __init__(self, lr: float, weight_decay: float = 0.0):
        if lr < 0:
            raise ValueError("learning rate must be nonnegative")
        self.lr = lr
        self.weight_decay = weight_decay
        self.state: dict[str, dict] = {}

    def _grad(self, p, g):
        return g + self.weight_decay * p if self.weight_decay else g

    def step(self, named) -> None:
        """``named`` yields (key, layer, param_name) triples."""
        for key, layer, name in named:
            if name not in layer.grads:
                continue
            p = layer.params[name]
            layer.params[name] = self._update(key, p, self._grad(p, layer.grads[name])).astype(p.dtype, copy=False)


class SGD(Optimizer):
    def __init__(self, lr: float = 1e-4, momentum: float = 0.9, weight_decay: float = 1e-4):
        super().__init__(lr, weight_decay)
        self.momentum = momentum

    def _update(self, key, p, g):
        st = self.state.setdefault(key, {"v": np.zeros_like(p)})
        st["v"] = self.momentum * st["v"] + g
        return p - self.lr * st["v"]


class Adam(Optimizer):
    def __init__(self, lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8, weight_decay: float = 1e-4):
        super().__init__(lr, weight_decay)
        self.b1, self.b2 = betas
        self.eps = eps

    def _update(self, key, p, g):
        st = self.state.setdefault(key, {"m": np.zeros_like(p), "v": np.zeros_like(p), "t": 0})
        st["t"] += 1
        st["m"] = self.b1 * st["m"] + (1 - self.b1) * g
        st["v"] = self.b2 * st["v"] + (1 - self.b2) * g * g
        mhat = st["m"] / (1 - self.b1 ** st["t"])
        vhat = st["v"] / (1 - self.b2 ** st["t"])
        return p - self.lr * mhat / (np.sqrt(vhat) + self.eps)


class ReduceOnPlateau:
    """Multiply the lr by ``factor`` after ``patience`` steps without improvement.

    A step counts as an improvement when the metric drops below the best
    value by more than ``threshold``.
    """

    def __init__(self, optimizer: Optimizer, factor: float = 0.5, patience: int = 50,
                 threshold: float = 1e-4, min_lr: float = 0.0):
        self.opt = optimizer
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.min_lr = min_lr
        self.best = np.inf
        self.bad = 0

    def step(self, metric: float) -> bool:
        if metric < self.best - self.threshold:
            self.best = metric
            self.bad = 0
            return False
        self.bad += 1
        if self.bad > self.patience:
            self.opt.lr = max(self.min_lr, self.opt.lr * self.factor)
            self.bad = 0
            return True
        return False
