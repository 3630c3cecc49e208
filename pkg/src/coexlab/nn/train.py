"""Mini-batch training loop for :class:`FcnModel`."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .fcn import FcnModel
from .layers import cross_entropy
from .optim import SGD, Adam, ReduceOnPlateau

log = logging.getLogger(__name__)


class NumericError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule.  Defaults are SGD with momentum at lr 1e-4;
    :meth:`adam` gives Adam with its standard step size."""

    optimizer: str = "SGD"
    lr: float = 1e-4
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch: int = 32
    epochs: int = 100
    plateau_factor: float = 0.5
    plateau_patience: int = 50
    plateau_threshold: float = 1e-4
    plateau_unit: str = "epoch"  # or "iteration"
    seed: int = 0
    time_budget_s: float | None = None

    def __post_init__(self):
        if self.optimizer not in ("SGD", "Adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.plateau_unit not in ("epoch", "iteration"):
            raise ValueError("plateau_unit must be 'epoch' or 'iteration'")

    @classmethod
    def adam(cls, **kw) -> "TrainConfig":
        kw.setdefault("lr", 1e-3)
        return cls(optimizer="Adam", **kw)


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("train_loss", "train_acc", "val_loss", "val_acc", "lr", "seconds")}


def make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "SGD":
        return SGD(cfg.lr, cfg.momentum, cfg.weight_decay)
    return Adam(cfg.lr, weight_decay=cfg.weight_decay)


def evaluate(model: FcnModel, x: np.ndarray, y: np.ndarray, batch: int = 256) -> tuple[float, float]:
    if len(x) == 0:
        return float("nan"), float("nan")
    z = model.logits(x, batch)
    loss, _ = cross_entropy(z, y)
    return loss, float((z.argmax(axis=1) == y).mean())


def carve_validation(x, y, frac: float = 0.1, seed: int = 0):
    """Hold out ``frac`` of the training chunks for the plateau scheduler."""
    n = len(x)
    perm = np.random.default_rng([seed, 0xA11]).permutation(n)
    n_val = int(round(frac * n))
    va, tr = perm[:n_val], perm[n_val:]
    return x[tr], y[tr], x[va], y[va]


def train(model: FcnModel, train_set, val_set, cfg: TrainConfig):
    """Minimize cross-entropy; returns ``(model, history)``.

    The plateau scheduler watches the validation loss (or the training loss
    when no validation data is given).
    """
    x, y = train_set
    x = np.asarray(x)
    y = np.asarray(y, dtype=int)
    if len(x) == 0:
        raise ValueError("empty training set")
    if y.min() < 0 or y.max() >= model.k:
        raise ValueError(f"labels must lie in 0..{model.k - 1}")
    xv, yv = (np.asarray(val_set[0]), np.asarray(val_set[1], dtype=int)) if val_set is not None else (None, None)
    if xv is not None and len(xv) == 0:
        xv = yv = None
    opt = make_optimizer(cfg)
    sched = ReduceOnPlateau(opt, cfg.plateau_factor, cfg.plateau_patience, cfg.plateau_threshold)
    rng = np.random.default_rng(cfg.seed)
    hist = History()
    t0 = time.perf_counter()
    model.train()
    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(x))
        tot_loss, correct = 0.0, 0
        for i in range(0, len(x), cfg.batch):
            idx = perm[i:i + cfg.batch]
            z = model.forward(x[idx])
            loss, g = cross_entropy(z, y[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {i // cfg.batch}, lr={opt.lr}")
            model.backward(g)
            opt.step(model.named_params())
            tot_loss += loss * len(idx)
            correct += int((z.argmax(axis=1) == y[idx]).sum())
            if cfg.plateau_unit == "iteration":
                sched.step(loss)
        hist.train_loss.append(tot_loss / len(x))
        hist.train_acc.append(correct / len(x))
        if xv is not None:
            vl, va = evaluate(model, xv, yv)
            model.train()
        else:
            vl, va = hist.train_loss[-1], hist.train_acc[-1]
        hist.val_loss.append(vl)
        hist.val_acc.append(va)
        hist.lr.append(opt.lr)
        if cfg.plateau_unit == "epoch":
            sched.step(vl)
        log.info("epoch %d loss %.4f acc %.4f val %.4f/%.4f lr %.2e", epoch, hist.train_loss[-1],
                 hist.train_acc[-1], vl, va, opt.lr)
        if cfg.time_budget_s is not None and time.perf_counter() - t0 > cfg.time_budget_s:
            log.warning("time budget reached after %d epochs", epoch + 1)
            break
    hist.seconds = time.perf_counter() - t0
    model.eval()
    return model, hist
