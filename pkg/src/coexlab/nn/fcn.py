"""Fully convolutional time-series classifier: 3 x (conv, BN, ReLU), GAP, dense."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..dataset import NormStats, clip_outliers, normalize
from .conv import ShapeError
from .layers import BatchNorm1d, Conv1d, Dense, GlobalAvgPool, ReLU, softmax

KERNELS = (8, 5, 3)
FILTERS = (128, 256, 128)
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


class FcnModel:
    """FCN over raw chunks of width ``w`` with ``k`` output classes.

    ``norm_stats`` travel with the model so inference can apply the same
    clipping and normalization that the training data went through.
    ``compression`` > 0 runs every conv block through the masked FFT route.
    """

    def __init__(self, k: int, w: int, filters=FILTERS, seed: int = 0, dtype=np.float32,
                 compression: float = 0.0, norm_stats: NormStats | None = None, eps: float = 1e-5):
        if k < 2:
            raise ValueError("need at least two classes")
        if w < 1:
            raise ValueError("chunk width must be positive")
        if len(filters) != 3:
            raise ValueError("three conv blocks expected")
        self.k, self.w = int(k), int(w)
        self.filters = tuple(int(f) for f in filters)
        self.kernels = KERNELS
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        self.compression = float(compression)
        self.norm_stats = norm_stats
        rng = np.random.default_rng(seed)
        self.layers = []
        c_in = 1
        for f, kk in zip(self.filters, self.kernels):
            conv = Conv1d(c_in, f, kk, rng, self.dtype, compression=self.compression)
            self.layers += [conv, BatchNorm1d(f, eps, dtype=self.dtype), ReLU()]
            c_in = f
        self.layers[0].need_dx = False
        self.layers += [GlobalAvgPool(), Dense(c_in, self.k, rng, self.dtype)]

    # ── modes and parameters ──

    def train(self):
        for layer in self.layers:
            layer.training = True
        return self

    def eval(self):
        for layer in self.layers:
            layer.training = False
        return self

    def named_params(self):
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                yield f"{i}.{name}", layer, name

    def param_count(self) -> int:
        return sum(layer.params[n].size for _, layer, n in self.named_params())

    # ── compute ──

    def _as_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 3 and x.shape[1] == 1:
            x = x[:, 0, :]
        if x.ndim != 2:
            raise ShapeError(f"expected (batch, w) chunks, got {x.shape}")
        if x.shape[1] != self.w:
            raise ShapeError(f"model built for width {self.w}, got {x.shape[1]}")
        x = x[:, :, None]
        return x.astype(self.dtype, copy=False)

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self._as_input(x)
        for layer in self.layers:
            h = layer.forward(h)
        return h

    def backward(self, g: np.ndarray) -> None:
        for layer in reversed(self.layers):
            g = layer.backward(g)
            if g is None:
                break

    def logits(self, x: np.ndarray, batch: int = 256) -> np.ndarray:
        """Inference-mode logits; restores the previous mode afterwards."""
        was_training = self.layers[1].training
        self.eval()
        try:
            out = [self.forward(x[i:i + batch]) for i in range(0, len(x), batch)]
        finally:
            if was_training:
                self.train()
        return np.concatenate(out) if out else np.zeros((0, self.k), dtype=self.dtype)

    def predict_proba(self, x: np.ndarray, batch: int = 256) -> np.ndarray:
        return softmax(self.logits(x, batch).astype(np.float64))

    def predict(self, x: np.ndarray, candidates=None, batch: int = 256) -> np.ndarray:
        """Class ids; ``candidates`` restricts the argmax to a subset of labels."""
        z = self.logits(x, batch)
        if candidates is None:
            return z.argmax(axis=1)
        cand = np.asarray(sorted(candidates))
        return cand[z[:, cand].argmax(axis=1)]

    def prepare(self, raw: np.ndarray) -> np.ndarray:
        """Clip and normalize raw dBm values with the model's training statistics."""
        if self.norm_stats is None:
            raise ValueError("model carries no normalization statistics")
        return normalize(clip_outliers(np.asarray(raw, dtype=float), self.norm_stats), self.norm_stats)

    # ── checkpoint ──

    def config(self) -> dict:
        return {
            "k": self.k, "w": self.w, "filters": list(self.filters), "kernels": list(self.kernels),
            "seed": self.seed, "dtype": self.dtype.name, "compression": self.compression,
            "eps": self.layers[1].eps,
        }

    def save(self, path) -> None:
        arrays = {name: layer.params[p] for name, layer, p in self.named_params()}
        for i, layer in enumerate(self.layers):
            if isinstance(layer, BatchNorm1d):
                arrays[f"{i}.running_mean"] = layer.running_mean
                arrays[f"{i}.running_var"] = layer.running_var
        meta = {"version": CHECKPOINT_VERSION, "config": self.config(),
                "norm_stats": None if self.norm_stats is None else self.norm_stats.to_dict()}
        arrays["__meta__"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
        path = Path(path)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "FcnModel":
        with np.load(path, allow_pickle=False) as data:
            if "__meta__" not in data:
                raise CheckpointError(f"{path}: not a model checkpoint")
            meta = json.loads(bytes(data["__meta__"]).decode())
            if meta.get("version") != CHECKPOINT_VERSION:
                raise CheckpointError(f"{path}: checkpoint version {meta.get('version')}, "
                                      f"expected {CHECKPOINT_VERSION}")
            cfg = meta["config"]
            if tuple(cfg["kernels"]) != KERNELS:
                raise CheckpointError(f"{path}: unsupported kernel sizes {cfg['kernels']}")
            ns = meta.get("norm_stats")
            model = cls(cfg["k"], cfg["w"], cfg["filters"], cfg["seed"], np.dtype(cfg["dtype"]),
                        cfg["compression"], NormStats.from_dict(ns) if ns else None, cfg["eps"])
            for name, layer, p in model.named_params():
                arr = data[name]
                if arr.shape != layer.params[p].shape:
                    raise CheckpointError(f"{path}: shape mismatch for {name}")
                layer.params[p] = arr.copy()
            for i, layer in enumerate(model.layers):
                if isinstance(layer, BatchNorm1d):
                    layer.running_mean = data[f"{i}.running_mean"].copy()
                    layer.running_var = data[f"{i}.running_var"].copy()
        return model.eval()
