"""Parameter containers and small MLP helpers."""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad


class ParamStore(dict):
    """Ordered name -> Tensor mapping of learnable weights."""

    def add(self, name: str, value: np.ndarray) -> ad.Tensor:
        if name in self:
            raise KeyError(f"duplicate parameter {name}")
        t = ad.Tensor(value, requires_grad=True)
        self[name] = t
        return t

    def zero_grad(self):
        for t in self.values():
            t.grad = None

    def shapes(self) -> list:
        return [[k, list(v.shape)] for k, v in self.items()]

    def num_params(self) -> int:
        return int(sum(v.data.size for v in self.values()))


def init_linear(store: ParamStore, name: str, fan_in: int, fan_out: int, rng, dtype, gain: float = 2.0):
    std = np.sqrt(gain / fan_in)
    store.add(f"{name}.w", (rng.standard_normal((fan_in, fan_out)) * std).astype(dtype))
    store.add(f"{name}.b", np.zeros(fan_out, dtype=dtype))


def init_mlp(store: ParamStore, name: str, widths, rng, dtype):
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        init_linear(store, f"{name}.{i}", a, b, rng, dtype)


def linear(p: ParamStore, name: str, x):
    return ad.add(ad.matmul(x, p[f"{name}.w"]), p[f"{name}.b"])


def mlp(p: ParamStore, name: str, x, n_layers: int, final_act: bool = True, norm: bool = False):
    """Stack of linear layers with leaky ReLU (slope 0.2) between them.

    With ``norm`` every activated layer is linear -> row layer norm -> leaky ReLU.
    """
    for i in range(n_layers):
        x = linear(p, f"{name}.{i}", x)
        if final_act or i < n_layers - 1:
            if norm:
                x = ad.layer_norm_rows(x)
            x = ad.leaky_relu(x)
    return x


def lbr(p: ParamStore, name: str, x):
    """Linear, row layer norm, leaky ReLU."""
    return ad.leaky_relu(ad.layer_norm_rows(linear(p, name, x)))
