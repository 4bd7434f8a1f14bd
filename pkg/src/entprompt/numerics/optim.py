"""AdamW with decoupled weight decay."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .tensor import Tensor


class AdamW:
    """AdamW over a name -> Tensor map.

    Parameters with ``requires_grad=False`` or no gradient are skipped, so
    frozen weights never move and never acquire moment state.
    """

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 1e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        if lr <= 0:
            raise ValueError(f"AdamW: learning rate must be positive, got {lr}")
        if not (0.0 <= betas[0] < 1.0 and 0.0 <= betas[1] < 1.0):
            raise ValueError(f"AdamW: betas must lie in [0, 1), got {betas}")
        self.params = dict(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items() if p.requires_grad}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items() if p.requires_grad}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1**self.step_count
        c2 = 1.0 - b2**self.step_count
        for name, p in self.params.items():
            if not p.requires_grad or p.grad is None:
                continue
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data = p.data * (1.0 - self.lr * self.weight_decay) - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"step": np.asarray([self.step_count], dtype=np.int64)}
        for name in self.m:
            out[f"m/{name}"] = self.m[name]
            out[f"v/{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        self.step_count = int(arrays["step"][0])
        for name in self.m:
            self.m[name] = np.array(arrays[f"m/{name}"])
            self.v[name] = np.array(arrays[f"v/{name}"])


def adamw_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], lr: float,
               betas=(0.9, 0.999), weight_decay: float = 0.01, state: AdamW | None = None) -> AdamW:
    """Functional form: apply one update with explicit grads, returning the optimizer state."""
    opt = state if state is not None else AdamW(params, lr=lr, betas=betas, weight_decay=weight_decay)
    for name, g in grads.items():
        opt.params[name].grad = np.asarray(g, dtype=np.float64)
    opt.step()
    return opt
