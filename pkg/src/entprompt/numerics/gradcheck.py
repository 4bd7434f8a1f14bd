"""Central finite-difference gradient checking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .tensor import Tensor, backward, no_grad


@dataclass
class ParamCheck:
    name: str
    max_rel_err: float
    worst_index: tuple
    checked: int


@dataclass
class GradCheckReport:
    tol: float
    params: list[ParamCheck] = field(default_factory=list)

    @property
    def max_rel_err(self) -> float:
        return max((p.max_rel_err for p in self.params), default=0.0)

    @property
    def failures(self) -> list[ParamCheck]:
        return [p for p in self.params if not p.max_rel_err < self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        lines = [f"grad_check tol={self.tol:g} {'PASS' if self.passed else 'FAIL'}"]
        for p in self.params:
            lines.append(f"  {p.name}: max rel err {p.max_rel_err:.3e} over {p.checked} entries")
        return "\n".join(lines)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - n| / max(|a|, |n|, 1).

    Falls back to absolute error for gradients below unit magnitude, where a
    ratio of two round-off-sized numbers carries no information.
    """
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)


def grad_check(
    fn: Callable[[], Tensor],
    params: Mapping[str, Tensor] | Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare tape gradients of the scalar ``fn()`` against central differences.

    ``fn`` is re-evaluated after perturbing each parameter entry in place, so
    it must read the parameters afresh on every call. ``max_entries`` limits
    the number of entries probed per parameter (sampled with ``rng``).
    """
    if not isinstance(params, Mapping):
        params = {f"p{i}": p for i, p in enumerate(params)}
    for p in params.values():
        p.grad = None
    loss = fn()
    backward(loss)

    report = GradCheckReport(tol=tol)
    for name, p in params.items():
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        p.data = np.ascontiguousarray(p.data)
        flat = p.data.reshape(-1)
        idxs = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            gen = rng if rng is not None else np.random.Generator(np.random.Philox(0))
            idxs = np.sort(gen.choice(flat.size, size=max_entries, replace=False))
        numeric = np.empty(idxs.size)
        with no_grad():
            for n, i in enumerate(idxs):
                orig = flat[i]
                flat[i] = orig + h
                up = fn().item()
                flat[i] = orig - h
                down = fn().item()
                flat[i] = orig
                numeric[n] = (up - down) / (2 * h)
        err = relative_error(analytic.reshape(-1)[idxs], numeric)
        worst = int(np.argmax(err)) if err.size else 0
        report.params.append(ParamCheck(
            name=name,
            max_rel_err=float(err.max()) if err.size else 0.0,
            worst_index=np.unravel_index(idxs[worst], p.shape) if err.size else (),
            checked=int(idxs.size),
        ))
        p.grad = None
    return report
