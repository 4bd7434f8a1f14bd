#!/usr/bin/env python3
# Tape-based gradients on small float64 arrays, checked against finite differences.

import numpy as np
from entprompt import numerics as N

rng = N.make_rng(0)
x = N.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
w = N.Tensor(rng.normal(size=(2, 4)), requires_grad=True)
b = N.Tensor(np.zeros(2), requires_grad=True)
target = N.Tensor(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]))


def f():
    return -(N.log_softmax(N.affine(x, w, b)) * target).sum() + (N.tanh(x) * x).mean()


loss = f()
N.backward(loss)
print("loss", loss.item())
print("dL/dw\n", w.grad)

# central differences, h = 1e-5, relative error per parameter
report = N.grad_check(f, {"x": x, "w": w, "b": b})
print(report)

# a linear layer with a low-rank adapter: B starts at zero so the output is unchanged
lin = N.Linear(4, 2, rng)
before = lin(x).data.copy()
lin.enable_lora(2, 8.0, rng)
print("adapter at init changes output:", not np.array_equal(before, lin(x).data))
print("trainable:", sorted(lin.trainable_parameters()))
