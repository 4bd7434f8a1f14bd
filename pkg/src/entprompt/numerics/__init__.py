"""Dense float64 arrays with reverse-mode differentiation, layers, AdamW,
gradient checking and checkpoint archives."""

from .tensor import (
    DTYPE,
    NumericFault,
    ShapeError,
    TapeError,
    Tensor,
    add,
    affine,
    as_tensor,
    backward,
    broadcast_to,
    clip,
    concat,
    cross_entropy,
    custom_op,
    div,
    embedding,
    exp,
    gelu,
    getitem,
    grad_enabled,
    layer_norm,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    no_grad,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    sub,
    sum_,
    swapaxes,
    tanh,
)
from .gradcheck import GradCheckReport, grad_check, relative_error
from .optim import AdamW, adamw_step
from .layers import FeedForward, LayerNorm, Linear, Module, MultiHeadAttention
from .rng import derive_seed, make_rng
from .checkpoint import load_archive, save_archive
