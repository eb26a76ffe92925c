"""Dense real-matrix primitives: the fully connected layer with explicit
forward/backward rules, the ReLU activation, the Adam optimizer, and a
central finite-difference gradient checker.

All raw math lives here. Matrices are C-contiguous float64 numpy arrays
(row-major); vectors are 1-D arrays. Every function is deterministic and
pure except adam_step, which updates its AdamState in place (single
writer: one training loop owns one state).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import OptimizerError, ShapeError


def as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64))


@dataclass
class LinearLayer:
    """Fully connected layer y = W x + b with W of shape [d_out, d_in]."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = as_f64(self.weight)
        self.bias = as_f64(self.bias)
        if self.weight.ndim != 2:
            raise ShapeError(f"weight must be 2-D, got shape {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match weight rows "
                f"{self.weight.shape[0]}"
            )

    @property
    def d_in(self) -> int:
        return self.weight.shape[1]

    @property
    def d_out(self) -> int:
        return self.weight.shape[0]

    def n_params(self) -> int:
        return self.weight.size + self.bias.size


def linear_forward(x: np.ndarray, layer: LinearLayer) -> np.ndarray:
    """W x + b for a single vector [d_in] or a stack of rows [n, d_in]."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.d_in:
        raise ShapeError(
            f"input has {x.shape[-1]} features, layer expects {layer.d_in}"
        )
    return x @ layer.weight.T + layer.bias


def linear_backward(
    x: np.ndarray, layer: LinearLayer, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reverse-mode rule for linear_forward.

    grad_weight = grad_out outer x, grad_bias = grad_out, grad_x = W^T grad_out.
    For stacked rows [n, d] the weight/bias gradients sum over the stack.
    """
    x = np.asarray(x, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if x.shape[-1] != layer.d_in:
        raise ShapeError(f"x has {x.shape[-1]} features, expected {layer.d_in}")
    if grad_out.shape[-1] != layer.d_out:
        raise ShapeError(
            f"grad_out has {grad_out.shape[-1]} features, expected {layer.d_out}"
        )
    if x.ndim != grad_out.ndim or x.shape[:-1] != grad_out.shape[:-1]:
        raise ShapeError(
            f"x shape {x.shape} and grad_out shape {grad_out.shape} disagree"
        )
    if x.ndim == 1:
        grad_weight = np.outer(grad_out, x)
        grad_bias = grad_out.copy()
    else:
        grad_weight = grad_out.T @ x
        grad_bias = grad_out.sum(axis=0)
    grad_x = grad_out @ layer.weight
    return grad_x, grad_weight, grad_bias


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Pass gradient where x > 0; the subgradient at exactly 0 is 0."""
    x = np.asarray(x, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if x.shape != grad_out.shape:
        raise ShapeError(f"x shape {x.shape} != grad_out shape {grad_out.shape}")
    return np.where(x > 0.0, grad_out, 0.0)


@dataclass
class AdamState:
    """Per-tensor Adam moments. v entries stay >= 0 by construction."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, param: np.ndarray, **kwargs) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param), **kwargs)


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    name: str = "param",
) -> np.ndarray:
    """One Adam update with bias-corrected moments; returns the new param.

    The state is advanced in place (step incremented before bias correction).
    """
    if param.shape != grad.shape or param.shape != state.m.shape:
        raise ShapeError(
            f"{name}: param {param.shape}, grad {grad.shape}, "
            f"state {state.m.shape} disagree"
        )
    if not np.all(np.isfinite(grad)):
        raise OptimizerError(f"non-finite gradient for parameter '{name}'")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    return param - lr * m_hat / (np.sqrt(v_hat) + state.eps)


LossAndGrad = Callable[[dict], tuple[float, dict]]


def finite_diff_check(
    loss_and_grad: LossAndGrad,
    params: dict[str, np.ndarray],
    perturbation: float = 1e-6,
) -> float:
    """Max relative error between analytic gradients and central differences.

    loss_and_grad(params) must return (loss, grads) with grads mirroring the
    params dict. Parameters are perturbed in place and restored. The relative
    error per entry is |analytic - fd| / max(|analytic|, |fd|, 1e-8).
    """
    _, analytic = loss_and_grad(params)
    worst = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        g = np.asarray(analytic[name]).reshape(-1)
        if g.shape != flat.shape:
            raise ShapeError(
                f"gradient for '{name}' has {g.size} entries, "
                f"parameter has {flat.size}"
            )
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + perturbation
            loss_plus, _ = loss_and_grad(params)
            flat[k] = orig - perturbation
            loss_minus, _ = loss_and_grad(params)
            flat[k] = orig
            fd = (loss_plus - loss_minus) / (2.0 * perturbation)
            denom = max(abs(g[k]), abs(fd), 1e-8)
            err = abs(g[k] - fd) / denom
            if err > worst:
                worst = err
    return worst
