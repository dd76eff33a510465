"""Adaptive-moment first-order optimizer over named parameter dicts.

A model's trainable state is a flat ``dict[str, ndarray]``; the optimizer
keeps matching first/second moment accumulators per parameter. Setting both
moment decays to zero turns the rule into plain gradient descent
``p <- p - lr * g`` (the adaptive denominator is only active when the second
moment is actually tracked), which is what the tests pin against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteGradient, ShapeMismatch

ModelState = dict[str, np.ndarray]


@dataclass
class OptimizerState:
    """First/second moment accumulators plus the step counter."""

    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def optimizer_step(
    params: ModelState, grads: ModelState, opt: OptimizerState
) -> ModelState:
    """Apply one in-place update to ``params`` and return them.

    Raises :class:`NonFiniteGradient` if any gradient entry is NaN/Inf;
    parameters are untouched in that case.
    """
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(
                f"gradient shape {g.shape} != parameter shape {p.shape}"
                f" for {name!r}"
            )
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for {name!r}")

    opt.step_count += 1
    t = opt.step_count
    for name, p in params.items():
        g = grads[name]
        if name not in opt.m:
            opt.m[name] = np.zeros_like(p)
            opt.v[name] = np.zeros_like(p)
        m = opt.m[name]
        v = opt.v[name]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        m_hat = m / (1.0 - opt.beta1**t)
        if opt.beta2 > 0:
            v_hat = v / (1.0 - opt.beta2**t)
            p -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
        else:
            p -= opt.lr * m_hat
    return params
