"""Adam optimizer (bias-corrected, non-decoupled weight decay).

Weight decay is handled exclusively through the loss's L2 term, never
inside the update rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError

__all__ = ["AdamState", "adam_step"]


@dataclass
class AdamState:
    m: list = field(default_factory=list)   # first moments
    v: list = field(default_factory=list)   # second moments
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_tensors(cls, tensors):
        return cls(
            m=[np.zeros_like(t) for t in tensors],
            v=[np.zeros_like(t) for t in tensors],
        )


def adam_step(tensors, grads, state, lr):
    """Update `tensors` in place with one Adam step."""
    if len(tensors) != len(grads) or len(tensors) != len(state.m):
        raise TrainingError("parameter/gradient/state lists disagree")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient encountered")
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for t, g, m, v in zip(tensors, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        t -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
