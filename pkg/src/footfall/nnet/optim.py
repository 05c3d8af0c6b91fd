"""Stochastic gradient descent with classical momentum."""

from __future__ import annotations

import numpy as np

from ..errors import FootfallError


class MomentumSgd:
    """v <- momentum * v + g; p <- p - lr * v, over an aligned list of params."""

    def __init__(self, params, lr: float = 0.01, momentum: float = 0.9):
        if lr <= 0:
            raise FootfallError("learning rate must be positive", lr=lr)
        if not 0.0 <= momentum < 1.0:
            raise FootfallError("momentum must be in [0, 1)", momentum=momentum)
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads) -> None:
        if len(grads) != len(self.params):
            raise FootfallError("gradient list does not match the parameters",
                                params=len(self.params), grads=len(grads))
        for p, v, g in zip(self.params, self.velocity, grads):
            v *= self.momentum
            v += g
            p.data -= self.lr * v
