"""Adam with bias correction over named parameter dicts."""

import numpy as np

from . import accel
from .autodiff import ContractError


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros(p.data.size) for k, p in self.params.items()}
        self._v = {k: np.zeros(p.data.size) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        """Apply one update; parameters with no gradient are skipped but
        their moments still decay, matching a zero-gradient update."""
        self.t += 1
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros(p.data.shape)
            if g.shape != p.data.shape:
                raise ContractError(
                    f"gradient shape {g.shape} does not match parameter '{k}' {p.data.shape}"
                )
            flat = p.data.reshape(-1)
            accel.adam_update(
                flat,
                np.ascontiguousarray(g.reshape(-1)),
                self._m[k],
                self._v[k],
                self.t,
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
            )
            p.data = flat.reshape(p.data.shape)
