"""Adam optimizer and the on-disk parameter checkpoint format.

A checkpoint is a directory of TNSR files, one per parameter, plus
manifest.txt with tab-separated lines `name<TAB>filename<TAB>shape`.
"""

import os

import numpy as np

from .tensorio import tensor_read, tensor_write


class Adam:
    """Standard Adam with bias correction; one moment pair per parameter."""

    def __init__(self, params, lr=2e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("Adam: parameter names must be unique")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad if p.grad is not None else np.zeros_like(p.value)
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def save_checkpoint(params, dirpath):
    """Write each parameter as <name>.tnsr plus a manifest."""
    os.makedirs(dirpath, exist_ok=True)
    lines = []
    for p in sorted(params, key=lambda p: p.name):
        fname = f"{p.name}.tnsr"
        tensor_write(p.value, os.path.join(dirpath, fname))
        shape = "x".join(str(d) for d in p.value.shape)
        lines.append(f"{p.name}\t{fname}\t{shape}\n")
    with open(os.path.join(dirpath, "manifest.txt"), "w") as fh:
        fh.writelines(lines)


def load_checkpoint(dirpath):
    """Read a checkpoint directory into {name: ndarray}."""
    manifest = os.path.join(dirpath, "manifest.txt")
    if not os.path.exists(manifest):
        raise FileNotFoundError(f"load_checkpoint: no manifest.txt in {dirpath}")
    out = {}
    with open(manifest) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            name, fname, shape_s = line.split("\t")
            arr = tensor_read(os.path.join(dirpath, fname))
            shape = tuple(int(s) for s in shape_s.split("x"))
            if arr.shape != shape:
                raise ValueError(
                    f"load_checkpoint: {name} has shape {arr.shape}, manifest says {shape}"
                )
            out[name] = arr
    return out
