"""Small MLP (backbone + projector) with hand-written backprop.

The backbone output is the representation evaluated by the linear probe;
the projector output is the embedding fed to the twin-view losses. ReLU
between layers, linear final layer in each stage, He-initialized weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths for backbone and projector.

    ``backbone`` runs input -> representation, ``projector`` runs
    representation -> embedding; projector[0] must equal backbone[-1] and
    the final width is the embedding dimension d >= 2.
    """

    backbone: tuple[int, ...]
    projector: tuple[int, ...]
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        if len(self.backbone) < 2 or len(self.projector) < 2:
            raise ConfigError("backbone and projector need at least in/out widths")
        widths = self.backbone + self.projector
        if any(w < 1 for w in widths):
            raise ConfigError("layer widths must be positive")
        if self.projector[0] != self.backbone[-1]:
            raise ConfigError("projector input width must match backbone output")
        if self.projector[-1] < 2:
            raise ConfigError("embedding dimension must be >= 2")
        if self.activation != "relu":
            raise ConfigError(f"unsupported activation {self.activation!r}")

    @property
    def d(self) -> int:
        return self.projector[-1]


def default_mlp_spec(input_dim: int, d: int, backbone_out: int = 32, seed: int = 0) -> MlpSpec:
    return MlpSpec(
        backbone=(input_dim, 256, 256, backbone_out),
        projector=(backbone_out, d),
        seed=seed,
    )


class Mlp:
    """Feed-forward net: ReLU after every layer except the last of each stage."""

    def __init__(self, spec: MlpSpec):
        self.spec = spec
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        widths = list(spec.backbone) + list(spec.projector[1:])
        self.n_backbone = len(spec.backbone) - 1
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            w = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def _layer_is_linear(self, idx: int) -> bool:
        # last layer of the backbone and last layer overall stay linear
        return idx == self.n_backbone - 1 or idx == len(self.weights) - 1

    def forward(self, x: np.ndarray):
        """Returns (embeddings, cache); cache feeds backward()."""
        h = x
        cache = []
        for idx, (w, bias) in enumerate(zip(self.weights, self.biases)):
            pre = h @ w + bias
            post = pre if self._layer_is_linear(idx) else np.maximum(pre, 0.0)
            cache.append((h, pre))
            h = post
        return h, cache

    def representations(self, x: np.ndarray) -> np.ndarray:
        """Backbone output only (what the probe sees)."""
        h = x
        for idx in range(self.n_backbone):
            pre = h @ self.weights[idx] + self.biases[idx]
            h = pre if self._layer_is_linear(idx) else np.maximum(pre, 0.0)
        return h

    def embeddings(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of all weights/biases given d(loss)/d(embeddings)."""
        gw = [None] * len(self.weights)
        gb = [None] * len(self.weights)
        delta = grad_out
        for idx in range(len(self.weights) - 1, -1, -1):
            h, pre = cache[idx]
            if not self._layer_is_linear(idx):
                delta = delta * (pre > 0)
            gw[idx] = h.T @ delta
            gb[idx] = delta.sum(axis=0)
            if idx > 0:
                delta = delta @ self.weights[idx].T
        return gw, gb


class SgdMomentum:
    """SGD with momentum: v <- m v + g + wd w; w <- w - lr v.

    The small weight decay bounds the norm drift of scale-invariant losses
    (whose gradients are orthogonal to the scale direction, so plain SGD
    grows the weights without it).
    """

    def __init__(self, net: Mlp, lr: float, momentum: float = 0.9, weight_decay: float = 0.0):
        self.net = net
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.vw = [np.zeros_like(w) for w in net.weights]
        self.vb = [np.zeros_like(b) for b in net.biases]

    def step(self, gw, gb):
        for i in range(len(self.net.weights)):
            self.vw[i] = self.momentum * self.vw[i] + gw[i] + self.weight_decay * self.net.weights[i]
            self.vb[i] = self.momentum * self.vb[i] + gb[i]
            self.net.weights[i] -= self.lr * self.vw[i]
            self.net.biases[i] -= self.lr * self.vb[i]
