"""Small fully connected classifier with a latent tap.

One forward traversal yields both the logits and the activations of the last
hidden layer (the latent representation every distance loss is computed on).
"""

from __future__ import annotations

import copy

import numpy as np

from . import tensor as tt
from .tensor import Tape, Tensor


class ForwardResult:
    __slots__ = ("logits", "latents", "params")

    def __init__(self, logits, latents, params):
        self.logits = logits
        self.latents = latents
        self.params = params


class MlpModel:
    """ReLU MLP: widths[0] -> ... -> widths[-2] (latent) -> widths[-1] logits.

    Weights use seeded uniform fan-in (Kaiming-style) initialization with
    zero biases. Dropout (inverted) follows every hidden activation during
    training, so the latent tap sees exactly what the head consumes.
    """

    def __init__(self, widths, dropout_prob: float = 0.0, seed: int = 0):
        widths = [int(w) for w in widths]
        if len(widths) < 3:
            raise ValueError("need at least input, one hidden (latent), and output widths")
        if any(w < 1 for w in widths):
            raise ValueError("layer widths must be positive")
        if not 0.0 <= dropout_prob < 1.0:
            raise ValueError("dropout_prob must be in [0, 1)")
        self.widths = widths
        self.dropout_prob = dropout_prob
        rng = np.random.default_rng([seed, 7])
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def latent_tap(self) -> int:
        """Index (into widths) of the layer feeding the classification head."""
        return len(self.widths) - 2

    @property
    def latent_dim(self) -> int:
        return self.widths[-2]

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_parameters(self, params) -> None:
        for dst, src in zip(self.parameters(), params):
            np.copyto(dst, src)

    def snapshot(self) -> list:
        return [p.copy() for p in self.parameters()]

    def forward(self, x, tape: Tape | None = None, train: bool = False,
                dropout_rng: np.random.Generator | None = None) -> ForwardResult:
        """Run the network; returns logits, latents, and the parameter leaves
        (tracked when a tape is supplied)."""
        track = tape is not None
        if tape is None:
            tape = Tape()
        if train and self.dropout_prob > 0.0 and dropout_rng is None:
            raise ValueError("training forward with dropout needs a generator")

        leaves = []
        for w, b in zip(self.weights, self.biases):
            leaves.append(tape.leaf(w, requires_grad=track))
            leaves.append(tape.leaf(b, requires_grad=track))

        h = Tensor(np.asarray(x, dtype=np.float64))
        n_layers = len(self.weights)
        latents = None
        for i in range(n_layers):
            h = tt.matmul(h, leaves[2 * i]) + leaves[2 * i + 1]
            if i < n_layers - 1:
                h = tt.relu(h)
                if train and self.dropout_prob > 0.0:
                    h = tt.dropout(h, self.dropout_prob, dropout_rng)
                if i == n_layers - 2:
                    latents = h
        return ForwardResult(logits=h, latents=latents, params=leaves)

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.forward(x).logits.data, axis=1)

    def clone(self) -> "MlpModel":
        other = MlpModel.__new__(MlpModel)
        other.widths = list(self.widths)
        other.dropout_prob = self.dropout_prob
        other.weights = copy.deepcopy(self.weights)
        other.biases = copy.deepcopy(self.biases)
        return other
