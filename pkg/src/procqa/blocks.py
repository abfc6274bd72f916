"""Reusable neural blocks: embeddings, the gated recurrent cell, MLP heads,
and question attention.

Initialization convention (shared by every block): weights are uniform on
[-1/sqrt(fan_in), +1/sqrt(fan_in)], biases are zero, and the recurrent
cell's forget-gate bias is 1.0.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import ContractError, DimensionError, Tensor

PAD_ID = 0
UNK_ID = 1


def uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class EmbeddingTable:
    """Trainable token embeddings. Row 0 is padding and is never trained."""

    def __init__(self, vocab_size, dim, rng):
        if vocab_size < 2:
            raise ContractError("vocab needs at least padding and unknown ids")
        w = uniform_init(rng, (vocab_size, dim), fan_in=dim)
        w[PAD_ID] = 0.0
        self.vocab_size = vocab_size
        self.dim = dim
        self.weights = ad.parameter(w, op="embedding")

    def lookup(self, ids):
        return ad.embedding_lookup(self.weights, ids, skip_id=PAD_ID)

    def params(self, prefix):
        return {f"{prefix}.weights": self.weights}


class GatedRecurrentCell:
    """Four-gate recurrent cell (input/forget/output/candidate) with
    step-invariant parameters. Hidden and cell state are hidden_dim wide."""

    def __init__(self, input_dim, hidden_dim, rng):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.wx = ad.parameter(uniform_init(rng, (4 * hidden_dim, input_dim), input_dim), op="cell.wx")
        self.wh = ad.parameter(uniform_init(rng, (4 * hidden_dim, hidden_dim), hidden_dim), op="cell.wh")
        b = np.zeros(4 * hidden_dim)
        b[hidden_dim : 2 * hidden_dim] = 1.0  # forget gate starts open
        self.b = ad.parameter(b, op="cell.b")

    def step(self, x, h, c):
        return ad.lstm_step(x, h, c, self.wx, self.wh, self.b)

    def zero_state(self):
        z = np.zeros(self.hidden_dim)
        return Tensor(z), Tensor(z.copy())

    def params(self, prefix):
        return {f"{prefix}.wx": self.wx, f"{prefix}.wh": self.wh, f"{prefix}.b": self.b}


def encode_sequence(cell, inputs):
    """Run ``cell`` over a sequence from zero state.

    ``inputs`` is either a (T, input_dim) tensor or a non-empty list of
    1D tensors. Returns (final_hidden, all_hiddens).
    """
    if isinstance(inputs, (list, tuple)):
        if len(inputs) == 0:
            raise ContractError("encode_sequence: empty sequence")
        inputs = ad.stack_rows(inputs)
    if inputs.data.ndim != 2:
        raise DimensionError(f"encode_sequence expects (T, d) inputs, got {inputs.shape}")
    if inputs.shape[0] == 0:
        raise ContractError("encode_sequence: empty sequence")
    hs = ad.lstm_sequence(inputs, cell.wx, cell.wh, cell.b)
    final = ad.index_row(hs, inputs.shape[0] - 1)
    return final, hs


def question_attend(q, xs):
    """Weight segment features by softmax-normalized dot products with q.

    ``xs`` is an (N, d) matrix of segment features. Returns the weight
    vector on the simplex and the re-scaled features.
    """
    if isinstance(xs, (list, tuple)):
        xs = ad.stack_rows(xs)
    if xs.data.ndim != 2 or q.data.ndim != 1 or xs.shape[1] != q.shape[0]:
        raise DimensionError(f"question_attend: incompatible shapes {q.shape} and {xs.shape}")
    logits = ad.matvec(xs, q)
    weights = ad.softmax_row(logits)
    attended = ad.row_scale(xs, weights)
    return weights, attended


class MLPHead:
    """Fully connected layers with relu on hidden layers, identity on output."""

    def __init__(self, sizes, rng):
        if len(sizes) < 2:
            raise ContractError("MLPHead needs at least input and output sizes")
        self.sizes = list(sizes)
        self.ws = []
        self.bs = []
        for k in range(len(sizes) - 1):
            fan_in = sizes[k]
            self.ws.append(ad.parameter(uniform_init(rng, (sizes[k + 1], fan_in), fan_in), op=f"mlp.w{k}"))
            self.bs.append(ad.parameter(np.zeros(sizes[k + 1]), op=f"mlp.b{k}"))

    def __call__(self, x):
        n = len(self.ws)
        for k, (w, b) in enumerate(zip(self.ws, self.bs)):
            x = ad.affine(w, b, x)
            if k < n - 1:
                x = ad.relu(x)
        return x

    def params(self, prefix):
        out = {}
        for k, (w, b) in enumerate(zip(self.ws, self.bs)):
            out[f"{prefix}.w{k}"] = w
            out[f"{prefix}.b{k}"] = b
        return out
