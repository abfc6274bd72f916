"""Video representation pathways.

Eight variants map per-segment features and an encoded question to a
single video feature v: a question-only baseline (which contributes no v),
a frame-level recurrence, sequence and graph encoders over the procedure
segments, and a recurrent-graph hybrid that passes messages between a
recurrent pathway and a graph pathway through a per-step swap, each with
and without question attention.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import ContractError, Tensor
from .blocks import GatedRecurrentCell, encode_sequence, question_attend

VARIANTS = (
    "bare_qa",
    "naive_rnn",
    "seq",
    "seq_sa",
    "gcn",
    "gcn_sa",
    "rgcn",
    "rgcn_sa",
)

GCN_LAYERS = 3


def build_adjacency(s, normalize=True):
    """Dense adjacency from pairwise dot products of node features.

    With ``normalize`` (the default) each row is softmax-normalized, which
    keeps repeated propagation bounded; the raw dot-product variant stays
    available for A/B comparison.
    """
    logits = ad.matmul(s, ad.transpose(s))
    if normalize:
        return ad.softmax_row(logits)
    return logits


class SegmentEncoder:
    """Encodes each segment's frame sequence to its segment feature."""

    def __init__(self, frame_dim, d, rng):
        self.cell = GatedRecurrentCell(frame_dim, d, rng)

    def encode(self, frames_per_segment):
        """frames_per_segment: list of (T_i, frame_dim) tensors, T_i >= 1.

        Returns the (N, d) matrix of per-segment final hidden states.
        """
        if len(frames_per_segment) == 0:
            raise ContractError("encode_segments: no segments")
        for frames in frames_per_segment:
            if frames.shape[0] == 0:
                raise ContractError("encode_segments: empty segment")
        lengths = [frames.shape[0] for frames in frames_per_segment]
        xs_cat = ad.concat_rows(frames_per_segment)
        return ad.lstm_finals(xs_cat, lengths, self.cell.wx, self.cell.wh, self.cell.b)

    def params(self, prefix):
        return self.cell.params(f"{prefix}.cell")


class NaiveRnnPathway:
    """Recurrence over the raw frame stream, ignoring segment boundaries."""

    def __init__(self, frame_dim, d, rng):
        self.cell = GatedRecurrentCell(frame_dim, d, rng)

    def forward(self, flat_frames):
        if flat_frames.shape[0] == 0:
            raise ContractError("naive_rnn: empty frame sequence")
        final, _ = encode_sequence(self.cell, flat_frames)
        return final

    def params(self, prefix):
        return self.cell.params(f"{prefix}.cell")


class SeqPathway:
    """Recurrence over segment features in temporal order."""

    def __init__(self, d, rng):
        self.cell = GatedRecurrentCell(d, d, rng)

    def forward(self, x, q=None, attend=False):
        if attend:
            _, x = question_attend(q, x)
        final, _ = encode_sequence(self.cell, x)
        return final

    def params(self, prefix):
        return self.cell.params(f"{prefix}.cell")


class GcnPathway:
    """Three graph-convolution layers over a fully connected segment graph.

    Each layer rebuilds the adjacency from its input nodes and applies its
    own weight matrix. With attention, the node features entering the last
    layer are re-weighted by softmax-normalized dot products with the
    question before propagation. The video feature is the mean over the
    segment-node outputs of the last layer.
    """

    def __init__(self, d, rng, normalize_adjacency=True):
        from .blocks import uniform_init

        self.normalize_adjacency = normalize_adjacency
        self.ws = [
            ad.parameter(uniform_init(rng, (d, d), d), op=f"gcn.w{j}")
            for j in range(GCN_LAYERS)
        ]

    def forward(self, x, q=None, attend=False):
        s = x
        for j, w in enumerate(self.ws):
            if attend and j == GCN_LAYERS - 1:
                _, s = question_attend(q, s)
            s = ad.graph_propagate(s, w, normalize=self.normalize_adjacency)
        return ad.mean_pool(s, axis=0)

    def params(self, prefix):
        return {f"{prefix}.w{j}": w for j, w in enumerate(self.ws)}


class RgcnPathway:
    """Recurrent pathway and graph pathway bridged by a per-step swap.

    The graph pathway has as many layers as the recurrence has time steps,
    all sharing one weight matrix. At step t the recurrence consumes the
    segment feature X_t concatenated with graph node t-1 of the current
    layer (zeros at the first step), the fresh hidden state overwrites
    graph node t, and the next layer is propagated from the post-swap
    nodes. The final hidden state is the video feature.
    """

    def __init__(self, d, rng, normalize_adjacency=True):
        from .blocks import uniform_init

        self.d = d
        self.normalize_adjacency = normalize_adjacency
        self.cell = GatedRecurrentCell(2 * d, d, rng)
        self.w = ad.parameter(uniform_init(rng, (d, d), d), op="rgcn.w")

    def forward(self, x, q=None, attend=False, record=None):
        """record, when given, collects (t, post_swap_nodes, hidden) triples."""
        if attend:
            _, x = question_attend(q, x)
        n = x.shape[0]
        zero = Tensor(np.zeros(self.d))
        h, c = self.cell.zero_state()
        z = x
        for t in range(n):
            s_prev = ad.index_row(z, t - 1) if t > 0 else zero
            inp = ad.concat([ad.index_row(x, t), s_prev])
            h, c = self.cell.step(inp, h, c)
            z = ad.set_row(z, t, h)
            if record is not None:
                record.append((t, z.data.copy(), h.data.copy()))
            if t < n - 1:
                z = ad.graph_propagate(z, self.w, normalize=self.normalize_adjacency)
        return h

    def params(self, prefix):
        out = self.cell.params(f"{prefix}.cell")
        out[f"{prefix}.w"] = self.w
        return out
