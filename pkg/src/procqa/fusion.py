"""Narrative modalities: hierarchical encoding of per-segment text and
fusion of the available features ahead of the answer heads."""

import numpy as np

from . import autodiff as ad
from .autodiff import ContractError
from .blocks import UNK_ID, EmbeddingTable, GatedRecurrentCell, encode_sequence

MODALITY_CONFIGS = ("V", "CC", "D", "V+CC", "V+D")


def text_source(modalities):
    """Which narrative stream an experiment configuration consumes."""
    if modalities not in MODALITY_CONFIGS:
        raise ContractError(f"unknown modality config {modalities!r}")
    if "CC" in modalities:
        return "transcript"
    if "D" in modalities:
        return "description"
    return None


def uses_video(modalities):
    if modalities not in MODALITY_CONFIGS:
        raise ContractError(f"unknown modality config {modalities!r}")
    return modalities.startswith("V")


class HierarchicalTextEncoder:
    """Word-level recurrence per segment, then a segment-level recurrence.

    Owns its embedding table: narrative encoders do not share word
    embeddings with the question encoder.
    """

    def __init__(self, vocab_size, embed_dim, d, rng):
        self.embed = EmbeddingTable(vocab_size, embed_dim, rng)
        self.word_cell = GatedRecurrentCell(embed_dim, d, rng)
        self.segment_cell = GatedRecurrentCell(d, d, rng)

    def encode(self, segment_token_ids, expected_segments=None):
        """Encode one token-id list per segment into the modality feature.

        Segments with no tokens must be passed as [UNK_ID] by the caller;
        an empty list here is a contract violation.
        """
        if expected_segments is not None and len(segment_token_ids) != expected_segments:
            raise ContractError(
                f"text has {len(segment_token_ids)} segments, video has {expected_segments}"
            )
        if len(segment_token_ids) == 0:
            raise ContractError("hierarchical encode: no segments")
        for ids in segment_token_ids:
            if len(ids) == 0:
                raise ContractError("hierarchical encode: empty segment (use the unknown token)")
        cat = np.concatenate([np.asarray(ids, dtype=np.int64) for ids in segment_token_ids])
        vecs = self.embed.lookup(cat)
        seg_vecs = ad.lstm_finals(
            vecs,
            [len(ids) for ids in segment_token_ids],
            self.word_cell.wx,
            self.word_cell.wh,
            self.word_cell.b,
        )
        m, _ = encode_sequence(self.segment_cell, seg_vecs)
        return m

    def params(self, prefix):
        out = self.embed.params(f"{prefix}.embed")
        out.update(self.word_cell.params(f"{prefix}.word_cell"))
        out.update(self.segment_cell.params(f"{prefix}.segment_cell"))
        return out


def assign_transcript(utterances, boundaries):
    """Assign timestamped utterances to the segment containing them.

    ``utterances`` is a list of (t_s, text); ``boundaries`` a list of
    (start_s, end_s). Utterances falling outside every boundary are
    dropped. Assignment depends only on the arguments, so it is
    reproducible from the dataset file alone.
    """
    per_segment = [[] for _ in boundaries]
    for t_s, text in utterances:
        for k, (start, end) in enumerate(boundaries):
            if start <= t_s < end:
                per_segment[k].append(text)
                break
    return per_segment


def fuse(v, m, q, a=None):
    """Concatenate the present features in fixed order (v, m, q, a).

    At least one of the video or modality features must be present; the
    question-only baseline bypasses fusion entirely.
    """
    if v is None and m is None:
        raise ContractError("fuse needs at least one of the video or modality features")
    feats = [f for f in (v, m, q, a) if f is not None]
    return ad.concat(feats)
