"""End-to-end QA model assembly: question encoder, video pathway,
optional narrative pathway, and the selected answer head, plus the
tokenization/preparation glue between dataset manifests and tensors."""

import re

import numpy as np

from . import autodiff as ad
from . import heads
from .autodiff import ContractError
from .blocks import PAD_ID, UNK_ID, EmbeddingTable, GatedRecurrentCell, MLPHead, encode_sequence
from .fusion import HierarchicalTextEncoder, assign_transcript, text_source, uses_video
from .heads import normalize_answer
from .models import (
    GcnPathway,
    NaiveRnnPathway,
    RgcnPathway,
    SegmentEncoder,
    SeqPathway,
    VARIANTS,
)

_TOKEN_RE = re.compile(r"[^a-z0-9 ]")


def tokenize(text):
    return _TOKEN_RE.sub(" ", text.lower()).split()


def build_token_vocab(manifest):
    """Token -> id map over a training split; 0 is padding, 1 unknown."""
    tokens = set()
    for video in manifest.videos:
        for seg in video.segments:
            tokens.update(tokenize(seg.description))
            for _, text in seg.transcript:
                tokens.update(tokenize(text))
        for item in video.qa:
            tokens.update(tokenize(item.question))
            for c in item.choices:
                tokens.update(tokenize(c))
    vocab = {"<pad>": PAD_ID, "<unk>": UNK_ID}
    for k, tok in enumerate(sorted(tokens)):
        vocab[tok] = k + 2
    return vocab


def encode_tokens(text, vocab):
    ids = [vocab.get(t, UNK_ID) for t in tokenize(text)]
    if not ids:
        ids = [UNK_ID]
    return np.asarray(ids, dtype=np.int64)


class PreparedVideo:
    """Per-video tensors and token ids, reusable across epochs."""

    def __init__(self, video, vocab):
        self.id = video.id
        self.n = len(video.segments)
        self.frames_seg = [ad.Tensor(seg.frames) for seg in video.segments]
        self.flat_frames = ad.Tensor(np.concatenate([seg.frames for seg in video.segments]))
        self.desc_ids = [encode_tokens(seg.description, vocab) for seg in video.segments]
        boundaries = [(seg.start_s, seg.end_s) for seg in video.segments]
        utterances = [u for seg in video.segments for u in seg.transcript]
        per_segment = assign_transcript(utterances, boundaries)
        self.trans_ids = []
        for texts in per_segment:
            ids = [i for t in texts for i in encode_tokens(t, vocab)]
            self.trans_ids.append(np.asarray(ids if ids else [UNK_ID], dtype=np.int64))


class PreparedItem:
    def __init__(self, video_id, item, vocab, answer_vocab=None):
        self.video_id = video_id
        self.q_ids = encode_tokens(item.question, vocab)
        self.choice_ids = [encode_tokens(c, vocab) for c in item.choices]
        self.choice_ids_cat = np.concatenate(self.choice_ids)
        self.choice_lengths = [len(ids) for ids in self.choice_ids]
        normed = [normalize_answer(c) for c in item.choices]
        try:
            self.correct_index = normed.index(normalize_answer(item.answer))
        except ValueError as e:
            raise ContractError(
                f"answer {item.answer!r} not among choices for video {video_id}"
            ) from e
        self.class_id = answer_vocab.id_of(item.answer) if answer_vocab is not None else None
        self.tags = list(item.tags)


def prepare_split(manifest, vocab, answer_vocab=None):
    videos = {v.id: PreparedVideo(v, vocab) for v in manifest.videos}
    items = [
        PreparedItem(v.id, qa, vocab, answer_vocab) for v in manifest.videos for qa in v.qa
    ]
    return videos, items


class QAModel:
    """One architecture variant with one answer head and one modality set."""

    def __init__(
        self,
        variant,
        head,
        modalities,
        vocab_size,
        hidden_dim,
        embed_dim,
        frame_dim,
        seed,
        n_classes=None,
        normalize_adjacency=True,
    ):
        if variant not in VARIANTS:
            raise ContractError(f"unknown variant {variant!r}")
        if head not in ("mc", "kspace"):
            raise ContractError(f"unknown head {head!r}")
        if variant == "bare_qa" and modalities != "V":
            raise ContractError("the question-only baseline accepts no extra modalities")
        if head == "kspace" and not n_classes:
            raise ContractError("the answer-space head needs the class count")
        self.variant = variant
        self.head = head
        self.modalities = modalities
        self.hidden_dim = hidden_dim
        self.attend = variant.endswith("_sa")
        self.text_src = text_source(modalities)
        self.has_video = uses_video(modalities) and variant != "bare_qa"

        rng = np.random.default_rng(seed)
        d = hidden_dim
        self.token_embed = EmbeddingTable(vocab_size, embed_dim, rng)
        self.q_cell = GatedRecurrentCell(embed_dim, d, rng)
        self.answer_cell = GatedRecurrentCell(embed_dim, d, rng) if head == "mc" else None

        self.segment_encoder = None
        self.pathway = None
        if self.has_video:
            if variant == "naive_rnn":
                self.pathway = NaiveRnnPathway(frame_dim, d, rng)
            else:
                self.segment_encoder = SegmentEncoder(frame_dim, d, rng)
                if variant in ("seq", "seq_sa"):
                    self.pathway = SeqPathway(d, rng)
                elif variant in ("gcn", "gcn_sa"):
                    self.pathway = GcnPathway(d, rng, normalize_adjacency)
                elif variant in ("rgcn", "rgcn_sa"):
                    self.pathway = RgcnPathway(d, rng, normalize_adjacency)

        self.text_encoder = (
            HierarchicalTextEncoder(vocab_size, embed_dim, d, rng) if self.text_src else None
        )

        n_context = int(self.has_video) + int(self.text_src is not None) + 1  # + question
        if head == "mc":
            self.scorer = MLPHead([(n_context + 1) * d, d, 1], rng)
            self.classifier = None
        else:
            self.scorer = None
            self.classifier = MLPHead([n_context * d, d, n_classes], rng)

    def params(self):
        out = self.token_embed.params("token_embed")
        out.update(self.q_cell.params("q_cell"))
        if self.answer_cell is not None:
            out.update(self.answer_cell.params("answer_cell"))
        if self.segment_encoder is not None:
            out.update(self.segment_encoder.params("segments"))
        if self.pathway is not None:
            out.update(self.pathway.params("video"))
        if self.text_encoder is not None:
            out.update(self.text_encoder.params("text"))
        if self.scorer is not None:
            out.update(self.scorer.params("scorer"))
        if self.classifier is not None:
            out.update(self.classifier.params("classifier"))
        return out

    def _encode_ids(self, cell, ids):
        vecs = self.token_embed.lookup(ids)
        final, _ = encode_sequence(cell, vecs)
        return final

    def question_feature(self, item):
        return self._encode_ids(self.q_cell, item.q_ids)

    def video_feature(self, pv, q):
        if not self.has_video:
            return None
        if self.variant == "naive_rnn":
            return self.pathway.forward(pv.flat_frames)
        x = self.segment_encoder.encode(pv.frames_seg)
        return self.pathway.forward(x, q=q, attend=self.attend)

    def modality_feature(self, pv):
        if self.text_src is None:
            return None
        ids = pv.desc_ids if self.text_src == "description" else pv.trans_ids
        return self.text_encoder.encode(ids, expected_segments=pv.n)

    def context_features(self, pv, item):
        q = self.question_feature(item)
        feats = []
        v = self.video_feature(pv, q)
        if v is not None:
            feats.append(v)
        m = self.modality_feature(pv)
        if m is not None:
            feats.append(m)
        feats.append(q)
        return feats

    def mc_item_scores(self, pv, item):
        ctx = self.context_features(pv, item)
        vecs = self.token_embed.lookup(item.choice_ids_cat)
        finals = ad.lstm_finals(
            vecs,
            item.choice_lengths,
            self.answer_cell.wx,
            self.answer_cell.wh,
            self.answer_cell.b,
        )
        answers = [ad.index_row(finals, j) for j in range(len(item.choice_lengths))]
        return heads.mc_scores(self.scorer, ctx, answers)

    def ks_item_logits(self, pv, item):
        return heads.kspace_logits(self.classifier, self.context_features(pv, item))

    def item_loss(self, pv, item):
        if self.head == "mc":
            return heads.mc_loss(self.mc_item_scores(pv, item), item.correct_index)
        if item.class_id is None:
            raise ContractError("cannot train on an answer outside the vocabulary")
        return heads.kspace_loss(self.ks_item_logits(pv, item), item.class_id)

    def predict(self, pv, item):
        """Predicted choice index (mc) or class id (kspace); run untaped."""
        if self.head == "mc":
            return heads.mc_predict(self.mc_item_scores(pv, item))
        return heads.kspace_predict(self.ks_item_logits(pv, item))

    def item_correct(self, pv, item):
        pred = self.predict(pv, item)
        if self.head == "mc":
            return pred == item.correct_index
        return item.class_id is not None and pred == item.class_id

    def state_dict(self):
        return {k: {"shape": list(p.data.shape), "values": p.data.reshape(-1).tolist()}
                for k, p in self.params().items()}

    def load_state_dict(self, state):
        params = self.params()
        if set(state) != set(params):
            missing = set(params) - set(state)
            extra = set(state) - set(params)
            raise ContractError(f"checkpoint mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for k, p in params.items():
            shape = tuple(state[k]["shape"])
            if shape != p.data.shape:
                raise ContractError(f"checkpoint shape {shape} != model shape {p.data.shape} for '{k}'")
            p.data = np.asarray(state[k]["values"], dtype=np.float64).reshape(shape)

    def snapshot(self):
        return {k: p.data.copy() for k, p in self.params().items()}

    def restore(self, snap):
        for k, p in self.params().items():
            p.data = snap[k].copy()
