"""Answer prediction heads: the multiple-choice scorer and the
answer-space classifier, plus answer normalization and the answer
vocabulary."""

import re

import numpy as np

from . import autodiff as ad
from .autodiff import ContractError

NUM_CHOICES = 5

_WS = re.compile(r"\s+")
_TRAIL_PUNCT = re.compile(r"[.,!?;:]+$")


def normalize_answer(raw):
    """Lowercase, trim, collapse whitespace, strip trailing punctuation."""
    s = _WS.sub(" ", raw.strip().lower())
    s = _TRAIL_PUNCT.sub("", s).strip()
    return s


class AnswerVocabulary:
    """Bijective map from normalized training answers to class ids.

    Unseen answers map to None and are never emitted as predictions; at
    evaluation time an item whose answer is absent is simply counted wrong.
    """

    def __init__(self, classes):
        self.classes = list(classes)
        self.index = {a: k for k, a in enumerate(self.classes)}
        if len(self.index) != len(self.classes):
            raise ContractError("answer vocabulary has duplicate classes")

    @classmethod
    def from_answers(cls, answers):
        seen = sorted({normalize_answer(a) for a in answers})
        if not seen:
            raise ContractError("cannot build an answer vocabulary from no answers")
        return cls(seen)

    def id_of(self, answer):
        return self.index.get(normalize_answer(answer))

    def __len__(self):
        return len(self.classes)

    def to_json(self):
        return list(self.classes)

    @classmethod
    def from_json(cls, data):
        return cls(data)


def mc_scores(scorer, context_feats, answer_feats):
    """Score each of the five candidates with the shared scorer MLP.

    ``context_feats`` is the fixed-order feature list (video, modality,
    question — whichever are present); each candidate's encoding is
    appended last. Returns the (5,) score vector.
    """
    if len(answer_feats) != NUM_CHOICES:
        raise ContractError(f"multiple choice needs {NUM_CHOICES} candidates, got {len(answer_feats)}")
    outs = []
    for a in answer_feats:
        outs.append(scorer(ad.concat(list(context_feats) + [a])))
    return ad.concat(outs)


def mc_predict(scores):
    """Argmax candidate index with lowest-index tie-break."""
    return int(np.argmax(scores.data))


def mc_loss(scores, correct_index):
    """Softmax cross-entropy over the five candidate scores."""
    return ad.cross_entropy(scores, correct_index)


def kspace_logits(classifier, context_feats):
    return classifier(ad.concat(list(context_feats)))


def kspace_predict(logits):
    """Argmax class id with lowest-index tie-break."""
    if logits.shape[0] == 0:
        raise ContractError("kspace_predict: empty answer vocabulary")
    return int(np.argmax(logits.data))


def kspace_loss(logits, class_id):
    return ad.cross_entropy(logits, class_id)
