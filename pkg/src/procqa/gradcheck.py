"""Finite-difference gradient verification for ops, blocks, and the
eight full model variants at small shapes."""

import zlib
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import blocks, heads
from .autodiff import Tape, Tensor
from .model import QAModel
from .models import VARIANTS

EPS = 1e-5
TOLERANCE = 1e-4

SCOPES = ("ops", "blocks", "models", "all")


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    ok: bool


@dataclass
class GradcheckReport:
    scope: str
    results: list

    @property
    def all_ok(self):
        return all(r.ok for r in self.results)

    @property
    def max_rel_err(self):
        return max(r.max_rel_err for r in self.results)

    def format(self):
        lines = [f"gradcheck scope={self.scope} tolerance={TOLERANCE:g}"]
        for r in self.results:
            lines.append(f"  {'PASS' if r.ok else 'FAIL'}  {r.name:<28s} max_rel_err={r.max_rel_err:.3e}")
        lines.append("all passed" if self.all_ok else "FAILURES present")
        return "\n".join(lines)


def relative_error(a, b):
    return abs(a - b) / max(1e-6, abs(a), abs(b))


def max_rel_error(params, loss_fn, eps=EPS):
    """Max relative error between tape gradients and central differences.

    ``loss_fn`` must rebuild the forward pass from the current parameter
    values on every call and return a scalar tensor.
    """
    for p in params.values():
        p.grad = None
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    worst = 0.0
    for p in params.values():
        grad = p.grad if p.grad is not None else np.zeros(p.data.shape)
        flat = p.data.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(loss_fn().data)
            flat[i] = orig - eps
            dn = float(loss_fn().data)
            flat[i] = orig
            fd = (up - dn) / (2 * eps)
            worst = max(worst, relative_error(float(gflat[i]), fd))
    return worst


def _rand(rng, shape, lo=-1.0, hi=1.0):
    return Tensor(rng.uniform(lo, hi, size=shape), requires_grad=True)


def _weighted_sum(out, rng):
    if out.data.ndim == 0:
        return out
    w = Tensor(rng.uniform(0.5, 1.5, size=out.data.size))
    return ad.dot(ad.reshape(out, (-1,)), w)


# --- op fixtures; each returns (params, loss_fn) ---------------------------


def _check_matmul(rng):
    a, b = _rand(rng, (3, 4)), _rand(rng, (4, 2))
    return {"a": a, "b": b}, lambda: _weighted_sum(ad.matmul(a, b), np.random.default_rng(0))


def _check_matvec(rng):
    m, v = _rand(rng, (3, 4)), _rand(rng, (4,))
    return {"m": m, "v": v}, lambda: _weighted_sum(ad.matvec(m, v), np.random.default_rng(1))


def _check_dot(rng):
    a, b = _rand(rng, (5,)), _rand(rng, (5,))
    return {"a": a, "b": b}, lambda: ad.dot(a, b)


def _check_add(rng):
    a, b = _rand(rng, (2, 3)), _rand(rng, (2, 3))
    return {"a": a, "b": b}, lambda: _weighted_sum(ad.add(a, b), np.random.default_rng(2))


def _check_mul(rng):
    a, b = _rand(rng, (2, 3)), _rand(rng, (2, 3))
    return {"a": a, "b": b}, lambda: _weighted_sum(ad.mul(a, b), np.random.default_rng(3))


def _check_scale(rng):
    a = _rand(rng, (4,))
    return {"a": a}, lambda: _weighted_sum(ad.scale(a, 1.7), np.random.default_rng(4))


def _check_relu(rng):
    # keep inputs away from the kink so central differences stay valid
    a = Tensor(rng.uniform(0.2, 1.0, size=(6,)) * rng.choice([-1.0, 1.0], size=6), requires_grad=True)
    return {"a": a}, lambda: _weighted_sum(ad.relu(a), np.random.default_rng(5))


def _check_sigmoid(rng):
    a = _rand(rng, (6,))
    return {"a": a}, lambda: _weighted_sum(ad.sigmoid(a), np.random.default_rng(6))


def _check_tanh(rng):
    a = _rand(rng, (6,))
    return {"a": a}, lambda: _weighted_sum(ad.tanh(a), np.random.default_rng(7))


def _check_concat(rng):
    a, b, c = _rand(rng, (2,)), _rand(rng, (3,)), _rand(rng, (4,))
    return {"a": a, "b": b, "c": c}, lambda: _weighted_sum(
        ad.concat([a, b, c]), np.random.default_rng(8)
    )


def _check_stack_rows(rng):
    a, b = _rand(rng, (3,)), _rand(rng, (3,))
    return {"a": a, "b": b}, lambda: _weighted_sum(ad.stack_rows([a, b]), np.random.default_rng(9))


def _check_index_row(rng):
    m = _rand(rng, (4, 3))
    return {"m": m}, lambda: _weighted_sum(ad.index_row(m, 2), np.random.default_rng(10))


def _check_set_row(rng):
    m, v = _rand(rng, (4, 3)), _rand(rng, (3,))
    return {"m": m, "v": v}, lambda: _weighted_sum(ad.set_row(m, 1, v), np.random.default_rng(11))


def _check_transpose(rng):
    m = _rand(rng, (3, 4))
    return {"m": m}, lambda: _weighted_sum(ad.transpose(m), np.random.default_rng(12))


def _check_mean_pool(rng):
    m = _rand(rng, (4, 3))
    return {"m": m}, lambda: _weighted_sum(ad.mean_pool(m, axis=0), np.random.default_rng(13))


def _check_softmax_row(rng):
    m = _rand(rng, (3, 4))
    return {"m": m}, lambda: _weighted_sum(ad.softmax_row(m), np.random.default_rng(14))


def _check_embedding_lookup(rng):
    table = _rand(rng, (6, 3))
    ids = np.array([1, 4, 2, 4], dtype=np.int64)
    return {"table": table}, lambda: _weighted_sum(
        ad.embedding_lookup(table, ids), np.random.default_rng(15)
    )


def _check_cross_entropy(rng):
    logits = _rand(rng, (5,))
    return {"logits": logits}, lambda: ad.cross_entropy(logits, 2)


def _check_affine(rng):
    w, b, x = _rand(rng, (3, 4)), _rand(rng, (3,)), _rand(rng, (4,))
    return {"w": w, "b": b, "x": x}, lambda: _weighted_sum(
        ad.affine(w, b, x), np.random.default_rng(16)
    )


def _check_row_scale(rng):
    m, s = _rand(rng, (4, 3)), _rand(rng, (4,))
    return {"m": m, "s": s}, lambda: _weighted_sum(ad.row_scale(m, s), np.random.default_rng(17))


def _check_lstm_step(rng):
    h_dim, in_dim = 4, 3
    x = _rand(rng, (in_dim,))
    h = _rand(rng, (h_dim,))
    c = _rand(rng, (h_dim,))
    wx = _rand(rng, (4 * h_dim, in_dim))
    wh = _rand(rng, (4 * h_dim, h_dim))
    b = _rand(rng, (4 * h_dim,))

    def loss_fn():
        h2, c2 = ad.lstm_step(x, h, c, wx, wh, b)
        s1 = _weighted_sum(h2, np.random.default_rng(18))
        s2 = _weighted_sum(c2, np.random.default_rng(19))
        return ad.add(s1, s2)

    return {"x": x, "h": h, "c": c, "wx": wx, "wh": wh, "b": b}, loss_fn


def _check_lstm_sequence(rng):
    h_dim, in_dim, t = 4, 3, 3
    xs = _rand(rng, (t, in_dim))
    wx = _rand(rng, (4 * h_dim, in_dim))
    wh = _rand(rng, (4 * h_dim, h_dim))
    b = _rand(rng, (4 * h_dim,))
    return {"xs": xs, "wx": wx, "wh": wh, "b": b}, lambda: _weighted_sum(
        ad.lstm_sequence(xs, wx, wh, b), np.random.default_rng(20)
    )


OP_CHECKS = [
    ("matmul", _check_matmul),
    ("matvec", _check_matvec),
    ("dot", _check_dot),
    ("add", _check_add),
    ("mul", _check_mul),
    ("scale", _check_scale),
    ("relu", _check_relu),
    ("sigmoid", _check_sigmoid),
    ("tanh", _check_tanh),
    ("concat", _check_concat),
    ("stack_rows", _check_stack_rows),
    ("index_row", _check_index_row),
    ("set_row", _check_set_row),
    ("transpose", _check_transpose),
    ("mean_pool", _check_mean_pool),
    ("softmax_row", _check_softmax_row),
    ("embedding_lookup", _check_embedding_lookup),
    ("cross_entropy", _check_cross_entropy),
    ("affine", _check_affine),
    ("row_scale", _check_row_scale),
    ("lstm_step", _check_lstm_step),
    ("lstm_sequence", _check_lstm_sequence),
]


# --- block fixtures --------------------------------------------------------


def _check_encode_sequence(rng):
    cell = blocks.GatedRecurrentCell(4, 4, rng)
    xs = _rand(rng, (3, 4))
    params = cell.params("cell")
    params["xs"] = xs

    def loss_fn():
        final, _ = blocks.encode_sequence(cell, xs)
        return _weighted_sum(final, np.random.default_rng(21))

    return params, loss_fn


def _check_question_attend(rng):
    q = _rand(rng, (4,))
    xs = _rand(rng, (3, 4))

    def loss_fn():
        _, attended = blocks.question_attend(q, xs)
        return _weighted_sum(attended, np.random.default_rng(22))

    return {"q": q, "xs": xs}, loss_fn


def _check_mlp(rng):
    mlp = blocks.MLPHead([4, 3, 2], rng)
    x = _rand(rng, (4,))
    params = mlp.params("mlp")
    params["x"] = x
    return params, lambda: _weighted_sum(mlp(x), np.random.default_rng(23))


def _check_embedding_block(rng):
    table = blocks.EmbeddingTable(6, 3, rng)
    cell = blocks.GatedRecurrentCell(3, 4, rng)
    ids = np.array([2, 1, 5], dtype=np.int64)
    params = table.params("embed")
    params.update(cell.params("cell"))

    def loss_fn():
        final, _ = blocks.encode_sequence(cell, table.lookup(ids))
        return _weighted_sum(final, np.random.default_rng(24))

    return params, loss_fn


def _check_mc_loss(rng):
    scorer = blocks.MLPHead([6, 3, 1], rng)
    feats = [_rand(rng, (2,)), _rand(rng, (2,))]
    answers = [_rand(rng, (2,)) for _ in range(5)]
    params = scorer.params("scorer")
    for k, a in enumerate(answers):
        params[f"a{k}"] = a

    def loss_fn():
        scores = heads.mc_scores(scorer, [ad.concat(feats)], answers)
        return heads.mc_loss(scores, 2)

    return params, loss_fn


BLOCK_CHECKS = [
    ("encode_sequence", _check_encode_sequence),
    ("question_attend", _check_question_attend),
    ("mlp_head", _check_mlp),
    ("embedding+encode", _check_embedding_block),
    ("mc_scores+loss", _check_mc_loss),
]


# --- full model fixtures ----------------------------------------------------


class _FixtureItem:
    def __init__(self, rng, vocab_size):
        self.q_ids = np.asarray(rng.integers(2, vocab_size, size=4), dtype=np.int64)
        self.choice_ids = [
            np.asarray(rng.integers(2, vocab_size, size=int(rng.integers(1, 4))), dtype=np.int64)
            for _ in range(5)
        ]
        self.choice_ids_cat = np.concatenate(self.choice_ids)
        self.choice_lengths = [len(ids) for ids in self.choice_ids]
        self.correct_index = 1
        self.class_id = 0
        self.tags = ["count"]


class _FixtureVideo:
    def __init__(self, rng, n_segments, frame_dim, vocab_size):
        self.id = "fixture"
        self.n = n_segments
        self.frames_seg = [
            Tensor(rng.standard_normal((int(rng.integers(1, 4)), frame_dim)))
            for _ in range(n_segments)
        ]
        self.flat_frames = Tensor(
            np.concatenate([t.data for t in self.frames_seg])
        )
        self.desc_ids = [
            np.asarray(rng.integers(2, vocab_size, size=3), dtype=np.int64)
            for _ in range(n_segments)
        ]
        self.trans_ids = [
            np.asarray(rng.integers(2, vocab_size, size=2), dtype=np.int64)
            for _ in range(n_segments)
        ]


def model_fixture(variant, seed=0, modalities="V", head="mc"):
    """A tiny end-to-end loss closure for one variant (N<=4, d<=8)."""
    rng = np.random.default_rng(seed)
    vocab_size = 12
    model = QAModel(
        variant=variant,
        head=head,
        modalities=modalities,
        vocab_size=vocab_size,
        hidden_dim=8,
        embed_dim=4,
        frame_dim=3,
        seed=seed + 1,
        n_classes=3 if head == "kspace" else None,
    )
    pv = _FixtureVideo(rng, n_segments=3, frame_dim=3, vocab_size=vocab_size)
    item = _FixtureItem(rng, vocab_size)
    return model.params(), lambda: model.item_loss(pv, item)


def _model_check(variant):
    def make(rng):
        return model_fixture(variant, seed=int(rng.integers(0, 1 << 16)))

    return make


MODEL_CHECKS = [(variant, _model_check(variant)) for variant in VARIANTS]


def run(scope="all", seed=12345, tolerance=TOLERANCE):
    if scope not in SCOPES:
        raise ad.ContractError(f"unknown gradcheck scope {scope!r}")
    checks = []
    if scope in ("ops", "all"):
        checks += [("op:" + n, f) for n, f in OP_CHECKS]
    if scope in ("blocks", "all"):
        checks += [("block:" + n, f) for n, f in BLOCK_CHECKS]
    if scope in ("models", "all"):
        checks += [("model:" + n, f) for n, f in MODEL_CHECKS]
    results = []
    for name, make in checks:
        rng = np.random.default_rng([seed, zlib.crc32(name.encode())])
        params, loss_fn = make(rng)
        err = max_rel_error(params, loss_fn)
        results.append(CheckResult(name=name, max_rel_err=err, ok=err < tolerance))
    return GradcheckReport(scope=scope, results=results)
