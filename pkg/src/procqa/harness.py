"""Training loop, evaluation, metrics, and checkpoint IO."""

import json
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import NumericsError, Tape
from .dataset import load_dataset
from .fusion import MODALITY_CONFIGS
from .heads import AnswerVocabulary
from .model import QAModel, build_token_vocab, prepare_split
from .models import VARIANTS
from .optim import Adam

TAGS = ("count", "order", "taste", "time", "complex", "property")

HEADS = ("mc", "kspace")


class ConfigError(ValueError):
    """A run configuration is inconsistent or incomplete."""


class CompatibilityError(ConfigError):
    """Checkpoint and dataset disagree on vocabulary or dimensions."""


PRESETS = {
    # paper-scale dimensions; slow on CPU but available by name
    "paper": {"hidden_dim": 512, "embed_dim": 300, "lr": 1e-4},
    # desk-scale defaults that train in minutes
    "desk": {"hidden_dim": 64, "embed_dim": 32, "lr": 1e-3, "batch_size": 32, "epochs": 50},
}


@dataclass
class RunConfig:
    variant: str = "rgcn_sa"
    head: str = "mc"
    modalities: str = "V"
    hidden_dim: int = 64
    embed_dim: int = 32
    lr: float = 1e-3
    epochs: int = 50
    batch_size: int = 32
    param_seed: int = 1
    shuffle_seed: int = 2
    data: str = ""
    out: str = ""
    normalize_adjacency: bool = True
    early_stop_patience: int = 0  # 0 disables; else epochs without test improvement

    def validated(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.head not in HEADS:
            raise ConfigError(f"unknown head {self.head!r}")
        if self.modalities not in MODALITY_CONFIGS:
            raise ConfigError(f"unknown modality config {self.modalities!r}")
        if self.variant == "bare_qa" and self.modalities != "V":
            raise ConfigError("the question-only baseline forbids extra modalities")
        for name in ("hidden_dim", "embed_dim", "epochs", "batch_size"):
            if getattr(self, name) < (0 if name == "epochs" else 1):
                raise ConfigError(f"{name} must be positive")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        return self

    @classmethod
    def from_dict(cls, doc, preset=None):
        cfg = cls()
        if preset:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            cfg = replace(cfg, **PRESETS[preset])
        known = set(cfg.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return replace(cfg, **doc)


@dataclass
class MetricsReport:
    head: str
    overall: float
    per_tag: dict
    history: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "config": self.config,
            "per_tag": self.per_tag,
            "overall": self.overall,
            "head": self.head,
            "history": self.history,
        }

    def format_table(self):
        cols = list(TAGS) + ["overall"]
        header = "  ".join(f"{c:>9s}" for c in cols)
        vals = [self.per_tag.get(t, float("nan")) for t in TAGS] + [self.overall]
        row = "  ".join(f"{v:9.3f}" for v in vals)
        return header + "\n" + row


def compute_metrics(records, head):
    """Accuracy overall and per tag from (tags, correct) records.

    An item counts toward every tag it carries.
    """
    total = len(records)
    n_correct = sum(1 for _, ok in records if ok)
    per_tag = {}
    for tag in TAGS:
        hits = [ok for tags, ok in records if tag in tags]
        per_tag[tag] = (sum(hits) / len(hits)) if hits else float("nan")
    overall = n_correct / total if total else float("nan")
    return MetricsReport(head=head, overall=overall, per_tag=per_tag)


def evaluate_model(model, videos, items):
    records = [(item.tags, model.item_correct(videos[item.video_id], item)) for item in items]
    return compute_metrics(records, model.head)


def _load_pair(data_path):
    """Load (train, test) manifests from a directory or a single file."""
    if os.path.isdir(data_path):
        train = load_dataset(os.path.join(data_path, "train.json"))
        test = load_dataset(os.path.join(data_path, "test.json"))
        return train, test
    single = load_dataset(data_path)
    return single, single


def build_model(config, vocab, answer_vocab, frame_dim):
    return QAModel(
        variant=config.variant,
        head=config.head,
        modalities=config.modalities,
        vocab_size=len(vocab),
        hidden_dim=config.hidden_dim,
        embed_dim=config.embed_dim,
        frame_dim=frame_dim,
        seed=config.param_seed,
        n_classes=len(answer_vocab) if config.head == "kspace" else None,
        normalize_adjacency=config.normalize_adjacency,
    )


def _frame_dim(manifest):
    for v in manifest.videos:
        for s in v.segments:
            return int(s.frames.shape[1])
    raise ConfigError("dataset has no frames")


def train(config, train_manifest=None, test_manifest=None, log=None):
    """Train per the configuration; returns (model, report, checkpoint_dict).

    Evaluates on the test split after each epoch and keeps the best
    checkpoint by overall test accuracy; the returned report carries that
    best model's metrics plus the per-epoch history.
    """
    config.validated()
    if train_manifest is None or test_manifest is None:
        train_manifest, test_manifest = _load_pair(config.data)

    vocab = build_token_vocab(train_manifest)
    answers = [qa.answer for v in train_manifest.videos for qa in v.qa]
    answer_vocab = AnswerVocabulary.from_answers(answers)
    frame_dim = _frame_dim(train_manifest)
    model = build_model(config, vocab, answer_vocab, frame_dim)

    train_videos, train_items = prepare_split(train_manifest, vocab, answer_vocab)
    test_videos, test_items = prepare_split(test_manifest, vocab, answer_vocab)

    optimizer = Adam(model.params(), lr=config.lr)
    shuffle_rng = np.random.default_rng(config.shuffle_seed)
    n = len(train_items)
    history = []
    best = {"overall": -1.0, "snapshot": model.snapshot(), "epoch": -1}
    since_best = 0

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            batch = [train_items[int(i)] for i in order[start : start + config.batch_size]]
            optimizer.zero_grad()
            inv = 1.0 / len(batch)
            for item in batch:
                pv = train_videos[item.video_id]
                with Tape() as tape:
                    loss = model.item_loss(pv, item)
                    scaled = ad.scale(loss, inv)
                value = float(loss.data)
                if not np.isfinite(value):
                    culprit = tape.first_nonfinite() or "loss"
                    raise NumericsError(
                        f"non-finite training loss at epoch {epoch}: first offending tensor "
                        f"from op '{culprit}'"
                    )
                tape.backward(scaled)
                losses.append(value)
            optimizer.step()
        report = evaluate_model(model, test_videos, test_items)
        entry = {
            "epoch": epoch,
            "train_loss": float(np.mean(losses)) if losses else float("nan"),
            "test_overall": report.overall,
        }
        history.append(entry)
        if log:
            log(f"epoch {epoch}: train_loss={entry['train_loss']:.4f} test={report.overall:.3f}")
        if report.overall > best["overall"]:
            best = {"overall": report.overall, "snapshot": model.snapshot(), "epoch": epoch}
            since_best = 0
        else:
            since_best += 1
            if config.early_stop_patience and since_best >= config.early_stop_patience:
                break

    model.restore(best["snapshot"])
    final = evaluate_model(model, test_videos, test_items)
    final.history = history
    final.config = asdict(config)
    checkpoint = {
        "format": "procqa-checkpoint-v1",
        "config": asdict(config),
        "frame_dim": frame_dim,
        "token_vocab": vocab,
        "answer_vocab": answer_vocab.to_json(),
        "best_epoch": best["epoch"],
        "params": model.state_dict(),
    }
    return model, final, checkpoint


def save_checkpoint(checkpoint, path):
    with open(path, "w") as f:
        json.dump(checkpoint, f)


def load_checkpoint(path):
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != "procqa-checkpoint-v1":
        raise ConfigError(f"not a recognized checkpoint: {path}")
    return doc


def evaluate_checkpoint(checkpoint, manifest):
    """Rebuild the model from a checkpoint and score a manifest."""
    config = RunConfig.from_dict(checkpoint["config"]).validated()
    vocab = checkpoint["token_vocab"]
    answer_vocab = AnswerVocabulary.from_json(checkpoint["answer_vocab"])
    frame_dim = _frame_dim(manifest)
    if frame_dim != checkpoint["frame_dim"]:
        raise CompatibilityError(
            f"dataset frame dim {frame_dim} != checkpoint frame dim {checkpoint['frame_dim']}"
        )
    model = build_model(config, vocab, answer_vocab, frame_dim)
    model.load_state_dict(checkpoint["params"])
    videos, items = prepare_split(manifest, vocab, answer_vocab)
    report = evaluate_model(model, videos, items)
    report.config = checkpoint["config"]
    return report
