"""Dataset manifests: generation, JSON serialization, schema validation.

One JSON document holds the videos of one split. Field names are part of
the on-disk contract:

    {"videos": [{"id", "duration_s",
                 "segments": [{"start_s", "end_s", "description",
                               "transcript": [{"t_s", "text"}],
                               "frames": [[...]]}],
                 "qa": [{"question", "answer", "choices",
                         "tags", "answer_type"}]}],
     "split": "train" | "test"}
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .qagen import QAItem, generate_qa
from .world import (
    WorldConfig,
    generate_recipe,
    render_descriptions,
    render_features,
    render_transcripts,
)


class SchemaError(ValueError):
    """A dataset file does not match the expected schema."""


@dataclass
class Segment:
    start_s: float
    end_s: float
    description: str
    transcript: list  # of (t_s, text)
    frames: np.ndarray  # (n_frames, frame_dim)


@dataclass
class VideoRecord:
    id: str
    duration_s: float
    segments: list
    qa: list


@dataclass
class Manifest:
    videos: list
    split: str


def manifest_to_dict(manifest):
    videos = []
    for v in manifest.videos:
        segments = []
        for s in v.segments:
            segments.append(
                {
                    "start_s": float(s.start_s),
                    "end_s": float(s.end_s),
                    "description": s.description,
                    "transcript": [{"t_s": float(t), "text": text} for t, text in s.transcript],
                    "frames": np.asarray(s.frames, dtype=np.float64).tolist(),
                }
            )
        qa = []
        for item in v.qa:
            qa.append(
                {
                    "question": item.question,
                    "answer": item.answer,
                    "choices": list(item.choices),
                    "tags": list(item.tags),
                    "answer_type": item.answer_type,
                }
            )
        videos.append(
            {"id": v.id, "duration_s": float(v.duration_s), "segments": segments, "qa": qa}
        )
    return {"videos": videos, "split": manifest.split}


def _need(obj, key, path, kind=None):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object at {path}, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaError(f"missing key '{key}' at {path}")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"wrong type for '{key}' at {path}")
    return val


def manifest_from_dict(doc, path="$"):
    videos_raw = _need(doc, "videos", path, list)
    split = _need(doc, "split", path, str)
    videos = []
    for i, v in enumerate(videos_raw):
        vp = f"{path}.videos[{i}]"
        vid = _need(v, "id", vp, str)
        duration = float(_need(v, "duration_s", vp, (int, float)))
        segments = []
        for j, s in enumerate(_need(v, "segments", vp, list)):
            sp = f"{vp}.segments[{j}]"
            transcript = []
            for k, u in enumerate(_need(s, "transcript", sp, list)):
                up = f"{sp}.transcript[{k}]"
                transcript.append(
                    (float(_need(u, "t_s", up, (int, float))), _need(u, "text", up, str))
                )
            frames_raw = _need(s, "frames", sp, list)
            frames = np.asarray(frames_raw, dtype=np.float64)
            if frames.ndim != 2:
                raise SchemaError(f"'frames' at {sp} is not a rectangular 2D array")
            segments.append(
                Segment(
                    start_s=float(_need(s, "start_s", sp, (int, float))),
                    end_s=float(_need(s, "end_s", sp, (int, float))),
                    description=_need(s, "description", sp, str),
                    transcript=transcript,
                    frames=frames,
                )
            )
        qa = []
        for j, q in enumerate(_need(v, "qa", vp, list)):
            qp = f"{vp}.qa[{j}]"
            choices = _need(q, "choices", qp, list)
            if len(choices) != 5:
                raise SchemaError(f"'choices' at {qp} must have 5 entries")
            qa.append(
                QAItem(
                    question=_need(q, "question", qp, str),
                    answer=_need(q, "answer", qp, str),
                    choices=list(choices),
                    tags=list(_need(q, "tags", qp, list)),
                    answer_type=_need(q, "answer_type", qp, str),
                )
            )
        videos.append(VideoRecord(id=vid, duration_s=duration, segments=segments, qa=qa))
    return Manifest(videos=videos, split=split)


def save_dataset(manifest, path):
    with open(path, "w") as f:
        json.dump(manifest_to_dict(manifest), f)


def load_dataset(path):
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"not valid JSON: {e}") from e
    return manifest_from_dict(doc)


def manifests_equal(a, b):
    """Field-for-field equality, bitwise on frame arrays."""
    da, db = manifest_to_dict(a), manifest_to_dict(b)
    return da == db


# ---------------------------------------------------------------------------
# generation


@dataclass
class DatasetConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    train_videos: int = 500
    test_videos: int = 100
    data_seed: int = 7
    feature_seed: int = 1234


def _generate_video(index, dataset_cfg):
    cfg = dataset_cfg.world
    trace_rng = np.random.default_rng([dataset_cfg.data_seed, index, 0])
    text_rng = np.random.default_rng([dataset_cfg.data_seed, index, 1])
    qa_rng = np.random.default_rng([dataset_cfg.data_seed, index, 2])

    trace = generate_recipe(trace_rng, cfg)
    frames = render_features(trace, dataset_cfg.feature_seed, index, cfg)
    descriptions = render_descriptions(trace, text_rng)
    transcripts = render_transcripts(trace, text_rng, cfg)
    qa = generate_qa(trace, qa_rng, cfg)

    segments = [
        Segment(
            start_s=step.start_s,
            end_s=step.end_s,
            description=descriptions[k],
            transcript=transcripts[k],
            frames=frames[k],
        )
        for k, step in enumerate(trace.steps)
    ]
    video = VideoRecord(
        id=f"vid{index:05d}", duration_s=trace.duration_s, segments=segments, qa=qa
    )
    return video, trace


def generate_video(index, dataset_cfg):
    """Build one video record from its independent seeded streams."""
    video, _ = _generate_video(index, dataset_cfg)
    return video


def generate_splits(dataset_cfg=None, return_traces=False):
    """Generate (train, test) manifests with video-disjoint splits.

    Each video comes from streams seeded by (data_seed, video_index), so
    generating videos in parallel or serially yields identical datasets.
    """
    cfg = dataset_cfg or DatasetConfig()
    train, test = [], []
    traces = {}
    for index in range(cfg.train_videos + cfg.test_videos):
        video, trace = _generate_video(index, cfg)
        traces[video.id] = trace
        (train if index < cfg.train_videos else test).append(video)
    out = (Manifest(train, "train"), Manifest(test, "test"))
    if return_traces:
        return out + (traces,)
    return out
