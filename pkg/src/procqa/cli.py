"""Command line interface: generate / train / eval / gradcheck / grid."""

import argparse
import json
import os
import sys
from dataclasses import replace

from .dataset import DatasetConfig, SchemaError, WorldConfig, generate_splits, load_dataset, save_dataset
from .harness import (
    ConfigError,
    PRESETS,
    RunConfig,
    evaluate_checkpoint,
    load_checkpoint,
    save_checkpoint,
    train,
)


def _cmd_generate(args):
    world = WorldConfig(
        feature_sigma=args.noise_sigma,
        p_ins=args.noise_p_ins,
        p_drop=args.noise_p_drop,
        jitter_s=args.noise_jitter,
        qa_per_video=args.qa_per_video,
        seconds_per_frame=args.seconds_per_frame,
        frame_dim=args.frame_dim,
    )
    n_test = args.test_videos
    if n_test >= args.videos:
        raise ConfigError("--test-videos must be smaller than --videos")
    cfg = DatasetConfig(
        world=world,
        train_videos=args.videos - n_test,
        test_videos=n_test,
        data_seed=args.seed,
        feature_seed=args.feature_seed,
    )
    train_m, test_m = generate_splits(cfg)
    os.makedirs(args.out, exist_ok=True)
    save_dataset(train_m, os.path.join(args.out, "train.json"))
    save_dataset(test_m, os.path.join(args.out, "test.json"))
    n_train_qa = sum(len(v.qa) for v in train_m.videos)
    n_test_qa = sum(len(v.qa) for v in test_m.videos)
    print(
        f"wrote {len(train_m.videos)} train videos ({n_train_qa} QA) and "
        f"{len(test_m.videos)} test videos ({n_test_qa} QA) to {args.out}"
    )
    return 0


def _run_config_from_args(args):
    doc = {}
    if args.config:
        with open(args.config) as f:
            doc = json.load(f)
    overrides = {
        "variant": args.model,
        "head": args.head,
        "modalities": args.modalities,
        "epochs": args.epochs,
        "lr": args.lr,
        "hidden_dim": args.hidden,
        "embed_dim": args.embed,
        "batch_size": args.batch,
        "param_seed": args.seed,
        "shuffle_seed": args.shuffle_seed if args.shuffle_seed is not None else None,
        "data": args.data,
        "out": args.out,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed is not None and args.shuffle_seed is None:
        doc["shuffle_seed"] = args.seed + 1
    return RunConfig.from_dict(doc, preset=args.preset).validated()


def _cmd_train(args):
    config = _run_config_from_args(args)
    if not config.data:
        raise ConfigError("--data is required")
    model, report, checkpoint = train(config, log=print)
    print(report.format_table())
    if config.out:
        os.makedirs(config.out, exist_ok=True)
        save_checkpoint(checkpoint, os.path.join(config.out, "checkpoint.json"))
        with open(os.path.join(config.out, "metrics.json"), "w") as f:
            json.dump(report.to_dict(), f, indent=2)
        print(f"wrote checkpoint and metrics to {config.out}")
    return 0


def _cmd_eval(args):
    checkpoint = load_checkpoint(args.checkpoint)
    path = args.data
    if os.path.isdir(path):
        path = os.path.join(path, "test.json")
    manifest = load_dataset(path)
    report = evaluate_checkpoint(checkpoint, manifest)
    print(report.format_table())
    if args.out:
        with open(args.out, "w") as f:
            json.dump(report.to_dict(), f, indent=2)
    return 0


def _cmd_gradcheck(args):
    from . import gradcheck

    report = gradcheck.run(scope=args.scope)
    print(report.format())
    return 0 if report.all_ok else 1


def _cmd_grid(args):
    with open(args.spec) as f:
        spec = json.load(f)
    base = spec.get("base", {})
    runs = spec.get("runs")
    if not isinstance(runs, list) or not runs:
        raise ConfigError("grid spec needs a non-empty 'runs' list")
    rows = []
    os.makedirs(args.out, exist_ok=True) if args.out else None
    for k, overrides in enumerate(runs):
        doc = dict(base)
        doc.update(overrides)
        if args.data:
            doc["data"] = args.data
        config = RunConfig.from_dict(doc).validated()
        label = overrides.get("label", f"{config.variant}/{config.head}/{config.modalities}")
        print(f"[{k + 1}/{len(runs)}] {label}")
        _, report, checkpoint = train(config, log=None)
        print(report.format_table())
        rows.append({"label": label, **report.to_dict()})
        if args.out:
            stem = label.replace("/", "_").replace("+", "")
            save_checkpoint(checkpoint, os.path.join(args.out, f"{stem}.checkpoint.json"))
    if args.out:
        with open(os.path.join(args.out, "grid.json"), "w") as f:
            json.dump(rows, f, indent=2)
        print(f"wrote grid results to {args.out}/grid.json")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="procqa", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--videos", type=int, default=600, help="total videos (train + test)")
    g.add_argument("--test-videos", type=int, default=100)
    g.add_argument("--qa-per-video", type=int, default=8)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--feature-seed", type=int, default=1234)
    g.add_argument("--noise-sigma", type=float, default=0.1)
    g.add_argument("--noise-p-ins", type=float, default=0.15)
    g.add_argument("--noise-p-drop", type=float, default=0.10)
    g.add_argument("--noise-jitter", type=float, default=3.0)
    g.add_argument("--seconds-per-frame", type=float, default=15.0)
    g.add_argument("--frame-dim", type=int, default=16)
    g.set_defaults(fn=_cmd_generate)

    t = sub.add_parser("train", help="train one configuration")
    t.add_argument("--model", choices=None)
    t.add_argument("--head", choices=["mc", "kspace"])
    t.add_argument("--modalities")
    t.add_argument("--preset", choices=sorted(PRESETS))
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--hidden", type=int)
    t.add_argument("--embed", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--shuffle-seed", type=int)
    t.add_argument("--data")
    t.add_argument("--out")
    t.add_argument("--config", help="JSON file mirroring the run-config fields")
    t.set_defaults(fn=_cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out")
    e.set_defaults(fn=_cmd_eval)

    c = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    c.add_argument("--scope", choices=["ops", "blocks", "models", "all"], default="all")
    c.set_defaults(fn=_cmd_gradcheck)

    r = sub.add_parser("grid", help="run a grid of configurations")
    r.add_argument("--spec", required=True)
    r.add_argument("--data")
    r.add_argument("--out")
    r.set_defaults(fn=_cmd_grid)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
