"""Command-line entry points: train, eval, export-embeddings, serve-labeler."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import config as config_mod
from .data import Dataset, load_cifar_binary, make_synthetic_blobs
from .model import export_embeddings, load_checkpoint
from .oracle import HumanOracle, QueryQueue, SimulatedOracle
from .server import LabelServer, RunStatus, default_static_dir
from .trainer import evaluate, run


def _load_datasets(flat: dict, args) -> tuple[Dataset, Dataset]:
    name = getattr(args, "dataset", None) or flat.get("dataset.name", "blobs")
    if name == "blobs":
        classes = flat.get("dataset.blobs_classes", 3)
        per_class = flat.get("dataset.blobs_per_class", 100)
        side = flat.get("dataset.blobs_side", 16)
        seed = flat.get("train.seed", 0)
        train = make_synthetic_blobs(classes, per_class, side, seed=seed, split="train")
        test = make_synthetic_blobs(classes, per_class, side, seed=seed + 1, split="test")
        return train, test
    if name in ("cifar10", "cifar100"):
        data_dir = getattr(args, "data_dir", None) or flat.get("dataset.data_dir")
        if not data_dir:
            raise SystemExit("--data-dir (or dataset.data_dir) is required for CIFAR")
        return (
            load_cifar_binary(data_dir, name, split="train"),
            load_cifar_binary(data_dir, name, split="test"),
        )
    # SVHN's MATLAB container format is intentionally unsupported
    raise SystemExit(f"unknown dataset {name!r} (choose cifar10, cifar100, or blobs)")


def _cmd_train(args) -> int:
    cfg, flat = config_mod.load_train_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.batch.seed = args.seed
    train_ds, test_ds = _load_datasets(flat, args)

    server = None
    status = RunStatus()
    if args.oracle == "human":
        queue = QueryQueue()
        oracle = HumanOracle(queue, default_timeout=cfg.oracle_timeout)
        server = LabelServer(queue, status, host=args.bind.split(":")[0],
                             port=int(args.bind.split(":")[1]),
                             static_dir=default_static_dir())
        server.start()
        print(f"labeling UI at http://{args.bind}/", file=sys.stderr)
    else:
        oracle = SimulatedOracle(train_ds.labels)

    try:
        net, metrics = run(cfg, train_ds, test_ds, oracle, out_dir=args.out_dir, status=status)
    finally:
        if server:
            server.stop()
    print(json.dumps({"final_test_accuracy": metrics.final_accuracy,
                      "labels_collected": metrics.records[-1]["labels_collected"]}))
    return 0


def _cmd_eval(args) -> int:
    net, _ = load_checkpoint(args.checkpoint)
    cfg, flat = config_mod.load_train_config(args.config)
    _, test_ds = _load_datasets(flat, args)
    print(json.dumps({"test_accuracy": evaluate(net, test_ds)}))
    return 0


def _cmd_export(args) -> int:
    net, _ = load_checkpoint(args.checkpoint)
    cfg, flat = config_mod.load_train_config(args.config)
    train_ds, _ = _load_datasets(flat, args)
    export_embeddings(net, train_ds, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_serve(args) -> int:
    # standalone label server for UI development against a scripted queue
    queue = QueryQueue()
    status = RunStatus()
    if args.demo_queries:
        rng = np.random.default_rng(0)
        from .oracle import LabelQuery

        for qid in range(args.demo_queries):
            img = rng.random((32, 32, 3)).astype(np.float32)
            queue.put(LabelQuery(query_id=qid, dataset_index=qid, image=img,
                                 class_names=[f"class_{k}" for k in range(10)]))
        status.update(label_budget=args.demo_queries)
    host, port = args.bind.split(":")
    server = LabelServer(queue, status, host=host, port=int(port),
                         static_dir=default_static_dir())
    server.start()
    print(f"label service on http://{args.bind}/ (ctrl-c to stop)", file=sys.stderr)
    try:
        server._thread.join()
    except KeyboardInterrupt:
        server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activematch")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a full training session")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--oracle", choices=["sim", "human"], default="sim")
    p_train.add_argument("--dataset", choices=["cifar10", "cifar100", "blobs"])
    p_train.add_argument("--data-dir")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--out-dir", default="runs/latest")
    p_train.add_argument("--bind", default="127.0.0.1:8765")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--dataset", choices=["cifar10", "cifar100", "blobs"])
    p_eval.add_argument("--data-dir")
    p_eval.set_defaults(func=_cmd_eval)

    p_exp = sub.add_parser("export-embeddings", help="write projection vectors to CSV")
    p_exp.add_argument("--checkpoint", required=True)
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--dataset", choices=["cifar10", "cifar100", "blobs"])
    p_exp.add_argument("--data-dir")
    p_exp.set_defaults(func=_cmd_export)

    p_srv = sub.add_parser("serve-labeler", help="run the label service standalone")
    p_srv.add_argument("--bind", default="127.0.0.1:8765")
    p_srv.add_argument("--demo-queries", type=int, default=0)
    p_srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
