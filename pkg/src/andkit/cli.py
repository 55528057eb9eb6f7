"""Command-line entry point: generate, train, eval, inspect.

Every command is flags-only and honours --seed; a train run writes a
manifest with the fully resolved configuration, and re-running from that
manifest reproduces the checkpoint and metrics byte for byte.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .affinity import build_neighbourhoods, singleton
from .data import BlobSpec, Dataset, generate_blobs, load_dataset, save_bin, save_csv
from .errors import AndkitError, ContractError
from .evaluation import (
    DEFAULT_EVAL_TAU,
    DEFAULT_K_EVAL,
    EvalReport,
    consistency_curve_csv,
    knn_predict_batch,
    linear_probe,
    neighbourhood_consistency,
    per_class_accuracy,
)
from .encoder import forward
from .pipeline import (
    TrainConfig,
    load_checkpoint,
    plan_round,
    save_checkpoint,
    train,
)

_METRIC_FIELDS = (
    "round",
    "epoch",
    "mean_loss",
    "selected_fraction",
    "consistent_count",
    "inconsistent_count",
    "knn_accuracy",
)


class _UsageError(Exception):
    pass


def _parse_layers(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise _UsageError(f"--layers expects comma-separated integers, got {text!r}") from None
    if not sizes or any(s < 1 for s in sizes):
        raise _UsageError(f"--layers sizes must be positive, got {text!r}")
    return sizes


def cmd_generate(args) -> int:
    if args.classes < 2 or args.per_class < 2 or args.dim < 2:
        raise _UsageError("--classes, --per-class need >= 2 and --dim >= 2")
    if not args.noise_sigma > 0:
        raise _UsageError("--noise-sigma must be > 0")
    dataset = generate_blobs(
        BlobSpec(
            num_classes=args.classes,
            per_class=args.per_class,
            dim=args.dim,
            center_scale=args.center_scale,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
    )
    if args.format == "csv":
        save_csv(dataset, args.out)
    else:
        save_bin(dataset, args.out)
    print(f"wrote {dataset.n} samples ({dataset.dim} dims, {args.classes} classes) to {args.out}")
    return 0


def _config_to_jsonable(config: TrainConfig) -> dict:
    blob = dataclasses.asdict(config)
    blob["layer_sizes"] = list(blob["layer_sizes"])
    return blob


def _config_from_jsonable(blob: dict) -> TrainConfig:
    blob = dict(blob)
    blob["layer_sizes"] = tuple(blob["layer_sizes"])
    return TrainConfig(**blob)


def _make_monitor(dataset: Dataset, tau: float):
    """Round-boundary diagnostics for labelled data; training never sees labels."""
    labels = dataset.labels
    k_eval = min(DEFAULT_K_EVAL, dataset.n - 1)

    def monitor(r, plan, bank, params):
        consistent, inconsistent = neighbourhood_consistency(plan.neighbourhoods, labels)
        feats, _ = forward(params, dataset.inputs)
        preds = knn_predict_batch(feats, bank, labels, k_eval, tau, leave_one_out=True)
        return {
            "consistent_count": consistent,
            "inconsistent_count": inconsistent,
            "knn_accuracy": float((preds == labels).mean()),
        }

    return monitor


def cmd_train(args) -> int:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        config = _config_from_jsonable(manifest["config"])
        data_path = manifest["data"]
        out_dir = Path(args.out) if args.out else Path(manifest["out"])
    else:
        if not args.data or not args.out:
            raise _UsageError("--data and --out are required (or use --manifest)")
        if args.rounds < 1:
            raise _UsageError("--rounds must be >= 1")
        if args.epochs < 0 or (args.init_epochs is not None and args.init_epochs < 0):
            raise _UsageError("epoch counts must be >= 0")
        if args.batch_size < 1 or args.k < 1:
            raise _UsageError("--batch-size and --k must be >= 1")
        if not (args.lr > 0 and args.tau > 0 and 0 < args.eta <= 1):
            raise _UsageError("--lr and --tau must be > 0, --eta in (0, 1]")
        data_path = args.data
        out_dir = Path(args.out)
        peek = load_dataset(data_path)
        init_epochs = 0 if args.init == "none" else args.init_epochs
        config = TrainConfig(
            layer_sizes=(peek.dim,) + _parse_layers(args.layers),
            rounds=args.rounds,
            epochs_per_round=args.epochs,
            init_epochs=init_epochs,
            batch_size=args.batch_size,
            base_lr=args.lr,
            momentum=args.momentum,
            tau=args.tau,
            eta=args.eta,
            k=args.k,
            seed=args.seed,
            lr_reset_per_round=args.lr_reset_per_round,
            one_off=args.one_off,
            instance_only=args.instance_only,
        )

    dataset = load_dataset(data_path)
    monitor = _make_monitor(dataset, DEFAULT_EVAL_TAU) if dataset.labels is not None else None
    params, bank, records = train(dataset.inputs, config, monitor=monitor)

    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(params, bank, config, out_dir / "checkpoint.andc")
    with open(out_dir / "metrics.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            row = {name: getattr(rec, name) for name in _METRIC_FIELDS}
            fh.write(json.dumps(row) + "\n")
    manifest = {
        "artifact_version": __version__,
        "command": "train",
        "data": str(data_path),
        "out": str(out_dir),
        "config": _config_to_jsonable(config),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    final = records[-1].mean_loss if records else float("nan")
    print(f"trained {config.rounds} rounds on {dataset.n} samples; final mean loss {final:.6f}")
    print(f"outputs in {out_dir}/: checkpoint.andc, metrics.jsonl, manifest.json")
    return 0


def _full_neighbourhoods(bank, config):
    if config.force_singleton_neighbourhoods:
        return [singleton(i) for i in range(bank.n)]
    return build_neighbourhoods(bank, config.k)


def cmd_eval(args) -> int:
    if args.knn_k < 1:
        raise _UsageError("--knn-k must be >= 1")
    ckpt = load_checkpoint(args.checkpoint)
    split = load_dataset(args.data)
    if split.labels is None:
        raise ContractError(f"{args.data}: evaluation needs a labelled dataset")
    if args.bank_data:
        bank_split = load_dataset(args.bank_data)
        if bank_split.labels is None:
            raise ContractError(f"{args.bank_data}: bank dataset must be labelled")
        leave_one_out = False
    else:
        bank_split = split
        leave_one_out = True
    if bank_split.n != ckpt.bank.n:
        raise ContractError(
            f"bank dataset has {bank_split.n} samples but checkpoint bank has {ckpt.bank.n}"
        )

    feats, _ = forward(ckpt.params, split.inputs)
    preds = knn_predict_batch(
        feats, ckpt.bank, bank_split.labels, args.knn_k, args.tau, leave_one_out
    )
    linear_acc = None
    if args.probe:
        linear_acc = linear_probe(
            bank_split, split, ckpt.params, epochs=args.probe_epochs, lr=args.probe_lr
        )
    consistent, inconsistent = neighbourhood_consistency(
        _full_neighbourhoods(ckpt.bank, ckpt.config), bank_split.labels
    )
    report = EvalReport(
        knn_accuracy=float((preds == split.labels).mean()),
        linear_accuracy=linear_acc,
        consistent_count=consistent,
        inconsistent_count=inconsistent,
        per_class_accuracy=per_class_accuracy(preds, split.labels),
    )
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_inspect(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    r = args.round if args.round is not None else ckpt.final_round
    if not 1 <= r <= ckpt.config.rounds:
        raise _UsageError(f"--round must lie in [1, {ckpt.config.rounds}], got {r}")
    labels = None
    if args.data:
        labelled = load_dataset(args.data)
        if labelled.labels is None or labelled.n != ckpt.bank.n:
            raise ContractError(f"{args.data}: needs labels for all {ckpt.bank.n} bank rows")
        labels = labelled.labels
    plan = plan_round(ckpt.bank, ckpt.config, r)
    neighbourhoods = _full_neighbourhoods(ckpt.bank, ckpt.config)
    lines = ["anchor,members,entropy,selected,consistent"]
    for i, nb in enumerate(neighbourhoods):
        if labels is None:
            consistent = ""
        else:
            member_labels = labels[list(nb.members)]
            consistent = str(int((member_labels == member_labels[0]).all()))
        members = ";".join(str(j) for j in nb.members)
        lines.append(
            f"{i},{members},{float(plan.entropies[i])!r},{int(plan.selected[i])},{consistent}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_curve(args) -> int:
    rows = [json.loads(line) for line in Path(args.metrics).read_text().splitlines() if line]
    text = consistency_curve_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="andkit",
        description="Anchor-neighbourhood curriculum training and evaluation toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"andkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic blob dataset")
    gen.add_argument("--classes", type=int, required=True)
    gen.add_argument("--per-class", type=int, required=True)
    gen.add_argument("--dim", type=int, required=True)
    gen.add_argument("--center-scale", type=float, default=5.0)
    gen.add_argument("--noise-sigma", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--format", choices=("bin", "csv"), default="bin")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    tr = sub.add_parser("train", help="run the curriculum trainer")
    tr.add_argument("--data", help="dataset path (.ands binary or .csv)")
    tr.add_argument("--out", help="output directory")
    tr.add_argument("--manifest", help="re-run the exact configuration of a prior manifest")
    tr.add_argument("--rounds", type=int, default=4)
    tr.add_argument("--epochs", type=int, default=20, help="epochs per round")
    tr.add_argument("--init-epochs", type=int, default=None, help="default: same as --epochs")
    tr.add_argument("--batch-size", type=int, default=128)
    tr.add_argument("--lr", type=float, default=0.03)
    tr.add_argument("--momentum", type=float, default=0.9)
    tr.add_argument("--tau", type=float, default=0.07)
    tr.add_argument("--eta", type=float, default=0.5)
    tr.add_argument("--k", type=int, default=1)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--layers", default="64,16", help="hidden and output sizes after the input dim")
    tr.add_argument(
        "--init",
        choices=("random", "none"),
        default="random",
        help="'none' skips the instance-specificity warm-up phase",
    )
    tr.add_argument("--one-off", action="store_true", help="plan all anchors once, no curriculum")
    tr.add_argument(
        "--instance-only", action="store_true", help="baseline: never use neighbourhood terms"
    )
    tr.add_argument("--lr-reset-per-round", action="store_true")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="score a checkpoint on a labelled split")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True, help="labelled split to score")
    ev.add_argument(
        "--bank-data",
        help="labelled training split backing the memory bank; omit when --data is it",
    )
    ev.add_argument("--knn-k", type=int, default=DEFAULT_K_EVAL)
    ev.add_argument("--tau", type=float, default=DEFAULT_EVAL_TAU)
    ev.add_argument("--probe", action="store_true", help="also train a linear probe")
    ev.add_argument("--probe-epochs", type=int, default=200)
    ev.add_argument("--probe-lr", type=float, default=0.5)
    ev.add_argument("--out", help="write the JSON report here instead of stdout")
    ev.set_defaults(func=cmd_eval)

    ins = sub.add_parser("inspect", help="dump per-anchor curriculum state as CSV")
    ins.add_argument("--checkpoint", required=True)
    ins.add_argument("--round", type=int, default=None, help="default: final trained round")
    ins.add_argument("--data", help="labelled dataset for the consistency column")
    ins.add_argument("--out", help="write CSV here instead of stdout")
    ins.set_defaults(func=cmd_inspect)

    cv = sub.add_parser("curve", help="per-round consistency counts from a metrics file, as CSV")
    cv.add_argument("--metrics", required=True, help="metrics.jsonl from a train run")
    cv.add_argument("--out", help="write CSV here instead of stdout")
    cv.set_defaults(func=cmd_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except (AndkitError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
