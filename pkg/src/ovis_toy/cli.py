"""Command-line harness: dataset generation, staged training, evaluation,
gradient checking, sparsity reporting and the ovis-vs-connector comparison."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import data
from .checkpoint import load_into_model, save_model
from .checks import run_model_check, run_op_checks
from .config import load_config
from .model import build_model, param_parity
from .tokenizer import sparsity_stats
from .training import build_stage, token_accuracy, train_stage


class CliError(Exception):
    pass


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise CliError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _load_cfg(args):
    return load_config(getattr(args, "config", None), _parse_overrides(getattr(args, "set", None)))


def _add_common(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config knob (repeatable; wins over the file)")


def cmd_gen_data(args):
    counts = {"caption": args.captions, "description": args.descriptions, "instruction": args.instructions}
    paths = data.write_dataset(args.seed, counts, args.out)
    for kind, path in paths.items():
        print(f"{kind}\t{counts[kind]}\t{path}")
    return 0


def _stage_records(cfg, data_dir, kind, train_split: bool):
    path = os.path.join(data_dir, f"{kind}s.jsonl")
    if not os.path.exists(path):
        raise CliError(f"dataset file not found: {path}")
    records = data.read_records(path)
    train, held = data.split_holdout(records, cfg.holdout_every)
    return train if train_split else held


def cmd_train(args):
    cfg = _load_cfg(args)
    if args.stage > 1 and not args.ckpt_in:
        raise CliError(f"train --stage {args.stage} requires --ckpt-in")
    model = build_model(args.arch, cfg, seed=args.seed)
    if args.ckpt_in:
        load_into_model(args.ckpt_in, model)
    stage_cfg = build_stage(args.stage, cfg)
    records = _stage_records(cfg, args.data, stage_cfg.dataset_kind, train_split=True)
    log_path = args.log or args.ckpt_out + ".log"
    with open(log_path, "w", encoding="utf-8", newline="\n") as log:
        result = train_stage(model, stage_cfg, records, seed=args.seed, log_file=log)
    save_model(args.ckpt_out, model)
    print(f"stage {args.stage} done: {len(result.losses)} steps, "
          f"final loss {result.losses[-1]:.6f}, checkpoint {args.ckpt_out}")
    return 0


def cmd_eval(args):
    cfg = _load_cfg(args)
    model = build_model(args.arch, cfg, seed=args.seed)
    load_into_model(args.ckpt, model)
    records = _stage_records(cfg, args.data, args.kind, train_split=False)
    acc = token_accuracy(model, records)
    print(f"token-accuracy\t{acc:.6f}")
    return 0


def cmd_grad_check(args):
    ok = True
    if args.scope in ("ops", "all"):
        for name, err in run_op_checks(tol=args.tol).items():
            status = "ok" if err < args.tol else "FAIL"
            if err >= args.tol:
                ok = False
            print(f"op\t{name}\t{err:.3e}\t{status}")
    if args.scope in ("model", "all"):
        for arch in ("ovis", "connector"):
            err = run_model_check(arch, tol=args.tol)
            status = "ok" if err < args.tol else "FAIL"
            if err >= args.tol:
                ok = False
            print(f"model\t{arch}\t{err:.3e}\t{status}")
    return 0 if ok else 1


def cmd_sparsity(args):
    cfg = _load_cfg(args)
    model = build_model("ovis", cfg, seed=args.seed)
    load_into_model(args.ckpt, model)
    thresholds = [float(t) for t in args.thresholds.split(",")]
    records = _stage_records(cfg, args.data, args.kind, train_split=False)
    tokens = []
    for rec in records:
        image = data.render(rec.objects, cfg.image_size, cfg.channels)
        reps = model.encoder.encode(model.patches_for(image))
        tokens.append(model.tokenize(reps).data)
    report = sparsity_stats(np.concatenate(tokens, axis=0), thresholds)
    sys.stdout.write(report.as_tsv())
    return 0


def _full_run(arch, cfg, data_dir, seed):
    model = build_model(arch, cfg, seed=seed)
    for stage in (1, 2, 3):
        stage_cfg = build_stage(stage, cfg)
        records = _stage_records(cfg, data_dir, stage_cfg.dataset_kind, train_split=True)
        train_stage(model, stage_cfg, records, seed=seed)
    held = _stage_records(cfg, data_dir, "instruction", train_split=False)
    return model, token_accuracy(model, held)


def cmd_compare(args):
    cfg = _load_cfg(args)
    model, acc = _full_run(args.arch, cfg, args.data, args.seed)
    named = model.named_parameters()
    bridge_params = sum(p.data.size for n, p in named.items() if n.startswith("bridge."))
    row = f"{args.arch}\t{bridge_params}\t{acc:.6f}\n"
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(row)
    sys.stdout.write(row)
    return 0


def cmd_compare_report(args):
    cfg = _load_cfg(args)
    rows = {}
    for path in args.rows:
        with open(path, encoding="utf-8") as f:
            for line in f:
                arch, params, acc = line.strip().split("\t")
                rows[arch] = (int(params), float(acc))
    print("architecture\tvisual-path params\ttoken-accuracy")
    for arch in ("connector", "ovis"):
        if arch in rows:
            params, acc = rows[arch]
            print(f"{arch}\t{params}\t{acc:.6f}")
    if "ovis" in rows and "connector" in rows:
        delta = rows["ovis"][1] - rows["connector"][1]
        print(f"improvement\t\t{delta:+.6f}")
    print(param_parity(cfg).as_text(), end="")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="ovis-toy",
                                     description="Toy structured-visual-embedding pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate synthetic vision-language records")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--captions", type=int, required=True)
    p.add_argument("--descriptions", type=int, required=True)
    p.add_argument("--instructions", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="run one training stage")
    p.add_argument("--stage", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt-in")
    p.add_argument("--ckpt-out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--arch", choices=("ovis", "connector"), default="ovis")
    p.add_argument("--log")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="held-out evaluation of a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--metric", choices=("token-accuracy",), default="token-accuracy")
    p.add_argument("--kind", choices=data.KINDS, default="instruction")
    p.add_argument("--arch", choices=("ovis", "connector"), default="ovis")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grad-check", help="finite-difference gradient verification")
    p.add_argument("--scope", choices=("ops", "model", "all"), default="all")
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("sparsity", help="token-probability sparsity report")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--thresholds", default="1e-4,1e-5,1e-6")
    p.add_argument("--kind", choices=data.KINDS, default="instruction")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_sparsity)

    p = sub.add_parser("compare", help="train one bridge end to end and emit a metrics row")
    p.add_argument("--arch", choices=("ovis", "connector"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("compare-report", help="merge compare rows into one table")
    p.add_argument("--rows", nargs="+", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_compare_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # contract violations surface as one-line diagnostics
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
