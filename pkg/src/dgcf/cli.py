"""Command line pipeline: preprocess, train, evaluate, recommend, diagnose.

Options resolve with the precedence: explicit flag > key=value config file
(--config) > built-in default. Every command echoes its fully resolved
configuration next to its outputs, so any reported number can be traced to
the exact settings that produced it. Exit codes: 0 success, 1 usage or data
error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import bprmf_fit, lightgcn_forward
from .data import k_core_filter, load_split, parse_interactions, save_split, split_train_test
from .data import FORMATS
from .errors import ConfigError, DataError, DgcfError
from .evaluate import evaluate_model, oversmoothing_report, rank_items, report_tsv
from .model import ACTIVATIONS, EMBEDDING_MODES, Hyperparams, ModelParams, forward, \
    score_all_items
from .modelfile import ModelRecord, load_model, save_model
from .train import OPTIMIZERS, TrainConfig, fit, laplacian_for
from .util import write_atomic_text

MODEL_CHOICES = ("ours", "plain", "lightgcn", "bprmf")


@dataclass
class RunConfig:
    """Resolved settings for one command invocation."""

    command: str
    input: str | None = None
    format: str | None = None
    k_core: int | None = None
    test_ratio: float | None = None
    seed: int | None = None
    out: str | None = None
    data: str | None = None
    model: str | None = None
    log: str | None = None
    dim: int | None = None
    layers: int | None = None
    alpha: float | None = None
    beta: float | None = None
    activation: str | None = None
    embedding_mode: str | None = None
    layer_weights: str | None = None
    lr: float | None = None
    reg_lambda: float | None = None
    epochs: int | None = None
    batch_size: int | None = None
    batches_per_epoch: int | None = None
    optimizer: str | None = None
    eval_every: int | None = None
    patience: int | None = None
    model_path: str | None = None
    k: int | None = None
    user: str | None = None
    top: int | None = None
    models: str | None = None
    layer_range: str | None = None

    def echo(self) -> str:
        skip = {"command"}
        items = [(k, v) for k, v in vars(self).items() if v is not None and k not in skip]
        return "".join(f"{k}={v}\n" for k, v in sorted(items))


# (field, cast, default, required); None default + not required = optional
_FIELDS = {
    "preprocess": [
        ("input", str, None, True),
        ("format", str, "edge-pairs", False),
        ("k_core", int, 10, False),
        ("test_ratio", float, 0.2, False),
        ("seed", int, 0, False),
        ("out", str, None, True),
    ],
    "train": [
        ("data", str, None, True),
        ("model", str, "ours", False),
        ("out", str, None, True),
        ("log", str, None, False),
        ("dim", int, 64, False),
        ("layers", int, 4, False),
        ("alpha", float, 0.1, False),
        ("beta", float, 0.1, False),
        ("activation", str, "relu", False),
        ("embedding_mode", str, "sw", False),
        ("layer_weights", str, None, False),
        ("lr", float, 1e-3, False),
        ("reg_lambda", float, 1e-4, False),
        ("epochs", int, 200, False),
        ("batch_size", int, 1024, False),
        ("batches_per_epoch", int, None, False),
        ("optimizer", str, "adam", False),
        ("eval_every", int, 10, False),
        ("patience", int, 10, False),
        ("seed", int, 0, False),
    ],
    "evaluate": [
        ("model_path", str, None, True),
        ("data", str, None, True),
        ("k", int, 20, False),
    ],
    "recommend": [
        ("model_path", str, None, True),
        ("data", str, None, True),
        ("user", str, None, True),
        ("top", int, 10, False),
    ],
    "diagnose": [
        ("data", str, None, True),
        ("models", str, "ours,plain", False),
        ("layer_range", str, "1..8", False),
        ("dim", int, 64, False),
        ("seed", int, 0, False),
    ],
}


class _Parser(argparse.ArgumentParser):
    # usage mistakes are user errors (exit 1), not argparse's default exit 2
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dgcf", description="Graph collaborative filtering pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    pre = sub.add_parser("preprocess", help="filter, remap, and split an interaction file")
    pre.add_argument("--input", help="raw interaction file")
    pre.add_argument("--format", choices=FORMATS)
    pre.add_argument("--k-core", type=int, dest="k_core", help="minimum interactions per node")
    pre.add_argument("--test-ratio", type=float, dest="test_ratio")
    pre.add_argument("--seed", type=int)
    pre.add_argument("--out", help="output dataset directory")

    tr = sub.add_parser("train", help="train a model on a preprocessed directory")
    tr.add_argument("--data", help="preprocessed dataset directory")
    tr.add_argument("--model", choices=MODEL_CHOICES)
    tr.add_argument("--out", help="model file path")
    tr.add_argument("--log", help="training log path (default: <out>.log.jsonl)")
    tr.add_argument("--dim", type=int)
    tr.add_argument("--layers", type=int)
    tr.add_argument("--alpha", type=float)
    tr.add_argument("--beta", type=float)
    tr.add_argument("--activation", choices=ACTIVATIONS)
    tr.add_argument("--embedding-mode", choices=EMBEDDING_MODES, dest="embedding_mode")
    tr.add_argument("--layer-weights", dest="layer_weights",
                    help="comma-separated weights, length layers+1")
    tr.add_argument("--lr", type=float)
    tr.add_argument("--reg-lambda", type=float, dest="reg_lambda")
    tr.add_argument("--epochs", type=int)
    tr.add_argument("--batch-size", type=int, dest="batch_size")
    tr.add_argument("--batches-per-epoch", type=int, dest="batches_per_epoch")
    tr.add_argument("--optimizer", choices=OPTIMIZERS)
    tr.add_argument("--eval-every", type=int, dest="eval_every")
    tr.add_argument("--patience", type=int)
    tr.add_argument("--seed", type=int)

    ev = sub.add_parser("evaluate", help="rank held-out items and report Recall/NDCG")
    ev.add_argument("--model", dest="model_path", help="model file")
    ev.add_argument("--data")
    ev.add_argument("--k", type=int)

    rec = sub.add_parser("recommend", help="top items for one user")
    rec.add_argument("--model", dest="model_path", help="model file")
    rec.add_argument("--data")
    rec.add_argument("--user", help="original user token")
    rec.add_argument("--top", type=int)

    di = sub.add_parser("diagnose", help="per-layer embedding smoothness table")
    di.add_argument("--data")
    di.add_argument("--models", help="comma-separated tags from: ours, plain")
    di.add_argument("--layers", dest="layer_range", help="depth or range, e.g. 8 or 1..8")
    di.add_argument("--dim", type=int)
    di.add_argument("--seed", type=int)

    for s in (pre, tr, ev, rec, di):
        s.add_argument("--config", help="key=value config file; flags override it")
    return p


def read_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {s!r}")
        key, val = s.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def resolve_config(ns: argparse.Namespace, file_cfg: dict[str, str]) -> RunConfig:
    fields = _FIELDS[ns.command]
    known = {name for name, _, _, _ in fields}
    for key in file_cfg:
        if key not in known:
            raise ConfigError(f"config file key {key!r} is not valid for {ns.command}")
    values: dict = {}
    for name, cast, default, required in fields:
        val = getattr(ns, name, None)
        if val is None and name in file_cfg:
            try:
                val = cast(file_cfg[name])
            except ValueError as exc:
                raise ConfigError(f"config key {name}={file_cfg[name]!r}: {exc}") from exc
        if val is None:
            val = default
        if val is None and required:
            raise ConfigError(f"{ns.command} requires --{name.replace('_', '-')}")
        values[name] = val
    return RunConfig(command=ns.command, **values)


def _require_choice(value: str, choices, what: str) -> None:
    if value not in choices:
        raise ConfigError(f"{what} must be one of {', '.join(choices)}; got {value!r}")


def _parse_layer_weights(text: str | None, L: int):
    if text is None:
        return None
    try:
        weights = np.array([float(tok) for tok in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad layer weights {text!r}: {exc}") from exc
    if len(weights) != L + 1:
        raise ConfigError(f"layer weights need {L + 1} entries for {L} layers, got {len(weights)}")
    return weights


def parse_layer_range(text: str) -> int:
    """'8' or '1..8' -> deepest requested layer (one run covers all shallower)."""
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            depth = int(lo)
            low = depth
        else:
            low, depth = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"bad layer range {text!r}, expected e.g. 8 or 1..8") from None
    if low < 0 or depth < low:
        raise ConfigError(f"bad layer range {text!r}: need 0 <= low <= high")
    return depth


def hyper_for_tag(cfg: RunConfig) -> Hyperparams:
    weights = _parse_layer_weights(cfg.layer_weights, cfg.layers)
    if cfg.model == "plain":
        # plain deep propagation: no residual, no transform, final-layer readout
        if weights is None:
            weights = np.zeros(cfg.layers + 1)
            weights[cfg.layers] = 1.0
        return Hyperparams(d=cfg.dim, L=cfg.layers, alpha=0.0, beta=0.0, layer_weights=weights,
                           activation="identity", embedding_mode=cfg.embedding_mode,
                           reg_lambda=cfg.reg_lambda, lr=cfg.lr)
    if cfg.model == "lightgcn":
        return Hyperparams(d=cfg.dim, L=cfg.layers, alpha=0.0, beta=0.0, layer_weights=weights,
                           activation="identity", embedding_mode="free",
                           reg_lambda=cfg.reg_lambda, lr=cfg.lr)
    return Hyperparams(d=cfg.dim, L=cfg.layers, alpha=cfg.alpha, beta=cfg.beta,
                       layer_weights=weights, activation=cfg.activation,
                       embedding_mode=cfg.embedding_mode, reg_lambda=cfg.reg_lambda, lr=cfg.lr)


def model_embeddings(record: ModelRecord, split) -> np.ndarray:
    """Combined embedding table for any saved model type."""
    if record.tag == "bprmf":
        return record.params.W
    S = laplacian_for(split)
    if record.tag == "lightgcn":
        return lightgcn_forward(record.params.W, S, record.hyper.L)
    return forward(record.params, S, record.hyper).E_star


def cmd_preprocess(cfg: RunConfig) -> None:
    _require_choice(cfg.format, FORMATS, "--format")
    if cfg.k_core < 1:
        raise ConfigError(f"--k-core must be >= 1, got {cfg.k_core}")
    if not 0.0 < cfg.test_ratio < 1.0:
        raise ConfigError(f"--test-ratio must be in (0, 1), got {cfg.test_ratio}")
    raw = parse_interactions(cfg.input, cfg.format)
    filtered = k_core_filter(raw, cfg.k_core)
    if not filtered.pairs:
        raise DataError(f"no interactions survive {cfg.k_core}-core filtering")
    split = split_train_test(filtered, cfg.test_ratio, cfg.seed)
    save_split(split, cfg.out, cfg.k_core)
    write_atomic_text(Path(cfg.out) / "run_config.txt", cfg.echo())
    print(f"m={split.m} n={split.n} nnz={split.train.nnz}")


def cmd_train(cfg: RunConfig) -> None:
    _require_choice(cfg.model, MODEL_CHOICES, "--model")
    split = load_split(cfg.data)
    tcfg = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size,
                       batches_per_epoch=cfg.batches_per_epoch, seed=cfg.seed,
                       optimizer=cfg.optimizer, eval_every=cfg.eval_every,
                       early_stop_patience=cfg.patience)
    if cfg.model == "bprmf":
        mf, log = bprmf_fit(split, cfg.dim, tcfg, lr=cfg.lr, reg_lambda=cfg.reg_lambda)
        params = ModelParams(m=split.m, n=split.n, W=np.vstack([mf.P, mf.Q]), W_layers=[])
        hyper = Hyperparams(d=cfg.dim, L=0, alpha=0.0, beta=0.0, layer_weights=[1.0],
                            activation="identity", embedding_mode="free")
        tag = "bprmf"
    else:
        hyper = hyper_for_tag(cfg)
        params, log = fit(split, hyper, tcfg)
        tag = "lightgcn" if cfg.model == "lightgcn" else "ours"
    save_model(cfg.out, tag, params, hyper)
    log_path = cfg.log or cfg.out + ".log.jsonl"
    write_atomic_text(log_path, "".join(json.dumps(e, sort_keys=True) + "\n" for e in log))
    write_atomic_text(cfg.out + ".config", cfg.echo())
    print(f"saved {tag} model to {cfg.out} after {len(log)} epochs")


def cmd_evaluate(cfg: RunConfig) -> None:
    record = load_model(cfg.model_path)
    split = load_split(cfg.data)
    if (record.params.m, record.params.n) != (split.m, split.n):
        raise DataError(f"model is {record.params.m}x{record.params.n} but dataset is "
                        f"{split.m}x{split.n}")
    if cfg.k < 1:
        raise ConfigError(f"--k must be >= 1, got {cfg.k}")
    metrics = evaluate_model(model_embeddings(record, split), split, k=cfg.k)
    print(json.dumps({"model": record.tag, "k": metrics.k, "recall": metrics.recall_at_k,
                      "ndcg": metrics.ndcg_at_k, "users_evaluated": metrics.users_evaluated}))


def cmd_recommend(cfg: RunConfig) -> None:
    record = load_model(cfg.model_path)
    split = load_split(cfg.data)
    if (record.params.m, record.params.n) != (split.m, split.n):
        raise DataError(f"model is {record.params.m}x{record.params.n} but dataset is "
                        f"{split.m}x{split.n}")
    if cfg.top < 1:
        raise ConfigError(f"--top must be >= 1, got {cfg.top}")
    u = split.user_map.get(cfg.user)
    if u is None:
        raise DataError(f"unknown user {cfg.user!r}; consulted {Path(cfg.data) / 'user_map.tsv'}")
    e_star = model_embeddings(record, split)
    scores = score_all_items(e_star, split.m, u)
    top = rank_items(scores, split.train.user_items(u), cfg.top)
    if len(top) == 0:
        print(f"warning: user {cfg.user!r} has no rankable items "
              f"(all items are in the training set)", file=sys.stderr)
        return
    by_index = {idx: tok for tok, idx in split.item_map.items()}
    for item in top:
        print(by_index[int(item)])


def cmd_diagnose(cfg: RunConfig) -> None:
    split = load_split(cfg.data)
    tags = [t.strip() for t in cfg.models.split(",") if t.strip()]
    if not tags:
        raise ConfigError("--models must name at least one model tag")
    depth = parse_layer_range(cfg.layer_range)
    grid = [(tag, depth) for tag in tags]
    reports = oversmoothing_report(split, grid, cfg.seed, d=cfg.dim)
    sys.stdout.write(report_tsv(reports))


COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "recommend": cmd_recommend,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    file_cfg = read_config_file(ns.config) if getattr(ns, "config", None) else {}
    cfg = resolve_config(ns, file_cfg)
    COMMANDS[cfg.command](cfg)
    return 0


def entrypoint() -> int:
    try:
        return main()
    except DgcfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(entrypoint())
