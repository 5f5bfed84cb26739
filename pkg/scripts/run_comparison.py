#!/usr/bin/env python3
"""Train BPRMF, LightGCN, and the residual-propagation model on one dataset
and print a Recall@20 / NDCG@20 comparison table.

Example:
    python3 scripts/make_synthetic.py --generator walk --out /tmp/walk.tsv
    python3 -m dgcf.cli preprocess --input /tmp/walk.tsv --out /tmp/ds
    python3 scripts/run_comparison.py --data /tmp/ds
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dgcf.baselines import bprmf_fit, lightgcn_forward
from dgcf.data import load_split
from dgcf.evaluate import evaluate_model
from dgcf.model import Hyperparams, forward
from dgcf.train import TrainConfig, fit, laplacian_for


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="preprocessed dataset directory")
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--layers", type=int, default=4)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--batch-size", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--k", type=int, default=20)
    args = ap.parse_args()

    split = load_split(args.data)
    S = laplacian_for(split)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
                      eval_every=10, early_stop_patience=6)

    rows = []

    def record(name, e_star, log, wall):
        metrics = evaluate_model(e_star, split, k=args.k)
        rows.append((name, metrics.recall_at_k, metrics.ndcg_at_k, len(log), wall))

    t0 = time.time()
    mf, log = bprmf_fit(split, args.dim, cfg)
    record("bprmf", np.vstack([mf.P, mf.Q]), log, time.time() - t0)

    t0 = time.time()
    lg_hyper = Hyperparams(d=args.dim, L=args.layers, alpha=0.0, beta=0.0,
                           activation="identity", embedding_mode="free")
    params, log = fit(split, lg_hyper, cfg)
    record("lightgcn", lightgcn_forward(params.W, S, args.layers), log, time.time() - t0)

    t0 = time.time()
    ours_hyper = Hyperparams(d=args.dim, L=args.layers, alpha=0.1, beta=0.1,
                             activation="identity", embedding_mode="sw", lr=3e-4)
    params, log = fit(split, ours_hyper, cfg)
    record("ours", forward(params, S, ours_hyper).E_star, log, time.time() - t0)

    print(f"{'model':<10} {'recall@%d' % args.k:>10} {'ndcg@%d' % args.k:>10} "
          f"{'epochs':>7} {'wall_s':>7}")
    for name, recall, ndcg, epochs, wall in rows:
        print(f"{name:<10} {recall:>10.4f} {ndcg:>10.4f} {epochs:>7d} {wall:>7.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
