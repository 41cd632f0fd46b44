"""Spread of the test error over run seeds for one config.

Each seed changes the simulated sessions and the network initialisation.

    python scripts/seed_sweep.py configs/run_los.yaml --seeds 0 1 2 --out runs/sweep
"""

import argparse
from pathlib import Path

import numpy as np

from srsfp.run import RunConfig, cmd_evaluate, cmd_generate, cmd_prepare, cmd_train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--out", default="runs/sweep")
    args = ap.parse_args()
    rows = []
    for seed in args.seeds:
        cfg = RunConfig.load(args.config, seed=seed, out=str(Path(args.out).resolve() / f"seed{seed}"))
        cmd_generate(cfg)
        cmd_prepare(cfg)
        cmd_train(cfg)
        rep = cmd_evaluate(cfg)["test"]
        b = rep.baselines_m
        rows.append((seed, rep.mean_euclidean_error_m, b["centroid"], b["knn_k5"]))
        print(f"seed {seed}: model {rows[-1][1]:.3f} m  centroid {rows[-1][2]:.3f} m  kNN {rows[-1][3]:.3f} m")
    arr = np.array(rows)[:, 1:]
    print("mean   :", "  ".join(f"{v:.3f}" for v in arr.mean(axis=0)))
    print("std    :", "  ".join(f"{v:.3f}" for v in arr.std(axis=0)))


if __name__ == "__main__":
    main()
