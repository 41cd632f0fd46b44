"""Test error with and without the fourth-root feature block, on LoS and NLoS.

    python scripts/root_feature_ablation.py --out runs/ablation
"""

import argparse
from dataclasses import replace
from pathlib import Path

from srsfp.dnn import Architecture
from srsfp.run import PipelineOptions, RunConfig, cmd_evaluate, cmd_generate, cmd_prepare, cmd_train

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/ablation")
    ap.add_argument("--epochs", type=int, default=None)
    args = ap.parse_args()
    for scen in ("los", "nlos"):
        base = RunConfig.load(CONFIGS / f"run_{scen}.yaml", out=str(Path(args.out).resolve() / scen))
        cmd_generate(base)
        for fourth in (True, False):
            arch = base.architecture
            width = 384 if fourth else 192
            cfg = replace(
                base,
                output_dir=str(Path(args.out).resolve() / scen / ("sqrt+fourth" if fourth else "sqrt")),
                pipeline=PipelineOptions(fourth_root=fourth, knn_k=base.pipeline.knn_k),
                architecture=replace(arch, input_block=(width,) + tuple(arch.input_block[1:])),
            )
            if args.epochs is not None:
                cfg = replace(cfg, train=replace(cfg.train, epochs=args.epochs))
            # reuse the generated sessions
            sess = Path(cfg.out) / "sessions"
            sess.mkdir(parents=True, exist_ok=True)
            for f in (Path(base.out) / "sessions").iterdir():
                (sess / f.name).write_bytes(f.read_bytes())
            cmd_prepare(cfg)
            cmd_train(cfg)
            rep = cmd_evaluate(cfg)["test"]
            label = "sqrt+fourth" if fourth else "sqrt only "
            print(f"{scen:>4} {label}: test MEE {rep.mean_euclidean_error_m:.3f} m "
                  f"(centroid {rep.baselines_m['centroid']:.3f} m)")


if __name__ == "__main__":
    main()
