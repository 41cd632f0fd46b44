"""Run generate -> prepare -> train -> evaluate for one config and print the test report.

    python scripts/run_experiment.py configs/run_los.yaml [--seed N] [--out DIR]
"""

import argparse
import json
import time

from srsfp.run import RunConfig, cmd_evaluate, cmd_generate, cmd_prepare, cmd_train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()
    cfg = RunConfig.load(args.config, seed=args.seed, out=args.out)
    t0 = time.perf_counter()
    for step in (cmd_generate, cmd_prepare, cmd_train):
        step(cfg)
        print(f"{step.__name__[4:]:>8} done at {time.perf_counter() - t0:6.1f} s")
    reports = cmd_evaluate(cfg)
    for split, rep in reports.items():
        print(split, json.dumps(rep.summary(), indent=2))


if __name__ == "__main__":
    main()
