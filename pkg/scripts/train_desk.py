"""Train one INI config over several seeds and tabulate the evaluation results.

Each seed gets its own run directory (``<out>/seed_<k>``) with the usual
training and evaluation CSVs; ``summary.csv`` collects the per-seed means.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from auvrl import cli


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config", help="INI file, e.g. scripts/configs/rudder_desk.ini")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--out", help="parent directory (default: the config's run.out)")
    args = parser.parse_args(argv)
    out = Path(args.out or cli.build_run_config(cli.load_config(args.config)).out)
    rows = []
    for seed in args.seeds:
        run_dir = out / f"seed_{seed}"
        code = cli.main(["train", "--config", args.config, "--seed", str(seed), "--out", str(run_dir)])
        if code:
            return code
        cli.cmd_plotdata(str(run_dir), None)
        with open(run_dir / "eval_episodes.csv", newline="") as fh:
            episodes = list(csv.DictReader(fh))
        means = {k: float(np.mean([float(e[k]) for e in episodes]))
                 for k in ("mean_abs_e", "mean_abs_h", "mean_abs_surge_error")}
        success = float(np.mean([e["success"] == "1" for e in episodes]))
        rows.append([seed, *means.values(), success])
        print(f"seed {seed}: " + " ".join(f"{k}={v:.3f}" for k, v in means.items()) + f" success={success:.2f}")
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("seed", "mean_abs_e", "mean_abs_h", "mean_abs_surge_error", "success_rate"))
        writer.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
