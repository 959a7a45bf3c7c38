"""Classical autopilot on the evaluation path, with and without current.

Writes one run directory per current setting plus its plot CSVs and prints
the per-episode tracking summary.
"""

import argparse
import csv
import sys
from pathlib import Path

from auvrl import cli
from auvrl.errors import ConfigError


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/pid_baseline")
    parser.add_argument("--episodes", type=int, default=5)
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for current in ("off", "on"):
        run_dir = out / f"current_{current}"
        cfg = out / f"current_{current}.ini"
        cfg.write_text(f"[run]\nmode = pid_only\neval_episodes = {args.episodes}\n")
        code = cli.main(["eval", "--config", str(cfg), "--current", current, "--out", str(run_dir)])
        if code:
            return code
        # no learning curve for a classical run, so only the trajectory figures are derived
        try:
            cli.cmd_plotdata(str(run_dir), None)
        except ConfigError:
            pass
        with open(run_dir / "eval_episodes.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                print(f"current {current} seed {row['seed']}: steps {row['steps']} success {row['success']} "
                      f"mean |e| {float(row['mean_abs_e']):.3f} m mean |h| {float(row['mean_abs_h']):.3f} m")
    return 0


if __name__ == "__main__":
    sys.exit(main())
