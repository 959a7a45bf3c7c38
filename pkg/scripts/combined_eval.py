"""Fly the evaluation path with a trained rudder agent and a trained elevator agent together."""

import argparse
import sys
from pathlib import Path

from auvrl import cli
from auvrl.errors import ConfigError


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("rudder_run", help="run directory of a pid_assist_rudder training")
    parser.add_argument("elevator_run", help="run directory of a pid_assist_elevator training")
    parser.add_argument("--out", default="runs/combined")
    parser.add_argument("--current", choices=("on", "off"), default="off")
    parser.add_argument("--checkpoint", default="best.npz", help="file name inside each run directory")
    args = parser.parse_args(argv)
    checkpoints = [str(Path(d) / args.checkpoint) for d in (args.rudder_run, args.elevator_run)]
    code = cli.main(["eval", "--mode", "combined", "--current", args.current, "--out", args.out,
                     "--checkpoint", checkpoints[0], "--checkpoint", checkpoints[1]])
    if code == 0:
        try:
            cli.cmd_plotdata(args.out, None)
        except ConfigError:
            pass
    return code


if __name__ == "__main__":
    sys.exit(main())
