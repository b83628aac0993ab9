"""Shared helpers for the experiment runners."""
import argparse
import sys
from pathlib import Path

from nrsurface.cli import main


def runner(description: str) -> argparse.Namespace:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--outdir", default="results", help="directory for the CSV outputs (created if missing)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="reduced trial counts for a smoke run")
    args = p.parse_args()
    Path(args.outdir).mkdir(parents=True, exist_ok=True)
    return args


def run(argv: list) -> None:
    print("nrsurface " + " ".join(argv), flush=True)
    code = main(argv)
    if code:
        sys.exit(code)
