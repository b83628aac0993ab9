"""Duty-cycled power budget of a single surface."""
from pathlib import Path

from _common import run, runner

args = runner(__doc__)
cfg = Path(__file__).resolve().parents[1] / "configs" / "power.toml"
run(["power", "--scenario", str(cfg), "--out", f"{args.outdir}/power.csv"])
