"""Beam-management simulation for every scenario in configs/ (except the power-only one)."""
from pathlib import Path

from _common import run, runner

args = runner(__doc__)
for cfg in sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.toml")):
    if cfg.stem == "power":
        continue
    run(["scenario", "--config", str(cfg), "--out", f"{args.outdir}/{cfg.stem}_events.csv",
         "--trace", f"{args.outdir}/{cfg.stem}_trace.csv"])
