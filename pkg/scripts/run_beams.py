"""Codebook and steered patterns for the 16- and 80-column surfaces."""
from _common import run, runner

args = runner(__doc__)
run(["codebook", "--targets", "0:70:10", "--out", f"{args.outdir}/codebook.csv"])
for cols in ("16", "80"):
    for target in ("10", "30", "60"):
        run(["beam-pattern", "--columns", cols, "--target", target,
             "--out", f"{args.outdir}/pattern_{cols}col_{target}deg.csv"])
