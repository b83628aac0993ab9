"""Synchronisation error against SNR, -5..15 dB."""
from _common import run, runner

args = runner(__doc__)
trials, periods = ("20", "60") if args.quick else ("400", "240")
run(["sync-sweep", "--snr=-5:15:5", "--trials", trials, "--periods", periods, "--seed", str(args.seed),
     "--out", f"{args.outdir}/sync.csv"])
