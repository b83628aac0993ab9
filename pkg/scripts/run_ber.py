"""NBPU bit error rate against SNR, with and without an adjacent NR carrier."""
from _common import run, runner

args = runner(__doc__)
symbols = "20000" if args.quick else "200000"
run(["ber-sweep", "--snr", "0:14:2", "--symbols", symbols, "--seed", str(args.seed), "--out", f"{args.outdir}/ber.csv"])
for sinr in ("-10", "0"):
    run(["ber-sweep", "--snr", "0:14:2", "--symbols", symbols, "--sinr=" + sinr, "--seed", str(args.seed),
         "--out", f"{args.outdir}/ber_sinr{sinr}.csv"])
