"""Command-line entry point: ``nrsurface <command> ...`` or ``python -m nrsurface``.

Exit codes: 0 success, 1 validation failure (bad arguments, malformed
config, unsatisfiable targets, failed self-test), 2 I/O error.
"""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


class ValidationError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def parse_values(text: str) -> list:
    """'a:b:c' (inclusive range with step c), 'a:b' (step 1) or 'a,b,c'."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[:2]
            step = parts[2] if len(parts) == 3 else 1.0
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return [round(lo + i * step, 10) for i in range(n)]
        vals = [float(p) for p in text.split(",") if p.strip()]
        if not vals:
            raise ValueError
        return vals
    except ValueError:
        raise ValidationError(f"cannot parse value list {text!r} (use a:b:step or a,b,c)") from None


def _out_path(path) -> Path:
    p = Path(path)
    if p.parent and not p.parent.exists():
        raise OSError(f"output directory {p.parent} does not exist")
    return p


# -- commands --------------------------------------------------------------

def cmd_emulate(a) -> int:
    from .emulation import (build_affine_model, payload_hex, random_targets, read_targets_csv, realised_phases,
                            solve_payload)
    from .gf2 import InconsistentSystem
    from .waveform import snap_qpsk

    if a.targets:
        try:
            targets = read_targets_csv(a.targets)
        except ValueError as e:
            raise ValidationError(f"bad targets file: {e}") from None
    else:
        targets = random_targets(np.random.default_rng(a.seed))
    model = build_affine_model(seed=a.seed)
    try:
        x = solve_payload(targets, model)
    except InconsistentSystem as e:
        cells = sorted({tuple(targets.entries[r // 2][:2]) for r in e.rows})
        raise ValidationError(f"targets not reachable at (symbol, subcarrier) {cells[:10]}") from None
    got = realised_phases(x, model.config)
    ok = sum(abs(np.exp(1j * got[s, c]) - np.exp(1j * snap_qpsk([p])[0])) < 1e-9 for s, c, p in targets.entries)
    _out_path(a.out).write_bytes(np.packbits(x).tobytes())
    print(f"payload {payload_hex(x)}")
    print(f"targets {len(targets)}  realised {ok}/{len(targets)}  rank(A) {model.rank()}  "
          f"payload bits {model.payload_len}")
    return EXIT_OK if ok == len(targets) else EXIT_VALIDATION


def cmd_waveform(a) -> int:
    from .frontend import receive
    from .link import nbpu_transmission
    from .waveform import write_grid_csv, write_iq

    sig = nbpu_transmission(a.info, a.rate, ideal=a.ideal)
    write_iq(_out_path(a.out), sig)
    if a.grid:
        from .link import nbpu_grid
        write_grid_csv(_out_path(a.grid), nbpu_grid(a.info))
    if a.envelope:
        env = receive(sig)
        np.savetxt(_out_path(a.envelope), np.column_stack([env.times(), env.samples.real]), delimiter=",",
                   header="t,value", comments="", fmt="%.9e")
    print(f"{len(sig.samples)} samples at {a.rate / 1e6:g} Msps written to {a.out}")
    return EXIT_OK


def cmd_sync_sweep(a) -> int:
    from .sync import SyncExperiment, sync_sweep, write_sync_csv

    if a.trials < 1 or a.periods < 1:
        raise ValidationError("--trials and --periods must be positive")
    exp = SyncExperiment(trials=a.trials, track_periods=a.periods)
    res = sync_sweep(a.snr, exp, a.seed)
    write_sync_csv(res, _out_path(a.out))
    for r in res:
        print(f"{r.snr_db:6.1f} dB  mean {r.mean_ns:7.1f} ns  p95 {r.p95_ns:7.1f} ns")
    return EXIT_OK


def cmd_ber_sweep(a) -> int:
    from .link import ber_sweep, write_ber_csv

    if a.symbols < 1:
        raise ValidationError("--symbols must be positive")
    pts = ber_sweep(a.snr, a.symbols, a.sinr, a.seed)
    write_ber_csv(pts, _out_path(a.out))
    for p in pts:
        print(f"{p.snr_db:6.1f} dB  {p.errors}/{p.symbols}  BER {p.ber:.2e}")
    return EXIT_OK


def _surface_cfg(a):
    from .metasurface import SurfaceConfig
    if a.columns < 1 or a.rows < 1:
        raise ValidationError("--columns and --rows must be positive")
    return SurfaceConfig(columns=a.columns, rows=a.rows)


def cmd_beam_pattern(a) -> int:
    from .metasurface import MAX_STEER_DEG, steered_pattern, write_pattern_csv

    if abs(a.target) > MAX_STEER_DEG:
        raise ValidationError(f"target must lie within +-{MAX_STEER_DEG} deg")
    pat = steered_pattern(a.target, _surface_cfg(a), a.incident)
    write_pattern_csv(pat, _out_path(a.out))
    print(f"main lobe {pat.main_lobe:.2f} deg  HPBW {pat.hpbw:.2f} deg")
    return EXIT_OK


def cmd_codebook(a) -> int:
    from .metasurface import MAX_STEER_DEG, codebook, write_codebook_csv

    if any(abs(t) > MAX_STEER_DEG for t in a.targets):
        raise ValidationError(f"targets must lie within +-{MAX_STEER_DEG} deg")
    bits = codebook(a.targets, _surface_cfg(a), a.incident)
    write_codebook_csv(a.targets, bits, _out_path(a.out))
    print(f"{len(a.targets)} codewords written to {a.out}")
    return EXIT_OK


def cmd_scenario(a) -> int:
    from .beam_mgmt import simulate, write_events_csv, write_trace_csv
    from .scenario import load_scenario

    sc = load_scenario(a.config)
    periods = a.periods or sc.periods
    seed = sc.seed if a.seed is None else a.seed
    events, traces = simulate(sc.env, periods, sc.layout, seed, sc.nbpu_error_rate)
    out = _out_path(a.out or f"{sc.name}_events.csv")
    write_events_csv(events, out)
    trace = _out_path(a.trace or out.with_name(out.stem.replace("_events", "") + "_trace.csv"))
    write_trace_csv(traces, trace)
    print(f"{sc.name}: {periods} periods, {len(events)} events -> {out}, trace -> {trace}")
    return EXIT_OK


def cmd_power(a) -> int:
    from .power import average_power, battery_life, write_power_csv
    from .scenario import Scenario, load_scenario

    sc = load_scenario(a.scenario) if a.scenario else Scenario()
    tl = sc.power_timeline()
    write_power_csv(tl, _out_path(a.out))
    avg = average_power(tl)
    print(f"average {avg * 1e6:.1f} uW  battery life {battery_life(avg, sc.capacity_wh):.2f} years")
    return EXIT_OK


def cmd_selftest(a) -> int:
    from .acceptance import run_all
    checks = run_all(a.only)
    bad = [c.number for c in checks if not c.passed]
    print(f"{len(checks) - len(bad)}/{len(checks)} acceptance checks passed")
    return EXIT_OK if not bad else EXIT_VALIDATION


# -- parser ----------------------------------------------------------------

_VALUE_FLAGS = ("--snr", "--snr-list", "--targets", "--sinr", "--target", "--incident")


def _join_negative(argv: list) -> list:
    """Let '--snr -5:15:5' through argparse by rewriting it as '--snr=-5:15:5'."""
    out = []
    i = 0
    while i < len(argv):
        if argv[i] in _VALUE_FLAGS and i + 1 < len(argv) and re.match(r"^-[\d.]", argv[i + 1]):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def _values(text):
    try:
        return parse_values(text)
    except ValidationError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = _Parser(prog="nrsurface", description=__doc__, formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_, epilog, seed_default=0):
        s = sub.add_parser(name, help=help_, description=help_, epilog=epilog, formatter_class=fmt)
        s.add_argument("--seed", type=int, default=seed_default, help="RNG seed (default %(default)s)")
        return s

    s = add("emulate", "solve for a 256-bit payload whose encoded NBPU subframe hits target phases",
            "input CSV columns: symbol,subcarrier,phase (radians, QPSK)\n"
            "output: packed payload bytes; hex and verification report on stdout")
    s.add_argument("--targets", help="target CSV (default: random full target set from --seed)")
    s.add_argument("--out", default="payload.bin")
    s.set_defaults(func=cmd_emulate)

    s = add("waveform", "write the baseband I/Q of an NBPU transmission (data, NBPU, data subframes)",
            "I/Q file: interleaved little-endian float32 I,Q\n"
            "grid CSV columns: symbol,subcarrier,phase,is_nrs\n"
            "envelope CSV columns: t,value")
    s.add_argument("--info", type=int, default=21, help="5-bit info value (0-31)")
    s.add_argument("--rate", type=float, default=3.84e6, help="sample rate, multiple of 1.92 MHz")
    s.add_argument("--ideal", action="store_true", help="build the NBPU grid directly, bypassing the coding chain")
    s.add_argument("--out", default="nbpu.iq")
    s.add_argument("--grid", help="also write the NBPU resource grid CSV")
    s.add_argument("--envelope", help="also write the noiseless receiver output CSV")
    s.set_defaults(func=cmd_waveform)

    s = add("sync-sweep", "Monte-Carlo ETS synchronisation error against SNR",
            "output CSV columns: snr_db,mean_error_ns,p95_error_ns")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--snr", type=_values, dest="snr", help="a:b:step or a,b,c in dB")
    g.add_argument("--snr-list", type=_values, dest="snr", help="alias of --snr")
    s.add_argument("--trials", type=int, default=400)
    s.add_argument("--periods", type=int, default=240, help="tracking periods after bootstrap")
    s.add_argument("--out", default="sync.csv")
    s.set_defaults(func=cmd_sync_sweep, snr=[-5.0, 0.0, 5.0, 10.0, 15.0])

    s = add("ber-sweep", "NBPU OOK bit error rate against SNR",
            "output CSV columns: snr_db,symbols,errors,ber")
    s.add_argument("--snr", type=_values, default=[0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0])
    s.add_argument("--symbols", type=int, default=200_000, help="info symbols per point")
    s.add_argument("--sinr", type=float, default=None, help="adjacent NR carrier SINR in dB (default none)")
    s.add_argument("--out", default="ber.csv")
    s.set_defaults(func=cmd_ber_sweep)

    s = add("beam-pattern", "1-bit surface pattern steered at one angle",
            "output CSV columns: angle_deg,gain_db (gain relative to the main-lobe peak)")
    s.add_argument("--columns", type=int, default=16)
    s.add_argument("--rows", type=int, default=16)
    s.add_argument("--target", type=float, default=30.0)
    s.add_argument("--incident", type=float, default=0.0)
    s.add_argument("--out", default="pattern.csv")
    s.set_defaults(func=cmd_beam_pattern)

    s = add("codebook", "1-bit column codebook for a set of steering angles",
            "output CSV columns: target_deg,bits (one 0/1 character per column)")
    s.add_argument("--targets", type=_values, default=[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0])
    s.add_argument("--columns", type=int, default=16)
    s.add_argument("--rows", type=int, default=16)
    s.add_argument("--incident", type=float, default=0.0)
    s.add_argument("--out", default="book.csv")
    s.set_defaults(func=cmd_codebook)

    s = add("scenario", "beam-management simulation driven by a TOML scenario",
            "event CSV columns: t,event,surface,beam,ue,snr_db\n"
            "trace CSV columns: period,ue,surface,beam,served_snr_db,optimum_snr_db\n"
            "--seed defaults to the scenario's own seed", seed_default=None)
    s.add_argument("--config", required=True)
    s.add_argument("--periods", type=int, default=None, help="override the scenario's period count")
    s.add_argument("--out", default=None, help="event CSV (default <name>_events.csv)")
    s.add_argument("--trace", default=None, help="trace CSV (default <name>_trace.csv)")
    s.set_defaults(func=cmd_scenario)

    s = add("power", "duty-cycled power budget of one surface",
            "output CSV columns: state,duration_ms,energy_uj,avg_uw (plus a total row)")
    s.add_argument("--scenario", help="TOML scenario with an optional [power] table")
    s.add_argument("--out", default="power.csv")
    s.set_defaults(func=cmd_power)

    s = add("selftest", "run the acceptance checks; exit 0 only if all pass",
            "prints one PASS/FAIL line per check")
    s.add_argument("--only", type=lambda t: [int(v) for v in t.split(",")], default=None,
                   help="comma-separated check numbers (default all 1-9)")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    argv = _join_negative(list(sys.argv[1:] if argv is None else argv))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:   # ValidationError, ScenarioError, malformed inputs
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
