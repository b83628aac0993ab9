"""TOML scenario files for the beam-management simulator and the power model.

A scenario file has ``schema = 1`` and optional tables::

    name = "blockage"
    periods = 30
    seed = 1
    nbpu_error_rate = 0.0
    bs_position = [0.0, 13.0]

    [layout]            # PeriodLayout overrides (times in seconds)
    [link]              # LinkParams overrides
    [[surfaces]]        # id, position, normal_deg, columns, rows, codebook_deg, mirror
    [[ues]]             # id, waypoints, speed, antennas
    [[blockages]]       # start, end, ue, antenna (omit for all), attenuation_db
    [[open_antenna]]    # start, end, ue, antenna, attenuation_db: block every other antenna
    [[alternate]]       # ue, open = [a, b, ...], start, count, period, attenuation_db
    [power]             # surface_index, data_beams, capacity_wh
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .beam_mgmt import (UE, Blockage, Environment, LinkParams, PeriodLayout, Surface, duty_cycle_timeline,
                        schedule_multi)
from .metasurface import SurfaceConfig
from .power import AA_CAPACITY_WH

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario file."""


@dataclass
class Scenario:
    name: str = "scenario"
    periods: int = 10
    seed: int = 0
    nbpu_error_rate: float = 0.0
    env: Environment = field(default_factory=Environment)
    layout: PeriodLayout = PeriodLayout()
    power: dict = field(default_factory=dict)

    def power_timeline(self):
        p = self.power
        k = int(p.get("surface_index", 0))
        beams = list(p.get("data_beams", [0]))
        sid = self.env.surfaces[k].surface_id if k < len(self.env.surfaces) else k
        sched = schedule_multi({i: b for i, b in enumerate(beams)}, self.layout, sid)
        return duty_cycle_timeline(self.layout, sched, k)

    @property
    def capacity_wh(self) -> float:
        return float(self.power.get("capacity_wh", AA_CAPACITY_WH))


def _overrides(cls, table: dict, what: str, tuples=()):
    names = {f.name for f in fields(cls)}
    bad = set(table) - names
    if bad:
        raise ScenarioError(f"unknown {what} keys: {sorted(bad)}")
    return {k: tuple(v) if k in tuples else v for k, v in table.items()}


def _pairs(v, what):
    try:
        out = tuple((float(a), float(b)) for a, b in v)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} must be a list of [x, y] pairs") from None
    if not out:
        raise ScenarioError(f"{what} is empty")
    return out


def _block_others(ue: UE, keep: int, start: float, end: float, att: float) -> list:
    if not 0 <= keep < len(ue.antennas):
        raise ScenarioError(f"UE {ue.ue_id} has no antenna {keep}")
    return [Blockage(start, end, ue.ue_id, a, att) for a in range(len(ue.antennas)) if a != keep]


def parse_scenario(doc: dict) -> Scenario:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ScenarioError(f"expected schema = {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    layout = PeriodLayout(**_overrides(PeriodLayout, doc.get("layout", {}), "layout", ("report_delay",)))
    link = LinkParams(**_overrides(LinkParams, doc.get("link", {}), "link"))

    surfaces = []
    for i, s in enumerate(doc.get("surfaces", [{}])):
        cfg = SurfaceConfig(columns=int(s.get("columns", 16)), rows=int(s.get("rows", 16)))
        kw = dict(surface_id=int(s.get("id", i)), position=tuple(s.get("position", (0.0, 0.0))),
                  normal_deg=float(s.get("normal_deg", 90.0)), cfg=cfg, mirror=bool(s.get("mirror", False)))
        if "codebook_deg" in s:
            kw["codebook_deg"] = tuple(float(a) for a in s["codebook_deg"])
        surfaces.append(Surface(**kw))
    if len({s.surface_id for s in surfaces}) != len(surfaces):
        raise ScenarioError("surface ids must be unique")

    ues = []
    for i, u in enumerate(doc.get("ues", [{}])):
        ues.append(UE(int(u.get("id", i)), _pairs(u.get("waypoints", [[5.0, 5.0]]), "waypoints"),
                      float(u.get("speed", 1.0)), _pairs(u.get("antennas", [[0.0, 0.0]]), "antennas")))
    by_id = {u.ue_id: u for u in ues}
    if len(by_id) != len(ues):
        raise ScenarioError("UE ids must be unique")

    def ue_of(entry):
        try:
            return by_id[int(entry["ue"])]
        except KeyError:
            raise ScenarioError(f"blockage refers to unknown UE {entry.get('ue')!r}") from None

    blocks = []
    for b in doc.get("blockages", []):
        ue = ue_of(b)
        blocks.append(Blockage(float(b["start"]), float(b["end"]), ue.ue_id,
                               None if "antenna" not in b else int(b["antenna"]), float(b.get("attenuation_db", 30.0))))
    for b in doc.get("open_antenna", []):
        blocks += _block_others(ue_of(b), int(b["antenna"]), float(b["start"]), float(b["end"]),
                                float(b.get("attenuation_db", 30.0)))
    for b in doc.get("alternate", []):
        ue, opened = ue_of(b), list(b["open"])
        per, t0 = float(b.get("period", layout.period)), float(b.get("start", 0.0))
        for k in range(int(b["count"])):
            blocks += _block_others(ue, int(opened[k % len(opened)]), t0 + k * per, t0 + (k + 1) * per,
                                    float(b.get("attenuation_db", 30.0)))
    for b in blocks:
        if b.end <= b.start:
            raise ScenarioError("blockage end must follow its start")

    env = Environment(tuple(doc.get("bs_position", (0.0, 13.0))), surfaces, ues, blocks, link)
    sc = Scenario(str(doc.get("name", "scenario")), int(doc.get("periods", 10)), int(doc.get("seed", 0)),
                  float(doc.get("nbpu_error_rate", 0.0)), env, layout, dict(doc.get("power", {})))
    if sc.periods < 1:
        raise ScenarioError("periods must be at least 1")
    if not 0 <= sc.nbpu_error_rate <= 1:
        raise ScenarioError("nbpu_error_rate must lie in [0, 1]")
    return sc


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; OSError propagates for I/O problems."""
    with open(path, "rb") as f:
        try:
            doc = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ScenarioError(f"{path}: {e}") from None
    try:
        return parse_scenario(doc)
    except (KeyError, TypeError) as e:
        raise ScenarioError(f"{path}: missing or malformed field {e}") from None

