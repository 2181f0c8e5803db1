"""Campaign-level orchestration behind the CLI subcommands."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis
from .channel_model import simulate_measurement
from .config import CampaignConfig, Scenario, Thresholds, config_digest, dump_config
from .geometry import (
    Polarization,
    fraunhofer_distance,
    min_clearance_height,
    min_mut_extent,
    min_tr_separation_penetration,
    min_tr_separation_xpd,
    mut_extent_at,
    suggest_verification_distances,
    validate_penetration_setup,
    validate_xpd_setup,
)
from .records import MeasurementRecord, read_records, write_pdp, write_records

MANIFEST = "manifest.json"
RECORDS_FILE = "records.csv"
XPD_SERIES_HEADER = (
    "scenario", "distance_m", "co_pair", "cross_pair", "pl_co_db", "pl_cross_db", "xpd_db",
)
PENETRATION_SERIES_HEADER = (
    "scenario", "distance_m", "pol_pair", "pl_free_db", "pl_mut_db", "loss_db", "loss_db_per_cm",
)


class Verdict(str, Enum):
    VERIFIED = "VERIFIED"
    INCONSISTENT = "INCONSISTENT"
    GEOMETRY_INVALID = "GEOMETRY_INVALID"

    @property
    def exit_code(self) -> int:
        return {"VERIFIED": 0, "INCONSISTENT": 1, "GEOMETRY_INVALID": 2}[self.value]


class PairingError(ValueError):
    """A record has no matching baseline at its distance."""


# -- plan ------------------------------------------------------------------


def scenario_violations(
    cfg: CampaignConfig,
    scenario: Scenario,
    distances=None,
    *,
    strict_halfangle: bool = False,
) -> list[dict]:
    out = []
    for d in distances if distances is not None else scenario.distances:
        setup = cfg.setup_for(scenario, d)
        if scenario.mut is not None:
            found = validate_penetration_setup(setup, strict_halfangle=strict_halfangle)
        else:
            found = validate_xpd_setup(setup, strict_halfangle=strict_halfangle)
        out.extend(dict(v.to_dict(), distance_m=d) for v in found)
    return out


def plan_campaign(cfg: CampaignConfig, *, strict_halfangle: bool = False) -> dict:
    antennas = []
    for a in cfg.antennas:
        df = fraunhofer_distance(a.aperture_largest_dim, cfg.frequency)
        antennas.append(
            {
                "name": a.name,
                "fraunhofer_m": df,
                "min_tr_separation_xpd_m": min_tr_separation_xpd(df),
                "min_tr_separation_penetration_m": min_tr_separation_penetration(df),
                "min_mut_extent_m": min_mut_extent(df, a.hpbw_elevation),
            }
        )
    scenarios = []
    for s in cfg.scenarios:
        tx, rx = cfg.antenna(s.tx_antenna), cfg.antenna(s.rx_antenna)
        df = max(
            fraunhofer_distance(tx.aperture_largest_dim, cfg.frequency),
            fraunhofer_distance(rx.aperture_largest_dim, cfg.frequency),
        )
        min_d = min_tr_separation_penetration(df) if s.mut else min_tr_separation_xpd(df)
        far = max(s.distances)
        entry = {
            "name": s.name,
            "kind": "penetration" if s.mut else "xpd",
            "fraunhofer_m": df,
            "min_tr_separation_m": min_d,
            "min_height_m": min_clearance_height(
                far, tx.hpbw_elevation, rx.hpbw_elevation, strict_halfangle=strict_halfangle
            ),
            "min_height_at_m": far,
            "suggested_distances_m": suggest_verification_distances(min_d, max(len(s.distances), 2))
            if min_d > 0
            else [],
            "violations": scenario_violations(cfg, s, strict_halfangle=strict_halfangle),
        }
        if s.mut:
            entry["min_mut_extent_m"] = mut_extent_at(max(s.distances) / 2.0, tx.hpbw_elevation)
        scenarios.append(entry)
    return {
        "frequency_hz": cfg.frequency,
        "antennas": antennas,
        "scenarios": scenarios,
        "ok": not any(s["violations"] for s in scenarios),
    }


def format_plan(plan: dict) -> str:
    lines = [f"frequency: {plan['frequency_hz'] / 1e9:.3f} GHz", "", "antennas:"]
    for a in plan["antennas"]:
        lines.append(
            f"  {a['name']}: D_f {a['fraunhofer_m']:.3f} m, min D_TR {a['min_tr_separation_xpd_m']:.2f} m"
            f" (XPD) / {a['min_tr_separation_penetration_m']:.2f} m (penetration),"
            f" min MUT extent {a['min_mut_extent_m']:.3f} m"
        )
    for s in plan["scenarios"]:
        lines += ["", f"scenario {s['name']} ({s['kind']}):"]
        lines.append(f"  D_f {s['fraunhofer_m']:.3f} m, min D_TR {s['min_tr_separation_m']:.2f} m")
        lines.append(f"  min antenna height {s['min_height_m']:.2f} m at D_TR {s['min_height_at_m']:g} m")
        if "min_mut_extent_m" in s:
            lines.append(f"  min MUT extent {s['min_mut_extent_m']:.3f} m")
        lines.append(
            "  suggested distances: " + ", ".join(f"{d:.2f}" for d in s["suggested_distances_m"]) + " m"
        )
        if s["violations"]:
            for v in s["violations"]:
                lines.append(f"  VIOLATION {v['rule_id']} at {v['distance_m']:g} m: {v['message']}")
        else:
            lines.append("  no violations")
    return "\n".join(lines) + "\n"


# -- simulate --------------------------------------------------------------


def _record_seed(base: int, *idx: int) -> int:
    return int(np.random.SeedSequence([base, *idx]).generate_state(1)[0])


def simulate_scenario(
    cfg: CampaignConfig, scenario: Scenario, seed: int, scenario_index: int = 0
) -> list[MeasurementRecord]:
    records = []
    mut_states = (False, True) if scenario.mut is not None else (False,)
    for i, d in enumerate(scenario.distances):
        for with_mut in mut_states:
            setup = cfg.setup_for(scenario, d, with_mut=with_mut)
            for j, (tx_pol, rx_pol) in enumerate(scenario.polarization_pairs):
                env = cfg.environment_for(
                    scenario, _record_seed(seed, scenario_index, i, j, int(with_mut))
                )
                try:
                    record = simulate_measurement(
                        setup,
                        env,
                        tx_pol,
                        rx_pol,
                        cfg.sounder.transmit_power_dbm,
                        bin_width=cfg.sounder.bin_width_ns,
                        noise=cfg.sounder.noise,
                        detection_margin=cfg.thresholds.detection_margin_db,
                    )
                except analysis.NoSignalError as exc:
                    raise analysis.NoSignalError(
                        f"scenario {scenario.name}, {d:g} m, {tx_pol.value}-{rx_pol.value}"
                        f"{' with MUT' if with_mut else ''}: {exc}; raise "
                        "sounder.transmit_power_dbm or lower environment.noise_floor_dbm"
                    ) from None
                records.append(record)
    return records


def pdp_filename(record: MeasurementRecord) -> str:
    tag = "mut" if record.mut_present else "fs"
    return f"d{record.distance:g}m_{record.tx_pol.value}{record.rx_pol.value}_{tag}.csv"


def simulate_campaign(cfg: CampaignConfig, out_dir: str | Path, seed: Optional[int] = None) -> dict:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    base = cfg.environment.rng_seed if seed is None else seed
    manifest = {"seed": base, "config_digest": config_digest(cfg), "scenarios": {}}
    for k, s in enumerate(cfg.scenarios):
        records = simulate_scenario(cfg, s, base, k)
        sdir = out / s.name
        write_records(records, sdir / RECORDS_FILE)
        for r in records:
            write_pdp(r.pdp, sdir / "pdp" / pdp_filename(r))
        manifest["scenarios"][s.name] = {"records": f"{s.name}/{RECORDS_FILE}", "count": len(records)}
    (out / "config.yaml").write_text(dump_config(cfg), encoding="utf-8")
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


# -- analyze ---------------------------------------------------------------


def _pair(tx: Polarization, rx: Polarization) -> str:
    return f"{tx.value}-{rx.value}"


def _consistency_or_none(values: dict[float, float], thresholds: Thresholds) -> Optional[dict]:
    if len(values) < 2:
        return None
    return analysis.consistency(values, thresholds.spread_db, thresholds.std_db).to_dict()


def analyze_records(
    name: str,
    records: list[MeasurementRecord],
    thresholds: Thresholds,
    *,
    eq11_literal: bool = False,
) -> dict:
    """XPD and penetration tables for one scenario's records."""
    free: dict[tuple[float, str], MeasurementRecord] = {}
    mut: list[MeasurementRecord] = []
    for r in records:
        if r.mut_present:
            mut.append(r)
        else:
            free[(r.distance, r.pol_pair)] = r

    def baseline(distance: float, pair: str) -> MeasurementRecord:
        try:
            return free[(distance, pair)]
        except KeyError:
            raise PairingError(
                f"scenario {name}: no {pair} free-space baseline at {distance:g} m"
            ) from None

    xpd_by_pair: dict[str, dict[float, dict]] = {}
    for (d, pair), r in sorted(free.items()):
        if r.co_polarized:
            continue
        co = baseline(d, _pair(r.tx_pol, r.tx_pol))
        pl_co, pl_cross = analysis.path_loss(co), analysis.path_loss(r)
        xpd_by_pair.setdefault(pair, {})[d] = {
            "distance_m": d,
            "co_pair": co.pol_pair,
            "cross_pair": pair,
            "pl_co_db": pl_co,
            "pl_cross_db": pl_cross,
            "xpd_db": analysis.xpd(pl_cross, pl_co),
        }

    xpd_tables = []
    for pair, rows in sorted(xpd_by_pair.items()):
        values = {d: row["xpd_db"] for d, row in rows.items()}
        xpd_tables.append(
            {
                "pair": pair,
                "rows": [rows[d] for d in sorted(rows)],
                "consistency": _consistency_or_none(values, thresholds),
            }
        )

    pen_by_pair: dict[str, dict[float, dict]] = {}
    for r in sorted(mut, key=lambda r: (r.distance, r.pol_pair)):
        if r.co_polarized:
            ref = baseline(r.distance, r.pol_pair)
            pl_free = analysis.path_loss(ref)
            res = analysis.penetration_loss_copol(r, pl_free, baseline_distance=ref.distance)
        else:
            co = baseline(r.distance, _pair(r.tx_pol, r.tx_pol))
            cross = baseline(r.distance, r.pol_pair)
            pl_co, pl_cross = analysis.path_loss(co), analysis.path_loss(cross)
            res = analysis.penetration_loss_crosspol(
                r,
                pl_co,
                analysis.xpd(pl_cross, pl_co),
                baseline_distance=co.distance,
                literal=eq11_literal,
                baseline_pl_cross=pl_cross,
            )
            pl_free = pl_cross
        pen_by_pair.setdefault(r.pol_pair, {})[r.distance] = {
            "distance_m": r.distance,
            "pol_pair": r.pol_pair,
            "thickness_cm": r.mut_thickness,
            "pl_free_db": pl_free,
            "pl_mut_db": analysis.link_loss(r),
            "loss_db": res.loss,
            "loss_db_per_cm": res.normalized_loss,
        }

    pen_tables = []
    for pair, rows in sorted(pen_by_pair.items()):
        ordered = [rows[d] for d in sorted(rows)]
        values = {d: row["loss_db"] for d, row in rows.items()}
        norm = [row["loss_db_per_cm"] for row in ordered]
        pen_tables.append(
            {
                "pair": pair,
                "rows": ordered,
                "consistency": _consistency_or_none(values, thresholds),
                "mean_db_per_cm": float(np.mean(norm)),
            }
        )
    return {"name": name, "xpd": xpd_tables, "penetration": pen_tables}


def locate_records(records_path: str | Path, cfg: CampaignConfig) -> dict[str, list[MeasurementRecord]]:
    """Map scenario name to its records.

    ``records_path`` is either a simulation output directory holding one
    ``<scenario>/records.csv`` per scenario, or a single records file. A single
    file belongs to the scenario named by its parent directory, or to the only
    scenario in the config.
    """
    path = Path(records_path)
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file or directory")
    if path.is_dir():
        found = {}
        for s in cfg.scenarios:
            f = path / s.name / RECORDS_FILE
            if f.exists():
                found[s.name] = read_records(f)
        if not found:
            raise FileNotFoundError(f"{path}: no <scenario>/{RECORDS_FILE} files for configured scenarios")
        return found
    names = [s.name for s in cfg.scenarios]
    if path.parent.name in names:
        return {path.parent.name: read_records(path)}
    if len(names) == 1:
        return {names[0]: read_records(path)}
    raise ValueError(f"{path}: cannot tell which of {len(names)} scenarios these records belong to")


def analyze_campaign(
    records_path: str | Path,
    cfg: CampaignConfig,
    *,
    thresholds: Optional[Thresholds] = None,
    eq11_literal: bool = False,
) -> list[dict]:
    thresholds = thresholds or cfg.thresholds
    located = locate_records(records_path, cfg)
    return [
        analyze_records(name, recs, thresholds, eq11_literal=eq11_literal)
        for name, recs in located.items()
    ]


def _stat_cells(consistency: Optional[dict], values: list[float]) -> tuple[str, str]:
    if consistency is None:
        # one distance: the mean is that value, sigma has no meaning
        return f"{values[0]:.2f}", "n/a"
    return f"{consistency['mean']:.2f}", f"{consistency['std_dev']:.2f}"


SINGLE_DISTANCE_NOTE = "  sigma undefined (single distance)"


def format_analysis(results: list[dict]) -> str:
    lines = []
    for res in results:
        for tbl in res["xpd"]:
            dists = [row["distance_m"] for row in tbl["rows"]]
            mean, std = _stat_cells(tbl["consistency"], [r["xpd_db"] for r in tbl["rows"]])
            head = "".join(f"{d:>10g} m" for d in dists)
            lines.append(f"{res['name']}: XPD ({tbl['pair']} vs co-polarized)")
            lines.append(f"{'':12}{head}{'Mean':>10}{'sigma':>10}")
            cells = "".join(f"{row['xpd_db']:>9.2f} dB" for row in tbl["rows"])
            lines.append(f"{'XPD':12}{cells}{mean:>10}{std:>10}")
            if tbl["consistency"] is None:
                lines.append(SINGLE_DISTANCE_NOTE)
            lines.append("")
        for tbl in res["penetration"]:
            mean, std = _stat_cells(tbl["consistency"], [r["loss_db"] for r in tbl["rows"]])
            lines.append(f"{res['name']}: penetration loss {tbl['pair']}")
            for row in tbl["rows"]:
                lines.append(
                    f"  {row['distance_m']:>6g} m  {row['loss_db']:6.2f} dB ({row['loss_db_per_cm']:.2f} dB/cm)"
                )
            lines.append(f"  mean {mean} dB ({tbl['mean_db_per_cm']:.2f} dB/cm), sigma {std}")
            if tbl["consistency"] is None:
                lines.append(SINGLE_DISTANCE_NOTE)
            lines.append("")
    return "\n".join(lines)


# -- verify ----------------------------------------------------------------


def _checks(result: dict) -> list[Optional[dict]]:
    return [t["consistency"] for t in result["xpd"] + result["penetration"]]


def verify_campaign(
    records_path: str | Path,
    cfg: CampaignConfig,
    *,
    thresholds: Optional[Thresholds] = None,
    strict_halfangle: bool = False,
    eq11_literal: bool = False,
    now: Optional[datetime] = None,
) -> dict:
    thresholds = thresholds or cfg.thresholds
    located = locate_records(records_path, cfg)
    scenarios = []
    for name, recs in located.items():
        scenario = cfg.scenario(name)
        result = analyze_records(name, recs, thresholds, eq11_literal=eq11_literal)
        distances = sorted({r.distance for r in recs})
        result["violations"] = scenario_violations(
            cfg, scenario, distances, strict_halfangle=strict_halfangle
        )
        result["consistent"] = all(c is not None and c["pass"] for c in _checks(result))
        scenarios.append(result)

    if any(s["violations"] for s in scenarios):
        verdict = Verdict.GEOMETRY_INVALID
    elif not all(s["consistent"] for s in scenarios):
        verdict = Verdict.INCONSISTENT
    else:
        verdict = Verdict.VERIFIED

    xpd_means = [
        t["consistency"]["mean"] for s in scenarios for t in s["xpd"] if t["consistency"] is not None
    ]
    seed = None
    manifest = _find_manifest(Path(records_path))
    if manifest is not None:
        seed = manifest.get("seed")
    stamp = (now or datetime.now(timezone.utc)).strftime("%Y-%m-%dT%H:%M:%SZ")
    return {
        "config_digest": config_digest(cfg),
        "created": stamp,
        "records_path": str(records_path),
        "seed": seed,
        "thresholds": {
            "spread_db": thresholds.spread_db,
            "std_db": thresholds.std_db,
            "detection_margin_db": thresholds.detection_margin_db,
        },
        "options": {"strict_halfangle": strict_halfangle, "eq11_literal": eq11_literal},
        "scenarios": scenarios,
        "cross_combination": {
            "means_db": xpd_means,
            "within_1db": analysis.cross_combination_check(xpd_means) if len(xpd_means) >= 2 else None,
        },
        "verdict": verdict.value,
        "exit_code": verdict.exit_code,
    }


def _find_manifest(path: Path) -> Optional[dict]:
    for cand in (path / MANIFEST, path.parent / MANIFEST, path.parent.parent / MANIFEST):
        if cand.is_file():
            try:
                return json.loads(cand.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                return None
    return None


def format_report(report: dict) -> str:
    lines = [
        f"verdict: {report['verdict']}",
        f"config digest: {report['config_digest']}",
        f"created: {report['created']}",
        f"seed: {report['seed']}",
        f"thresholds: spread <= {report['thresholds']['spread_db']} dB, "
        f"sigma <= {report['thresholds']['std_db']} dB",
        "",
    ]
    for s in report["scenarios"]:
        lines.append(f"scenario {s['name']}: {'consistent' if s['consistent'] else 'NOT consistent'}")
        for v in s["violations"]:
            lines.append(f"  VIOLATION {v['rule_id']} at {v['distance_m']:g} m: {v['message']}")
        for kind in ("xpd", "penetration"):
            for t in s[kind]:
                c = t["consistency"]
                if c is None:
                    lines.append(f"  {kind} {t['pair']}: sigma undefined (single distance)")
                else:
                    lines.append(
                        f"  {kind} {t['pair']}: mean {c['mean']:.2f} dB, sigma {c['std_dev']:.2f} dB, "
                        f"spread {c['spread']:.2f} dB -> {'pass' if c['pass'] else 'FAIL'}"
                    )
    cc = report["cross_combination"]
    if cc["within_1db"] is not None:
        lines.append("")
        lines.append(
            "antenna combinations within 1 dB: " + ("yes" if cc["within_1db"] else "no")
            + " (" + ", ".join(f"{m:.2f}" for m in cc["means_db"]) + " dB)"
        )
    return "\n".join(lines) + "\n"


def persist_report(report: dict, out_root: str | Path) -> Path:
    """Write report.json and report.txt under ``<out_root>/<timestamp>_<digest>``."""
    stamp = report["created"].replace("-", "").replace(":", "")
    base = Path(out_root) / f"{stamp}_{report['config_digest'][:12]}"
    run_dir, n = base, 1
    while run_dir.exists():
        n += 1
        run_dir = base.with_name(f"{base.name}-{n}")
    run_dir.mkdir(parents=True)
    (run_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    (run_dir / "report.txt").write_text(format_report(report), encoding="utf-8")
    return run_dir


# -- report ----------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def export_series(report_path: str | Path, out_dir: Optional[str | Path] = None) -> list[Path]:
    """Write plot-ready XPD and penetration series from a stored report."""
    path = Path(report_path)
    if path.is_dir():
        path = path / "report.json"
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"{path}: report not found") from None
    out = Path(out_dir) if out_dir is not None else path.parent
    out.mkdir(parents=True, exist_ok=True)
    xpd_rows, pen_rows = [], []
    for s in report.get("scenarios", []):
        for t in s.get("xpd", []):
            for r in t["rows"]:
                xpd_rows.append(
                    [s["name"], f"{r['distance_m']:g}", r["co_pair"], r["cross_pair"],
                     f"{r['pl_co_db']:.4f}", f"{r['pl_cross_db']:.4f}", f"{r['xpd_db']:.4f}"]
                )
        for t in s.get("penetration", []):
            for r in t["rows"]:
                pen_rows.append(
                    [s["name"], f"{r['distance_m']:g}", r["pol_pair"], f"{r['pl_free_db']:.4f}",
                     f"{r['pl_mut_db']:.4f}", f"{r['loss_db']:.4f}", f"{r['loss_db_per_cm']:.4f}"]
                )
    paths = [out / "xpd_series.csv", out / "penetration_series.csv"]
    paths[0].write_text(_csv(XPD_SERIES_HEADER, xpd_rows), encoding="utf-8")
    paths[1].write_text(_csv(PENETRATION_SERIES_HEADER, pen_rows), encoding="utf-8")
    return paths


def with_thresholds(cfg: CampaignConfig, spread_db=None, std_db=None) -> Thresholds:
    t = cfg.thresholds
    if spread_db is not None:
        t = replace(t, spread_db=spread_db)
    if std_db is not None:
        t = replace(t, std_db=std_db)
    return t
