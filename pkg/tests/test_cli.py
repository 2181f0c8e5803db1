import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from mmwcal.cli import main
from mmwcal.records import read_records, write_records

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
WIDE = CONFIGS / "wide_xpd.yaml"
GLASS = CONFIGS / "glass_penetration.yaml"


def _tree_bytes(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _write_cfg(tmp_path, base: Path, edit) -> Path:
    data = yaml.safe_load(base.read_text())
    edit(data)
    out = tmp_path / f"edited_{base.name}"
    out.write_text(yaml.safe_dump(data))
    return out


@pytest.fixture(scope="module")
def wide_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("wide")
    assert main(["simulate", "--config", str(WIDE), "--out", str(out), "--seed", "11"]) == 0
    return out


@pytest.fixture(scope="module")
def glass_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("glass")
    assert main(["simulate", "--config", str(GLASS), "--out", str(out), "--seed", "3"]) == 0
    return out


# -- plan -------------------------------------------------------------------


def test_plan_valid_config(capsys):
    assert main(["plan", "--config", str(WIDE)]) == 0
    text = capsys.readouterr().out
    assert "D_f 0.196 m" in text
    assert "min D_TR 0.98 m" in text
    assert "min antenna height 1.34 m" in text
    assert "no violations" in text


def test_plan_json_lists_far_field_for_narrow(capsys):
    code = main(["plan", "--config", str(CONFIGS / "all_combinations.yaml"), "--json"])
    plan = json.loads(capsys.readouterr().out)
    assert code != 0
    by_name = {s["name"]: s for s in plan["scenarios"]}
    assert by_name["wide_to_wide"]["violations"] == []
    narrow = by_name["narrow_to_narrow"]["violations"]
    assert {v["distance_m"] for v in narrow if v["rule_id"] == "FAR_FIELD"} == {3.0, 3.5, 4.0}
    assert by_name["narrow_to_narrow"]["min_tr_separation_m"] == pytest.approx(4.12, abs=0.01)


def test_plan_strict_halfangle_halves_cone(capsys):
    main(["plan", "--config", str(WIDE), "--json"])
    full = json.loads(capsys.readouterr().out)["scenarios"][0]["min_height_m"]
    main(["plan", "--config", str(WIDE), "--json", "--strict-halfangle"])
    half = json.loads(capsys.readouterr().out)["scenarios"][0]["min_height_m"]
    # half-angle cones have larger cotangents, so the required height shrinks
    assert half < full


def test_plan_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("frequency_hz: 73.5e9\nantennas: [\n")
    assert main(["plan", "--config", str(bad)]) == 2
    assert "line" in capsys.readouterr().err


def test_plan_empty_scenarios(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, WIDE, lambda d: d.update(scenarios=[]))
    assert main(["plan", "--config", str(cfg)]) == 2
    assert "no scenarios" in capsys.readouterr().err


# -- simulate ---------------------------------------------------------------


def test_simulate_counts(wide_run, glass_run):
    assert len(read_records(wide_run / "wide_to_wide" / "records.csv")) == 10
    assert len(read_records(glass_run / "glass" / "records.csv")) == 12
    assert len(list((glass_run / "glass" / "pdp").glob("*.csv"))) == 12
    header = (wide_run / "wide_to_wide" / "pdp" / "d3m_VV_fs.csv").read_text().splitlines()[0]
    assert header == "delay_ns,power_dbm"


def test_simulate_is_byte_identical(tmp_path, wide_run):
    again = tmp_path / "again"
    assert main(["simulate", "--config", str(WIDE), "--out", str(again), "--seed", "11"]) == 0
    assert _tree_bytes(again) == _tree_bytes(wide_run)


def test_simulate_seed_changes_pdps(tmp_path, wide_run):
    other = tmp_path / "other"
    main(["simulate", "--config", str(WIDE), "--out", str(other), "--seed", "12"])
    a = (wide_run / "wide_to_wide" / "pdp" / "d3m_VV_fs.csv").read_bytes()
    b = (other / "wide_to_wide" / "pdp" / "d3m_VV_fs.csv").read_bytes()
    assert a != b


def test_simulate_unwritable_out(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--config", str(WIDE), "--out", str(blocker / "sub")]) == 3
    assert "error" in capsys.readouterr().err


# -- analyze ----------------------------------------------------------------


def test_analyze_xpd(wide_run, tmp_path, capsys):
    assert main(["analyze", str(wide_run), "--config", str(WIDE), "--out", str(tmp_path)]) == 0
    assert "29.1" in capsys.readouterr().out
    results = json.loads((tmp_path / "analysis.json").read_text())
    rows = results[0]["xpd"][0]["rows"]
    assert [r["distance_m"] for r in rows] == [3.0, 3.5, 4.0, 4.5, 5.0]
    for r in rows:
        assert r["xpd_db"] == pytest.approx(29.15, abs=0.05)


def test_analyze_glass(glass_run, tmp_path):
    assert main(["analyze", str(glass_run), "--config", str(GLASS), "--out", str(tmp_path)]) == 0
    pen = json.loads((tmp_path / "analysis.json").read_text())[0]["penetration"]
    assert {t["pair"] for t in pen} == {"V-V", "V-H"}
    for table in pen:
        assert table["consistency"]["mean"] == pytest.approx(7.72, abs=0.05)
        assert table["mean_db_per_cm"] == pytest.approx(6.43, abs=0.05)


def test_analyze_eq11_literal_shifts_crosspol(glass_run, tmp_path):
    main(["analyze", str(glass_run), "--config", str(GLASS), "--out", str(tmp_path / "a")])
    main(["analyze", str(glass_run), "--config", str(GLASS), "--eq11-literal", "--out", str(tmp_path / "b")])

    def vh_mean(d):
        pen = json.loads((tmp_path / d / "analysis.json").read_text())[0]["penetration"]
        return next(t for t in pen if t["pair"] == "V-H")["consistency"]["mean"]

    assert vh_mean("a") - vh_mean("b") == pytest.approx(29.15, abs=0.1)


def test_analyze_single_distance_flags_sigma(wide_run, tmp_path, capsys):
    recs = [r for r in read_records(wide_run / "wide_to_wide" / "records.csv") if r.distance == 4.0]
    path = tmp_path / "single.csv"
    write_records(recs, path)
    assert main(["analyze", str(path), "--config", str(WIDE)]) == 0
    assert "sigma undefined" in capsys.readouterr().out


def test_analyze_pairing_error_names_distance(wide_run, tmp_path, capsys):
    recs = [
        r for r in read_records(wide_run / "wide_to_wide" / "records.csv")
        if not (r.distance == 4.5 and r.co_polarized)
    ]
    path = tmp_path / "orphan.csv"
    write_records(recs, path)
    assert main(["analyze", str(path), "--config", str(WIDE)]) == 3
    assert "4.5 m" in capsys.readouterr().err


def test_analyze_malformed_records(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("distance_m,tx_pol\n3,V\n")
    assert main(["analyze", str(path), "--config", str(WIDE)]) == 3
    assert "bad.csv" in capsys.readouterr().err


# -- verify -----------------------------------------------------------------


def test_verify_valid_campaign(wide_run, tmp_path, capsys):
    assert main(["verify", str(wide_run), "--config", str(WIDE), "--out", str(tmp_path)]) == 0
    assert "verdict: VERIFIED" in capsys.readouterr().out
    (run_dir,) = tmp_path.iterdir()
    report = json.loads((run_dir / "report.json").read_text())
    assert report["verdict"] == "VERIFIED" and report["exit_code"] == 0
    assert report["seed"] == 11
    assert report["thresholds"] == {"spread_db": 1.0, "std_db": 1.1, "detection_margin_db": 20.0}
    assert run_dir.name.endswith(report["config_digest"][:12])
    assert (run_dir / "report.txt").read_text().startswith("verdict: VERIFIED")


def test_verify_low_antennas_geometry_invalid(tmp_path, capsys):
    cfg = CONFIGS / "low_antennas.yaml"
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")])
    code = main(["verify", str(tmp_path / "sim"), "--config", str(cfg), "--out", str(tmp_path / "runs")])
    assert code == 2
    assert "CLEARANCE" in capsys.readouterr().out


def test_verify_shifted_record_inconsistent(wide_run, tmp_path, capsys):
    src = wide_run / "wide_to_wide" / "records.csv"
    rows = list(csv.DictReader(src.open()))
    for row in rows:
        if row["distance_m"].startswith("4.5") and row["rx_pol"] == "H":
            row["pr_dbm"] = f"{float(row['pr_dbm']) - 2.0:.6f}"  # 2 dB more cross-pol loss
    edited = tmp_path / "edited.csv"
    with edited.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    code = main(["verify", str(edited), "--config", str(WIDE), "--out", str(tmp_path / "runs")])
    assert code == 1
    assert "INCONSISTENT" in capsys.readouterr().out


def test_verify_threshold_flags_override(wide_run, tmp_path):
    args = ["verify", str(wide_run), "--config", str(WIDE), "--out", str(tmp_path)]
    assert main(args + ["--spread-db", "0.0", "--std-db", "0.0"]) == 1
    report = json.loads(next(tmp_path.glob("*/report.json")).read_text())
    assert report["thresholds"]["spread_db"] == 0.0


# -- report -----------------------------------------------------------------


def test_report_series(glass_run, tmp_path):
    main(["verify", str(glass_run), "--config", str(GLASS), "--out", str(tmp_path / "runs")])
    (run_dir,) = (tmp_path / "runs").iterdir()
    assert main(["report", str(run_dir), "--out", str(tmp_path / "series")]) == 0
    xpd = list(csv.DictReader((tmp_path / "series" / "xpd_series.csv").open()))
    pen = list(csv.DictReader((tmp_path / "series" / "penetration_series.csv").open()))
    assert len(xpd) == 3
    assert {"pl_co_db", "pl_cross_db"} <= set(xpd[0])
    assert len(pen) == 6
    assert {"pl_free_db", "pl_mut_db"} <= set(pen[0])


def test_report_empty_gives_headers(tmp_path):
    rep = tmp_path / "report.json"
    rep.write_text(json.dumps({"scenarios": []}))
    assert main(["report", str(rep)]) == 0
    for name in ("xpd_series.csv", "penetration_series.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert len(lines) == 1 and lines[0].startswith("scenario,distance_m")


def test_report_missing_is_io_error(tmp_path, capsys):
    assert main(["report", str(tmp_path / "missing.json")]) == 3
    assert "not found" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "mmwcal", "plan", "--config", str(WIDE)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert "no violations" in proc.stdout
