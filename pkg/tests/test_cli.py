import json
from pathlib import Path

import pytest

from uuvnav.cli import main

REPO = Path(__file__).resolve().parent.parent
DOMAIN = str(REPO / "domains" / "uuv-nav.hddl")
PROBLEM = str(REPO / "scenarios" / "problems" / "uuv1-mission.hddl")
BEACONS = str(REPO / "scenarios" / "beacons.geojson")
BATHY = str(REPO / "scenarios" / "bathymetry.asc")
AREA = str(REPO / "scenarios" / "mission-area.geojson")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPlanCommand:
    def test_text_plan_lists_numbered_steps(self, capsys):
        code, out, _ = run(capsys, "plan", "--domain", DOMAIN, "--problem", PROBLEM)
        assert code == 0
        assert "plan: 5 step(s)" in out
        assert "1. navigate-to-beacon uuv1 b6" in out
        assert "5. navigate-to-beacon uuv1 b8" in out

    def test_json_plan_structure(self, capsys, tmp_path):
        out_path = tmp_path / "plan.json"
        code, out, _ = run(
            capsys,
            "plan", "--domain", DOMAIN, "--problem", PROBLEM,
            "--format", "json", "--out", str(out_path),
        )
        assert code == 0
        doc = json.loads(out_path.read_text())
        names = [(s["name"], tuple(s["args"])) for s in doc["steps"]]
        assert names == [
            ("navigate-to-beacon", ("uuv1", "b6")),
            ("sense-beacon", ("uuv1", "b6")),
            ("circle-localize", ("uuv1", "b6")),
            ("broadcast", ("uuv1",)),
            ("navigate-to-beacon", ("uuv1", "b8")),
        ]
        assert doc["stats"]["decompositions"] >= 1
        assert json.loads(out) == doc

    def test_unsolvable_problem_exits_3(self, capsys, tmp_path):
        problem = tmp_path / "stuck.hddl"
        problem.write_text(
            """
            (define (problem stuck)
              (:domain uuv-nav)
              (:objects u - uuv bX - beacon)
              (:init)
              (:htn :ordered-subtasks (localize-at u bX)))
            """
        )
        code, _, err = run(capsys, "plan", "--domain", DOMAIN, "--problem", str(problem))
        assert code == 3
        assert "no plan" in err

    def test_malformed_domain_exits_1(self, capsys, tmp_path):
        bad = tmp_path / "bad.hddl"
        bad.write_text("(define (domain broken)")
        code, _, err = run(capsys, "plan", "--domain", str(bad), "--problem", PROBLEM)
        assert code == 1
        assert "error:" in err

    def test_missing_file_exits_1(self, capsys):
        code, _, err = run(
            capsys, "plan", "--domain", "/nonexistent.hddl", "--problem", PROBLEM
        )
        assert code == 1


class TestValidateCommand:
    def make_plan(self, capsys, tmp_path) -> Path:
        out_path = tmp_path / "plan.json"
        code, _, _ = run(
            capsys,
            "plan", "--domain", DOMAIN, "--problem", PROBLEM,
            "--format", "json", "--out", str(out_path),
        )
        assert code == 0
        return out_path

    def test_planner_output_validates(self, capsys, tmp_path):
        plan_path = self.make_plan(capsys, tmp_path)
        code, out, _ = run(
            capsys,
            "validate", "--domain", DOMAIN, "--problem", PROBLEM,
            "--plan", str(plan_path),
        )
        assert code == 0
        verdict = json.loads(out)
        assert verdict["valid"] is True

    def test_reordered_steps_reported_invalid(self, capsys, tmp_path):
        plan_path = self.make_plan(capsys, tmp_path)
        doc = json.loads(plan_path.read_text())
        doc["steps"][0], doc["steps"][1] = doc["steps"][1], doc["steps"][0]
        plan_path.write_text(json.dumps(doc))
        code, out, _ = run(
            capsys,
            "validate", "--domain", DOMAIN, "--problem", PROBLEM,
            "--plan", str(plan_path),
        )
        assert code == 0
        verdict = json.loads(out)
        assert verdict["valid"] is False
        assert verdict["step_index"] == 0

    def test_unknown_action_reported_invalid(self, capsys, tmp_path):
        plan_path = self.make_plan(capsys, tmp_path)
        doc = json.loads(plan_path.read_text())
        doc["steps"][0]["name"] = "teleport"
        plan_path.write_text(json.dumps(doc))
        code, out, _ = run(
            capsys,
            "validate", "--domain", DOMAIN, "--problem", PROBLEM,
            "--plan", str(plan_path),
        )
        assert code == 0
        verdict = json.loads(out)
        assert verdict["valid"] is False
        assert "not a ground action" in verdict["reason"]

    def test_garbage_plan_file_exits_1(self, capsys, tmp_path):
        bad = tmp_path / "plan.json"
        bad.write_text("{not json")
        code, _, err = run(
            capsys,
            "validate", "--domain", DOMAIN, "--problem", PROBLEM, "--plan", str(bad),
        )
        assert code == 1


class TestRouteCommand:
    def test_direct_hop(self, capsys):
        code, out, _ = run(
            capsys, "route", "--beacons", BEACONS, "--start", "b6", "--goal", "b8"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["route"] == ["b6", "b8"]
        assert doc["length"] == pytest.approx(2121.3203435596424)

    def test_multi_hop_under_tight_links(self, capsys):
        code, out, _ = run(
            capsys,
            "route", "--beacons", BEACONS, "--start", "b4", "--goal", "b8",
            "--link-distance", "2200",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["route"] == ["b4", "b5", "b6", "b8"]

    def test_unreachable_exits_2(self, capsys):
        code, _, err = run(
            capsys,
            "route", "--beacons", BEACONS, "--start", "b4", "--goal", "b8",
            "--link-distance", "1000",
        )
        assert code == 2
        assert "no route" in err

    def test_unknown_beacon_exits_1(self, capsys):
        code, _, err = run(
            capsys, "route", "--beacons", BEACONS, "--start", "b99", "--goal", "b8"
        )
        assert code == 1
        assert "b99" in err


class TestDeployCommand:
    def test_writes_constellation_and_report(self, capsys, tmp_path):
        out_path = tmp_path / "constellation.geojson"
        report_path = tmp_path / "report.json"
        code, out, _ = run(
            capsys,
            "deploy", "--bathymetry", BATHY, "--area", AREA,
            "--n-beacons", "3", "--seed", "2", "--tolerance", "0.01",
            "--out", str(out_path), "--report", str(report_path),
        )
        assert code == 0
        doc = json.loads(out_path.read_text())
        points = [f for f in doc["features"] if f["geometry"]["type"] == "Point"]
        assert len(points) == 3
        report = json.loads(report_path.read_text())
        assert report["converged"] is True
        assert sum(report["volumes"]) == report["v_tot"]

    def test_rerun_is_byte_identical(self, capsys, tmp_path):
        args = [
            "deploy", "--bathymetry", BATHY, "--area", AREA,
            "--n-beacons", "4", "--seed", "9", "--tolerance", "0.01",
        ]
        out1, out2 = tmp_path / "a.geojson", tmp_path / "b.geojson"
        assert run(capsys, *args, "--out", str(out1))[0] == 0
        assert run(capsys, *args, "--out", str(out2))[0] == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_bad_beacon_count_exits_1(self, capsys, tmp_path):
        code, _, err = run(
            capsys,
            "deploy", "--bathymetry", BATHY, "--area", AREA,
            "--n-beacons", "0", "--out", str(tmp_path / "x.geojson"),
        )
        assert code == 1


class TestSimulateCommand:
    def test_nominal_run_writes_outputs(self, capsys, tmp_path):
        out_dir = tmp_path / "run"
        code, out, _ = run(
            capsys,
            "simulate", "--scenario", str(REPO / "scenarios" / "nominal.yaml"),
            "--out-dir", str(out_dir),
        )
        assert code == 0
        assert (out_dir / "events.jsonl").exists()
        assert (out_dir / "tracks.geojson").exists()
        assert (out_dir / "summary.json").exists()
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["all_missions_completed"] is True
        assert json.loads(out)["seed"] == summary["seed"] == 12345
        first = json.loads((out_dir / "events.jsonl").read_text().splitlines()[0])
        assert first["v"] == 1
        tracks = json.loads((out_dir / "tracks.geojson").read_text())
        roles = {(f["properties"]["id"], f["properties"]["role"]) for f in tracks["features"]}
        assert ("uuv1", "true") in roles and ("uuv1", "estimated") in roles

    def test_zero_speed_scenario_exits_4(self, capsys, tmp_path):
        import yaml

        doc = yaml.safe_load((REPO / "scenarios" / "nominal.yaml").read_text())
        base = REPO / "scenarios"
        doc["paths"] = {
            "bathymetry": str(base / "bathymetry.asc"),
            "mission_area": str(base / "mission-area.geojson"),
            "beacons": str(base / "beacons.geojson"),
            "domain": str(REPO / "domains" / "uuv-nav.hddl"),
        }
        for u in doc["uuvs"]:
            u["problem"] = str(base / u["problem"])
        doc["world"]["uuv_speed"] = 0.0
        doc["output_dir"] = str(tmp_path / "out")
        scenario = tmp_path / "stalled.yaml"
        scenario.write_text(yaml.safe_dump(doc))
        code, _, err = run(capsys, "simulate", "--scenario", str(scenario))
        assert code == 4
        assert "inexecutable" in err

    def test_unknown_inactive_beacon_exits_1(self, capsys, tmp_path):
        import yaml

        doc = yaml.safe_load((REPO / "scenarios" / "b6-silenced.yaml").read_text())
        base = REPO / "scenarios"
        doc["paths"] = {
            "bathymetry": str(base / "bathymetry.asc"),
            "mission_area": str(base / "mission-area.geojson"),
            "beacons": str(base / "beacons.geojson"),
            "domain": str(REPO / "domains" / "uuv-nav.hddl"),
        }
        for u in doc["uuvs"]:
            u["problem"] = str(base / u["problem"])
        doc["inactive_beacons"] = ["b99"]
        doc["output_dir"] = str(tmp_path / "out")
        scenario = tmp_path / "badbeacon.yaml"
        scenario.write_text(yaml.safe_dump(doc))
        code, _, err = run(capsys, "simulate", "--scenario", str(scenario))
        assert code == 1
        assert "b99" in err
