import json
import subprocess
import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest
import yaml

from subspace_consensus.cli import main
from subspace_consensus.scenario import (
    ConfigError,
    dump_config,
    load_config,
    parse_config,
    read_trace_csv,
)

MINIMAL = {
    "n": 2,
    "d": 1,
    "rounds": 10,
    "adversary": {"kind": "static", "graphs": [[[0, 1], [1, 0]]]},
    "weights": {"kind": "equal_neighbor"},
    "initial": {"points": [[0.0], [1.0]]},
}

STAR = {
    "n": 3,
    "d": 1,
    "rounds": 30,
    "adversary": {"kind": "static", "k": 1, "graphs": [[[0, 1], [0, 2]]]},
    "initial": {"points": [[0.0], [2.0], [-3.0]]},
}


def write_cfg(tmp_path: Path, raw: dict, name="scenario.yaml") -> Path:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return path


class TestConfig:
    def test_minimal(self):
        cfg = parse_config(MINIMAL)
        assert (cfg.n, cfg.d, cfg.rounds, cfg.relay_rounds) == (2, 1, 10, 1)
        assert cfg.adversary.kind == "static"

    def test_round_trip(self, tmp_path):
        cfg = parse_config({**STAR, "verifiers": ["lemma7", {"id": "theorem3", "eps": 0.01}]})
        again = parse_config(yaml.safe_load(dump_config(cfg)))
        assert again.raw == cfg.raw
        assert np.array_equal(again.x0, cfg.x0)
        assert again.verifiers == cfg.verifiers

    def test_relay_auto(self):
        cfg = parse_config({**STAR, "relay_rounds": "auto"})
        assert cfg.relay_rounds == 9

    @pytest.mark.parametrize(
        "patch,path",
        [
            ({"n": 1}, "n"),
            ({"rounds": 0}, "rounds"),
            ({"rounds": "ten"}, "rounds"),
            ({"adversary": {"kind": "nope"}}, "adversary"),
            ({"adversary": {"kind": "static", "graphs": [[[0, 7]]]}}, "adversary.graphs[0]"),
            ({"initial": {"points": [[0.0]]}}, "initial.points"),
            ({"initial": {}}, "initial"),
            ({"weights": {"kind": "random_alpha_safe", "alpha": 1.5}}, "weights"),
            ({"verifiers": [3]}, "verifiers[0]"),
        ],
    )
    def test_errors_name_field(self, patch, path):
        with pytest.raises(ConfigError) as exc:
            parse_config({**MINIMAL, **patch})
        assert exc.value.path == path

    def test_missing_field(self):
        raw = dict(MINIMAL)
        del raw["rounds"]
        with pytest.raises(ConfigError, match="rounds"):
            parse_config(raw)

    def test_missing_initial_file(self, tmp_path):
        path = write_cfg(tmp_path, {**MINIMAL, "initial": {"file": "nowhere.csv"}})
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert "nowhere.csv" in str(exc.value)

    def test_initial_file(self, tmp_path):
        (tmp_path / "x0.csv").write_text("x\n0.5\n-2\n")
        cfg = load_config(write_cfg(tmp_path, {**MINIMAL, "initial": {"file": "x0.csv"}}))
        assert cfg.x0.ravel().tolist() == [0.5, -2.0]

    def test_seed_offset(self):
        raw = {**STAR, "adversary": {"kind": "random_rooted", "k": 1, "seed": 4}, "initial": {"random": {"seed": 2}}}
        cfg = parse_config(raw).with_seed_offset(3)
        assert cfg.adversary.seed == 7
        assert cfg.raw["initial"]["random"]["seed"] == 5


class TestRun:
    def test_minimal_run(self, tmp_path):
        cfg_path = write_cfg(tmp_path, MINIMAL)
        assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 0
        states = read_trace_csv(tmp_path / "o" / "trace.csv")
        assert states.shape == (11, 2, 1)
        # the complete pair meets after one round; spread stays far below 2^-10
        assert np.ptp(states[-1]) <= 2.0 ** -10
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["rounds"] == 10 and manifest["seed"] == 0

    def test_halving_spread(self, tmp_path):
        raw = {**MINIMAL, "weights": {"kind": "table", "table": [[0.75, 0.25], [0.25, 0.75]]}}
        out = tmp_path / "o"
        assert main(["run", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out)]) == 0
        states = read_trace_csv(out / "trace.csv")
        for t in range(11):
            assert np.ptp(states[t]) == 2.0 ** -t

    def test_deterministic_outputs(self, tmp_path):
        raw = {
            "n": 4, "d": 2, "rounds": 25,
            "adversary": {"kind": "random_rooted", "k": 2, "seed": 3},
            "weights": {"kind": "random_alpha_safe", "alpha": 0.1, "seed": 5},
            "initial": {"random": {"seed": 1, "low": -5, "high": 5}},
        }
        cfg_path = write_cfg(tmp_path, raw)
        for name in ("a", "b"):
            assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / name)]) == 0
        for f in ("trace.csv", "metrics.csv", "manifest.json", "scenario.yaml"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_metrics_columns(self, tmp_path):
        out = tmp_path / "o"
        main(["run", "--config", str(write_cfg(tmp_path, STAR)), "--out", str(out)])
        lines = (out / "metrics.csv").read_text().splitlines()
        assert lines[0] == "t,volume,thickness,diameter,affine_dim,alpha,m_set,edges"
        assert len(lines) == 32
        row1 = lines[2].split(",")
        assert row1[6] == "0" and row1[7] == "0>1;0>2"

    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == 2
        assert "absent.yaml" in capsys.readouterr().err

    def test_output_from_config(self, tmp_path):
        cfg_path = write_cfg(tmp_path, {**MINIMAL, "output": "runs/one"})
        assert main(["run", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "runs" / "one" / "trace.csv").exists()

    def test_infeasible_alpha(self, tmp_path, capsys):
        raw = {**MINIMAL, "weights": {"kind": "random_alpha_safe", "alpha": 0.9}}
        assert main(["run", "--config", str(write_cfg(tmp_path, raw)), "--out", str(tmp_path / "o")]) == 2
        assert "infeasible" in capsys.readouterr().err


class TestCheck:
    def test_volume_and_bound_checks_pass(self, tmp_path):
        raw = {**STAR, "verifiers": ["lemma7", {"id": "theorem3", "eps": 0.01}]}
        out = tmp_path / "o"
        assert main(["check", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["passed"]
        assert [c["claim"] for c in report["claims"]] == ["lemma7", "theorem3"]
        assert all(set(r) == {"claim", "round", "lhs", "rhs", "margin", "pass", "note"} for r in report["records"])

    def test_impossibility_witness(self, tmp_path):
        raw = {**MINIMAL, "n": 4, "d": 2, "rounds": 20,
               "adversary": {"kind": "impossibility", "k": 2},
               "initial": {"random": {"seed": 0}}, "verifiers": ["theorem2"]}
        out = tmp_path / "o"
        assert main(["check", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out)]) == 0
        claim = json.loads((out / "report.json").read_text())["claims"][0]
        assert claim["claim"] == "theorem2" and claim["checks"] == 2 * 21

    def test_corrupted_weights(self, tmp_path):
        raw = {**MINIMAL, "weights": {"kind": "table", "table": [[0.45, 0.45], [0.45, 0.45]]},
               "verifiers": ["lemma7"]}
        out = tmp_path / "o"
        assert main(["check", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out)]) != 0
        report = json.loads((out / "report.json").read_text())
        assert not report["passed"]
        assert "sums to" in report["records"][0]["note"]

    def test_unknown_verifier(self, tmp_path, capsys):
        raw = {**MINIMAL, "verifiers": ["lemma99"]}
        assert main(["check", "--config", str(write_cfg(tmp_path, raw)), "--out", str(tmp_path / "o")]) == 2
        assert "lemma99" in capsys.readouterr().err

    def test_descriptive_aliases(self, tmp_path):
        raw = {**STAR, "verifiers": ["volume_contraction", {"id": "convergence_bound", "eps": 0.01}]}
        out = tmp_path / "o"
        assert main(["check", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out)]) == 0
        claims = [c["claim"] for c in json.loads((out / "report.json").read_text())["claims"]]
        assert claims == ["lemma7", "theorem3"]

    def test_all_trace_verifiers(self, tmp_path):
        raw = {
            "n": 4, "d": 2, "rounds": 30,
            "adversary": {"kind": "random_broadcastable", "k": 2, "seed": 1},
            "initial": {"random": {"seed": 1, "low": -5, "high": 5}},
            "verifiers": ["weights", "nonexpansion", "lemma7", "lemma9", "lemma10", "lemma13",
                          {"id": "lemma2", "trials": 10}, {"id": "theorem4", "window": 5, "tol": 1.0}],
        }
        out = tmp_path / "o"
        assert main(["check", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out)]) == 0
        summary = (out / "summary.txt").read_text().splitlines()
        assert len(summary) == 8 and all("PASS" in line for line in summary)


class TestSweep:
    def test_single_seed_equals_check(self, tmp_path):
        raw = {**STAR, "verifiers": ["lemma7", "lemma13"]}
        cfg_path = write_cfg(tmp_path, raw)
        assert main(["check", "--config", str(cfg_path), "--out", str(tmp_path / "c")]) == 0
        assert main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "s"), "--seeds", "1"]) == 0
        a = (tmp_path / "c" / "report.json").read_text()
        b = (tmp_path / "s" / "seed_0000" / "report.json").read_text()
        assert a == b

    def test_aggregates(self, tmp_path):
        raw = {
            "n": 4, "d": 2, "rounds": 20,
            "adversary": {"kind": "random_broadcastable", "k": 2, "seed": 0},
            "initial": {"random": {"seed": 0, "low": -5, "high": 5}},
            "verifiers": ["lemma7"],
        }
        out = tmp_path / "s"
        assert main(["sweep", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out), "--seeds", "4"]) == 0
        summary = json.loads((out / "sweep.json").read_text())
        vr = summary["volume_ratio"]
        assert 0 <= vr["min"] <= vr["median"] <= vr["max"] <= 1
        assert summary["claims"]["lemma7"]["runs"] == 4
        assert sorted(p.name for p in out.iterdir() if p.is_dir()) == [f"seed_000{i}" for i in range(4)]

    def test_product_sweep(self, tmp_path):
        raw = {**MINIMAL, "n": 4, "adversary": {"kind": "random_rooted", "k": 1},
               "initial": {"random": {"seed": 0}}, "verifiers": [{"id": "theorem1", "trials": 20}]}
        out = tmp_path / "s"
        assert main(["sweep", "--config", str(write_cfg(tmp_path, raw)), "--out", str(out), "--seeds", "100"]) == 0
        agg = json.loads((out / "sweep.json").read_text())["claims"]["theorem1"]
        assert agg == {"runs": 100, "failed_runs": 0, "violations": 0, "worst_margin": 0.0}


def test_module_entry_point(tmp_path):
    cfg_path = write_cfg(tmp_path, MINIMAL)
    proc = subprocess.run(
        [sys.executable, "-m", "subspace_consensus", "run", "--config", str(cfg_path), "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "10 rounds" in proc.stdout


def test_documented_example_parses(tmp_path):
    doc = textwrap.dedent(
        """
        n: 4
        d: 2
        rounds: 60
        relay_rounds: 1
        adversary: {kind: random_broadcastable, k: 2, seed: 7}
        weights: {kind: equal_neighbor}
        initial:
          points: [[0, 0], [1, 0], [0, 1], [1, 1]]
        verifiers:
          - lemma7
          - {id: theorem3, eps: 0.01}
        """
    )
    path = tmp_path / "doc.yaml"
    path.write_text(doc)
    assert main(["check", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
