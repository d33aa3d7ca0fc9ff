"""
Tests for the run configuration, the command line and the batch workflows.
"""

import json

import numpy as np
import pytest

from quadcert.candidates import CandidateFamily, read_family, write_family
from quadcert.cli import main, run
from quadcert.config import RunConfig
from quadcert.exceptions import ConfigError
from quadcert.forms import QuadraticForm
from quadcert.utils.serialization import read_json
from quadcert.verification import load_verified_forms
from quadcert.workflows.base import Workflow


def _write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


class TestRunConfig:
    """Loading and validation of run configurations."""

    def test_bundled_and_relative_paths(self, tmp_path):
        config = RunConfig.from_dict(
            {"command": "reach", "network": "bundled:one_neuron.json", "output": "out"}, base_dir=tmp_path
        )
        assert config.network.name == "one_neuron.json"
        assert config.output == tmp_path / "out"
        config.validate()

    def test_unknown_keys(self):
        with pytest.raises(ConfigError, match="Unknown config keys"):
            RunConfig.from_dict({"command": "reach", "netwrok": "a.json"})

    def test_missing_command(self):
        with pytest.raises(ConfigError, match="needs a 'command'"):
            RunConfig.from_dict({"network": "bundled:one_neuron.json"})

    def test_required_files(self):
        with pytest.raises(ConfigError, match="needs 'candidates'"):
            RunConfig.from_dict({"command": "verify", "relation": "bundled:sat.json"}).validate()

    def test_missing_file(self, tmp_path):
        config = RunConfig.from_dict({"command": "reach", "network": "missing.json"}, base_dir=tmp_path)
        with pytest.raises(ConfigError, match="does not exist"):
            config.validate()

    def test_bad_values(self):
        config = RunConfig.from_dict(
            {"command": "characterize", "relation": "bundled:sat.json", "workers": 0}
        )
        with pytest.raises(ConfigError, match="'workers' must be at least 1"):
            config.validate()
        config = RunConfig.from_dict(
            {"command": "characterize", "relation": "bundled:sat.json", "profile": "elu"}
        )
        with pytest.raises(ConfigError, match="Unknown profile"):
            config.validate()

    def test_report_needs_inputs(self):
        with pytest.raises(ConfigError, match="at least one entry in 'inputs'"):
            RunConfig.from_dict({"command": "report"}).validate()

    def test_tolerances(self):
        config = RunConfig.from_dict({"command": "report", "tolerances": {"feasibility": 1e-7}})
        assert config.tolerances.feasibility == 1e-7
        with pytest.raises(ConfigError, match="Bad tolerance overrides"):
            RunConfig.from_dict({"command": "report", "tolerances": {"precision": 1e-7}})

    def test_overrides(self):
        config = RunConfig.from_dict({"command": "report"}).apply_overrides(seed=4, workers=2, audit=True)
        assert (config.seed, config.workers, config.audit) == (4, 2, True)


class TestCommandLine:
    """Exit statuses of the command line."""

    def test_command_mismatch(self, tmp_path):
        path = _write_config(tmp_path, {"command": "reach", "network": "bundled:one_neuron.json"})
        assert main(["tighten", "--config", str(path)]) == 4

    def test_unreadable_config(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["reach", "--config", str(path)]) == 4

    def test_missing_input_file(self, tmp_path):
        path = _write_config(tmp_path, {"command": "reach", "network": "nowhere.json"})
        assert main(["reach", "--config", str(path)]) == 4

    def test_error_inside_workflow(self, tmp_path):
        """Package errors raised by a step map to exit status 4 and an incomplete manifest."""
        path = _write_config(tmp_path, {
            "command": "reach",
            "network": "bundled:tied_outputs.json",
            "output": "out",
            "options": {"name": "bad", "directions": {"kind": "spiral"}},
        })
        assert main(["reach", "--config", str(path)]) == 4
        manifest = read_json(tmp_path / "out" / "bad_manifest.json")
        assert manifest["label"] == "ERROR_CONFIG"
        assert not manifest["complete"]
        assert "Unknown direction kind" in (tmp_path / "out" / "bad.log").read_text()

    def test_unexpected_error_exits_3(self, tmp_path):
        """A non-package exception is logged with its traceback instead of escaping."""
        path = _write_config(tmp_path, {
            "command": "reach",
            "network": "bundled:tied_outputs.json",
            "output": "out",
            "options": {"name": "norows", "directions": {"kind": "explicit"}},
        })
        assert main(["reach", "--config", str(path)]) == 3
        manifest = read_json(tmp_path / "out" / "norows_manifest.json")
        assert manifest["label"] == "ERROR_UNEXPECTED"
        assert not manifest["complete"]
        log = (tmp_path / "out" / "norows.log").read_text()
        assert "Traceback" in log
        assert "KeyError" in log

    def test_workflow_step_raising(self, tmp_path):
        class Exploding(Workflow):
            name = "exploding"
            outline = ("first", "second", "third")

            def first(self):
                self.ctx.seen = 1

            def second(self):
                raise ZeroDivisionError("no samples")

            def third(self):
                raise AssertionError("not reached")

        config = RunConfig.from_dict(
            {"command": "reach", "network": "bundled:one_neuron.json", "output": "out"},
            base_dir=tmp_path,
        )
        workflow = Exploding(config)
        code = workflow.run()
        assert (code.status, code.label) == (3, "ERROR_UNEXPECTED")
        manifest = read_json(tmp_path / "out" / "exploding_manifest.json")
        assert manifest["status"] == 3
        assert not manifest["complete"]


class TestNetworkWorkflows:
    """Reach, safety and tighten runs on the bundled networks."""

    def test_reach(self, tmp_path):
        config = RunConfig.from_dict({
            "command": "reach",
            "network": "bundled:one_neuron.json",
            "output": str(tmp_path),
            "seed": 3,
            "options": {"name": "relu1", "characterizations": ["EP"], "samples": 200},
        })
        code = run(config)
        assert code.status == 0
        summary = read_json(tmp_path / "relu1_reach_summary.json")
        assert summary["kind"] == "reach_summary"
        assert summary["seed"] == 3
        (entry,) = summary["characterizations"]
        assert entry["name"] == "EP"
        assert entry["n_failed"] == 0
        np.testing.assert_allclose(entry["output_interval"], [0.0, 1.0], atol=1e-3)
        assert entry["average_width"] == pytest.approx(1.0, abs=2e-3)
        polytope = read_json(tmp_path / "relu1_EP_polytope.json")
        assert polytope["multipliers"] == {"input": 1, "relu_exact": 3, "local": 2}
        manifest = read_json(tmp_path / "relu1_manifest.json")
        assert manifest["complete"]
        assert "partial_polytopes" not in manifest["flags"]
        assert (tmp_path / "relu1_outputs.csv").exists()

    def test_safety_verified(self, tmp_path):
        config = RunConfig.from_dict({
            "command": "safety",
            "network": "bundled:tied_outputs.json",
            "output": str(tmp_path),
            "options": {
                "name": "tied",
                "characterization": "EP",
                "halfspaces": [{"c": [-1.0, 1.0], "d": -1.0}],
                "not_minimal": [0],
            },
        })
        assert run(config).status == 0
        record = read_json(tmp_path / "tied_safety.json")
        assert record["all_verified"]
        assert record["disjunctions"][0]["label"] == "not_minimal[0]"

    def test_safety_unknown_exits_2(self, tmp_path):
        """A property that does not hold is reported as 'unknown' and the run exits 2."""
        config = RunConfig.from_dict({
            "command": "safety",
            "network": "bundled:tied_outputs.json",
            "output": str(tmp_path),
            "options": {"name": "tied", "characterization": "EP",
                        "halfspaces": [{"c": [1.0, -1.0], "d": 0.5}]},
        })
        code = run(config)
        assert code.status == 2
        assert code.label == "ERROR_NOT_VERIFIED"
        record = read_json(tmp_path / "tied_safety.json")
        assert record["halfspaces"][0]["verdict"] == "unknown"
        assert not record["all_verified"]

    def test_tighten_single_layer(self, tmp_path):
        """With one hidden layer there is nothing to tighten; both bound files agree."""
        config = RunConfig.from_dict({
            "command": "tighten",
            "network": "bundled:tied_outputs.json",
            "output": str(tmp_path),
        })
        assert run(config).status == 0
        ibp = read_json(tmp_path / "tighten_ibp_bounds.json")
        tight = read_json(tmp_path / "tighten_bounds.json")
        assert ibp["layers"] == tight["layers"]
        assert read_json(tmp_path / "tighten_tightening.json")["kind"] == "tightening_report"


@pytest.mark.slow
class TestRelationPipeline:
    """characterize -> verify -> report on the bundled saturation relation."""

    def test_pipeline(self, tmp_path):
        gen = _write_config(tmp_path, {
            "command": "characterize",
            "relation": "bundled:sat.json",
            "output": "out",
            "options": {"name": "sat", "n_global": 60},
        }, "characterize.json")
        assert main(["characterize", "--config", str(gen), "--seed", "1"]) == 0
        family = read_family(tmp_path / "out" / "sat_candidates.json")
        assert family.seed == 1
        assert [q.tag for q in family.forms] == ["S1", "S2", "S3", "S1'", "S2'", "S3'"]

        ver = _write_config(tmp_path, {
            "command": "verify",
            "relation": "bundled:sat.json",
            "candidates": "out/sat_candidates.json",
            "output": "out",
            "options": {"name": "sat"},
        }, "verify.json")
        assert main(["verify", "--config", str(ver), "--audit"]) == 0
        verified = load_verified_forms(tmp_path / "out" / "sat_verified.json")
        assert len(verified) == 6
        audit = read_json(tmp_path / "out" / "sat_audit.json")
        assert audit["kind"] == "audit_report"
        manifest = read_json(tmp_path / "out" / "sat_manifest.json")
        assert manifest["command"] == "verify"
        assert manifest["complete"]
        assert manifest["flags"]["dropped"] == []

        rep = _write_config(tmp_path, {
            "command": "report",
            "relation": "bundled:sat.json",
            "inputs": ["out/sat_candidates.json", "out/sat_verified.json", "out/sat_certificates.json"],
            "output": "out",
            "options": {"name": "summary"},
        }, "report.json")
        assert main(["report", "--config", str(rep), "--audit"]) == 0
        text = (tmp_path / "out" / "summary_report.txt").read_text()
        assert text.startswith("Families")
        record = read_json(tmp_path / "out" / "summary_report.json")
        assert record["audit"]["passed"]


class TestVerifyExitStatus:
    """A dropped candidate is reported through the exit status."""

    def test_dropped_candidate_exits_2(self, tmp_path, sat_relation):
        family = CandidateFamily(
            forms=[
                QuadraticForm([0.0, -1.0, 0.0, 0.0, 0.0, 2.0], tag="good"),
                QuadraticForm([0.0, 0.0, 0.0, 0.0, 0.0, -1.0], tag="bad"),
            ],
            relation=sat_relation.name,
        )
        write_family(tmp_path / "family.json", family)
        config = RunConfig.from_dict({
            "command": "verify",
            "relation": "bundled:sat.json",
            "candidates": "family.json",
            "output": "out",
            "options": {"name": "mixed"},
        }, base_dir=tmp_path)
        code = run(config)
        assert code.status == 2
        assert code.label == "ERROR_VERIFICATION_FAILED"
        manifest = read_json(tmp_path / "out" / "mixed_manifest.json")
        assert manifest["flags"]["dropped"] == ["bad"]
        assert manifest["complete"]
        assert [q.tag for q in load_verified_forms(tmp_path / "out" / "mixed_verified.json")] == ["good"]


@pytest.mark.slow
class TestTanhPipeline:
    """characterize -> verify on the bundled tanh relation."""

    def test_all_forms_verify(self, tmp_path):
        """Eight data-driven forms and the analytic bound 1 - y^2 all verify and pass the audit."""
        gen = _write_config(tmp_path, {
            "command": "characterize",
            "relation": "bundled:tanh.json",
            "output": "out",
            "options": {"name": "tanh"},
        }, "characterize.json")
        assert main(["characterize", "--config", str(gen), "--seed", "1"]) == 0
        family = read_family(tmp_path / "out" / "tanh_candidates.json")
        assert len(family.forms) == 8

        ver = _write_config(tmp_path, {
            "command": "verify",
            "relation": "bundled:tanh.json",
            "candidates": "out/tanh_candidates.json",
            "output": "out",
            "options": {"name": "tanh"},
        }, "verify.json")
        assert main(["verify", "--config", str(ver), "--audit"]) == 0
        verified = load_verified_forms(tmp_path / "out" / "tanh_verified.json")
        assert sorted(q.tag for q in verified) == sorted(
            ["S1", "S2", "S3", "S4", "S1'", "S2'", "S3'", "S4'", "bounded"]
        )
        assert sum(q.provenance == "analytic" for q in verified) == 1
        manifest = read_json(tmp_path / "out" / "tanh_manifest.json")
        assert manifest["flags"]["dropped"] == []
        assert read_json(tmp_path / "out" / "tanh_audit.json")["passed"]
