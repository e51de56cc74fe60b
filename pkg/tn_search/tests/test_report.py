import json

import pytest

from errors import ReportError
from objective.evaluation import EvaluationResult
from tensors.network import TNStructure
from utils.report import best_so_far, build_report, cmd_report, evals_to_best
from utils.run_log import RunLogRecord, RunLogWriter, read_run_log, write_best, write_explanations


def _write_log(run_dir, objectives, source="enumeration"):
    writer = RunLogWriter(run_dir)
    results = []
    for i, objective in enumerate(objectives, start=1):
        result = EvaluationResult(TNStructure(3, (i, 1, 1)), 0.1, 0.01, objective, 10, i, source)
        writer(result)
        results.append(result)
    return results


class TestRunLog:
    def test_one_line_per_evaluation(self, tmp_path):
        _write_log(tmp_path, [0.5, 0.2, 0.3])
        records = read_run_log(tmp_path)
        assert [r.eval_index for r in records] == [1, 2, 3]
        assert records[1].ranks == [2, 1, 1]
        assert records[0].explanation is None

    def test_indices_strictly_increase(self, tmp_path):
        writer = RunLogWriter(tmp_path)
        record = RunLogRecord(2, [1, 1, 1], 0.1, 0.1, 0.0, "init", 0.0)
        writer.append(record)
        with pytest.raises(ValueError):
            writer.append(record)

    def test_llm_records_reference_explanations(self, tmp_path):
        results = _write_log(tmp_path, [0.5, 0.1], source="llm")
        write_explanations(tmp_path, [(1, "First idea."), (None, "Broken idea."), (2, "Better idea.")], results)
        assert read_run_log(tmp_path)[1].explanation == "explanations.md#eval-2"
        text = (tmp_path / "explanations.md").read_text()
        assert "Broken idea." in text and "(not evaluated)" in text
        assert '<a id="eval-2"></a>' in text

    def test_corrupt_line(self, tmp_path):
        (tmp_path / "run.jsonl").write_text('{"eval_index": 1}\nnot json\n')
        with pytest.raises(ReportError):
            read_run_log(tmp_path)


class TestReport:
    def test_evals_to_best(self, tmp_path):
        _write_log(tmp_path, [0.9, 0.5, 0.7, 0.1, 0.3, 0.1])
        assert evals_to_best(read_run_log(tmp_path)) == 4
        assert "evals to best: 4" in cmd_report(tmp_path)

    def test_monotone_curve_equals_objectives(self, tmp_path):
        objectives = [0.9, 0.5, 0.2, -0.1]
        _write_log(tmp_path, objectives)
        assert best_so_far(read_run_log(tmp_path)) == objectives

    def test_best_json_objectives(self, tmp_path):
        _write_log(tmp_path, [0.5, 0.2])
        write_best(tmp_path, {"train_objective": 0.2, "test_objective": 0.35})
        text = cmd_report(tmp_path)
        assert "best train objective: 0.2000" in text
        assert "best test objective: 0.3500" in text

    def test_json_output(self, tmp_path):
        _write_log(tmp_path, [0.5, 0.2, 0.4])
        report = json.loads(cmd_report(tmp_path, as_json=True))
        assert report["evals_to_best"] == 2
        assert [p["best_so_far"] for p in report["curve"]] == [0.5, 0.2, 0.2]
        assert report["best_test_objective"] is None

    def test_explanation_excerpts(self, tmp_path):
        results = _write_log(tmp_path, [0.5], source="llm")
        write_explanations(tmp_path, [(1, "Height and width are strongly coupled. " * 20)], results)
        excerpts = build_report(tmp_path)["explanations"]
        assert len(excerpts) == 1
        assert excerpts[0].startswith("Proposal 1: eval #1")
        assert excerpts[0].endswith("...")

    def test_empty_log(self, tmp_path):
        (tmp_path / "run.jsonl").write_text("")
        with pytest.raises(ReportError):
            cmd_report(tmp_path)

    def test_missing_log(self, tmp_path):
        with pytest.raises(ReportError):
            cmd_report(tmp_path)
