"""
Summaries of a finished run directory.
"""
import json
import re
from pathlib import Path

from utils.run_log import EXPLANATIONS, RunLogRecord, read_best, read_run_log

EXCERPT_CHARS = 300
MAX_EXCERPTS = 5


def best_so_far(records: list[RunLogRecord]) -> list[float]:
    curve, best = [], float("inf")
    for record in records:
        best = min(best, record.objective)
        curve.append(best)
    return curve


def evals_to_best(records: list[RunLogRecord]) -> int:
    """eval_index of the first record attaining the minimum objective."""
    target = min(r.objective for r in records)
    return next(r.eval_index for r in records if r.objective == target)


def explanation_excerpts(run_dir, limit: int = MAX_EXCERPTS, chars: int = EXCERPT_CHARS) -> list[str]:
    path = Path(run_dir) / EXPLANATIONS
    if not path.exists():
        return []
    sections = re.split(r"^## ", path.read_text(encoding="utf-8"), flags=re.MULTILINE)[1:]
    excerpts = []
    for section in sections[:limit]:
        heading, _, body = section.partition("\n")
        body = re.sub(r"<a id=\"[^\"]*\"></a>", "", body).strip().replace("\n", " ")
        if len(body) > chars:
            body = body[:chars].rstrip() + "..."
        excerpts.append(f"{heading.strip()}: {body}")
    return excerpts


def build_report(run_dir) -> dict:
    records = read_run_log(run_dir)
    best_record = min(records, key=lambda r: r.objective)
    best = read_best(run_dir) or {}
    return {
        "run_dir": str(run_dir),
        "evaluations": len(records),
        "best_ranks": best_record.ranks,
        "best_train_objective": best.get("train_objective", best_record.objective),
        "best_test_objective": best.get("test_objective"),
        "evals_to_best": evals_to_best(records),
        "curve": [
            {"eval_index": r.eval_index, "objective": r.objective, "best_so_far": b}
            for r, b in zip(records, best_so_far(records))
        ],
        "explanations": explanation_excerpts(run_dir),
    }


def cmd_report(run_dir, as_json: bool = False) -> str:
    report = build_report(run_dir)
    if as_json:
        return json.dumps(report, indent=2)

    test = report["best_test_objective"]
    lines = [
        "=" * 80,
        f"Run report: {report['run_dir']}",
        "=" * 80,
        f"evaluations: {report['evaluations']}",
        f"best structure: {report['best_ranks']}",
        f"best train objective: {report['best_train_objective']:.4f}",
        f"best test objective: {'n/a' if test is None else f'{test:.4f}'}",
        f"evals to best: {report['evals_to_best']}",
        "",
        "best-so-far curve (eval_index objective best_so_far):",
    ]
    lines += [f"  {p['eval_index']:>5} {p['objective']:.4f} {p['best_so_far']:.4f}" for p in report["curve"]]
    if report["explanations"]:
        lines += ["", "explanation excerpts:"]
        lines += [f"  • {e}" for e in report["explanations"]]
    return "\n".join(lines)
