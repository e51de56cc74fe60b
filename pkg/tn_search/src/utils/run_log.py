"""
Run artifacts: run.jsonl (one record per evaluation), best.json, explanations.md.
"""
import json
import threading
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from errors import ReportError
from objective.evaluation import EvaluationResult

RUN_LOG = "run.jsonl"
BEST = "best.json"
EXPLANATIONS = "explanations.md"


@dataclass(frozen=True)
class RunLogRecord:
    eval_index: int
    ranks: list[int]
    phi: float
    mean_relative_error: float
    objective: float
    source: str
    timestamp: float
    explanation: Optional[str] = None

    @classmethod
    def from_result(cls, result: EvaluationResult, timestamp: Optional[float] = None) -> "RunLogRecord":
        return cls(
            eval_index=result.eval_index,
            ranks=list(result.ranks),
            phi=result.phi,
            mean_relative_error=result.mean_relative_error,
            objective=result.objective,
            source=result.source,
            timestamp=time.time() if timestamp is None else timestamp,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self))


class RunLogWriter:
    """Appends one JSON line per new evaluation; usable as `on_evaluated`."""

    def __init__(self, run_dir):
        self.path = Path(run_dir) / RUN_LOG
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf-8")
        self._lock = threading.Lock()
        self._last_index = 0

    def __call__(self, result: EvaluationResult) -> None:
        record = RunLogRecord.from_result(result)
        if result.source == "llm":
            record = replace(record, explanation=f"{EXPLANATIONS}#eval-{result.eval_index}")
        self.append(record)

    def append(self, record: RunLogRecord) -> None:
        with self._lock:
            if record.eval_index <= self._last_index:
                raise ValueError(f"eval_index {record.eval_index} after {self._last_index} in {self.path}")
            with self.path.open("a", encoding="utf-8") as f:
                f.write(record.to_json() + "\n")
            self._last_index = record.eval_index


def read_run_log(run_dir) -> list[RunLogRecord]:
    path = Path(run_dir) / RUN_LOG
    if not path.exists():
        raise ReportError(f"No {RUN_LOG} in {run_dir}")
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(RunLogRecord(**json.loads(line)))
        except (json.JSONDecodeError, TypeError) as e:
            raise ReportError(f"Corrupt record at {path}:{lineno}: {e}") from e
    if not records:
        raise ReportError(f"{path} has no records")
    return records


def write_best(run_dir, payload: dict) -> Path:
    path = Path(run_dir) / BEST
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def read_best(run_dir) -> Optional[dict]:
    path = Path(run_dir) / BEST
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ReportError(f"Corrupt {path}: {e}") from e


def write_explanations(run_dir, explanations: Sequence[tuple[Optional[int], str]],
                       records: Sequence[EvaluationResult]) -> Path:
    """One markdown section per LLM proposal, keyed by its evaluation index."""
    by_index = {r.eval_index: r for r in records}
    lines = ["# LLM explanations", ""]
    for n, (eval_index, text) in enumerate(explanations, start=1):
        result = by_index.get(eval_index)
        if result is None:
            lines.append(f"## Proposal {n} (not evaluated)")
        else:
            lines.append(f"<a id=\"eval-{eval_index}\"></a>")
            lines.append(f"## Proposal {n}: eval #{eval_index} {result.structure} obj={result.objective:.4f}")
        lines.append("")
        lines.append(text or "_(no reasoning given)_")
        lines.append("")
    path = Path(run_dir) / EXPLANATIONS
    path.write_text("\n".join(lines), encoding="utf-8")
    return path
