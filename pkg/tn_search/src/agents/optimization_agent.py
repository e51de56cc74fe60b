"""
Optimization directive: reports the best and last evaluated structures and asks for an
improved one.
"""
from typing import Optional

from agents.domain_info import DomainInfo
from agents.prompt_templates import FORMAT_SPEC, format_objective, load_template, render_template
from agents.task_agent import rank_bounds
from objective.evaluation import EvaluationResult
from tensors.network import TNStructure


def render_optimization_prompt(
    best: EvaluationResult,
    last: Optional[EvaluationResult],
    domain: DomainInfo,
    rank_max: int,
    format_spec: str = FORMAT_SPEC,
    domain_aware: bool = True,
    rank_min: int = 1,
    invalid: Optional[tuple[TNStructure, str]] = None,
    template: Optional[str] = None,
) -> str:
    """
    Render the per-iteration prompt.

    `invalid` is (structure, reason) for a proposal that failed evaluation; it is shown
    as the last structure with no objective.
    """
    if last is not None and last.structure != best.structure and best.objective > last.objective:
        raise ValueError("best must not have a larger objective than last")
    if invalid is not None:
        structure, reason = invalid
        last_structure = f"{structure} (invalid structure: {reason})"
        last_objective = "n/a"
    else:
        last = last or best
        last_structure = str(last.structure)
        last_objective = format_objective(last.objective)

    template = template if template is not None else load_template("optimization_directive")
    return render_template(template, {
        "tensor_order": domain.order,
        "best_structure": str(best.structure),
        "best_objective": format_objective(best.objective),
        "last_structure": last_structure,
        "last_objective": last_objective,
        "mode_table": domain.mode_table(domain_aware),
        "rank_bounds": rank_bounds(rank_max, rank_min),
        "format_spec": format_spec,
    })
