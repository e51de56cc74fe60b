"""
Task directive: asks for the initial structure from the mode descriptions alone.
"""
from typing import Optional, Sequence

from agents.domain_info import DomainInfo
from agents.prompt_templates import FORMAT_SPEC, load_template, render_template


def rank_bounds(rank_max: int, rank_min: int = 1) -> str:
    return f"[{rank_min}, {rank_max}]"


def render_task_prompt(
    domain: DomainInfo,
    shape: Sequence[int],
    rank_max: int,
    format_spec: str = FORMAT_SPEC,
    domain_aware: bool = True,
    rank_min: int = 1,
    template: Optional[str] = None,
) -> str:
    domain.validate(shape, domain_aware)
    template = template if template is not None else load_template("task_directive")
    return render_template(template, {
        "tensor_order": len(shape),
        "mode_table": domain.mode_table(domain_aware),
        "rank_bounds": rank_bounds(rank_max, rank_min),
        "format_spec": format_spec,
    })
