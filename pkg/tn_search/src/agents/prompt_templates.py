"""
Prompt template loading and placeholder substitution.

Templates live in tn_search/prompts/*.txt and use {name} placeholders. Rendering is a
single pass, so substituted text is never rescanned for placeholders.
"""
import re
from pathlib import Path
from typing import Mapping, Optional

from errors import TemplateError

PROMPTS_DIR = Path(__file__).resolve().parents[2] / "prompts"

PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

PLACEHOLDERS = (
    "tensor_order",
    "mode_table",
    "lambda",
    "objective",
    "rank_bounds",
    "best_structure",
    "best_objective",
    "last_structure",
    "last_objective",
    "format_spec",
)

FORMAT_SPEC = (
    "End your reply with exactly one line: RANKS: [k_12, k_13, ..., k_(N-1)N] — integers "
    "between 1 and R_MAX, upper-triangular order (1,2),(1,3),...,(N-1,N)."
)


def load_template(name: str, prompts_dir: Optional[Path] = None) -> str:
    """Read `<name>.txt`, dropping trailing newlines so the last block ends the prompt."""
    path = Path(prompts_dir or PROMPTS_DIR) / f"{name}.txt"
    if not path.exists():
        raise FileNotFoundError(f"Prompt template not found: {path}")
    return path.read_text(encoding="utf-8").rstrip("\n")


def render_template(template: str, values: Mapping[str, object]) -> str:
    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in PLACEHOLDERS:
            raise TemplateError(f"Unknown placeholder {{{name}}} in prompt template")
        if name not in values:
            raise TemplateError(f"Unresolved placeholder {{{name}}} in prompt template")
        return str(values[name])

    return PLACEHOLDER.sub(substitute, template)


def format_objective(value: float) -> str:
    return f"{value:.4f}"


def format_lambda(lam: float) -> str:
    return f"{lam:g}"
