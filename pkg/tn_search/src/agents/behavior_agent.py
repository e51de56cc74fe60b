"""
Behavior directive: the system message that sets the expert persona and the objective.
"""
from typing import Optional

from agents.prompt_templates import format_lambda, load_template, render_template

OBJECTIVE_TEXT = (
    "objective = ln( phi + lambda * mean relative error ), with lambda = {lam}\n"
    "where phi = (number of core parameters) / (number of tensor entries) is the compression "
    "ratio and the mean relative error is ||X - X_hat||_F / ||X||_F averaged over the samples "
    "after fitting the cores to each sample."
)


def describe_objective(lam: float) -> str:
    return OBJECTIVE_TEXT.format(lam=format_lambda(lam))


def render_behavior_prompt(lam: float, objective_description: Optional[str] = None,
                           template: Optional[str] = None) -> str:
    """System prompt naming the objective with the configured lambda."""
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    template = template if template is not None else load_template("behavior_directive")
    return render_template(template, {
        "lambda": format_lambda(lam),
        "objective": objective_description or describe_objective(lam),
    })
