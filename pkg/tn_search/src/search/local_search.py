"""
Sampling-based structure search loop with two candidate generators.

- "neighborhood": independent +/-1 rank perturbations around the center (TNLS-style).
- "alternating": enumerate one rank variable at a time within a radius (TnALE-style),
  re-centering after every variable.

Each outer iteration generates candidates H, evaluates them, appends new results to
the history P, and moves the center to the best structure in P when it is strictly
better than the current center.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from errors import InvalidStructureError
from objective.evaluation import EvaluationResult, StructureEvaluator, best_of
from tensors.network import TNStructure

logger = logging.getLogger(__name__)

STRATEGIES = ("neighborhood", "alternating")


def default_rank_max(shape: Sequence[int]) -> int:
    """round(2 * sqrt(max I_i)), capped at 32."""
    return max(1, min(32, round(2 * math.sqrt(max(shape)))))


@dataclass(frozen=True)
class NeighborhoodConfig:
    n_sample: int = 4
    p: float = 0.5
    rank_max: int = 4
    rank_min: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_sample < 1:
            raise ValueError(f"n_sample must be >= 1, got {self.n_sample}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 1 <= self.rank_min <= self.rank_max:
            raise ValueError(f"Invalid rank bounds [{self.rank_min}, {self.rank_max}]")


@dataclass(frozen=True)
class EnumConfig:
    radius: int = 1
    rounds: int = 1
    rank_max: int = 4
    rank_min: int = 1

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 1 <= self.rank_min <= self.rank_max:
            raise ValueError(f"Invalid rank bounds [{self.rank_min}, {self.rank_max}]")


@dataclass(frozen=True)
class StoppingConfig:
    max_evals: int = 500
    patience: int = 5
    delta: float = 0.0

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError(f"max_evals must be >= 1, got {self.max_evals}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")


@dataclass
class SearchState:
    center: TNStructure
    best: EvaluationResult
    history: list[EvaluationResult] = field(default_factory=list)
    candidates: list[EvaluationResult] = field(default_factory=list)
    evals_used: int = 0
    iterations_done: int = 0
    best_trace: list[float] = field(default_factory=list)
    stopped_early: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def evals_to_best(self) -> int:
        """eval_index of the first record in P attaining the best objective."""
        target = self.best.objective
        return next((r.eval_index for r in self.history if r.objective == target), self.best.eval_index)


def sample_neighborhood(center: TNStructure, config: NeighborhoodConfig,
                        rng: Optional[np.random.Generator] = None,
                        avoid: Optional[Callable[[TNStructure], bool]] = None) -> list[TNStructure]:
    """
    n_sample structures, each rank moved by +/-1 with probability p and clipped.

    A draw equal to the center, to an earlier draw of this batch, or rejected by `avoid` is
    redrawn up to 10 times; the last draw is kept when every attempt is rejected.
    """
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    candidates = []
    for _ in range(config.n_sample):
        for _attempt in range(10):
            ranks = list(center.ranks)
            for v in range(len(ranks)):
                if rng.random() < config.p:
                    step = 1 if rng.random() < 0.5 else -1
                    ranks[v] = min(config.rank_max, max(config.rank_min, ranks[v] + step))
            candidate = TNStructure(center.order, tuple(ranks))
            if candidate != center and candidate not in candidates and not (avoid and avoid(candidate)):
                break
        candidates.append(candidate)
    return candidates


def enumerate_variable(center: TNStructure, var: int, config: EnumConfig) -> list[TNStructure]:
    """Copies of `center` with rank `var` set to every other value within the radius."""
    if not 0 <= var < center.num_edges:
        raise InvalidStructureError(f"Variable index {var} out of range 0..{center.num_edges - 1}")
    c = center.ranks[var]
    lo = max(config.rank_min, c - config.radius)
    hi = min(config.rank_max, c + config.radius)
    return [center.with_rank(var, value) for value in range(lo, hi + 1) if value != c]


def early_stop_check(history: Sequence[float], patience: int, delta: float = 0.0) -> bool:
    """True when the best objective has not improved by more than delta for `patience` steps."""
    if not history:
        return False
    best = history[0]
    stale = 0
    for value in history[1:]:
        if value < best - delta:
            best = value
            stale = 0
        else:
            stale += 1
    return stale >= patience


class BudgetedEvaluator:
    """Evaluates under the shared max_evals budget and appends new results to P."""

    def __init__(self, evaluator: StructureEvaluator, max_evals: int, history: list[EvaluationResult]):
        self.evaluator = evaluator
        self.max_evals = max_evals
        self.history = history

    def __call__(self, structure: TNStructure, source: str) -> Optional[EvaluationResult]:
        if not self.evaluator.is_cached(structure) and self.evaluator.evals_used >= self.max_evals:
            return None
        before = self.evaluator.evals_used
        result = self.evaluator.evaluate(structure, source)
        if self.evaluator.evals_used > before:
            self.history.append(result)
        return result


def run_local_search(
    evaluator: StructureEvaluator,
    init: TNStructure,
    strategy: str = "alternating",
    stopping: StoppingConfig = StoppingConfig(),
    neighborhood: Optional[NeighborhoodConfig] = None,
    enumeration: Optional[EnumConfig] = None,
    prior: Optional[SearchState] = None,
) -> SearchState:
    """
    Run the search loop from `init` until the evaluation budget or early stopping.

    `prior` continues from an earlier phase: its history is kept as the head of P and its
    evaluations count against the same budget.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"Unknown local search strategy {strategy!r}; expected one of {STRATEGIES}")
    neighborhood = neighborhood or NeighborhoodConfig()
    enumeration = enumeration or EnumConfig()
    if strategy == "neighborhood":
        if neighborhood.p <= 0:
            raise ValueError("Neighborhood search needs p > 0")
        rank_min, rank_max = neighborhood.rank_min, neighborhood.rank_max
    else:
        rank_min, rank_max = enumeration.rank_min, enumeration.rank_max
    if not init.within(rank_max, rank_min):
        raise InvalidStructureError(f"Initial structure {init} is outside [{rank_min}, {rank_max}]")

    history = list(prior.history) if prior is not None else []
    evaluate = BudgetedEvaluator(evaluator, stopping.max_evals, history)
    logger.info("=" * 80)
    logger.info(f"[SEARCH] Local search ({strategy}) from {init}, budget {stopping.max_evals} evals")
    logger.info("=" * 80)

    center_result = evaluate(init, "init")
    if center_result is None:
        raise ValueError("Evaluation budget exhausted before the initial structure could be evaluated")
    state = SearchState(
        center=init,
        best=best_of(history + [center_result]),
        history=history,
        candidates=[center_result],
        metadata={
            "strategy": strategy,
            "recenter": "per-variable" if strategy == "alternating" else "per-iteration",
        },
    )
    state.best_trace.append(state.best.objective)
    rng = np.random.default_rng(neighborhood.seed)

    def recenter():
        nonlocal center_result
        best = best_of(history)
        if best is not None and best.objective < center_result.objective:
            center_result = best
            state.center = best.structure

    budget_hit = False
    while evaluator.evals_used < stopping.max_evals and not budget_hit:
        candidates: list[EvaluationResult] = []
        if strategy == "neighborhood":
            for structure in sample_neighborhood(state.center, neighborhood, rng, evaluator.is_cached):
                result = evaluate(structure, "neighborhood")
                if result is None:
                    budget_hit = True
                    break
                candidates.append(result)
            recenter()
        else:
            for _ in range(enumeration.rounds):
                for var in range(state.center.num_edges):
                    for structure in enumerate_variable(state.center, var, enumeration):
                        result = evaluate(structure, "enumeration")
                        if result is None:
                            budget_hit = True
                            break
                        candidates.append(result)
                    recenter()
                    if budget_hit:
                        break
                if budget_hit:
                    break

        state.iterations_done += 1
        state.candidates = candidates
        state.best = best_of(history + [center_result])
        state.best_trace.append(state.best.objective)
        logger.info(
            f"[SEARCH] iter {state.iterations_done}: {len(candidates)} candidates, center {state.center}, "
            f"best {state.best.objective:.4f} ({evaluator.evals_used}/{stopping.max_evals} evals)"
        )
        if early_stop_check(state.best_trace, stopping.patience, stopping.delta):
            state.stopped_early = True
            logger.info(f"[SEARCH] ✓ Early stop after {stopping.patience} iterations without improvement")
            break

    state.evals_used = evaluator.evals_used
    logger.info(f"[SEARCH] ✓ Best {state.best.structure} obj={state.best.objective:.4f} "
                f"after {state.evals_used} evals")
    return state
