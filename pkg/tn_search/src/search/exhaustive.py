"""
Brute-force oracle over every rank vector in a box.
"""
import itertools
import logging
from typing import Optional

from errors import SearchSpaceTooLargeError
from objective.evaluation import EvaluationResult, StructureEvaluator, best_of
from tensors.network import TNStructure, num_edges

logger = logging.getLogger(__name__)

MAX_STRUCTURES = 10_000


def exhaustive_search(
    evaluator: StructureEvaluator,
    rank_max: int,
    order: Optional[int] = None,
    rank_min: int = 1,
    max_structures: int = MAX_STRUCTURES,
) -> EvaluationResult:
    """
    Evaluate every structure with ranks in [rank_min, rank_max] and return the argmin.

    Ties go to the smaller parameter count, then the lexicographically smaller ranks.
    """
    order = order or evaluator.dataset.order
    if not 1 <= rank_min <= rank_max:
        raise ValueError(f"Invalid rank bounds [{rank_min}, {rank_max}]")
    size = (rank_max - rank_min + 1) ** num_edges(order)
    if size > max_structures:
        raise SearchSpaceTooLargeError(
            f"{size} structures in the box exceeds the enumeration guard of {max_structures}"
        )

    logger.info(f"[SEARCH] Exhaustive enumeration of {size} structures (order {order}, ranks {rank_min}..{rank_max})")
    results = [
        evaluator.evaluate(TNStructure(order, ranks), "exhaustive")
        for ranks in itertools.product(range(rank_min, rank_max + 1), repeat=num_edges(order))
    ]
    best = best_of(results)
    logger.info(f"[SEARCH] ✓ Exhaustive optimum {best.structure} obj={best.objective:.4f}")
    return best
