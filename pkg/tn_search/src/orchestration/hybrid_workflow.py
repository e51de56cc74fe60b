"""
Hybrid warm-start: a short LLM-guided phase whose best structure seeds local search.

Step 1: LLM phase   → run_llm_search capped at llm_budget evaluations
Step 2: Local phase → run_local_search from the LLM best, continuing the same history and budget
"""
import logging
from dataclasses import replace
from typing import Optional

from agents.domain_info import DomainInfo
from agents.prompt_templates import FORMAT_SPEC
from objective.evaluation import StructureEvaluator
from orchestration.llm_search_workflow import DialogueState, run_llm_search
from plugins.chat_clients import ChatClient
from search.local_search import (
    EnumConfig,
    NeighborhoodConfig,
    SearchState,
    StoppingConfig,
    run_local_search,
)

logger = logging.getLogger(__name__)


def hybrid_search(
    evaluator: StructureEvaluator,
    domain: DomainInfo,
    client: ChatClient,
    llm_budget: int = 10,
    strategy: str = "alternating",
    stopping: StoppingConfig = StoppingConfig(),
    neighborhood: Optional[NeighborhoodConfig] = None,
    enumeration: Optional[EnumConfig] = None,
    rank_max: int = 4,
    rank_min: int = 1,
    domain_aware: bool = True,
    format_spec: str = FORMAT_SPEC,
) -> tuple[SearchState, DialogueState]:
    """
    Both phases share `evaluator`, so cached structures stay free and `stopping.max_evals`
    caps the total. The returned history is the LLM phase followed by the local phase.

    Args:
        llm_budget: Evaluations granted to the LLM phase
        strategy: Local phase generator, "neighborhood" (TNLS-style) or "alternating" (TnALE-style)
        stopping: Shared budget and patience for both phases

    Returns:
        (SearchState of the local phase with the full history, DialogueState of the LLM phase)
    """
    if llm_budget < 1:
        raise ValueError(f"llm_budget must be >= 1, got {llm_budget}")
    neighborhood = neighborhood or NeighborhoodConfig(rank_max=rank_max, rank_min=rank_min)
    enumeration = enumeration or EnumConfig(rank_max=rank_max, rank_min=rank_min)

    logger.info("=" * 80)
    logger.info(f"[WORKFLOW] Hybrid search: {llm_budget} LLM evals, then {strategy} local search")
    logger.info("=" * 80)
    llm_stopping = replace(stopping, max_evals=min(llm_budget, stopping.max_evals))
    llm_state, dialogue = run_llm_search(
        evaluator, domain, client, llm_stopping, rank_max, rank_min, domain_aware, format_spec
    )
    logger.info(f"✓ [WORKFLOW] LLM phase best {llm_state.best.structure} after {llm_state.evals_used} evals")

    state = run_local_search(
        evaluator,
        llm_state.best.structure,
        strategy,
        stopping,
        neighborhood,
        enumeration,
        prior=llm_state,
    )
    state.metadata.update({
        "hybrid": True,
        "local_strategy": strategy,
        "llm_budget": llm_budget,
        "llm_evals": llm_state.evals_used,
        "llm_best": list(llm_state.best.ranks),
    })
    return state, dialogue
