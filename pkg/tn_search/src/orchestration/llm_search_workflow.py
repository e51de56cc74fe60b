"""
LLM-guided structure search workflow - 2 stages.

Stage 1: TN-initialization → Behavior + task directives, first structure from domain knowledge
Stage 2: TN-discovery      → Optimization directive with (best, last) memory, repeat until
                             the evaluation budget or early stop
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

from agents.behavior_agent import render_behavior_prompt
from agents.domain_info import DomainInfo
from agents.optimization_agent import render_optimization_prompt
from agents.prompt_templates import FORMAT_SPEC
from agents.task_agent import render_task_prompt
from errors import LLMResponseError, NumericalFailureError, ScriptExhaustedError, SolutionParseError
from objective.evaluation import EvaluationResult, StructureEvaluator
from plugins.chat_clients import ChatClient, ChatMessage, chat_complete
from search.local_search import BudgetedEvaluator, SearchState, StoppingConfig, early_stop_check
from tensors.network import TNStructure
from utils.solution_parser import parse_solution

logger = logging.getLogger(__name__)


@dataclass
class DialogueState:
    """Everything the dialogue has produced so far."""
    transcript: list[ChatMessage] = field(default_factory=list)
    best: Optional[EvaluationResult] = None
    last: Optional[EvaluationResult] = None
    # (eval_index, reasoning); eval_index is None when the proposal could not be evaluated
    explanations: list[tuple[Optional[int], str]] = field(default_factory=list)
    evals_used: int = 0
    turns: int = 0
    failures: list[str] = field(default_factory=list)


class TNSearchWorkflow:
    """
    tnLLM dialogue loop.

    Each turn sends the system message plus one composed user message; a reply that does not
    parse gets one re-prompt with the format spec, after which the turn is skipped.
    Patience counts evaluated proposals, cache hits included.
    """

    def __init__(
        self,
        evaluator: StructureEvaluator,
        domain: DomainInfo,
        client: ChatClient,
        stopping: StoppingConfig = StoppingConfig(),
        rank_max: int = 4,
        rank_min: int = 1,
        domain_aware: bool = True,
        format_spec: str = FORMAT_SPEC,
        max_turns: Optional[int] = None,
    ):
        self.evaluator = evaluator
        self.domain = domain
        self.client = client
        self.stopping = stopping
        self.rank_max = rank_max
        self.rank_min = rank_min
        self.domain_aware = domain_aware
        self.format_spec = format_spec
        self.max_turns = max_turns or 2 * stopping.max_evals + stopping.patience + 1
        self.shape = evaluator.dataset.shape
        domain.validate(self.shape, domain_aware)
        logger.info("[WORKFLOW] LLM-guided search workflow initialized")

    def execute(self) -> tuple[SearchState, DialogueState]:
        """
        Execute the dialogue: TN-initialization, then TN-discovery until the budget or patience runs out.

        Returns:
            (SearchState over the evaluated proposals, DialogueState with transcript and explanations)
        """
        dialogue = DialogueState()
        history: list[EvaluationResult] = []
        evaluate = BudgetedEvaluator(self.evaluator, self.stopping.max_evals, history)

        # STAGE 1: TN-initialization
        dialogue = self._step_initialize(dialogue)

        # STAGE 2: TN-discovery
        return self._step_discover(dialogue, evaluate, history)

    def _step_initialize(self, dialogue: DialogueState) -> DialogueState:
        logger.info("=" * 80)
        logger.info("Stage 1: TN-initialization (behavior + task directives)")
        logger.info("=" * 80)
        system = render_behavior_prompt(self.evaluator.lam)
        dialogue.transcript.append(ChatMessage("system", system))
        logger.info(f"✓ Behavior directive ready (lambda = {self.evaluator.lam:g})")
        return dialogue

    def _step_discover(self, dialogue: DialogueState, evaluate: BudgetedEvaluator,
                       history: list[EvaluationResult]) -> tuple[SearchState, DialogueState]:
        logger.info("=" * 80)
        logger.info("Stage 2: TN-discovery (optimization directive loop)")
        logger.info("=" * 80)
        trace: list[float] = []
        invalid: Optional[tuple[TNStructure, str]] = None
        stopped_early = False

        while dialogue.turns < self.max_turns and self.evaluator.evals_used < self.stopping.max_evals:
            dialogue.turns += 1
            prompt = self._compose_prompt(dialogue, invalid)
            stage = "task" if dialogue.best is None else "optimization"
            logger.info(f"→ [LLM] Turn {dialogue.turns}: {stage} directive")
            try:
                proposal = self._ask(dialogue, prompt)
            except ScriptExhaustedError:
                if dialogue.best is None:
                    raise
                logger.info("→ [LLM] Scripted replies exhausted; ending the dialogue")
                break
            if proposal is None:
                continue
            structure, reasoning = proposal

            try:
                result = evaluate(structure, "llm")
            except NumericalFailureError as e:
                logger.warning(f"✗ [LLM] Proposal {structure} failed evaluation: {e}")
                dialogue.failures.append(str(e))
                dialogue.explanations.append((None, reasoning))
                invalid = (structure, str(e))
                continue
            if result is None:
                break
            invalid = None
            dialogue.explanations.append((result.eval_index, reasoning))
            dialogue.last = result
            if dialogue.best is None or result.sort_key() < dialogue.best.sort_key():
                dialogue.best = result
            trace.append(dialogue.best.objective)
            logger.info(
                f"✓ [LLM] Proposal {structure} obj={result.objective:.4f} "
                f"(best {dialogue.best.structure} obj={dialogue.best.objective:.4f})"
            )
            if early_stop_check(trace, self.stopping.patience, self.stopping.delta):
                stopped_early = True
                logger.info(f"✓ [LLM] Early stop after {self.stopping.patience} proposals without improvement")
                break

        dialogue.evals_used = self.evaluator.evals_used
        if dialogue.best is None:
            raise LLMResponseError(f"No usable structure proposed in {dialogue.turns} turns")

        state = SearchState(
            center=dialogue.best.structure,
            best=dialogue.best,
            history=history,
            candidates=[dialogue.last],
            evals_used=self.evaluator.evals_used,
            iterations_done=dialogue.turns,
            best_trace=trace,
            stopped_early=stopped_early,
            metadata={"strategy": "llm", "turns": dialogue.turns, "failures": len(dialogue.failures)},
        )
        logger.info(f"✓ [LLM] Best {state.best.structure} obj={state.best.objective:.4f} "
                    f"after {state.evals_used} evals, {dialogue.turns} turns")
        return state, dialogue

    def _compose_prompt(self, dialogue: DialogueState, invalid: Optional[tuple[TNStructure, str]]) -> str:
        if dialogue.best is None:
            prompt = render_task_prompt(
                self.domain, self.shape, self.rank_max, self.format_spec, self.domain_aware, self.rank_min
            )
            if invalid is not None:
                structure, reason = invalid
                prompt = f"Your previous proposal {structure} was an invalid structure: {reason}\n\n{prompt}"
            return prompt
        return render_optimization_prompt(
            dialogue.best, dialogue.last, self.domain, self.rank_max, self.format_spec,
            self.domain_aware, self.rank_min, invalid=invalid,
        )

    def _ask(self, dialogue: DialogueState, prompt: str) -> Optional[tuple[TNStructure, str]]:
        """One request, plus one re-prompt if the reply does not parse."""
        system = dialogue.transcript[0]
        request = [system, ChatMessage("user", prompt)]
        reply = chat_complete(request, self.client)
        dialogue.transcript += [request[-1], ChatMessage("assistant", reply)]
        try:
            return parse_solution(reply, self.evaluator.dataset.order, self.rank_max, self.rank_min)
        except SolutionParseError as e:
            logger.warning(f"✗ [LLM] Unusable reply ({e}); re-prompting with the format spec")
            first_error = e

        retry = ChatMessage("user", f"Your reply could not be used: {first_error}\n\n{self.format_spec}")
        request += [ChatMessage("assistant", reply), retry]
        reply = chat_complete(request, self.client)
        dialogue.transcript += [retry, ChatMessage("assistant", reply)]
        try:
            return parse_solution(reply, self.evaluator.dataset.order, self.rank_max, self.rank_min)
        except SolutionParseError as e:
            logger.error(f"✗ [LLM] Second unusable reply ({e}); skipping turn {dialogue.turns}")
            dialogue.failures.append(str(e))
            return None


def run_llm_search(
    evaluator: StructureEvaluator,
    domain: DomainInfo,
    client: ChatClient,
    stopping: StoppingConfig = StoppingConfig(),
    rank_max: int = 4,
    rank_min: int = 1,
    domain_aware: bool = True,
    format_spec: str = FORMAT_SPEC,
    max_turns: Optional[int] = None,
) -> tuple[SearchState, DialogueState]:
    """
    Run the dialogue on the evaluator's dataset, lambda and fit config.

    Args:
        evaluator: Shared evaluation service; its cache decides what counts as an evaluation
        domain: Mode names, sizes and descriptions for the task prompt
        client: Chat client answering one request per turn
        stopping: Evaluation budget and patience over evaluated proposals
        rank_max: Upper bound on every proposed rank

    Returns:
        (SearchState, DialogueState) of the finished dialogue
    """
    workflow = TNSearchWorkflow(
        evaluator, domain, client, stopping, rank_max, rank_min, domain_aware, format_spec, max_turns
    )
    return workflow.execute()
