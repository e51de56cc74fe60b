import pytest

from agents.prompt_templates import FORMAT_SPEC
from errors import LLMResponseError, NumericalFailureError
from objective.evaluation import StructureEvaluator
from orchestration.hybrid_workflow import hybrid_search
from orchestration.llm_search_workflow import run_llm_search
from search.local_search import StoppingConfig
from tensors.network import TNStructure


def _reply(ranks, reasoning="Reasoning about the modes."):
    return f"{reasoning}\nRANKS: [{', '.join(str(r) for r in ranks)}]"


def _assert_dialogue_shape(transcript):
    assert transcript[0].role == "system"
    roles = [m.role for m in transcript[1:]]
    assert roles == ["user", "assistant"] * (len(roles) // 2)


class TestRunLLMSearch:
    def test_monotone_script(self, small_dataset, small_domain, fast_fit, scripted_client):
        """Script ordered from worst to best: the best is the last proposal."""
        candidates = [(1, 1, 1), (1, 1, 2), (2, 1, 1), (2, 2, 2), (3, 1, 1)]
        reference = StructureEvaluator(small_dataset, 10.0, fast_fit)
        scored = sorted(candidates, key=lambda r: reference.evaluate(TNStructure(3, r)).objective, reverse=True)
        client = scripted_client([_reply(r) for r in scored])

        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, dialogue = run_llm_search(evaluator, small_domain, client,
                                         StoppingConfig(max_evals=len(scored), patience=5), rank_max=3)
        assert state.best.ranks == scored[-1]
        assert state.best.objective == reference.evaluate(TNStructure(3, scored[-1])).objective
        assert evaluator.evals_used == len(scored)
        assert len(dialogue.explanations) == len(scored)

    def test_repeated_proposal_stops_on_patience(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((2, 1, 1))] * 6)
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, dialogue = run_llm_search(evaluator, small_domain, client, StoppingConfig(patience=5), rank_max=3)
        assert evaluator.evals_used == 1
        assert dialogue.turns <= 6
        assert state.stopped_early

    def test_single_evaluation(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((2, 1, 1)), _reply((1, 1, 1))])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, _ = run_llm_search(evaluator, small_domain, client, StoppingConfig(max_evals=1), rank_max=3)
        assert evaluator.evals_used == 1
        assert state.best.ranks == (2, 1, 1)
        assert len(client.requests) == 1

    def test_prompts_sent(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((2, 1, 1)), _reply((1, 1, 1))])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        run_llm_search(evaluator, small_domain, client, StoppingConfig(max_evals=2), rank_max=3)
        first, second = client.requests
        assert [m.role for m in first] == ["system", "user"]
        assert "lambda = 10" in first[0].content
        assert "Rows" in first[1].content and first[1].content.endswith(FORMAT_SPEC)
        assert "Best structure so far: [2, 1, 1]" in second[1].content
        assert second[0] == first[0]

    def test_reprompt_then_accept(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client(["I would pick moderate ranks.", _reply((2, 1, 1), "Fixed format.")])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, dialogue = run_llm_search(evaluator, small_domain, client, StoppingConfig(max_evals=1), rank_max=3)
        assert state.best.ranks == (2, 1, 1)
        retry = client.requests[1]
        assert [m.role for m in retry] == ["system", "user", "assistant", "user"]
        assert retry[-1].content.endswith(FORMAT_SPEC)
        assert dialogue.explanations == [(1, "Fixed format.")]
        _assert_dialogue_shape(dialogue.transcript)

    def test_two_bad_replies_skip_turn(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client(["no ranks here", "RANKS: [9, 9, 9]", _reply((1, 2, 1))])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, dialogue = run_llm_search(evaluator, small_domain, client, StoppingConfig(max_evals=1), rank_max=3)
        assert dialogue.turns == 2
        assert len(dialogue.failures) == 1
        assert "outside [1, 3]" in dialogue.failures[0]
        # the skipped turn is retried with the task directive
        assert "Best structure so far" not in client.requests[2][-1].content
        assert state.best.ranks == (1, 2, 1)

    def test_no_usable_proposal(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client(["nothing", "still nothing", "nope", "no"])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        with pytest.raises(LLMResponseError):
            run_llm_search(evaluator, small_domain, client, StoppingConfig(max_evals=1), rank_max=3, max_turns=2)

    def test_evaluation_failure_reported(self, monkeypatch, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((1, 1, 1)), _reply((3, 3, 3), "Go big."), _reply((2, 1, 1))])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        original = evaluator.evaluate

        def flaky(structure, source="init"):
            if structure.ranks == (3, 3, 3):
                raise NumericalFailureError(structure)
            return original(structure, source)

        monkeypatch.setattr(evaluator, "evaluate", flaky)
        state, dialogue = run_llm_search(evaluator, small_domain, client, StoppingConfig(max_evals=2), rank_max=3)
        assert "[3, 3, 3] (invalid structure:" in client.requests[2][-1].content
        assert evaluator.evals_used == 2
        assert dialogue.explanations[1] == (None, "Go big.")
        assert len(dialogue.explanations) == 3

    def test_script_exhaustion_ends_dialogue(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((2, 1, 1)), _reply((1, 1, 1))])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, dialogue = run_llm_search(evaluator, small_domain, client, StoppingConfig(max_evals=10), rank_max=3)
        assert evaluator.evals_used == 2
        _assert_dialogue_shape(dialogue.transcript)

    def test_deterministic(self, small_dataset, small_domain, fast_fit, scripted_client):
        script = [_reply(r) for r in [(1, 1, 1), (2, 1, 1), (2, 2, 1)]]
        runs = []
        for _ in range(2):
            evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
            state, dialogue = run_llm_search(evaluator, small_domain, scripted_client(script),
                                             StoppingConfig(max_evals=3), rank_max=3)
            runs.append(([(r.ranks, r.objective) for r in state.history], dialogue.transcript))
        assert runs[0] == runs[1]


class TestHybridSearch:
    def test_phases_share_budget(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((2, 1, 1)), _reply((1, 1, 1)), _reply((1, 2, 1))])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, dialogue = hybrid_search(evaluator, small_domain, client, llm_budget=3,
                                        stopping=StoppingConfig(max_evals=12, patience=2), rank_max=3)
        assert evaluator.evals_used <= 12
        assert state.metadata["llm_evals"] == 3
        sources = [r.source for r in state.history]
        assert sources[:3] == ["llm"] * 3
        assert "llm" not in sources[3:]
        indices = [r.eval_index for r in state.history]
        assert indices == sorted(set(indices))
        assert state.best.objective == min(r.objective for r in state.history)
        assert len(dialogue.explanations) == 3

    def test_llm_phase_capped_by_budget(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply(r) for r in [(1, 1, 1), (2, 1, 1), (1, 2, 1), (1, 1, 2), (2, 2, 1)]])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, _ = hybrid_search(evaluator, small_domain, client, llm_budget=2,
                                 stopping=StoppingConfig(max_evals=6, patience=2), rank_max=3)
        assert len(client.requests) == 2
        assert evaluator.evals_used <= 6

    def test_local_phase_starts_from_llm_best(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((2, 1, 1))])
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state, _ = hybrid_search(evaluator, small_domain, client, llm_budget=1,
                                 stopping=StoppingConfig(max_evals=8, patience=2), rank_max=3)
        assert state.history[0].ranks == (2, 1, 1)
        assert state.metadata["llm_best"] == [2, 1, 1]
        assert state.best.objective <= state.history[0].objective

    def test_local_phase_improves_on_llm_best(self, small_dataset, small_domain, fast_fit, scripted_client):
        client = scripted_client([_reply((1, 1, 1))])
        evaluator = StructureEvaluator(small_dataset, 100.0, fast_fit)
        state, _ = hybrid_search(evaluator, small_domain, client, llm_budget=1, strategy="alternating",
                                 stopping=StoppingConfig(max_evals=10, patience=2), rank_max=3)
        llm_best = state.history[0]
        assert llm_best.ranks == (1, 1, 1)
        assert state.best.objective < llm_best.objective
        assert state.best.source == "enumeration"
        assert state.best.ranks[0] >= 2
        assert state.metadata["local_strategy"] == "alternating"

    def test_budget_must_be_positive(self, small_dataset, small_domain, fast_fit, scripted_client):
        with pytest.raises(ValueError):
            hybrid_search(StructureEvaluator(small_dataset, 10.0, fast_fit), small_domain,
                          scripted_client([]), llm_budget=0)
