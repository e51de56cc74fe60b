import numpy as np
import pytest

from errors import InvalidStructureError, SearchSpaceTooLargeError
from objective.evaluation import StructureEvaluator
from search.exhaustive import exhaustive_search
from search.local_search import (
    EnumConfig,
    NeighborhoodConfig,
    StoppingConfig,
    default_rank_max,
    early_stop_check,
    enumerate_variable,
    run_local_search,
    sample_neighborhood,
)
from tensors.network import TNStructure
from tensors.synthetic import generate_synthetic


class TestSampleNeighborhood:
    def test_zero_probability_returns_center(self):
        center = TNStructure(3, (2, 2, 2))
        candidates = sample_neighborhood(center, NeighborhoodConfig(n_sample=4, p=0.0))
        assert candidates == [center] * 4

    def test_clipped_to_center(self):
        center = TNStructure.all_ones(3)
        config = NeighborhoodConfig(n_sample=3, p=1.0, rank_max=1)
        assert sample_neighborhood(center, config) == [center] * 3

    def test_every_coordinate_moves_by_one(self):
        center = TNStructure(3, (2, 2, 2))
        config = NeighborhoodConfig(n_sample=8, p=1.0, rank_max=4, seed=7)
        for candidate in sample_neighborhood(center, config):
            assert all(abs(a - b) == 1 for a, b in zip(candidate.ranks, center.ranks))

    def test_within_bounds(self):
        center = TNStructure(4, (1, 4, 1, 4, 2, 3))
        config = NeighborhoodConfig(n_sample=50, p=0.7, rank_max=4)
        rng = np.random.default_rng(11)
        assert all(c.within(4) for c in sample_neighborhood(center, config, rng))

    def test_seeded(self):
        center = TNStructure(3, (2, 2, 2))
        config = NeighborhoodConfig(seed=3)
        assert sample_neighborhood(center, config) == sample_neighborhood(center, config)

    def test_batch_has_no_repeats(self):
        center = TNStructure(3, (2, 2, 2))
        for seed in range(3):
            candidates = sample_neighborhood(center, NeighborhoodConfig(n_sample=4, rank_max=4, seed=seed))
            assert len(set(candidates)) == len(candidates)
            assert center not in candidates

    def test_avoided_structures_are_redrawn(self):
        center = TNStructure(3, (2, 2, 2))
        seen = {TNStructure(3, (3, 2, 2)), TNStructure(3, (1, 2, 2)), TNStructure(3, (2, 3, 2))}
        config = NeighborhoodConfig(n_sample=4, rank_max=4, seed=0)
        candidates = sample_neighborhood(center, config, avoid=seen.__contains__)
        assert not seen.intersection(candidates)


class TestEnumerateVariable:
    @pytest.mark.parametrize("value, radius, expected", [(2, 1, [1, 3]), (1, 1, [2]), (3, 2, [1, 2, 4])])
    def test_interval_minus_center(self, value, radius, expected):
        center = TNStructure(3, (1, value, 1))
        candidates = enumerate_variable(center, 1, EnumConfig(radius=radius, rank_max=4))
        assert [c.ranks[1] for c in candidates] == expected
        assert all(c.ranks[0] == 1 and c.ranks[2] == 1 for c in candidates)

    def test_bad_variable(self):
        with pytest.raises(InvalidStructureError):
            enumerate_variable(TNStructure.all_ones(3), 3, EnumConfig())


class TestEarlyStop:
    def test_strictly_decreasing(self):
        assert not early_stop_check([3.0, 2.0, 1.0, 0.0, -1.0, -2.0, -3.0], 5)

    def test_flat(self):
        assert early_stop_check([1.0] * 6, 5)

    def test_improvement_resets(self):
        assert not early_stop_check([-1, -1.2, -1.2, -1.2, -1.2, -1.2, -1.25], 5)

    def test_delta(self):
        assert early_stop_check([1.0, 0.999, 0.998], 2, delta=0.01)


class TestRunLocalSearch:
    def test_single_evaluation_budget(self, small_dataset, fast_fit):
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        init = TNStructure.all_ones(3)
        state = run_local_search(evaluator, init, stopping=StoppingConfig(max_evals=1))
        assert state.evals_used == 1
        assert [r.structure for r in state.history] == [init]
        assert state.best.structure == init

    @pytest.mark.parametrize("strategy", ["neighborhood", "alternating"])
    def test_budget_and_history(self, small_dataset, fast_fit, strategy):
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state = run_local_search(
            evaluator,
            TNStructure.all_ones(3),
            strategy,
            StoppingConfig(max_evals=9, patience=3),
            NeighborhoodConfig(rank_max=3, seed=1),
            EnumConfig(rank_max=3),
        )
        assert state.evals_used <= 9
        indices = [r.eval_index for r in state.history]
        assert indices == sorted(set(indices))
        assert state.best.objective == min(r.objective for r in state.history)
        assert all(r.structure.within(3) for r in state.history)
        assert state.metadata["strategy"] == strategy

    def test_best_trace_is_monotone(self, small_dataset, fast_fit):
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state = run_local_search(evaluator, TNStructure.all_ones(3), "alternating",
                                 StoppingConfig(max_evals=20, patience=2), enumeration=EnumConfig(rank_max=3))
        assert all(b <= a for a, b in zip(state.best_trace, state.best_trace[1:]))

    def test_stops_after_patience(self, small_dataset, fast_fit):
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state = run_local_search(evaluator, TNStructure.all_ones(3), "neighborhood",
                                 StoppingConfig(max_evals=500, patience=2),
                                 NeighborhoodConfig(n_sample=2, rank_max=2, seed=0))
        assert state.stopped_early
        assert state.best_trace[-3:] == [state.best_trace[-1]] * 3

    def test_evals_to_best(self, small_dataset, fast_fit):
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        state = run_local_search(evaluator, TNStructure.all_ones(3), "alternating",
                                 StoppingConfig(max_evals=12, patience=3), enumeration=EnumConfig(rank_max=3))
        first = next(r for r in state.history if r.objective == state.best.objective)
        assert state.evals_to_best == first.eval_index

    def test_unknown_strategy(self, small_dataset, fast_fit):
        with pytest.raises(ValueError):
            run_local_search(StructureEvaluator(small_dataset, 10.0, fast_fit), TNStructure.all_ones(3), "annealing")

    def test_init_out_of_bounds(self, small_dataset, fast_fit):
        with pytest.raises(InvalidStructureError):
            run_local_search(StructureEvaluator(small_dataset, 10.0, fast_fit), TNStructure(3, (5, 1, 1)),
                             enumeration=EnumConfig(rank_max=4))

    def test_prior_history_is_kept(self, small_dataset, fast_fit):
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        first = run_local_search(evaluator, TNStructure.all_ones(3), stopping=StoppingConfig(max_evals=3),
                                 enumeration=EnumConfig(rank_max=3))
        second = run_local_search(evaluator, first.best.structure, stopping=StoppingConfig(max_evals=6),
                                  enumeration=EnumConfig(rank_max=3), prior=first)
        assert second.history[:len(first.history)] == first.history
        assert evaluator.evals_used <= 6


def test_default_rank_max():
    assert default_rank_max((6, 6, 6)) == 5
    assert default_rank_max((144, 176, 3)) == 27
    assert default_rank_max((10000, 2)) == 32


class TestExhaustive:
    def test_two_vertices(self, fast_fit):
        ds = generate_synthetic((3, 4), TNStructure(2, (2,)), 2, seed=0)
        evaluator = StructureEvaluator(ds, 10.0, fast_fit)
        exhaustive_search(evaluator, rank_max=2)
        assert evaluator.evals_used == 2

    def test_three_vertices(self, small_dataset, fast_fit):
        evaluator = StructureEvaluator(small_dataset, 10.0, fast_fit)
        best = exhaustive_search(evaluator, rank_max=2)
        assert evaluator.evals_used == 8
        assert [r.ranks for r in evaluator.records][:3] == [(1, 1, 1), (1, 1, 2), (1, 2, 1)]
        assert best.objective == min(r.objective for r in evaluator.records)

    def test_guard(self, small_dataset, fast_fit):
        with pytest.raises(SearchSpaceTooLargeError):
            exhaustive_search(StructureEvaluator(small_dataset, 10.0, fast_fit), rank_max=5, max_structures=100)
