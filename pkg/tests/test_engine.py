"""
Tests for the nested search engine in nrpa/engine.py.

Covers:
- Softmax move probabilities (normalization, symmetry, shift invariance)
- Playout sampling, forced trajectories and dead ends
- Adapt: step size, zero gradient, zero-sum updates, reinforcement direction
- Playout-count law for GNRPA and the repetition law for GNRPALR
- Driver behaviour: NRPA zero bias, time budget, restarts, determinism
"""

import math
from unittest.mock import patch

import numpy as np
import pytest

from nrpa.engine import (Algorithm, ConfigurationError, NestedSearch, PlayoutResult, SearchConfig,
                         make_rng, move_probabilities, run_search, softmax)
from nrpa.policy import Policy
from nrpa.problem import ContractViolation, DeadEndError, Problem

E = math.e
P_HEAVY = E / (E + 1)  # 0.731059...


# ---------------------------------------------------------------------------
# Toy problems
# ---------------------------------------------------------------------------

class _ChainProblem(Problem):
    """Fixed-depth tree: `width` moves at every step, state = tuple of moves so far."""

    name = 'chain'

    def __init__(self, depth=3, width=2, constant_score=None, bias_value=0.0):
        self.depth = depth
        self.width = width
        self.constant_score = constant_score
        self.bias_value = bias_value

    def root(self):
        return ()

    def legal_moves(self, state):
        return list(range(self.width))

    def play(self, state, move):
        return state + (move,)

    def is_terminal(self, state):
        return len(state) >= self.depth

    def score(self, state):
        if self.constant_score is not None:
            return self.constant_score
        return sum(state)

    def code(self, state, move):
        return len(state) * self.width + move

    def bias(self, state, move):
        return self.bias_value * move


class _DeadEndProblem(_ChainProblem):
    """Runs out of moves after one step without being terminal."""

    def __init__(self, dead_end=None):
        super().__init__(depth=5, width=2)
        self.dead_end = dead_end

    def legal_moves(self, state):
        return [] if state else [0, 1]

    def dead_end_score(self, state):
        return self.dead_end


class _RaisingBiasProblem(_ChainProblem):
    def bias(self, state, move):
        raise AssertionError('bias must not be queried under NRPA')


def _search(problem=None, **overrides):
    config = SearchConfig(**{'level': 1, 'iterations': 10, 'seed': 7, **overrides})
    return NestedSearch(problem or _ChainProblem(), config)


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------

class TestMoveProbabilities:
    """Softmax over policy weight plus bias, computed with the max subtracted."""

    def test_symmetric_moves_are_uniform(self):
        problem = _ChainProblem(width=2)
        probs = move_probabilities(Policy(), (), [0, 1], problem.code, problem.bias)
        assert probs.tolist() == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_single_move_has_probability_one(self):
        problem = _ChainProblem(width=1)
        policy = Policy({0: 42.0})
        probs = move_probabilities(policy, (), [0], problem.code, lambda s, m: -7.0)
        assert probs.tolist() == [1.0]

    def test_weight_one_against_zero(self):
        problem = _ChainProblem(width=2)
        probs = move_probabilities(Policy({0: 1.0}), (), [0, 1], problem.code, problem.bias)
        assert probs[0] == pytest.approx(0.731059, abs=1e-6)
        assert probs[1] == pytest.approx(0.268941, abs=1e-6)

    def test_bias_adds_to_weight(self):
        problem = _ChainProblem(width=2, bias_value=-1.0)
        # w=(0,0), beta=(0,-1) is the same distribution as w=(1,0)
        probs = move_probabilities(Policy(), (), [0, 1], problem.code, problem.bias)
        assert probs[0] == pytest.approx(P_HEAVY, abs=1e-12)

    def test_large_weights_do_not_overflow(self):
        probs = softmax([1000.0, 999.0, -1000.0])
        assert np.all(np.isfinite(probs))
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            values = rng.normal(0, 5, size=int(rng.integers(1, 10)))
            shifted = softmax(values + rng.normal(0, 50))
            assert np.allclose(softmax(values), shifted, atol=1e-12, rtol=0)

    def test_normalization_on_random_logits(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            probs = softmax(rng.normal(0, 20, size=int(rng.integers(1, 50))))
            assert abs(probs.sum() - 1.0) <= 1e-12
            assert np.all((probs >= 0) & (probs <= 1))

    def test_empty_move_list_is_a_dead_end(self):
        problem = _ChainProblem()
        with pytest.raises(DeadEndError):
            move_probabilities(Policy(), (), [], problem.code, problem.bias)


class TestPlayout:
    """A playout samples from the softmax and never draws for a forced move."""

    def test_forced_trajectory_ignores_policy_and_rng(self):
        problem = _ChainProblem(depth=4, width=1)
        search = _search(problem)
        result = search.playout(Policy({0: 5.0, 1: -3.0}))
        assert result == PlayoutResult(0, (0, 0, 0, 0))
        assert search.playouts == 1

    def test_playout_sequence_replays_to_reported_score(self):
        problem = _ChainProblem(depth=6, width=3)
        search = _search(problem)
        for _ in range(50):
            result = search.playout(Policy())
            state = problem.root()
            for move in result.sequence:
                state = problem.play(state, move)
            assert problem.score(state) == result.score

    def test_empirical_frequency_matches_softmax(self):
        problem = _ChainProblem(depth=1, width=2)
        search = _search(problem, seed=0)
        policy = Policy({0: 1.0})
        trials = 100_000
        hits = sum(1 for _ in range(trials) if search.playout(policy).sequence[0] == 0)
        standard_error = math.sqrt(P_HEAVY * (1 - P_HEAVY) / trials)
        assert abs(hits / trials - P_HEAVY) <= 3 * standard_error

    def test_dead_end_without_score_is_an_error(self):
        with pytest.raises(DeadEndError):
            _search(_DeadEndProblem()).playout(Policy())

    def test_dead_end_score_ends_the_playout(self):
        result = _search(_DeadEndProblem(dead_end=-5)).playout(Policy())
        assert result.score == -5
        assert len(result.sequence) == 1


class TestAdapt:
    """Adapt returns a new policy moved toward the sequence; probabilities come from
    the policy as it was before the call."""

    def test_hand_computed_update(self):
        problem = _ChainProblem(depth=1, width=2)
        search = _search(problem, alpha=1.0)
        adapted = search.adapt(Policy(), [0])
        assert adapted.get(problem.code((), 0)) == pytest.approx(0.5, abs=1e-12)
        assert adapted.get(problem.code((), 1)) == pytest.approx(-0.5, abs=1e-12)

    def test_zero_alpha_leaves_policy_unchanged(self):
        policy = Policy({0: 0.3, 3: -1.2})
        adapted = _search(alpha=0.0).adapt(policy, [1, 0, 1])
        assert adapted == policy

    def test_forced_moves_have_zero_gradient(self):
        policy = Policy({0: 2.0})
        adapted = _search(_ChainProblem(depth=3, width=1)).adapt(policy, [0, 0, 0])
        assert adapted == policy

    def test_input_policy_is_not_modified(self):
        policy = Policy({0: 0.25})
        _search().adapt(policy, [1, 1, 1])
        assert dict(policy.items()) == {0: 0.25}

    def test_probabilities_come_from_the_unmodified_policy(self):
        # Both steps share one code, so a sequential update would change step 2's probabilities
        class _SharedCode(_ChainProblem):
            def code(self, state, move):
                return move

        problem = _SharedCode(depth=2, width=2)
        adapted = _search(problem, alpha=1.0).adapt(Policy(), [0, 0])
        assert adapted.get(0) == pytest.approx(1.0, abs=1e-12)
        assert adapted.get(1) == pytest.approx(-1.0, abs=1e-12)

    def test_unreplayable_sequence_is_a_contract_violation(self):
        with pytest.raises(ContractViolation) as excinfo:
            _search(_ChainProblem(width=2)).adapt(Policy(), [0, 5])
        assert excinfo.value.step == 1

    def test_reinforces_played_move_and_sums_to_zero(self):
        problem = _ChainProblem(depth=4, width=5)
        search = _search(problem, alpha=0.7)
        rng = np.random.default_rng(5)
        for _ in range(200):
            policy = Policy({code: float(rng.normal()) for code in range(20)})
            sequence = [int(move) for move in rng.integers(0, 5, size=4)]
            adapted = search.adapt(policy, sequence)
            for step, played in enumerate(sequence):
                codes = [step * 5 + move for move in range(5)]
                deltas = [adapted.get(code) - policy.get(code) for code in codes]
                assert abs(sum(deltas)) <= 1e-9
                assert deltas[played] > 0


class TestGnrpa:
    """Fixed-iteration nesting runs exactly N^level playouts."""

    def test_level_zero_is_one_playout(self):
        search = _search(level=0)
        result = search.gnrpa(0, Policy())
        assert search.playouts == 1
        assert search.best == result

    @pytest.mark.parametrize('level,iterations', [(1, 5), (2, 7), (3, 4), (2, 3)])
    def test_playout_count_law(self, level, iterations):
        search = _search(_ChainProblem(depth=3, width=2), level=level, iterations=iterations)
        search.gnrpa(level, Policy())
        assert search.playouts == iterations ** level

    def test_equal_score_replaces_sequence(self):
        search = _search(iterations=3)
        results = [PlayoutResult(1, ()), PlayoutResult(1, (0,)), PlayoutResult(0, (1,))]
        with patch.object(search, 'playout', side_effect=results):
            with patch.object(search, 'adapt', side_effect=lambda policy, seq: policy):
                best = search.gnrpa(1, Policy())
        assert best == PlayoutResult(1, (0,))

    def test_caller_policy_is_isolated(self):
        policy = Policy({1: 0.5})
        _search(level=2, iterations=4).gnrpa(2, policy)
        assert dict(policy.items()) == {1: 0.5}

    def test_finds_chain_optimum(self):
        problem = _ChainProblem(depth=5, width=3)
        result, _ = run_search(problem, SearchConfig(level=2, iterations=20, seed=1))
        assert result.score == 10


class TestGnrpalr:
    """Equal scores count as repetitions, a strictly better score resets the count,
    and a level stops once the count exceeds R."""

    @pytest.mark.parametrize('repetitions', [0, 1, 5])
    def test_repetition_law_on_constant_scores(self, repetitions):
        problem = _ChainProblem(depth=3, width=2, constant_score=0)
        search = _search(problem, algorithm=Algorithm.GNRPALR, repetitions=repetitions)
        search.gnrpalr(1, Policy())
        assert search.playouts == repetitions + 2

    @pytest.mark.parametrize('improvements,repetitions', [(1, 0), (4, 0), (4, 3), (7, 5)])
    def test_improvements_reset_the_counter(self, improvements, repetitions):
        search = _search(algorithm=Algorithm.GNRPALR, repetitions=repetitions)
        scores = list(range(1, improvements + 1))
        calls = []

        def _stub(policy):
            value = scores[len(calls)] if len(calls) < len(scores) else improvements + 1
            calls.append(value)
            return PlayoutResult(value, ())

        with patch.object(search, 'playout', side_effect=_stub):
            best = search.gnrpalr(1, Policy())
        assert len(calls) == improvements + repetitions + 2
        assert best.score == improvements + 1

    def test_lower_scores_do_not_count(self):
        search = _search(algorithm=Algorithm.GNRPALR, repetitions=0)
        results = [PlayoutResult(5, ()), PlayoutResult(1, ()), PlayoutResult(2, ()), PlayoutResult(5, (1,))]
        with patch.object(search, 'playout', side_effect=results):
            best = search.gnrpalr(1, Policy())
        # The repeated 5 stops the loop but keeps the first sequence
        assert best == PlayoutResult(5, ())

    def test_iteration_cap_bounds_the_loop(self):
        search = _search(algorithm=Algorithm.GNRPALR, repetitions=0, iteration_cap=10)
        counter = iter(range(1, 1000))
        with patch.object(search, 'playout', side_effect=lambda policy: PlayoutResult(next(counter), ())):
            best = search.gnrpalr(1, Policy())
        assert best.score == 10


class TestRunSearch:
    """The driver: bias selection, the time budget, anytime records and restarts."""

    def test_nrpa_never_queries_the_bias(self):
        problem = _RaisingBiasProblem(depth=3, width=3)
        config = SearchConfig(algorithm=Algorithm.NRPA, level=1, iterations=5, seed=2)
        search = NestedSearch(problem, config)
        assert all(search.bias((), move) == 0 for move in range(3))
        result, _ = search.run()
        assert result.score >= 0

    def test_gnrpa_uses_scaled_bias(self):
        problem = _ChainProblem(bias_value=1.0)
        search = NestedSearch(problem, SearchConfig(bias_scale=2.5))
        assert search.bias((), 2) == pytest.approx(5.0)

    def test_zero_budget_stops_after_one_playout(self):
        config = SearchConfig(level=2, iterations=50, seed=4, time_budget=0.0)
        search = NestedSearch(_ChainProblem(depth=4, width=3), config)
        result, records = search.run()
        assert search.playouts == 1
        assert records[0].playouts == 1
        assert result == search.best

    def test_budget_is_honoured(self):
        config = SearchConfig(level=3, iterations=100, seed=4, time_budget=0.2)
        search = NestedSearch(_ChainProblem(depth=8, width=4), config)
        search.run()
        assert search.playouts < 100 ** 3
        assert search.elapsed() < 5.0

    def test_same_seed_same_trace(self):
        problem = _ChainProblem(depth=6, width=4)
        config = SearchConfig(algorithm=Algorithm.GNRPALR, level=2, repetitions=2, seed=99)
        first, first_records = run_search(problem, config)
        second, second_records = run_search(problem, config)
        assert first.sequence == second.sequence
        assert [(r.best_score, r.playouts) for r in first_records] == \
               [(r.best_score, r.playouts) for r in second_records]

    def test_records_strictly_improve(self):
        _, records = run_search(_ChainProblem(depth=8, width=4), SearchConfig(level=2, iterations=15, seed=3))
        scores = [record.best_score for record in records]
        elapsed = [record.elapsed_seconds for record in records]
        assert scores == sorted(set(scores))
        assert elapsed == sorted(elapsed)

    def test_improvement_callback(self):
        events = []
        run_search(_ChainProblem(depth=5, width=3), SearchConfig(level=1, iterations=30, seed=8),
                   on_improvement=lambda elapsed, score: events.append(score))
        assert events == sorted(set(events))
        assert events

    def test_restart_runs_until_budget(self):
        problem = _ChainProblem(depth=3, width=2, constant_score=0)
        config = SearchConfig(algorithm=Algorithm.GNRPALR, level=1, repetitions=0, seed=1,
                              time_budget=0.1, restart=True)
        search = NestedSearch(problem, config)
        result, _ = search.run()
        # A single top-level pass would stop after 2 playouts
        assert search.playouts > 2
        assert result.score == 0

    def test_rng_is_pcg64(self):
        assert isinstance(make_rng(1).bit_generator, np.random.PCG64)
        assert make_rng(5).random() == make_rng(5).random()


class TestSearchConfig:

    @pytest.mark.parametrize('overrides', [
        {'level': -1},
        {'iterations': 0},
        {'algorithm': 'gnrpalr', 'repetitions': -1},
        {'alpha': -0.5},
        {'alpha': float('nan')},
        {'iteration_cap': 0},
        {'seed': -1},
        {'seed': 1 << 64},
        {'time_budget': -1.0},
        {'restart': True},
    ])
    def test_invalid_configurations_are_rejected(self, overrides):
        with pytest.raises(ConfigurationError):
            SearchConfig(**overrides).validate()

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigurationError):
            SearchConfig(algorithm='mcts')

    def test_algorithm_from_string(self):
        assert SearchConfig(algorithm='GNRPALR').algorithm is Algorithm.GNRPALR
        assert SearchConfig(algorithm='gnrpalr').uses_repetitions
