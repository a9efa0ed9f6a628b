"""Unit tests for the per-round operations and the consensus loop.

The two bundled case studies are checked against traces executed by hand,
round by round, before the implementation existed; class indices follow the
fixture order N=0, S=1, V=2, F=3, Q=4.
"""

import random

import pytest

from posw.errors import BeliefError, CapExceededError, ConfigError, ProtocolError
from posw.protocol import (
    build_states,
    check_converged,
    check_early_stop,
    compute_global_best,
    derive_preference_order,
    has_probability_ties,
    initial_state,
    local_best,
    move_peer,
    probability_sum,
    resolve_output,
    run_consensus,
    tally,
)
from posw.types import (
    BeliefVector,
    ConsensusConfig,
    GlobalBestSet,
    VoteMessage,
)

N, S, V, F, Q = range(5)


def vec(*probs):
    return BeliefVector(tuple(probs))


def msgs(*label_prob_pairs):
    return tuple(VoteMessage(i, lab, p) for i, (lab, p) in enumerate(label_prob_pairs))


class TestPreferenceOrder:
    def test_descending_sort(self):
        assert derive_preference_order(vec(0.30, 0.10, 0.15, 0.25, 0.20)) == (N, F, Q, V, S)

    def test_all_tied_falls_back_to_index_order(self):
        assert derive_preference_order(vec(0.2, 0.2, 0.2, 0.2, 0.2)) == (0, 1, 2, 3, 4)

    def test_one_hot(self):
        assert derive_preference_order(vec(1.0, 0.0)) == (0, 1)

    def test_pairwise_comparison_oracle(self):
        # Independent check: consecutive entries are strictly decreasing in
        # probability, or equal with ascending indices.
        rng = random.Random(7)
        for _ in range(200):
            k = rng.randint(2, 8)
            raw = [rng.random() for _ in range(k)]
            total = sum(raw)
            belief = vec(*(x / total for x in raw))
            order = derive_preference_order(belief)
            assert sorted(order) == list(range(k))
            for a, b in zip(order, order[1:]):
                assert belief.probs[a] > belief.probs[b] or (
                    belief.probs[a] == belief.probs[b] and a < b
                )

    def test_seeded_shuffle_only_touches_tied_groups(self):
        belief = vec(0.4, 0.2, 0.2, 0.2)
        order = derive_preference_order(belief, random.Random(3))
        assert order[0] == 0
        assert sorted(order[1:]) == [1, 2, 3]

    def test_tie_detection(self):
        assert has_probability_ties(vec(0.3, 0.3, 0.4))
        assert not has_probability_ties(vec(0.5, 0.3, 0.2))


class TestLocalBest:
    def test_case2_edge4_picks_q(self, case2):
        state = initial_state(3, BeliefVector(tuple(case2[3])))
        assert local_best(state) == VoteMessage(3, Q, 0.40)

    def test_uniform_belief_lowest_index(self):
        state = initial_state(0, vec(0.2, 0.2, 0.2, 0.2, 0.2))
        assert local_best(state).label == 0

    def test_one_hot(self):
        state = initial_state(2, vec(0.0, 0.0, 0.0, 1.0, 0.0))
        assert local_best(state) == VoteMessage(2, F, 1.0)


class TestTally:
    def test_case1_first_round(self):
        counts = tally(msgs((N, 0.40), (N, 0.38), (V, 0.36), (Q, 0.35), (F, 0.33)))
        assert counts == {N: 2, V: 1, Q: 1, F: 1}
        assert sum(counts.values()) == 5

    def test_unanimity(self):
        assert tally(msgs((F, 0.9), (F, 0.8), (F, 0.7), (F, 0.6), (F, 0.5))) == {F: 5}

    def test_case2_second_round(self):
        counts = tally(msgs((N, 0.30), (N, 0.28), (F, 0.30), (F, 0.35), (Q, 0.30)))
        assert counts == {N: 2, F: 2, Q: 1}

    def test_duplicate_peer_rejected(self):
        bad = (VoteMessage(0, N, 0.5), VoteMessage(0, F, 0.5))
        with pytest.raises(ProtocolError):
            tally(bad)


class TestProbabilitySum:
    def test_two_votes(self):
        votes = msgs((F, 0.30), (F, 0.35), (N, 0.2))
        assert probability_sum(F, votes) == pytest.approx(0.65, abs=1e-12)

    def test_case2_n_sum(self):
        votes = msgs((N, 0.30), (N, 0.28), (Q, 0.3))
        assert probability_sum(N, votes) == pytest.approx(0.58, abs=1e-12)

    def test_no_votes_is_zero(self):
        assert probability_sum(V, msgs((N, 0.5), (F, 0.5))) == 0.0


class TestComputeGlobalBest:
    def test_unique_plurality(self):
        votes = msgs((N, 0.40), (N, 0.38), (V, 0.36), (Q, 0.35), (F, 0.33))
        best = compute_global_best(votes)
        assert best.labels == frozenset({N})
        assert best.max_votes == 2
        assert best.prob_sums is None

    def test_count_tie_broken_by_probability_sums(self):
        votes = msgs((N, 0.30), (N, 0.28), (F, 0.30), (F, 0.35), (Q, 0.30))
        best = compute_global_best(votes)
        assert best.labels == frozenset({F})
        assert best.prob_sums[N] == pytest.approx(0.58, abs=1e-12)
        assert best.prob_sums[F] == pytest.approx(0.65, abs=1e-12)
        assert best.prob_sums[F] > best.prob_sums[N]

    def test_symmetric_tie_keeps_both(self):
        votes = msgs((0, 0.5), (1, 0.5))
        best = compute_global_best(votes)
        assert best.labels == frozenset({0, 1})
        assert set(best.prob_sums) == {0, 1}

    def test_near_tie_within_tolerance(self):
        votes = (VoteMessage(0, 0, 0.5), VoteMessage(1, 1, 0.5 + 1e-12))
        assert compute_global_best(votes, tie_tolerance=1e-9).labels == frozenset({0, 1})
        assert compute_global_best(votes, tie_tolerance=0.0).labels == frozenset({1})

    def test_empty_round_rejected(self):
        with pytest.raises(ProtocolError):
            compute_global_best(())


class TestMovePeer:
    def test_case1_edge3_moves_to_q(self, case1):
        state = initial_state(2, BeliefVector(tuple(case1[2])))
        assert state.pref == (V, Q, N, F, S)
        moved = move_peer(state)
        assert moved.current_label == Q
        assert moved.current_prob == 0.30
        assert moved.cursor == 1

    def test_case2_edge5_moves_from_q_to_f(self, case2):
        state = move_peer(initial_state(4, BeliefVector(tuple(case2[4]))))
        assert state.pref == (S, Q, F, N, V)
        assert state.current_label == Q
        moved = move_peer(state)
        assert moved.current_label == F

    def test_exhaustion_wraps_to_local_best(self):
        state = initial_state(0, vec(0.5, 0.3, 0.2))
        for _ in range(2):
            state = move_peer(state)
        assert state.cursor == 2
        wrapped = move_peer(state)
        assert wrapped.cursor == 0
        assert wrapped.current_label == state.pref[0]
        assert wrapped.current_prob == 0.5


class TestConvergenceChecks:
    def test_all_inside(self):
        states = [initial_state(i, vec(0.9, 0.1)) for i in range(3)]
        assert check_converged(states, GlobalBestSet(frozenset({0}), 3))

    def test_case1_round_one_not_converged(self, case1):
        states = build_states(case1, ConsensusConfig())
        best = compute_global_best(tuple(local_best(s) for s in states))
        assert best.labels == frozenset({N})
        assert not check_converged(states, best)

    def test_plural_best_covers_split_peers(self):
        a = initial_state(0, vec(0.9, 0.1))
        b = initial_state(1, vec(0.1, 0.9))
        assert check_converged([a, b, a, b], GlobalBestSet(frozenset({0, 1}), 2))


class TestEarlyStop:
    def test_majority_found(self):
        assert check_early_stop({F: 4, Q: 1}, 5) == F

    def test_no_majority(self):
        assert check_early_stop({N: 2, F: 2, Q: 1}, 5) is None

    def test_exact_threshold(self):
        assert check_early_stop({0: 3, 1: 2}, 5) == 0


class TestResolveOutput:
    def test_singleton(self):
        assert resolve_output(GlobalBestSet(frozenset({F}), 4)) == F

    def test_plural_takes_lowest_index(self):
        assert resolve_output(GlobalBestSet(frozenset({2, 4}), 2)) == 2

    def test_case1_outcome(self):
        assert resolve_output(GlobalBestSet(frozenset({N}), 4)) == N


class TestRunConsensusGolden:
    """Hand-executed traces for the two bundled case studies."""

    def test_case_study_1(self, case1):
        result = run_consensus(case1)
        assert result.final_label == N
        assert result.rounds == 2
        assert result.early_stopped is True
        assert result.used_index_tie_break is False

        r1, r2 = result.trace
        assert r1.moved == ()
        assert [m.label for m in r1.messages] == [N, N, V, Q, F]
        assert r1.counts == {N: 2, V: 1, Q: 1, F: 1}
        assert r1.best.labels == frozenset({N})

        assert r2.moved == (2, 3, 4)  # the V, Q and F voters
        assert [m.label for m in r2.messages] == [N, N, Q, N, N]
        assert r2.counts == {N: 4, Q: 1}
        assert r2.best.labels == frozenset({N})

    def test_case_study_1_without_early_stop(self, case1):
        result = run_consensus(case1, ConsensusConfig(early_stop=False))
        assert result.final_label == N
        assert result.rounds == 3
        assert result.early_stopped is False
        assert [m.label for m in result.trace[2].messages] == [N] * 5

    def test_case_study_2(self, case2):
        result = run_consensus(case2)
        assert result.final_label == F
        assert result.rounds == 3
        assert result.early_stopped is True

        r1, r2, r3 = result.trace
        assert [m.label for m in r1.messages] == [N, N, V, Q, S]
        assert r1.best.labels == frozenset({N})

        # Count tie N/F resolved by summed confidence.
        assert r2.moved == (2, 3, 4)
        assert [m.label for m in r2.messages] == [N, N, F, F, Q]
        assert r2.counts == {N: 2, F: 2, Q: 1}
        assert r2.best.labels == frozenset({F})
        assert r2.best.prob_sums[N] == pytest.approx(0.58, abs=1e-12)
        assert r2.best.prob_sums[F] == pytest.approx(0.65, abs=1e-12)

        assert r3.moved == (0, 1, 4)
        assert [m.label for m in r3.messages] == [F, Q, F, F, F]
        assert r3.counts == {F: 4, Q: 1}

    def test_case_study_2_without_early_stop(self, case2):
        result = run_consensus(case2, ConsensusConfig(early_stop=False))
        assert result.final_label == F
        assert result.rounds == 4
        assert [m.label for m in result.trace[3].messages] == [F] * 5

    def test_unanimous_one_hot(self):
        beliefs = [[0.0, 0.0, 1.0, 0.0, 0.0]] * 5
        result = run_consensus(beliefs)
        assert result.final_label == V
        assert result.rounds == 1
        assert result.early_stopped is False


class TestRunConsensusValidation:
    def test_single_peer_rejected(self):
        with pytest.raises(BeliefError):
            run_consensus([[0.6, 0.4]])

    def test_mismatched_class_counts(self):
        with pytest.raises(BeliefError):
            run_consensus([[0.6, 0.4], [0.3, 0.3, 0.4]])

    def test_invalid_probabilities(self):
        with pytest.raises(BeliefError):
            run_consensus([[0.6, 0.6], [0.5, 0.5]])

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            run_consensus([[0.6, 0.4], [0.5, 0.5]], ConsensusConfig(round_cap_factor=0))
        with pytest.raises(ConfigError):
            run_consensus(
                [[0.6, 0.4], [0.5, 0.5]], ConsensusConfig(local_tie_policy="seeded-random")
            )

    def test_cap_error_carries_replay_payload(self):
        err = CapExceededError(
            "boom", beliefs=((0.6, 0.4), (0.5, 0.5)), config=ConsensusConfig(), rounds=8
        )
        payload = err.replay_payload()
        assert payload["rounds"] == 8
        assert payload["beliefs"] == [[0.6, 0.4], [0.5, 0.5]]
        assert payload["config"]["early_stop"] is True


class TestTiePolicies:
    def test_seeded_random_is_deterministic(self):
        beliefs = [[0.25, 0.25, 0.25, 0.25]] * 4
        cfg = ConsensusConfig(local_tie_policy="seeded-random", rng_seed=11)
        first = run_consensus(beliefs, cfg)
        second = run_consensus(beliefs, cfg)
        assert first == second

    def test_seeds_pick_different_local_bests(self):
        beliefs = [[0.25, 0.25, 0.25, 0.25]] * 4
        seen = set()
        for seed in range(20):
            cfg = ConsensusConfig(local_tie_policy="seeded-random", rng_seed=seed)
            seen.add(run_consensus(beliefs, cfg).final_label)
        assert len(seen) > 1

    def test_class_count_majority_basis(self):
        # Exploratory basis: a "majority" of K=3 is 2 votes, far below the
        # 4-of-6 peer majority, so the run stops earlier.
        beliefs = [[0.6, 0.3, 0.1]] * 3 + [[0.1, 0.6, 0.3]] * 2 + [[0.1, 0.3, 0.6]]
        default = run_consensus(beliefs, ConsensusConfig(early_stop_basis="peers"))
        loose = run_consensus(beliefs, ConsensusConfig(early_stop_basis="classes"))
        assert loose.rounds == 1
        assert loose.early_stopped is True
        assert loose.rounds < default.rounds
        assert loose.final_label == default.final_label == 0
