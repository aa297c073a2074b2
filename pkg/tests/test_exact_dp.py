"""Exact DP over architecture sequences: piece bookkeeping, oracles, guards."""

import numpy as np
import pytest

from archtune import (
    LinearNetworkSystem,
    PiecewiseQuadratic,
    QuadraticPiece,
    architecture_subsets,
    brute_force_value,
    dp_backward,
    evaluate,
)
from archtune.synthesis import lqr_backward, riccati_step

from conftest import canonical_system, random_psd


def scalar_pool_system(a, b_values, w=0.0):
    """n = 1 plant with one candidate input direction per pool entry."""
    pool = np.array([list(b_values)], dtype=float)
    return LinearNetworkSystem(A=np.array([[a]]), actuator_pool=pool,
                               sensor_pool=np.eye(1), W=np.array([[w]]))


class TestArchitectureSubsets:
    def test_lexicographic_order(self):
        assert architecture_subsets(3, 1) == [(0,), (1,), (2,)]
        assert architecture_subsets(4, 2) == [(0, 1), (0, 2), (0, 3),
                                              (1, 2), (1, 3), (2, 3)]

    def test_full_and_empty_cardinality(self):
        assert architecture_subsets(3, 3) == [(0, 1, 2)]
        assert architecture_subsets(3, 0) == [()]


class TestDpStructure:
    def test_zero_horizon_terminal_only(self):
        sys_ = scalar_pool_system(2.0, [1.0])
        stages = dp_backward(sys_, np.eye(1), 1.0, 3.0 * np.eye(1), np.zeros((1, 1)),
                             T=0, K_cardinality=1)
        assert len(stages) == 1
        (piece,) = stages[0].pieces
        assert piece.P[0, 0] == 3.0
        assert piece.q == 0.0
        assert piece.provenance is None

    def test_piece_counts_grow_by_pool_size(self):
        sys_ = canonical_system(0.5 * np.eye(2), W=np.eye(2))
        stages = dp_backward(sys_, np.eye(2), 1.0, np.eye(2), np.eye(2),
                             T=3, K_cardinality=1)
        counts = [len(s.pieces) for s in stages]
        assert counts == [8, 4, 2, 1]

    def test_scalar_two_pool_pieces(self):
        # a = 2, candidate gains 1 and 0.1, unit weights, one step, no noise:
        # lineage values 3 and 5 - 0.04/1.01
        sys_ = scalar_pool_system(2.0, [1.0, 0.1])
        stages = dp_backward(sys_, np.eye(1), 1.0, np.eye(1), np.zeros((1, 1)),
                             T=1, K_cardinality=1)
        vals = sorted(float(p.P[0, 0]) for p in stages[0].pieces)
        assert vals[0] == pytest.approx(3.0, abs=1e-12)
        assert vals[1] == pytest.approx(5.0 - 0.04 / 1.01, abs=1e-12)
        value, prov = evaluate(stages[0], np.array([2.0]))
        assert value == pytest.approx(12.0, abs=1e-10)
        assert prov == 0

    def test_single_arch_reduces_to_lqr(self, rng):
        n, T = 3, 4
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, 1))
        W = random_psd(rng, n)
        sys_ = LinearNetworkSystem(A=A, actuator_pool=B, sensor_pool=np.eye(n), W=W)
        Q = random_psd(rng, n, ridge=0.1)
        Q_T = random_psd(rng, n)
        stages = dp_backward(sys_, Q, 1.0, Q_T, W, T=T, K_cardinality=1)
        sched = lqr_backward(A, B, Q, np.eye(1), Q_T, T)
        offset = 0.0
        for t in range(T, -1, -1):
            (piece,) = stages[t].pieces
            assert np.allclose(piece.P, sched.P[t], atol=1e-9)
            assert piece.q == pytest.approx(offset, abs=1e-9)
            if t > 0:
                offset += float(np.trace(sched.P[t] @ W))

    def test_noise_offsets_accumulate(self):
        # stable scalar with no control authority: P_t follows a^2 P + Q and
        # q_t sums the trace offsets of the later stages
        sys_ = scalar_pool_system(0.5, [0.0], w=2.0)
        stages = dp_backward(sys_, np.eye(1), 1.0, np.eye(1), np.array([[2.0]]),
                             T=2, K_cardinality=1)
        # P: 1 -> 1.25 -> 1.3125; q: 0 -> 2*1 -> 2*1 + 2*1.25
        assert stages[1].pieces[0].P[0, 0] == pytest.approx(1.25)
        assert stages[1].pieces[0].q == pytest.approx(2.0)
        assert stages[0].pieces[0].P[0, 0] == pytest.approx(1.3125)
        assert stages[0].pieces[0].q == pytest.approx(4.5)


class TestEvaluate:
    def test_zero_state_picks_smallest_offset(self):
        pwq = PiecewiseQuadratic((QuadraticPiece(np.eye(2), 5.0, 0),
                                  QuadraticPiece(2 * np.eye(2), 1.0, 1),
                                  QuadraticPiece(3 * np.eye(2), 1.0, 2)))
        value, prov = evaluate(pwq, np.zeros(2))
        assert value == 1.0
        assert prov == 1          # tie on q resolves to the earlier piece

    def test_crossing_pieces_switch_minimizer(self):
        # piece 0 wins near the origin, piece 1 wins far out
        pwq = PiecewiseQuadratic((QuadraticPiece(4 * np.eye(1), 0.0, 7),
                                  QuadraticPiece(np.eye(1), 3.0, 9)))
        assert evaluate(pwq, np.array([0.5]))[1] == 7
        assert evaluate(pwq, np.array([10.0]))[1] == 9
        value, _ = evaluate(pwq, np.array([1.0]))
        assert value == pytest.approx(4.0)


def _random_instance(rng, n, M, K, T):
    A = rng.standard_normal((n, n)) * 0.9
    pool = rng.standard_normal((n, M))
    sys_ = LinearNetworkSystem(A=A, actuator_pool=pool, sensor_pool=np.eye(n),
                               W=np.zeros((n, n)))
    Q = random_psd(rng, n, ridge=0.05)
    Q_T = random_psd(rng, n)
    W = random_psd(rng, n, scale=0.3)
    return sys_, Q, Q_T, W


class TestOracleAgreement:
    def test_dp_matches_brute_force(self, rng):
        for trial in range(4):
            sys_, Q, Q_T, W = _random_instance(rng, n=2, M=3, K=1, T=3)
            stages = dp_backward(sys_, Q, 1.0, Q_T, W, T=3, K_cardinality=1)
            for _ in range(25):
                x = rng.standard_normal(2) * 3
                dp_val, _ = evaluate(stages[0], x)
                bf_val = brute_force_value(sys_, Q, 1.0, Q_T, W, T=3,
                                           K_cardinality=1, x=x)
                assert dp_val == pytest.approx(bf_val, abs=1e-8)

    def test_dp_matches_brute_force_pairs(self, rng):
        sys_, Q, Q_T, W = _random_instance(rng, n=2, M=3, K=2, T=2)
        stages = dp_backward(sys_, Q, 1.0, Q_T, W, T=2, K_cardinality=2)
        for _ in range(10):
            x = rng.standard_normal(2)
            dp_val, _ = evaluate(stages[0], x)
            bf_val = brute_force_value(sys_, Q, 1.0, Q_T, W, T=2,
                                       K_cardinality=2, x=x)
            assert dp_val == pytest.approx(bf_val, abs=1e-8)

    def test_one_step_equals_per_arch_minimum(self, rng):
        sys_, Q, Q_T, W = _random_instance(rng, n=3, M=4, K=2, T=1)
        stages = dp_backward(sys_, Q, 2.0, Q_T, W, T=1, K_cardinality=2)
        for _ in range(10):
            x = rng.standard_normal(3)
            best = np.inf
            for s in architecture_subsets(4, 2):
                B = sys_.actuator_pool[:, list(s)]
                _, P = riccati_step(sys_.A, B, Q, 2.0 * np.eye(2), Q_T)
                best = min(best, float(x @ P @ x) + float(np.trace(Q_T @ W)))
            assert evaluate(stages[0], x)[0] == pytest.approx(best, abs=1e-9)

    def test_dp_lower_bounds_fixed_sequences(self, rng):
        sys_, Q, Q_T, W = _random_instance(rng, n=2, M=3, K=1, T=4)
        stages = dp_backward(sys_, Q, 1.0, Q_T, W, T=4, K_cardinality=1)
        archs = architecture_subsets(3, 1)
        x = rng.standard_normal(2) * 2
        dp_val, _ = evaluate(stages[0], x)
        for _ in range(100):
            seq = [archs[int(rng.integers(0, 3))] for _ in range(4)]
            P = Q_T
            offset = 0.0
            for s in reversed(seq):
                offset += float(np.trace(P @ W))
                B = sys_.actuator_pool[:, list(s)]
                _, P = riccati_step(sys_.A, B, Q, np.eye(1), P, check=False)
            assert dp_val <= float(x @ P @ x) + offset + 1e-9


class TestHomogeneity:
    def test_noise_free_value_scales_quadratically(self, rng):
        sys_, Q, Q_T, _ = _random_instance(rng, n=2, M=3, K=1, T=3)
        W0 = np.zeros((2, 2))
        stages = dp_backward(sys_, Q, 1.0, Q_T, W0, T=3, K_cardinality=1)
        x = rng.standard_normal(2)
        base, prov = evaluate(stages[0], x)
        for alpha in (0.5, 2.0, 7.0):
            value, prov_a = evaluate(stages[0], alpha * x)
            assert value == pytest.approx(alpha ** 2 * base, rel=1e-12)
            assert prov_a == prov


class TestPruning:
    def test_pruned_dp_preserves_values(self, rng):
        sys_, Q, Q_T, W = _random_instance(rng, n=2, M=3, K=1, T=3)
        plain = dp_backward(sys_, Q, 1.0, Q_T, W, T=3, K_cardinality=1)
        pruned = dp_backward(sys_, Q, 1.0, Q_T, W, T=3, K_cardinality=1, prune=True)
        assert len(pruned[0].pieces) <= len(plain[0].pieces)
        for _ in range(50):
            x = rng.standard_normal(2) * 4
            assert evaluate(pruned[0], x)[0] == pytest.approx(
                evaluate(plain[0], x)[0], abs=1e-10)

    def test_identical_pieces_collapse(self):
        # two identical pool columns give duplicate lineages; pruning keeps one
        sys_ = scalar_pool_system(2.0, [1.0, 1.0])
        pruned = dp_backward(sys_, np.eye(1), 1.0, np.eye(1), np.zeros((1, 1)),
                             T=1, K_cardinality=1, prune=True)
        assert len(pruned[0].pieces) == 1
        assert pruned[0].pieces[0].provenance == 0


class TestGuards:
    def test_piece_guard(self):
        M = 13
        sys_ = LinearNetworkSystem(A=np.eye(1), actuator_pool=np.ones((1, M)),
                                   sensor_pool=np.eye(1), W=np.zeros((1, 1)))
        with pytest.raises(ValueError, match="piece count"):
            dp_backward(sys_, np.eye(1), 1.0, np.eye(1), np.zeros((1, 1)),
                        T=2, K_cardinality=6)

    def test_sequence_guard(self):
        sys_ = canonical_system(np.eye(2), W=np.zeros((2, 2)))
        with pytest.raises(ValueError, match="sequence count"):
            brute_force_value(sys_, np.eye(2), 1.0, np.eye(2), np.zeros((2, 2)),
                              T=17, K_cardinality=1, x=np.ones(2))

    def test_negative_horizon(self):
        sys_ = scalar_pool_system(1.0, [1.0])
        with pytest.raises(ValueError):
            dp_backward(sys_, np.eye(1), 1.0, np.eye(1), np.zeros((1, 1)),
                        T=-1, K_cardinality=1)

    def test_non_psd_inputs_rejected(self):
        sys_ = scalar_pool_system(1.0, [1.0])
        with pytest.raises(ValueError):
            dp_backward(sys_, -np.eye(1), 1.0, np.eye(1), np.zeros((1, 1)),
                        T=1, K_cardinality=1)
