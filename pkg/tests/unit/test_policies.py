"""
Unit tests for admissible policies and path simulation
"""
import numpy as np
import pytest

from backend.app.core.policies import FixedActionPolicy, UniformRandomPolicy, make_policy
from backend.app.core.simulation import MonteCarlo, mean_and_se, sample_rows, simulate
from backend.app.workers.partition_pool import Partition


@pytest.mark.unit
@pytest.mark.fast
class TestPolicies:
    """Test suite for the solver-free policies"""

    def test_fixed_action(self, canonical_model):
        actions = FixedActionPolicy(1).actions_for(canonical_model, np.array([[0, 1, 1], [1, 0, 0]]))
        assert actions.tolist() == [[1, 1, 1], [1, 1, 1]]

    def test_fixed_action_out_of_range(self, canonical_model):
        with pytest.raises(ValueError):
            FixedActionPolicy(5).actions_for(canonical_model, np.array([[0]]))

    def test_uniform_random_is_seeded(self, three_state_model):
        """Test that the same seed always yields the same history-dependent policy"""
        sequences = np.array([[0, 1, 0, 1], [1, 1, 0, 0], [0, 0, 0, 0]])
        first = UniformRandomPolicy(seed=3).actions_for(three_state_model, sequences)
        second = UniformRandomPolicy(seed=3).actions_for(three_state_model, sequences)
        np.testing.assert_array_equal(first, second)
        assert first.min() >= 0 and first.max() < three_state_model.num_actions

    def test_uniform_random_depends_on_history_only(self, three_state_model):
        """Test that equal prefixes give equal actions"""
        sequences = np.array([[0, 1, 0, 1], [0, 1, 0, 0]])
        actions = UniformRandomPolicy(seed=8).actions_for(three_state_model, sequences)
        np.testing.assert_array_equal(actions[0, :3], actions[1, :3])

    def test_make_policy(self):
        assert isinstance(make_policy("fixed_action", action=1), FixedActionPolicy)
        assert make_policy("uniform_random", seed=4).seed == 4
        with pytest.raises(ValueError):
            make_policy("solve")


@pytest.mark.unit
@pytest.mark.fast
class TestSimulation:
    """Test suite for vectorized path simulation"""

    def test_sample_rows(self):
        cdf = np.array([[0.2, 1.0], [0.2, 1.0], [0.5, 0.9999999999999999]])
        assert sample_rows(cdf, np.array([0.1, 0.2, 0.99999999999999999])).tolist() == [0, 1, 1]

    def test_step_records(self, canonical_model):
        rng = Partition(index=0, size=50, seed=1).generator()
        records = list(simulate(canonical_model, [0.5, 0.5], FixedActionPolicy(0), 4, rng, 50,
                                tracked=[[0.5, 0.5]]))
        assert [r.t for r in records] == [0, 1, 2, 3, 4]
        for record in records:
            assert record.states.shape == (50,)
            np.testing.assert_allclose(record.tracked_filters[0].sum(axis=1), 1.0, atol=1e-12)
            np.testing.assert_array_equal(record.costs, canonical_model.cost_array[record.states, 0])

    def test_frozen_chain_keeps_state(self, span_model):
        rng = Partition(index=0, size=20, seed=2).generator()
        records = list(simulate(span_model, [0.5, 0.5], FixedActionPolicy(0), 5, rng, 20))
        for record in records:
            np.testing.assert_array_equal(record.states, records[0].states)
            np.testing.assert_array_equal(record.observations, record.states)

    def test_policies_share_random_numbers(self, canonical_model):
        """Test that the draw order does not depend on the policy"""
        first = list(simulate(canonical_model, [0.5, 0.5], FixedActionPolicy(0), 3,
                              Partition(0, 30, 5).generator(), 30))
        second = list(simulate(canonical_model, [0.5, 0.5], FixedActionPolicy(1), 3,
                               Partition(0, 30, 5).generator(), 30))
        # T does not depend on the action here, so the state paths coincide
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.states, b.states)

    def test_monte_carlo_needs_two_samples(self):
        with pytest.raises(ValueError):
            MonteCarlo(samples=1, seed=0)

    def test_mean_and_se(self):
        mean, se = mean_and_se(np.array([1.0, 2.0, 3.0, 4.0]))
        assert mean == pytest.approx(2.5)
        assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
