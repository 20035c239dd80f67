"""
Integration tests: filter recursion against brute force, and stability certification
against the contraction envelope on fixtures and generated models
"""
import numpy as np
import pytest

from backend.app.config.tolerances import ENUMERATION_AGREEMENT, OBSERVABILITY_RESIDUAL
from backend.app.core.contraction import contraction_report, per_step_ratios
from backend.app.core.filter import enumeration_oracle, observation_tree, run_filter
from backend.app.core.metrics import relative_entropy, stability_trace, tv_distance, tv_martingale_identity_check
from backend.app.core.model import PomdpModel
from backend.app.core.observability import approximate_g, observability_report
from backend.app.core.policies import FixedActionPolicy, UniformRandomPolicy
from backend.app.core.simulation import Enumerate, MonteCarlo
from tests.conftest import load_fixture, random_model, random_stochastic, stable_models

# |X| * |Y| <= 9 keeps (|X||Y|)^7 state-observation paths under the enumeration limit
ORACLE_SHAPES = [(2, 2, 1), (2, 2, 3), (2, 3, 2), (3, 2, 2), (3, 3, 3), (2, 4, 2), (4, 2, 1)]

STABLE_FIXTURES = ["canonical", "three_state", "observable_stable", "uniform_mixing"]


def _full_support_pair(num_states: int, seed: int):
    rng = np.random.default_rng(seed)
    mu = rng.dirichlet(np.ones(num_states))
    nu = 0.05 / num_states + 0.95 * rng.dirichlet(np.ones(num_states))
    return mu / mu.sum(), nu / nu.sum()


def _certification_models():
    named = [(name, load_fixture(name)) for name in STABLE_FIXTURES]
    generated = [(f"generated-{i}", model) for i, model in enumerate(stable_models(10))]
    return named + generated


# ============================================================================
# Oracle Equivalence
# ============================================================================

@pytest.mark.integration
@pytest.mark.slow
class TestOracleEquivalence:
    """Test that the recursive filter reproduces brute-force conditional laws"""

    @pytest.mark.parametrize("index", range(21))
    def test_random_model_horizon_six(self, index):
        num_states, num_obs, num_actions = ORACLE_SHAPES[index % len(ORACLE_SHAPES)]
        model = random_model(500 + index, num_states, num_obs, num_actions)
        prior, _ = _full_support_pair(num_states, index)
        policy = UniformRandomPolicy(seed=index)

        oracle = enumeration_oracle(model, prior, policy, 6)
        last = list(observation_tree(model, prior, policy, 6))[-1]

        positive = {seq: entry for seq, entry in oracle.items() if entry.probability > 0.0}
        assert last.size == len(positive)
        for seq, prob, filt in zip(last.sequences, last.probabilities, last.filters):
            entry = positive[tuple(int(y) for y in seq)]
            assert abs(prob - entry.probability) <= 1e-12
            assert np.max(np.abs(filt - entry.filter)) <= 1e-12

        # The scalar recursion on a sample of histories
        sequences = np.array(list(positive.keys()))[:: max(1, len(positive) // 40)]
        actions = policy.actions_for(model, sequences)
        for seq, acts in zip(sequences, actions):
            states = run_filter(model, prior, seq.tolist(), acts[:-1].tolist())
            assert np.max(np.abs(states[-1].filter.array - positive[tuple(seq)].filter)) <= 1e-12


# ============================================================================
# Contraction Certification
# ============================================================================

@pytest.mark.integration
@pytest.mark.slow
class TestContractionCertification:
    """Test that E||pi^mu_n - pi^nu_n||_TV stays below 2 alpha^n"""

    @pytest.mark.parametrize("name,model", _certification_models())
    def test_enumerated_trace(self, name, model):
        alpha = contraction_report(model).alpha
        assert alpha < 1.0, name
        mu, nu = _full_support_pair(model.num_states, 7)
        trace = stability_trace(model, mu, nu, UniformRandomPolicy(seed=3), 8, Enumerate())

        for row in trace.rows:
            assert row.e_tv <= 2.0 * alpha ** row.n + ENUMERATION_AGREEMENT, (name, row.n)
        for ratio in per_step_ratios(trace, alpha):
            assert ratio.within_alpha, (name, ratio)

    @pytest.mark.parametrize("name,model", _certification_models())
    def test_monte_carlo_trace(self, name, model):
        alpha = contraction_report(model).alpha
        mu, nu = _full_support_pair(model.num_states, 11)
        trace = stability_trace(model, mu, nu, FixedActionPolicy(0), 25, MonteCarlo(samples=100_000, seed=5))

        assert trace.samples == 100_000
        for row in trace.rows:
            assert row.e_tv <= 2.0 * alpha ** row.n + 3.0 * row.e_tv_se + ENUMERATION_AGREEMENT, (name, row.n)

    def test_canonical_distant_priors(self):
        """Test near-disjoint priors on the alpha = 0.85 fixture"""
        model = load_fixture("canonical")
        trace = stability_trace(model, [0.99, 0.01], [0.01, 0.99], FixedActionPolicy(1), 8, Enumerate())
        assert trace.alpha == pytest.approx(0.85)
        for row in trace.rows:
            assert row.e_tv <= row.envelope + ENUMERATION_AGREEMENT

    def test_observable_fixture_merges(self):
        model = load_fixture("observable_stable")
        mu, nu = [0.9, 0.1], [0.1, 0.9]
        trace = stability_trace(model, mu, nu, FixedActionPolicy(0), 8, Enumerate())
        assert trace.rows[-1].e_tv < 0.1 * tv_distance(mu, nu)

    def test_pinsker_column_on_exact_traces(self):
        model = load_fixture("three_state")
        trace = stability_trace(model, [0.6, 0.3, 0.1], [0.2, 0.3, 0.5], UniformRandomPolicy(seed=1), 6,
                                Enumerate())
        for row in trace.rows:
            assert row.e_tv <= row.pinsker_rhs + ENUMERATION_AGREEMENT


# ============================================================================
# Instability Witness
# ============================================================================

@pytest.mark.integration
class TestFrozenChain:
    """Test that an uninformative channel on an identity chain never forgets the prior"""

    def test_not_stable_and_not_observable(self):
        model = load_fixture("frozen")
        assert contraction_report(model).alpha == 1.0
        assert not observability_report(model).observable

    def test_distance_is_preserved(self):
        model = load_fixture("frozen")
        mu, nu = [0.8, 0.2], [0.3, 0.7]
        expected = tv_distance(mu, nu)

        exact = stability_trace(model, mu, nu, FixedActionPolicy(0), 8, Enumerate())
        sampled = stability_trace(model, mu, nu, FixedActionPolicy(0), 25, MonteCarlo(samples=1000, seed=0))
        for row in exact.rows + sampled.rows:
            assert row.e_tv == pytest.approx(expected, abs=1e-12)
        assert all(row.e_tv_se == pytest.approx(0.0, abs=1e-12) for row in sampled.rows)


# ============================================================================
# Martingale Identity and Pinsker
# ============================================================================

@pytest.mark.integration
class TestMartingaleIdentity:
    """Test the two enumerations of the expected predictor distance"""

    @pytest.mark.parametrize("name", ["canonical", "three_state", "observable_stable", "uniform_mixing",
                                      "frozen", "span_frozen"])
    def test_fixtures(self, name):
        model = load_fixture(name)
        mu, nu = _full_support_pair(model.num_states, 3)
        for n in range(5):
            check = tv_martingale_identity_check(model, mu, nu, UniformRandomPolicy(seed=n), n)
            assert check.gap <= ENUMERATION_AGREEMENT, (name, n, check)

    def test_generated_models(self):
        for model in stable_models(4):
            mu, nu = _full_support_pair(model.num_states, 9)
            check = tv_martingale_identity_check(model, mu, nu, FixedActionPolicy(0), 4)
            assert check.gap <= ENUMERATION_AGREEMENT


@pytest.mark.integration
def test_pinsker_on_random_pairs():
    """Test tv <= sqrt(2 D) on 10^4 seeded belief pairs"""
    rng = np.random.default_rng(2024)
    violations = 0
    for _ in range(10_000):
        size = int(rng.integers(2, 6))
        p = rng.dirichlet(np.full(size, 0.5))
        q = 1e-6 + rng.dirichlet(np.full(size, 0.5))
        q /= q.sum()
        if tv_distance(p, q) > np.sqrt(2.0 * relative_entropy(p, q)) + 1e-12:
            violations += 1
    assert violations == 0


# ============================================================================
# Observability
# ============================================================================

def _channel_model(seed: int) -> PomdpModel:
    rng = np.random.default_rng(seed)
    num_states = int(rng.integers(2, 5))
    num_obs = int(rng.integers(1, 6))
    observation = random_stochastic(rng, num_states, num_obs)
    if seed % 3 == 0 and num_states >= 2:
        observation[1] = observation[0]
    observation /= observation.sum(axis=1, keepdims=True)
    transition = np.stack([np.eye(num_states)])
    cost = np.zeros((num_states, 1))
    return PomdpModel.from_arrays(transition, observation, cost, 0.5)


@pytest.mark.integration
def test_rank_test_matches_chebyshev_fits():
    """Test observable iff every coordinate indicator has an exact fit, on 60 channels"""
    deficient = 0
    for seed in range(60):
        model = _channel_model(seed)
        report = observability_report(model)
        fits_exactly = all(
            approximate_g(model, indicator).residual <= OBSERVABILITY_RESIDUAL
            for indicator in np.eye(model.num_states)
        )
        assert report.observable == fits_exactly, seed
        deficient += not report.observable
    assert deficient >= 20
