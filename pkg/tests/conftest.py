"""
Pytest configuration and shared fixtures for the filter stability toolkit tests
"""
import os
import sys
from pathlib import Path
from typing import Iterator, List

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Set test environment variables
os.environ["LOG_LEVEL"] = "WARNING"
os.environ["ENVIRONMENT"] = "test"
os.environ["MC_WORKERS"] = "1"

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "models"


# ============================================================================
# Model File Fixtures
# ============================================================================

@pytest.fixture
def fixture_dir() -> Path:
    """Directory holding the JSON model fixtures"""
    return FIXTURE_DIR


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.json"


def load_fixture(name: str):
    from backend.app.core.model import load_model

    return load_model(fixture_path(name))


@pytest.fixture
def canonical_model():
    """2-state model with delta(T) = 0.5, delta(Q) = 0.3 and alpha = 0.85"""
    return load_fixture("canonical")


@pytest.fixture
def frozen_model():
    """Identity T and uninformative Q: both filters stay at their priors"""
    return load_fixture("frozen")


@pytest.fixture
def mixing_model():
    """Every row of T uniform, so alpha = 0"""
    return load_fixture("uniform_mixing")


@pytest.fixture
def observable_model():
    """Sharp channel and fast mixing, alpha = 0.38"""
    return load_fixture("observable_stable")


@pytest.fixture
def span_model():
    """Frozen chain seen perfectly, c(0, .) = 0 and c(1, .) = 1, beta = 0.9"""
    return load_fixture("span_frozen")


@pytest.fixture
def flat_cost_model():
    """Canonical kernels with a state-independent cost"""
    return load_fixture("state_independent_cost")


@pytest.fixture
def three_state_model():
    return load_fixture("three_state")


# ============================================================================
# Generated Models
# ============================================================================

def random_stochastic(rng: np.random.Generator, rows: int, cols: int, floor: float = 0.0) -> np.ndarray:
    """Dirichlet rows, optionally mixed with the uniform row"""
    matrix = rng.dirichlet(np.ones(cols), size=rows)
    return floor / cols + (1.0 - floor) * matrix


def random_model(seed: int, num_states: int, num_obs: int, num_actions: int,
                 mixing: float = 0.0, discount: float = 0.9):
    """Seeded model; mixing > 0 blends every T row with the uniform row"""
    from backend.app.core.model import PomdpModel

    rng = np.random.default_rng(seed)
    transition = np.stack([random_stochastic(rng, num_states, num_states, mixing) for _ in range(num_actions)])
    observation = random_stochastic(rng, num_states, num_obs)
    cost = rng.uniform(0.0, 1.0, size=(num_states, num_actions))
    # Re-normalize once so each row sums to 1 within the 1e-12 tolerance
    transition /= transition.sum(axis=2, keepdims=True)
    observation /= observation.sum(axis=1, keepdims=True)
    return PomdpModel.from_arrays(transition, observation, cost, discount)


def stable_models(count: int = 10) -> List:
    """Generated models with delta(T) >= 0.7, hence alpha <= 0.6"""
    shapes = [(2, 2, 2), (3, 2, 2), (2, 3, 1), (3, 3, 2), (4, 2, 2)]
    return [random_model(100 + i, *shapes[i % len(shapes)], mixing=0.7) for i in range(count)]


@pytest.fixture
def random_models():
    return random_model


# ============================================================================
# Settings Fixtures
# ============================================================================

@pytest.fixture
def fresh_settings() -> Iterator[None]:
    """Clear the cached settings before and after the test"""
    from backend.app.config.settings import get_settings

    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def test_env(fresh_settings):
    """Test environment variables"""
    original_env = os.environ.copy()

    yield os.environ

    # Restore original environment
    os.environ.clear()
    os.environ.update(original_env)


# ============================================================================
# Markers Configuration
# ============================================================================

def pytest_configure(config):
    """Register custom markers"""
    config.addinivalue_line("markers", "unit: Unit tests")
    config.addinivalue_line("markers", "integration: Integration tests")
    config.addinivalue_line("markers", "slow: Slow running tests")
    config.addinivalue_line("markers", "fast: Fast running tests")
    config.addinivalue_line("markers", "smoke: Smoke tests")
