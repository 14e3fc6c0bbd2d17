import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
# Add repository root to path for imports
sys.path.insert(0, str(ROOT))

from src.valuation.valuation import from_body, from_segment  # noqa: E402
from src.convex.body import ellipsoid  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def repo_root():
    return ROOT


@pytest.fixture(scope="session")
def segment_n4():
    """Phi_2 in R^4 generated by the segment, normalized."""
    return from_segment(4, 2)


@pytest.fixture(scope="session")
def segment_n3():
    """Phi_2 in R^3 generated by the segment: the projection-body borderline."""
    return from_segment(3, 2)


@pytest.fixture(scope="session")
def ellipsoid_n4():
    """Phi_2 in R^4 generated by a C^2_+ ellipsoid of revolution."""
    return from_body(ellipsoid(4, 2.0, 1.0), 2)
