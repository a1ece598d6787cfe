import pytest

from mumhors import SchemeParams, desk_params, mum_kg

# Desk workload seed with full key utilization: every window refill finds a
# drained row, so the run reaches the formula capacity exactly.
DESK_LOSSLESS_SEED = 444


@pytest.fixture
def desk():
    return desk_params()


@pytest.fixture
def small():
    """Small bitmap parameters for oracle and fuzz tests."""
    return SchemeParams(t=8, k=2, l=256, r=12, rt=3)


@pytest.fixture
def desk_pair(desk):
    """Deterministic signer/store pair at desk scale."""
    return mum_kg(desk, seed=7)
