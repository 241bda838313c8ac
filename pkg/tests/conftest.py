import pytest

from armub.bases import assemble
from armub.epsh import best_reduction
from armub.hadamard import find_hadamard
from armub.rbd import build_affine_rbd

SWEEP_ORDERS = [4, 8, 12, 16, 20, 24, 32, 48, 64, 80]


@pytest.fixture(scope="session")
def hadamard_pool():
    return {m: find_hadamard(m) for m in SWEEP_ORDERS}


@pytest.fixture(scope="session")
def sweep_reductions(hadamard_pool):
    """Best corner-only reduction for every (order, t) with t < sqrt(order)."""
    out = {}
    for m, h in hadamard_pool.items():
        for t in (1, 2, 3):
            if t * t < m:
                out[(m, t)] = best_reduction(h, t)
    return out


@pytest.fixture(scope="session")
def pipeline_6399(hadamard_pool):
    """The d = 79 * 81 construction (t = 1 from the order-80 matrix)."""
    y = best_reduction(hadamard_pool[80], 1)
    design = build_affine_rbd(79, 81)
    return assemble(design, y)
