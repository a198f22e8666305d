import numpy as np
import pytest

from wrightiv.structural import ShifterSpec, StructuralParams, simulate_dataset

TRUE_THETA = np.array([-0.8, 0.9])


def scalar_design(loading=1.0, k1=0.5):
    """One instrument per block, W = (1, w2)."""
    params = StructuralParams(-0.8, 0.9, (loading,), (loading,), (0.5, 0.3), (-0.2, 0.4))
    spec = ShifterSpec(dim_zd=1, dim_zs=1, dim_w=2, k1_loadings_zd=(k1,),
                       k1_loadings_zs=(k1,), k1_loadings_w=(0.0, k1),
                       k2_loading_d=0.5, k2_loading_s=0.5)
    return params, spec


def overid_design(loading=1.0, k1=0.5):
    """Two instruments per block, W = (1, w2)."""
    params = StructuralParams(-0.8, 0.9, (loading, loading), (loading, loading),
                              (0.5, 0.3), (-0.2, 0.4))
    spec = ShifterSpec(dim_zd=2, dim_zs=2, dim_w=2, k1_loadings_zd=(k1, k1),
                       k1_loadings_zs=(k1, k1), k1_loadings_w=(0.0, k1),
                       k2_loading_d=0.5, k2_loading_s=0.5)
    return params, spec


def simulate(design, n, seed, **kw):
    params, spec = design(**kw)
    return simulate_dataset(params, spec, n, seed)


@pytest.fixture
def scalar_data():
    return simulate(scalar_design, 500, 11)


@pytest.fixture
def overid_data():
    return simulate(overid_design, 500, 12)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
