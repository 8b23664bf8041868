"""Session-scoped Monte Carlo studies shared by the acceptance suite.

The studies are the expensive part of the suite (minutes, parallelized
over the available cores); every acceptance criterion that reads the same
scenario reuses one run. The seed is fixed so results are reproducible.
"""

import pytest

from elcapture.simulate import run_study, scenario_config

ACCEPTANCE_SEED = 2024


@pytest.fixture(scope="session")
def study_b200():
    cfg = scenario_config("B", nu0=200, reps=1000, seed=ACCEPTANCE_SEED,
                          levels=(0.95,))
    return run_study(cfg, include_complete_case=True)


@pytest.fixture(scope="session")
def study_a400():
    cfg = scenario_config("A", nu0=400, reps=1000, seed=ACCEPTANCE_SEED,
                          levels=())
    return run_study(cfg)


@pytest.fixture(scope="session")
def study_a200():
    cfg = scenario_config("A", nu0=200, reps=200, seed=ACCEPTANCE_SEED,
                          levels=())
    return run_study(cfg)


@pytest.fixture(scope="session")
def study_d400():
    cfg = scenario_config("D", nu0=400, reps=1000, seed=ACCEPTANCE_SEED,
                          levels=())
    return run_study(cfg)


@pytest.fixture(scope="session")
def study_b400():
    cfg = scenario_config("B", nu0=400, reps=1000, seed=ACCEPTANCE_SEED,
                          levels=())
    return run_study(cfg, compute_w=True)
