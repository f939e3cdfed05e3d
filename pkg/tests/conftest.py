import numpy as np
import pytest

from hfe.pipelines import run_scenario
from hfe.scenario import builtin_scenario_names, builtin_scenario_path


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture(scope="session")
def corpus_reports():
    """All built-in scenarios run once with the default seed."""
    return {
        name: run_scenario(builtin_scenario_path(name))
        for name in builtin_scenario_names()
    }
