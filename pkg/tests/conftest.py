import numpy as np
import pytest

from aoptenc.helmholtz import Geometry, HelmholtzModel, default_receivers, generate_synthetic_data, medium, \
    ten_source_positions
from aoptenc.mapsolver import InverseProblem
from aoptenc.prior import PriorSpec, build_prior

# off-resonance frequency; kappa = 2 pi puts the prior mean on a Neumann eigenvalue
KAPPA = 5.5


def make_problem(n=4, kappa=KAPPA, sources=(0, 3, 6, 8), noise_pct=0.02, seed=11, name="medium2",
                 noiseless=False):
    geom = Geometry(ten_source_positions()[list(sources)], default_receivers())
    model = HelmholtzModel(n, kappa, geom)
    prior = build_prior(PriorSpec(), model.param_space)
    m_true = medium(model, name)
    data = generate_synthetic_data(model, m_true, 0.0 if noiseless else noise_pct, seed)
    return InverseProblem(model, data, prior), m_true


@pytest.fixture(scope="session")
def small():
    """n = 4, four sources, 2% noise."""
    return make_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


VERDICTS = {}


def verdict(number, title, ok, detail):
    """Record one acceptance line, print it and fail the test when ``ok`` is false."""
    line = f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    VERDICTS[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
