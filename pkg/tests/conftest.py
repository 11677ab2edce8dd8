import numpy as np
import pytest

from lagpert.gallery import gallery_config, gallery_names
from lagpert.problem import Problem, ProblemConfig


def gallery_problem(name: str, N: int | None = None) -> Problem:
    cfg = ProblemConfig.from_dict(gallery_config(name))
    if N is not None:
        cfg = cfg.with_grid(N)
    return Problem.from_config(cfg)


@pytest.fixture(params=gallery_names())
def gallery(request) -> Problem:
    return gallery_problem(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (A + A.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
