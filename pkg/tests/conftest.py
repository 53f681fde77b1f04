import numpy as np
import pytest

from tactichmm import ActionAlphabet, EncodedCorpus, HmmModel, PlantedSpec, paper_planted_model, random_model, sample

_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    _acceptance_lines.append(f"{status}  {name}  ({report.duration:.1f}s)")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def make_random_model(rng, M, T):
    return random_model(M, ActionAlphabet(tuple(f"a{k}" for k in range(T))), rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def alternating():
    """Two tactics that strictly alternate, each emitting its own symbol."""
    return HmmModel(ActionAlphabet(("Q", "V")), [1.0, 0.0], [[0.0, 1.0], [1.0, 0.0]], np.eye(2))


@pytest.fixture(scope="session")
def planted():
    return paper_planted_model()


@pytest.fixture(scope="session")
def planted_corpus():
    """200 sessions of 100 actions from the five-tactic planted model."""
    corpus, paths = sample(PlantedSpec(paper_planted_model(), 200, 100, seed=1))
    return corpus
