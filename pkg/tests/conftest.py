import pytest

from reactsim import dynamics, model

# reference operator tables of the 8-point model, units of 1e-3 hartree / bohr
REF_V = (293.78, -0.10, 1.85, 5.41, 5.46, 2.02, 0.18, 305.44)
REF_T = (0, 0.91, 3.63, 8.16, 14.51, 8.16, 3.63, -0.91)
REF_Q = (-1.51, -1.08, -0.65, -0.22, 0.22, 0.65, 1.08, 1.51)

_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_model():
    return model.ReactionModel()


@pytest.fixture(scope="session")
def grid8(default_model):
    return model.make_grid(default_model, 3)


@pytest.fixture(scope="session")
def eigenpairs8(default_model, grid8):
    return dynamics.lowest_eigenpairs(default_model, grid8, 2)


@pytest.fixture(scope="session")
def reaction8(default_model):
    return dynamics.run_reaction(default_model, 3)
