import pytest

from tfstar import (compact_window, derive_coefficients, desk_constants,
                    ratio_window, solve_kd, solve_profile)


@pytest.fixture(scope="session")
def consts():
    return desk_constants()


@pytest.fixture(scope="session")
def coeffs(consts):
    return derive_coefficients(consts)


@pytest.fixture(scope="session")
def windows(consts):
    return ratio_window(consts)


@pytest.fixture(scope="session")
def kd(coeffs):
    return solve_kd(5.0, coeffs)


@pytest.fixture(scope="session")
def window_at_1(consts):
    """Compact-support beta interval at alpha=1 (shared; ~0.1 s)."""
    return compact_window(1.0, consts)


@pytest.fixture(scope="session")
def interior_solution(consts):
    """A compact electron-atmosphere solution well inside the window."""
    return solve_profile(1.0, 0.90855, consts)


@pytest.fixture(scope="session")
def interior_solution_p(consts):
    """A compact proton-atmosphere solution (low-beta side)."""
    return solve_profile(1.0, 0.90853, consts)
