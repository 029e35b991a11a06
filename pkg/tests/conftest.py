import pytest  # type: ignore

from quarticlab.application.painleve2 import HMGrid, solve_hastings_mcleod


@pytest.fixture(scope="session")
def hm() -> HMGrid:
    """
    The Hastings-McLeod solution on the default grid, shared because the solve takes seconds.
    """
    return solve_hastings_mcleod()
