import pytest

import laxforge as lf


@pytest.fixture(scope="session")
def hm():
    """One Hastings-McLeod solve shared by the whole session."""
    return lf.solve_hastings_mcleod()


@pytest.fixture(scope="session")
def traj_cache():
    """Conserved trajectories from the default initial data, memoized."""
    cache: dict = {}

    def get(kappa: int, t0: float = 0.0, t1: float = 2.0, tol: float = 1e-11):
        key = (kappa, t0, t1, tol)
        if key not in cache:
            s = lf.init_state(kappa, lf.default_q0(kappa), t0)
            cache[key] = lf.integrate(s, t1, rel_tol=tol, abs_tol=1e-13)
        return cache[key]

    return get
