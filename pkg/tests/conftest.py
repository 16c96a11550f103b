import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from enso_gspt import IntegratorConfig, Params, integrate


@pytest.fixture(scope="session")
def run_cache():
    """Memoised trajectory runs shared across the suite.

    Returns a getter: get(c, k, a, **cfg) -> (trajectory, elapsed_seconds).
    """
    cache = {}

    def get(c, k, a, delta=0.01, rho=0.01, **cfg_kwargs):
        key = (c, k, a, delta, rho, tuple(sorted(cfg_kwargs.items())))
        if key not in cache:
            p = Params(c=c, k=k, a=a, delta=delta, rho=rho)
            cfg = IntegratorConfig(**cfg_kwargs)
            t0 = time.perf_counter()
            traj = integrate(p, cfg)
            cache[key] = (traj, time.perf_counter() - t0)
        return cache[key]

    return get
