import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flapwing.simulator import SimConfig, default_profile, run

settings.register_profile("ci", max_examples=25, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

FLAP_HZ = 4.5
AIRSPEED = 1.65


@functools.lru_cache(maxsize=None)
def cached_run(aero_mode="wagner", fold=True, duration=1.2, dt=2.5e-4, gait_mode="prescribed",
               tethered=True):
    """Simulation records shared between test modules (each config runs once per session)."""
    profile = default_profile(FLAP_HZ)
    if not fold:
        profile = profile.without_fold()
    cfg = SimConfig(U=AIRSPEED, frequency=FLAP_HZ, dt=dt, duration=duration, aero_mode=aero_mode,
                    profile=profile, gait_mode=gait_mode, tethered=tethered)
    return cfg, run(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CRITERIA = {}


def record_criterion(n, ok, detail):
    """Keep one PASS/FAIL line per acceptance criterion for the terminal summary."""
    line = f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[n] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
