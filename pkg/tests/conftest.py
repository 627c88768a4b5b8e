import pytest

from floatloc import RangingConfig, RunConfig, ScenarioConfig, simulate
from floatloc.geo import ReferenceOrigin

REF = ReferenceOrigin.at(47.45, -122.38)

# Floats hold station while the buoys drift, so a group mixes no float motion
# and the noise-free pipeline is an exact inverse of the simulator.
STATIONARY = dict(current_mps=(0.0, 0.0), float_drift_std_mps=0.0)
DRIFTING = dict(current_mps=(0.0, -1.0))


def run_config(scenario: ScenarioConfig, **kw) -> RunConfig:
    ranging = RangingConfig(scenario.sound_speed_mps, processing_delay_s=scenario.processing_delay_s,
                            slb_depth_m=scenario.slb_depth_m)
    return RunConfig(ranging, scenario.reference, **kw)


@pytest.fixture(scope="session")
def noise_free_sim():
    return simulate(ScenarioConfig(duration_s=1800.0, rng_seed=11, **STATIONARY))


@pytest.fixture(scope="session")
def noisy_sim():
    return simulate(ScenarioConfig(duration_s=1200.0, range_noise_std_m=3.0, rng_seed=5, **DRIFTING))


@pytest.fixture(scope="session")
def multipath_sim():
    return simulate(ScenarioConfig(duration_s=1800.0, range_noise_std_m=1.0,
                                   multipath_probability=0.1, multipath_extra_delay_s=(0.3, 0.8),
                                   rng_seed=0, **DRIFTING))
