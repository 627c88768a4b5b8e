import io

import numpy as np
import pytest

from floatloc.errors import InvalidInputError
from floatloc.geo import NedPoint, ned_to_geodetic
from floatloc.ingest import Direction
from floatloc.pipeline import localize_float
from floatloc.simulator import GroundTruth, ScenarioConfig, evaluate, simulate
from floatloc.uncertainty import PositionEstimate

from conftest import DRIFTING, REF, run_config


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_deterministic(tmp_path):
    cfg = ScenarioConfig(duration_s=300.0, range_noise_std_m=2.0, multipath_probability=0.1,
                         dropout_probability=0.05, rng_seed=4)
    simulate(cfg).write(tmp_path / "a")
    simulate(cfg).write(tmp_path / "b")
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a and a == b
    simulate(cfg.replace(rng_seed=5)).write(tmp_path / "c")
    assert _files(tmp_path / "c") != a


def test_tdma_schedule():
    cfg = ScenarioConfig(duration_s=100.0, n_slbs=3, n_floats=1)
    sim = simulate(cfg)
    sends = sorted((p.timestamp_utc, p.device) for p in sim.pings if p.direction is Direction.SENT)
    assert len(sends) == 10 * 4
    t = np.array([s[0] for s in sends])
    np.testing.assert_allclose(np.diff(t), cfg.ping_interval_s / 4, atol=1e-6)
    assert [s[1] for s in sends[:4]] == [1, 2, 3, 101]


def test_noise_free_arrivals_match_truth():
    cfg = ScenarioConfig(duration_s=120.0, rng_seed=2, **DRIFTING)
    sim = simulate(cfg)
    sent = {(p.device, round(p.timestamp_utc, 6)): p.timestamp_utc for p in sim.pings if p.direction is Direction.SENT}
    sends_by_dev = {}
    for (dev, _), t in sent.items():
        sends_by_dev.setdefault(dev, []).append(t)
    checked = 0
    for p in sim.pings:
        if p.direction is not Direction.RECEIVED:
            continue
        ts = max(t for t in sends_by_dev[p.peer] if t < p.timestamp_utc)
        tx = np.array(sim.truth.position_at(p.peer, ts))
        rx = np.array(sim.truth.position_at(p.device, p.timestamp_utc))
        d = np.linalg.norm(rx - tx)
        assert (p.timestamp_utc - ts) * cfg.sound_speed_mps == pytest.approx(d, abs=1e-3)
        checked += 1
    assert checked > 100


def test_multipath_and_dropout_counters():
    sim = simulate(ScenarioConfig(duration_s=300.0, multipath_probability=0.2, dropout_probability=0.1, rng_seed=1))
    attempts = sim.receptions + sim.dropouts
    assert 0.05 < sim.dropouts / attempts < 0.15
    assert 0.12 < sim.multipath_events / sim.receptions < 0.28


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ScenarioConfig(dropout_probability=1.0)
    with pytest.raises(InvalidInputError):
        ScenarioConfig.from_dict({"bogus": 1})
    with pytest.raises(InvalidInputError):
        ScenarioConfig(ping_interval_s=0.0)


def test_truth_csv_round_trip():
    sim = simulate(ScenarioConfig(duration_s=60.0, rng_seed=3))
    buf = io.StringIO()
    sim.truth.write(buf)
    back = GroundTruth.read(io.StringIO(buf.getvalue()), REF)
    for dev in sim.truth.devices:
        np.testing.assert_allclose(back.east[dev], sim.truth.east[dev], atol=1e-4)
        np.testing.assert_allclose(back.north[dev], sim.truth.north[dev], atol=1e-4)
        np.testing.assert_allclose(back.depth[dev], sim.truth.depth[dev], atol=1e-6)


def _stationary_truth():
    t = np.array([0.0, 100.0])
    z = np.zeros(2)
    return GroundTruth(REF, {101: t}, {101: z.copy()}, {101: z.copy()}, {101: z.copy()})


def _est(t, north, accepted=True):
    ned = NedPoint(north, 0.0)
    return PositionEstimate(101, int(t), float(t), ned_to_geodetic(ned, REF), ned, 0.0, 1.0, 1.0, 3,
                            accepted=accepted)


def test_evaluate_arithmetic():
    ests = [_est(t, 0.0) for t in range(9)] + [_est(9, 10.0, accepted=False)]
    ev = evaluate(ests, _stationary_truth())
    u, f = ev.unfiltered_all, ev.filtered_all
    assert (u.count, u.mean_m, u.median_m, u.max_m, u.min_m) == pytest.approx((10, 1.0, 0.0, 10.0, 0.0), abs=1e-6)
    assert (f.count, f.mean_m, f.max_m) == pytest.approx((9, 0.0, 0.0), abs=1e-6)
    assert ev.unfiltered[101] == u
    assert len(ev.lines()) == 4


def test_translation_invariance():
    # The same local scenario placed at two origins gives the same errors.
    base = dict(duration_s=300.0, range_noise_std_m=2.0, rng_seed=8, **DRIFTING)
    errs = []
    for lat, lon in ((47.45, -122.38), (-33.9, 151.2)):
        cfg = ScenarioConfig(origin_lat_deg=lat, origin_lon_deg=lon, **base)
        sim = simulate(cfg)
        ests = localize_float(sim.logs(), run_config(cfg))
        errs.append(np.concatenate(list(evaluate(ests, sim.truth).errors.values())))
    assert len(errs[0]) == len(errs[1])
    np.testing.assert_allclose(errs[0], errs[1], atol=1e-3)


@pytest.mark.slow
def test_error_grows_with_noise():
    means = []
    for sigma in (0.5, 2.0, 6.0):
        per_seed = []
        for seed in range(5):
            cfg = ScenarioConfig(duration_s=300.0, range_noise_std_m=sigma, rng_seed=seed,
                                 current_mps=(0.0, 0.0), float_drift_std_mps=0.0)
            sim = simulate(cfg)
            ev = evaluate(localize_float(sim.logs(), run_config(cfg)), sim.truth)
            per_seed.append(ev.unfiltered_all.mean_m)
        means.append(np.mean(per_seed))
    assert means[0] < means[1] < means[2]
