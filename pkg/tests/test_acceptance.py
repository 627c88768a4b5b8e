"""End-to-end acceptance checks. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed outside capture).
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from geographiclib.geodesic import Geodesic
from hypothesis import given, settings
from hypothesis import strategies as st

from floatloc.cli import main
from floatloc.geo import NedPoint, geodetic_to_ecef, geodetic_to_ned_arrays, ned_to_geodetic_arrays
from floatloc.grouping import build_groups
from floatloc.ingest import DeploymentLogs, Direction, GpsFix, PingRecord
from floatloc.pipeline import Mode, group_arrivals, localize_float, run
from floatloc.ranging import LinkDirection, RangeMeasurement, RangingConfig, build_measurements, depth_compensate
from floatloc.simulator import ScenarioConfig, evaluate, simulate
from floatloc.solver import Arrival, anchors_to_ned, initial_guess, tdoa_localize, trilaterate
from floatloc.geo import geodetic_to_ned
from floatloc.uncertainty import (
    CrlbConfig, PositionEstimate, apply_filter, crlb_sigmas, fisher_information,
)

from conftest import REF, STATIONARY, run_config
from oracles import grid_search, trilateration_surface

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        assert ok, f"criterion {n} failed: {detail}"
    return emit


def test_01_geodesy_round_trip(verdict):
    rng = np.random.default_rng(1)
    n = 10_000
    az = rng.uniform(-180, 180, n)
    dist = 10_000.0 * np.sqrt(rng.uniform(0, 1, n))
    geod = Geodesic.WGS84
    o = REF.origin
    lat = np.empty(n)
    lon = np.empty(n)
    for i in range(n):
        g = geod.Direct(o.latitude_deg, o.longitude_deg, az[i], dist[i])
        lat[i], lon[i] = g["lat2"], g["lon2"]
    h = rng.uniform(-50, 50, n)

    t = time.perf_counter()
    north, east, down = geodetic_to_ned_arrays(lat, lon, h, REF)
    lat2, lon2, h2 = ned_to_geodetic_arrays(north, east, down, REF)
    elapsed = time.perf_counter() - t

    a = np.column_stack(geodetic_to_ecef(lat, lon, h))
    b = np.column_stack(geodetic_to_ecef(lat2, lon2, h2))
    rt = float(np.max(np.linalg.norm(a - b, axis=1)))
    # distances at the surface against the geodesic oracle
    n0, e0, _ = geodetic_to_ned_arrays(lat, lon, np.zeros(n), REF)
    rel = np.abs(np.hypot(n0, e0) - dist) / np.maximum(dist, 1.0)
    far = dist > 1.0
    worst = float(np.max(rel[far]))
    ok = rt < 1e-6 and worst < 1e-3 and elapsed < 5.0
    verdict(1, "geodesy round trip", ok, f"max round-trip {rt:.2e} m, max dist rel err {worst:.2e}, {elapsed:.3f} s")


@settings(max_examples=500, deadline=None)
@given(d_a=st.floats(0.1, 5000.0), z=st.floats(0.0, 500.0), z_slb=st.floats(0.0, 10.0))
def test_02_depth_compensation_identity_property(d_a, z, z_slb):
    cfg = RangingConfig(1480.0, slb_depth_m=z_slb)
    m = RangeMeasurement(101, 1, 1, LinkDirection.UPLINK, 0.0, 0.1, d_acoustic_m=d_a, float_depth_m=z)
    out = depth_compensate(m, cfg)
    if out is None:
        assert d_a < abs(z - z_slb)
        return
    assert math.isclose(out.d_horizontal_m ** 2 + (z - z_slb) ** 2, d_a ** 2, rel_tol=1e-9)


def test_02_depth_compensation_identity(verdict, noisy_sim):
    cfg = run_config(noisy_sim.scenario)
    logs = noisy_sim.logs()
    worst, count = 0.0, 0
    for target in noisy_sim.scenario.float_ids:
        for m in build_measurements(logs, target, logs.slb_ids, cfg.ranging):
            dz = m.float_depth_m - cfg.ranging.slb_depth_m
            worst = max(worst, abs(m.d_horizontal_m ** 2 + dz ** 2 - m.d_acoustic_m ** 2) / m.d_acoustic_m ** 2)
            count += 1
    verdict(2, "d_h^2 + dz^2 = d_a^2", count > 0 and worst <= 1e-9, f"{count} ranges, max rel residual {worst:.1e}")


def test_03_noise_free_end_to_end(verdict):
    t = time.perf_counter()
    scenario = ScenarioConfig(n_slbs=5, n_floats=2, duration_s=1800.0, rng_seed=11, **STATIONARY)
    sim = simulate(scenario)
    ests, _ = run(sim.logs(), run_config(scenario))
    elapsed = time.perf_counter() - t
    ev = evaluate(ests, sim.truth)
    accepted = [e for e in ests if e.accepted]
    worst = ev.filtered_all.max_m
    ok = len(accepted) == len(ests) > 0 and worst < 1e-2 and elapsed < 30.0
    verdict(3, "noise-free end to end", ok,
            f"{len(accepted)}/{len(ests)} accepted, max error {worst:.2e} m, {elapsed:.2f} s")


def test_04_solver_matches_grid_oracle(verdict, noisy_sim):
    cfg = run_config(noisy_sim.scenario)
    logs = noisy_sim.logs()
    groups = []
    for target in noisy_sim.scenario.float_ids:
        ms = build_measurements(logs, target, logs.slb_ids, cfg.ranging)
        groups += build_groups(ms, cfg.grouping_window_s)
    step = max(1, len(groups) // 100)
    groups = groups[::step][:100]
    assert len(groups) == 100
    worst, bad = 0.0, 0
    for g in groups:
        anchors = anchors_to_ned([m.slb_position for m in g.members], cfg.reference)
        ranges = [m.d_horizontal_m for m in g.members]
        p = geodetic_to_ned(initial_guess(logs.dive_rise[g.float], g.t_center), cfg.reference)
        sol = trilaterate(anchors, ranges, p, cfg.solver)
        best, _ = grid_search(trilateration_surface, anchors, ranges)
        d = math.dist(sol.position_ned.xy, best)
        worst = max(worst, d)
        bad += d > 0.2
    verdict(4, "NLS vs 0.1 m grid oracle", bad == 0, f"{100 - bad}/100 within 0.2 m, worst {worst:.3f} m")


def test_05_crlb_closed_form(verdict):
    ring = [(100 * math.cos(a), 100 * math.sin(a)) for a in np.radians([0, 120, 240])]
    sx, sy = crlb_sigmas(fisher_information((0.0, 0.0), ring, 9.0))
    ok = abs(sx - math.sqrt(6)) < 1e-9 and abs(sy - math.sqrt(6)) < 1e-9
    verdict(5, "CRLB symmetric geometry", ok, f"sigma_x={sx:.12f} sigma_y={sy:.12f}")


def test_06_crlb_calibration(verdict):
    rng = np.random.default_rng(6)
    anchors = np.array([(400 * math.cos(a), 400 * math.sin(a)) for a in np.radians([90, 162, 234, 306, 18])])
    truth = np.array([50.0, -30.0])
    exact = np.hypot(*(anchors - truth).T)
    guess = NedPoint(truth[1] + 10.0, truth[0] + 10.0)
    sols = np.empty((1000, 2))
    for i in range(1000):
        sols[i] = trilaterate(anchors, exact + rng.normal(0, 3.0, len(exact)), guess).position_ned.xy
    emp = sols.std(axis=0, ddof=1)
    bound = np.array(crlb_sigmas(fisher_information(truth, anchors, 9.0)))
    ratio = emp / bound
    ok = bool(np.all((ratio >= 0.8) & (ratio <= 1.5)))
    verdict(6, "CRLB calibration", ok, f"empirical/CRLB = {ratio[0]:.3f} (x), {ratio[1]:.3f} (y)")


def test_07_filter_efficacy(verdict, multipath_sim):
    ests = localize_float(multipath_sim.logs(), run_config(multipath_sim.scenario))
    ev = evaluate(ests, multipath_sim.truth)
    u, f = ev.unfiltered_all, ev.filtered_all
    over = int(sum(np.sum(ev.errors[d][[e.accepted for e in ests if e.float == d]] > 50.0) for d in ev.errors))
    ratio = u.mean_m / f.mean_m
    ok = ratio >= 5.0 and over == 0
    verdict(7, "filter efficacy under multipath", ok,
            f"unfiltered mean {u.mean_m:.2f} m, filtered mean {f.mean_m:.2f} m, ratio {ratio:.1f}, "
            f"filtered > 50 m: {over}")


def test_08_threshold_semantics(verdict):
    def est(cost, s):
        return PositionEstimate(101, 0, 0.0, REF.origin, NedPoint(0, 0), cost, s, s, 3)

    eps_c = math.ulp(50.0)
    eps_s = math.ulp(10.0)
    cfg = CrlbConfig()
    cases = [
        (apply_filter(est(50.0, 10.0), cfg).accepted, True),
        (apply_filter(est(50.0 + eps_c, 10.0), cfg).accepted, False),
        (apply_filter(est(50.0, 10.0 + eps_s), cfg).accepted, False),
        (apply_filter(est(50.0 + 1e-6, 10.0), cfg).accepted, False),
        (apply_filter(est(50.0, 10.0 + 1e-6), cfg).accepted, False),
    ]
    ok = all(a == b for a, b in cases)
    verdict(8, "inclusive thresholds", ok, f"{sum(a == b for a, b in cases)}/{len(cases)} boundary cases")


def _shift_logs(sim, k):
    pings = [PingRecord(p.device, p.direction, p.peer, p.timestamp_utc + k) for p in sim.pings]
    gps = [GpsFix(f.device, f.timestamp_utc + k, f.position) for f in sim.gps]
    return DeploymentLogs.from_records(pings, gps)


def test_09_tdoa_fallback(verdict, noisy_sim):
    assert noisy_sim.scenario.range_noise_std_m == 3.0 and noisy_sim.scenario.n_slbs == 5
    cfg = replace(run_config(noisy_sim.scenario), mode=Mode.TDOA, targets=(102,))
    logs = noisy_sim.logs().without_device_logs(102)
    ests, _ = run(logs, cfg)
    med = float(np.median(evaluate(ests, noisy_sim.truth).errors[102]))

    # Shifting every clock by whole days leaves the solution unchanged.
    shift = 10 * 86400.0
    moved, _ = run(_shift_logs(noisy_sim, shift).without_device_logs(102), cfg)
    drift = max(math.dist(a.position_ned.xy, b.position_ned.xy) for a, b in zip(ests, moved))
    same_t = all(abs(b.t_center - a.t_center - shift) < 1e-6 for a, b in zip(ests, moved))
    ok = med < 10.0 and len(moved) == len(ests) and drift <= 1e-9 and same_t
    verdict(9, "TDoA fallback", ok, f"median {med:.2f} m over {len(ests)} estimates, shift drift {drift:.1e} m")


def test_10_determinism(verdict, tmp_path):
    scen = tmp_path / "scenario.toml"
    scen.write_text("[scenario]\nduration_s = 600.0\nrange_noise_std_m = 3.0\n"
                    "multipath_probability = 0.1\ndropout_probability = 0.05\nrng_seed = 42\n")
    outs = []
    for run_name in ("a", "b"):
        sim = tmp_path / run_name / "sim"
        assert main(["simulate", "--scenario", str(scen), "--out", str(sim), "-q"]) == 0
        res = tmp_path / run_name / "out"
        assert main(["localize", "--config", str(sim / "localize.toml"), "--pings", str(sim / "pings"),
                     "--gps", str(sim / "gps"), "--depth", str(sim / "depth"), "--out", str(res), "-q"]) == 0
        files = sorted(sim.rglob("*.csv")) + [res / "estimates.csv", res / "trajectory.geojson"]
        outs.append({p.relative_to(tmp_path / run_name).as_posix(): p.read_bytes() for p in files})
    ok = outs[0] == outs[1] and len(outs[0]) >= 6
    verdict(10, "determinism", ok, f"{len(outs[0])} files byte-identical" if ok else "outputs differ")
