import numpy as np
import pytest

from cftpp.randomness import make_stream
from cftpp.sir.calibration import WHO_R0, calibrate, estimate_r0
from cftpp.sir.epidemic import SirParams, sample_outbreak
from cftpp.sir.network import District, Geography, SbmProbabilities, bundled_geography
from sir_helpers import star


def _small_geo():
    ds = (District("A", "GN", 1.0), District("B", "LB", 1.0), District("C", "SL", 1.0))
    pairs = frozenset({frozenset(("A", "B")), frozenset(("B", "C"))})
    return Geography(ds, pairs, 300)


def test_r0_star_graph():
    k, n = 6, 8000
    p = SirParams(beta=0.3, delta=0.2)
    T = p.transmissibility
    # seeding the center (prob 1/(k+1)) gives k*T direct infections; a leaf seed infects only the center
    r0 = estimate_r0(star(k), p, n, make_stream(2))
    mean, lo, hi = r0["GN"]
    expect = (k * T + k * T) / (k + 1)
    assert lo < expect < hi
    # center seed alone: offspring counts average k*T
    hits = [np.count_nonzero(sample_outbreak(star(k), p, [0], np.inf, make_stream(3, (1, r))).infector == 0)
            for r in range(n)]
    assert abs(np.mean(hits) - k * T) < 4 * np.std(hits) / np.sqrt(n)


def test_r0_zero_beta():
    net = star(4)
    r0 = estimate_r0(net, SirParams(beta=0.0), 50, make_stream(1))
    assert r0["GN"] == (0.0, 0.0, 0.0)


def test_r0_needs_enough_runs():
    with pytest.raises(ValueError):
        estimate_r0(star(3), SirParams(), 29, make_stream(1))


def test_single_point_grid():
    best, table = calibrate(_small_geo(), WHO_R0, {"within": [0.02]}, make_stream(3), n_runs=30)
    assert best.within == 0.02 and len(table) == 1


def test_zero_targets_pick_zero():
    grid = {"within": [0.0, 0.02], "cross_country": [0.0, 0.05]}
    best, table = calibrate(_small_geo(), {"GN": 0.0, "LB": 0.0, "SL": 0.0}, grid, make_stream(4), n_runs=30)
    assert best.within == 0.0 and best.cross_country == 0.0
    assert len(table) == 4


def test_grid_validation():
    with pytest.raises(ValueError):
        calibrate(_small_geo(), WHO_R0, {}, make_stream(1))
    with pytest.raises(ValueError):
        calibrate(_small_geo(), WHO_R0, {"within": []}, make_stream(1))
    with pytest.raises(ValueError):
        calibrate(_small_geo(), WHO_R0, {"bogus": [0.1]}, make_stream(1))


def test_defaults_reproduce_targets():
    d = SbmProbabilities()
    grid = {"within": [0.008, d.within], "cross_country": [d.cross_country]}
    best, table = calibrate(bundled_geography(), WHO_R0, grid, make_stream(5), n_runs=3000)
    assert best.within == d.within
    row = next(r for r in table if r["within"] == d.within)
    for c, target in WHO_R0.items():
        assert abs(row[f"r0_{c}"] - target) < 0.1
