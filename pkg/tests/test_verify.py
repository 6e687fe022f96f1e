import math

import numpy as np
import pytest
from scipy.special import ndtr

from crossings import laws, verify as V


RAD = laws.rademacher()
LAW2 = laws.make_lattice_law([(-1, "2/3"), (2, "1/3")])
GAUSS = laws.make_continuous_law("gaussian", sigma=1.0)


# ---------------------------------------------------------------------------
# statistic helpers

def test_ks_statistic_exact_null():
    rng = np.random.default_rng(0)
    u = rng.random(20000)
    d = V.ks_statistic(u, lambda x: x)
    assert d < V.ks_critical(20000, 0.01)
    # a shifted sample must be rejected
    d_bad = V.ks_statistic(u * 0.9, lambda x: x)
    assert d_bad > V.ks_critical(20000, 0.01)


def test_ks_critical_value():
    assert V.ks_critical(10**5, 0.01) == pytest.approx(0.005155, abs=2e-5)


def test_chi_square_pooling():
    # cells with expected < 5 get pooled
    obs = np.array([495, 505, 2, 3])
    probs = np.array([0.4975, 0.4975, 0.0025, 0.0025])
    stat, p, dof = V.chi_square_pooled(obs, probs)
    assert dof == 2
    assert p > 0.01
    stat2, p2, dof2 = V.chi_square_pooled(np.array([900, 105]),
                                          np.array([0.5, 0.5]))
    assert p2 < 1e-10


def test_median_of_means_masks_censored():
    vals = np.ones(1000)
    vals[::100] = 1e6          # heavy outliers
    valid = np.ones(1000, dtype=bool)
    valid[::100] = False       # masked away
    assert V.median_of_means(vals, 50, valid) == 1.0


# ---------------------------------------------------------------------------
# experiments at reduced sizes (seeded)

def test_stationarity_gaussian_small():
    r = V.stationarity_test(GAUSS, 20000, seed=101)
    assert r.passed
    assert r.statistic <= r.tolerance
    assert r.censor_rate <= V.CENSOR_GATE
    assert r.details["kind"] == "ks"


def test_stationarity_lattice_small():
    r = V.stationarity_test(LAW2, 20000, seed=102)
    assert r.passed
    # output distribution concentrates on {0, 1} with equal weights
    cells = r.details["cells"]
    assert set(cells) == {"0.0", "1.0"}
    n = sum(cells.values())
    assert abs(cells["0.0"] / n - 0.5) < 0.02


def test_stationarity_rejects_nonzero_mean():
    drift = laws.make_lattice_law([(0, 0.5), (1, 0.5)])
    with pytest.raises(ValueError, match="mean"):
        V.stationarity_test(drift, 100, seed=0)


def test_stationarity_rejects_d2():
    with pytest.raises(ValueError):
        V.stationarity_test(laws.simple_walk_2d(), 100, seed=0)


def test_alternation_small():
    r = V.alternation_test(LAW2, 20000, seed=104)
    assert r.passed
    cells = r.details["into_nonneg"]["cells"]
    n = sum(cells.values())
    assert abs(cells["0.0"] / n - 0.5) < 0.02
    r2 = V.alternation_test(GAUSS, 20000, seed=105)
    assert r2.passed


def test_lln_targets_and_starts():
    # rademacher from 0: average of |overshoot| over crossings is exactly
    # (#down)/(#total), within 1/n of 1/2
    r = V.lln_overshoots(RAD, 4000, 0.0, seed=310)
    assert r.passed
    assert r.details["limit"] == 0.5
    r2 = V.lln_overshoots(LAW2, 4000, 37.0, seed=310)
    assert r2.passed and r2.details["limit"] == 0.75
    r3 = V.lln_overshoots(GAUSS, 4000, 7.3, seed=310, tolerance=0.03)
    assert r3.passed
    assert r3.details["limit"] == pytest.approx(0.6266570686577502, abs=1e-12)


def test_lln_aborts_on_step_budget():
    r = V.lln_overshoots(RAD, 10**6, 0.0, seed=0, max_steps=10**5)
    assert r.verdict == "abort"


def test_clt_reduced():
    r = V.clt_level_crossings(RAD, 10**4, 3000, 0.0, seed=109,
                              tolerance=0.05, mean_tolerance=0.04)
    assert r.passed
    curve = r.details["curve"]
    assert curve["target"][0] == 0.0
    y = np.asarray(curve["y"])
    i = int(np.argmin(np.abs(y - 1.0)))
    assert curve["target"][i] == pytest.approx(2 * ndtr(1.0) - 1, abs=1e-12)


def test_expected_upcrossings_reduced():
    r = V.expected_upcrossings(RAD, [0, 1, 2], 20000, seed=110, tolerance=0.10)
    assert r.passed
    assert r.details["level_zero_exact"]
    est = r.details["estimates"]
    assert set(est) == {f"{m}:{d}({a})" for m in ("plus", "minus")
                        for d in ("up", "down") for a in (0, 1, 2)}
    assert est["plus:up(0)"] == 1.0
    assert est["minus:down(0)"] == 1.0


def test_kac_occupation_reduced():
    r = V.kac_mc_test(LAW2, [-2, -1, 0, 1, 2], 20000, seed=111, tolerance=0.1)
    assert r.passed
    w = r.details["weights"]
    assert all(abs(v - 1.0) < 0.1 for v in w.values())


def test_kac_aborts_on_censor_inflation():
    r = V.kac_mc_test(RAD, [-2, -1, 0, 1, 2], 2000, seed=112, horizon=200)
    assert r.verdict == "abort"
    assert r.censor_rate > V.CENSOR_GATE


def test_kac_rejects_continuous():
    with pytest.raises(ValueError, match="lattice"):
        V.kac_mc_test(GAUSS, [0], 100, seed=0)


def test_tenfold_horizon_does_not_flip_a_pass():
    a = V.kac_mc_test(LAW2, [-1, 0, 1], 10**4, seed=116, horizon=4 * 10**6,
                      tolerance=0.1)
    b = V.kac_mc_test(LAW2, [-1, 0, 1], 10**4, seed=116, horizon=4 * 10**7,
                      tolerance=0.1)
    assert a.passed and b.passed
    assert b.censor_rate <= a.censor_rate


def test_cross_oracle_small():
    r = V.cross_oracle_kernels(3, 4, 30000, seed=405)
    assert r.passed
    assert len(r.details["per_chain"]) == 3


def test_hopf_smoke_and_abort():
    law = laws.simple_walk_2d()
    # machinery smoke: entries land on the axes, counts are well formed
    from crossings.walks import quadrant_entrance_scan
    scan = quadrant_entrance_scan(law, (0, 0), 500, [], np.random.default_rng(5),
                                  max_steps=3 * 10**8, collect_entries=300)
    assert scan["entrances"] == 500
    for e in scan["entries"]:
        assert e[0] == 0 or e[1] == 0
    # step-budget abort is reported, not silently passed
    r = V.hopf_ratio_test(law, [(0, 0)], [(1, 0)], 10**6, seed=114,
                          max_steps=10**6)
    assert r.verdict == "abort"
    assert r.details["target_ratio"] == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError, match="zero"):
        V.hopf_ratio_test(law, [(0, 0)], [(2, 2)], 100, seed=0, max_steps=10**5)
    with pytest.raises(ValueError):
        V.hopf_ratio_test(RAD, [(0,)], [(1,)], 100, seed=0)


def test_exact_identity_reports():
    reps = V.exact_identity_reports(25, 6, seed=115)
    assert len(reps) == 10
    assert all(r.passed for r in reps)


def test_reports_reproducible_bit_for_bit():
    a = V.stationarity_test(LAW2, 5000, seed=200)
    b = V.stationarity_test(LAW2, 5000, seed=200)
    assert a.statistic == b.statistic
    assert a.censor_rate == b.censor_rate
    assert a.details["cells"] == b.details["cells"]
    c = V.lln_overshoots(GAUSS, 2000, 0.0, seed=201)
    d = V.lln_overshoots(GAUSS, 2000, 0.0, seed=201)
    assert c.details["average"] == d.details["average"]


def test_report_serialization_roundtrip():
    import json
    r = V.lln_overshoots(RAD, 1000, 0.0, seed=202)
    blob = json.dumps(r.to_dict())
    back = json.loads(blob)
    assert back["name"] == "lln_overshoots"
    assert back["verdict"] in ("pass", "fail", "abort")
