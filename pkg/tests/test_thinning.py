import json

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from cftpp.errors import DominatingRateError
from cftpp.intensity import ConstantIntensity, RbfComponent, RbfMixtureIntensity
from cftpp.randomness import make_stream
from cftpp.thinning import (EventSequence, ThinningRecord, counterfactual_acceptance,
                            events_from_json, events_to_json, lewis_sample, merge_candidates,
                            poisson_candidates, read_events_csv, read_record_json,
                            write_events_csv, write_record_json)

RBF = RbfMixtureIntensity((RbfComponent(2.0, 1.0, 2.0), RbfComponent(1.0, 0.5, 6.0)))


def test_event_sequence_validation():
    EventSequence([0.0, 1.0, 2.0], 2.0)
    with pytest.raises(ValueError):
        EventSequence([1.0, 1.0], 2.0)
    with pytest.raises(ValueError):
        EventSequence([2.0, 1.0], 2.0)
    with pytest.raises(ValueError):
        EventSequence([1.0, 3.0], 2.0)
    with pytest.raises(ValueError):
        EventSequence([-0.5], 2.0)
    with pytest.raises(ValueError):
        EventSequence([], 0.0)


def test_count_is_right_continuous():
    s = EventSequence([1.0, 2.0], 3.0)
    assert s.count(0.999) == 0 and s.count(1.0) == 1 and s.count(3.0) == 2
    assert np.array_equal(s.count([0.5, 1.5, 2.5]), [0, 1, 2])


def test_rate_equal_to_max_rejects_nothing():
    rec = lewis_sample(ConstantIntensity(3.0), 3.0, 10.0, make_stream(1))
    assert len(rec.rejected) == 0 and len(rec.accepted) > 0


def test_zero_rate_accepts_nothing():
    rec = lewis_sample(ConstantIntensity(0.0), 3.0, 10.0, make_stream(1))
    assert len(rec.accepted) == 0 and len(rec.rejected) > 0


def test_constant_rate_counts_are_poisson():
    n = 10_000
    counts = np.array([len(lewis_sample(ConstantIntensity(2.0), 4.0, 10.0, make_stream(2, (1, r))).accepted)
                       for r in range(n)])
    assert abs(counts.mean() - 20.0) < 0.15
    # chi-square against Poisson(20) with pooled tails
    edges = np.arange(10, 31)
    obs = np.array([np.sum(counts < 10)] + [np.sum(counts == k) for k in edges[:-1]] + [np.sum(counts >= 30)])
    p = np.concatenate([[stats.poisson.cdf(9, 20)], stats.poisson.pmf(edges[:-1], 20),
                        [stats.poisson.sf(29, 20)]])
    assert stats.chisquare(obs, p * n).pvalue > 1e-3


def test_candidates_are_homogeneous_poisson():
    s = make_stream(3)
    counts = [lewis_sample(RBF, 3.0, 10.0, s).candidates()[0].size for _ in range(2000)]
    assert abs(np.mean(counts) - 30.0) < 4 * np.sqrt(30 / 2000)
    # one long run, so dropping the censored last gap is negligible
    t, _ = lewis_sample(RBF, 3.0, 20_000.0, s).candidates()
    gaps = np.diff(np.concatenate([[0.0], t]))
    assert stats.kstest(gaps * 3.0, "expon").pvalue > 1e-3


def test_inhomogeneous_event_times_follow_intensity():
    s = make_stream(4)
    times = np.concatenate([lewis_sample(RBF, 3.0, 10.0, s).accepted.times for _ in range(3000)])
    total = quad(RBF.evaluate, 0, 10)[0]
    cdf = np.vectorize(lambda x: quad(RBF.evaluate, 0, x)[0] / total)
    assert stats.kstest(times[:4000], cdf).pvalue > 1e-3


def test_poisson_candidates_block_boundary():
    # many candidates force several blocks; gaps still exponential
    t = poisson_candidates(50.0, 0.0, 100.0, make_stream(5))
    assert np.all(np.diff(t) > 0) and t[-1] <= 100.0
    assert abs(t.size - 5000) < 4 * np.sqrt(5000)


def test_dominating_rate_violation():
    with pytest.raises(DominatingRateError):
        lewis_sample(ConstantIntensity(2.0), 1.0, 5.0, make_stream(6))


def test_counterfactual_acceptance_identity_and_monotone():
    s = make_stream(7)
    up = RBF.with_amplitude(0, 2.8)
    down = RBF.with_amplitude(1, 0.2)
    for _ in range(200):
        rec = lewis_sample(RBF, 3.0, 10.0, s)
        assert counterfactual_acceptance(RBF, RBF, rec, s) == rec.accepted
        assert rec.accepted.issubset(counterfactual_acceptance(RBF, up, rec, s))
        assert counterfactual_acceptance(RBF, down, rec, s).issubset(rec.accepted)
        assert rec.accepted.issubset(counterfactual_acceptance(RBF, up, rec, s, "montecarlo", 20))


def test_counterfactual_acceptance_marginal():
    s = make_stream(8)
    cf = RBF.with_amplitude(1, 2.5)
    pooled, direct = [], []
    for _ in range(4000):
        rec = lewis_sample(RBF, 3.5, 10.0, s)
        pooled.append(counterfactual_acceptance(RBF, cf, rec, s).times)
        direct.append(lewis_sample(cf, 3.5, 10.0, s).accepted.times)
    a, b = np.array([len(x) for x in pooled]), np.array([len(x) for x in direct])
    z = (a.mean() - b.mean()) / np.sqrt(a.var() / a.size + b.var() / b.size)
    assert abs(z) < 4
    assert stats.ks_2samp(np.concatenate(pooled), np.concatenate(direct)).pvalue > 1e-3


def test_merge_candidates_nudges_ties():
    t, x = merge_candidates(np.array([1.0, 2.0]), np.array([0.5, 2.0, 3.0]))
    assert np.all(np.diff(t) > 0)
    assert x.tolist() == [0, 1, 1, 0, 0]
    assert t[3] == np.nextafter(2.0, np.inf)


def test_record_validation():
    a = EventSequence([1.0], 2.0)
    with pytest.raises(ValueError):
        ThinningRecord(a, a, 1.0)
    with pytest.raises(ValueError):
        ThinningRecord(a, EventSequence([], 2.0), 0.0)


def test_serialization_roundtrip(tmp_path):
    rec = lewis_sample(RBF, 3.0, 10.0, make_stream(9))
    write_events_csv(tmp_path / "e.csv", rec.accepted)
    assert read_events_csv(tmp_path / "e.csv", 10.0) == rec.accepted
    assert events_from_json(events_to_json(rec.accepted), 10.0) == rec.accepted
    write_record_json(tmp_path / "r.json", rec)
    back = read_record_json(tmp_path / "r.json")
    assert back.accepted == rec.accepted and back.rejected == rec.rejected
    assert back.lambda_max == rec.lambda_max
    d = json.loads((tmp_path / "r.json").read_text())
    assert set(d) >= {"accepted", "rejected", "lambda_max"}
    (tmp_path / "bad.csv").write_text("time\n1.0\n")
    with pytest.raises(ValueError):
        read_events_csv(tmp_path / "bad.csv")
