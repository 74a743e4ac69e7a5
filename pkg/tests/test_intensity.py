import math

import numpy as np
import pytest

from cftpp.errors import ConfigError, ObservationError
from cftpp.intensity import (BranchKernel, ConstantIntensity, HawkesParams, RbfComponent,
                             RbfMixtureIntensity, SirEdgeKernel, hawkes_total_intensity,
                             intensity_from_config, intensity_to_config)


def test_constant():
    c = ConstantIntensity(2.0)
    assert c.evaluate(3.0) == 2.0
    assert np.array_equal(c.evaluate(np.zeros(4)), np.full(4, 2.0))
    assert c.upper_bound(10) == 2.0
    with pytest.raises(ValueError):
        ConstantIntensity(-1.0)
    with pytest.raises(ValueError):
        ConstantIntensity(math.inf)


def test_rbf_gaussian_values_and_bound():
    lam = RbfMixtureIntensity((RbfComponent(2.0, 1.0, 3.0), RbfComponent(1.0, 0.5, 7.0)))
    assert lam.evaluate(3.0) == pytest.approx(2.0 + math.exp(-0.5 * 16))
    t = np.linspace(0, 10, 10001)
    assert lam.evaluate(t).max() <= lam.upper_bound(10.0)
    assert lam.upper_bound(10.0) == 3.0


def test_rbf_literal_form():
    lam = RbfMixtureIntensity((RbfComponent(1.0, 0.5, 2.0),), form="literal")
    assert lam.evaluate(0.0) == pytest.approx(math.exp(1.0))
    assert lam.upper_bound(5.0) == pytest.approx(math.exp(1.0))
    assert lam.evaluate(4.0) < lam.evaluate(1.0)
    with pytest.raises(ValueError):
        RbfMixtureIntensity((RbfComponent(1, 1, 1),), form="cubic")


def test_with_amplitude_clips():
    lam = RbfMixtureIntensity((RbfComponent(1.0, 1.0, 1.0), RbfComponent(2.0, 1.0, 4.0)))
    up = lam.with_amplitude(1, 3.0)
    assert up.components[1].phi == 3.0 and up.components[0] == lam.components[0]
    assert lam.with_amplitude(0, -5.0).components[0].phi == 0.0
    assert lam.components[1].phi == 2.0


def test_hawkes_params():
    p = HawkesParams(1.0, 2.0, 4.0)
    assert p.branching_ratio == 0.5
    assert p.peak() == 2.0
    assert p.kernel(-1.0) == 0.0
    assert p.kernel(0.5) == pytest.approx(math.exp(-2.0))
    with pytest.raises(ValueError):
        HawkesParams(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        HawkesParams(-1.0, 1.0, 1.0)


def test_branch_kernel():
    p = HawkesParams(0.7, 1.5, 2.0)
    assert BranchKernel(p).evaluate(4.0) == 0.7
    k = BranchKernel(p, parent_time=1.0)
    assert k.evaluate(0.5) == 0.0
    assert k.evaluate(1.0) == 1.5
    assert k.upper_bound(10) == 1.5


def test_total_intensity_is_sum_of_branches():
    p = HawkesParams(0.5, 0.8, 1.3)
    hist = [0.2, 1.0, 2.5]
    t = 3.1
    direct = BranchKernel(p).evaluate(t) + sum(BranchKernel(p, h).evaluate(t) for h in hist)
    assert hawkes_total_intensity(p, hist, t) == pytest.approx(direct)
    # events at or after t do not count
    assert hawkes_total_intensity(p, hist + [3.1], t) == pytest.approx(direct)
    with pytest.raises(ObservationError):
        hawkes_total_intensity(p, [2.0, 1.0], 3.0)


def test_sir_edge_kernel():
    k = SirEdgeKernel(0.1, 2.0, 5.0, switch_time=3.0, beta_after=0.0)
    assert k.evaluate(1.0) == 0.0
    assert k.evaluate(2.5) == 0.1
    assert k.evaluate(4.0) == 0.0
    assert SirEdgeKernel(0.1, 2.0, 5.0).evaluate(5.0) == 0.0
    assert SirEdgeKernel(0.1, 2.0, 5.0, include_end=True).evaluate(5.0) == 0.1


def test_config_roundtrip():
    for obj in (ConstantIntensity(1.5), HawkesParams(1, 1, 1),
                RbfMixtureIntensity((RbfComponent(1, 2, 3),), "literal")):
        assert intensity_from_config(intensity_to_config(obj)) == obj


def test_config_errors():
    with pytest.raises(ConfigError):
        intensity_from_config({"kind": "spline"})
    with pytest.raises(ConfigError):
        intensity_from_config({"kind": "hawkes", "mu": 1})
    with pytest.raises(ConfigError):
        intensity_from_config({"kind": "rbf", "components": [{"phi": 1}]})
