"""Fast self-checks against independent oracles, run by ``cftpp validate``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .cf_poisson import counterfactual_poisson
from .gumbel_scm import _logp, abduct_noise_batch, counterfactual_prob_exact, thinning_prob
from .hawkes import counterfactual_hawkes, sample_hawkes
from .intensity import HawkesParams, RbfComponent, RbfMixtureIntensity
from .randomness import Label, make_stream
from .thinning import lewis_sample


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _cf_from_noise(u0, u1, lam_cf, lam_max):
    l0, l1 = _logp(thinning_prob(lam_cf, lam_max))
    return (l1 + u1 >= l0 + u0).astype(int)


def check_exact_vs_abduction(seed: int, k: int) -> tuple[bool, str]:
    """Closed-form counterfactual probability vs averaged abducted-noise argmax."""
    lam_max = 2.0
    worst = 0.0
    s = make_stream(seed, (Label.TASK, 1))
    for x in (0, 1):
        for lo in (0.2, 1.0, 1.8):
            for lc in (0.0, 0.5, 1.0, 1.5, 2.0):
                u0, u1 = abduct_noise_batch(x, lo, lam_max, s, k)
                est = _cf_from_noise(u0, u1, lc, lam_max).mean()
                p = counterfactual_prob_exact(x, lo, lc, lam_max)
                if 0 < p < 1:
                    dev = abs(est - p) / math.sqrt(p * (1 - p) / k)
                else:
                    dev = 0.0 if est == p else math.inf
                worst = max(worst, dev)
    return worst <= 4.0, f"max deviation {worst:.2f} standard errors"


def check_monotonicity(seed: int, n: int) -> tuple[bool, str]:
    """No accepted event is dropped when the intensity rises, and vice versa."""
    s = make_stream(seed, (Label.TASK, 2))
    lam_max = 1.0
    flips = trials = 0
    per = 1000
    for _ in range(max(1, n // per)):
        lo, lc = s.uniform(), s.uniform()
        x = int(s.uniform() < lo)
        u0, u1 = abduct_noise_batch(x, lo, lam_max, s, per)
        xc = _cf_from_noise(u0, u1, lc, lam_max)
        if x == 1 and lc >= lo:
            flips += int(np.sum(xc == 0))
        if x == 0 and lc <= lo:
            flips += int(np.sum(xc == 1))
        trials += per
    return flips == 0, f"{flips} forbidden flips in {trials} trials"


def check_hawkes_mean(seed: int, n: int) -> tuple[bool, str]:
    """Critical Hawkes mu=alpha=omega=1 on [0, 5]: E N = mu (T + alpha T^2 / 2) = 17.5."""
    p = HawkesParams(1.0, 1.0, 1.0)
    counts = np.array([len(sample_hawkes(p, 1.0, 5.0, make_stream(seed, (Label.TASK, 3), (Label.REALIZATION, r)))[0])
                       for r in range(n)])
    se = counts.std(ddof=1) / math.sqrt(n)
    z = (counts.mean() - 17.5) / se
    return abs(z) <= 4.0, f"mean {counts.mean():.3f} vs 17.5 (z = {z:+.2f})"


def check_poisson_marginal(seed: int, n: int) -> tuple[bool, str]:
    """Pooled counterfactual counts follow the counterfactual intensity's mean."""
    f = RbfMixtureIntensity((RbfComponent(1.0, 1.0, 2.0), RbfComponent(0.5, 0.5, 6.0)))
    cf = f.with_amplitude(0, 2.0)
    T, lam_max = 10.0, 2.5
    expect = quad(cf.evaluate, 0.0, T, limit=200)[0]
    counts = np.empty(n)
    for r in range(n):
        s = make_stream(seed, (Label.TASK, 4), (Label.REALIZATION, r))
        obs = lewis_sample(f, lam_max, T, s).accepted
        counts[r] = len(counterfactual_poisson(f, cf, obs, lam_max, T, s))
    z = (counts.mean() - expect) / (counts.std(ddof=1) / math.sqrt(n))
    return abs(z) <= 4.0, f"mean {counts.mean():.3f} vs {expect:.3f} (z = {z:+.2f})"


def check_identity(seed: int, n: int) -> tuple[bool, str]:
    """Unchanged parameters reproduce the observed Hawkes sequence exactly."""
    p = HawkesParams(0.8, 0.6, 1.2)
    bad = 0
    for r in range(n):
        s = make_stream(seed, (Label.TASK, 5), (Label.REALIZATION, r))
        obs, _ = sample_hawkes(p, 1.0, 10.0, s)
        bad += counterfactual_hawkes(p, p, obs, 1.0, 10.0, s) != obs
    return bad == 0, f"{n - bad}/{n} reproduced exactly"


def check_determinism(seed: int) -> tuple[bool, str]:
    a = make_stream(seed, (Label.TASK, 6)).uniform(1000)
    s = make_stream(seed, (Label.TASK, 6))
    b = np.array([s.uniform() for _ in range(1000)])
    return bool(np.array_equal(a, b)), "batched and scalar draws agree" if np.array_equal(a, b) else "draws differ"


def run_checks(seed: int, quick: bool = True) -> list[CheckResult]:
    scale = 1 if quick else 10
    checks = [
        ("stream determinism", lambda: check_determinism(seed)),
        ("exact vs abduction", lambda: check_exact_vs_abduction(seed, 20_000 * scale)),
        ("monotonicity", lambda: check_monotonicity(seed, 100_000 * scale)),
        ("critical Hawkes mean", lambda: check_hawkes_mean(seed, 2_000 * scale)),
        ("Poisson counterfactual marginal", lambda: check_poisson_marginal(seed, 1_000 * scale)),
        ("Hawkes identity", lambda: check_identity(seed, 50 * scale)),
    ]
    out = []
    for name, fn in checks:
        t0 = time.perf_counter()
        ok, detail = fn()
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
