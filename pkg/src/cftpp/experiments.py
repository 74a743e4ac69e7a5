"""Batch Monte Carlo scenarios: factual realizations, counterfactual replicates, grouped summaries.

A scenario samples ``n_observed`` factual realizations of a process, draws
``n_counterfactual`` counterfactual realizations for each one under an
intervention, groups the factual realizations by their event count in a window
of interest, and reports mean count trajectories with bootstrap bands.

Every realization and replicate has its own keyed stream, so results do not
depend on the number of worker processes.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .hawkes import DEFAULT_EVENT_CAP, ORIGINS, counterfactual_hawkes_trace, sample_hawkes
from .intensity import HawkesParams, RbfMixtureIntensity, intensity_from_config
from .cf_poisson import counterfactual_poisson
from .randomness import Label, Stream, make_stream
from .sir import (SbmProbabilities, SirParams, apply_intervention, bundled_geography,
                  counterfactual_outbreak, generate_network, intervention_from_config,
                  load_geography, sample_outbreak, seed_nodes)
from .sir.epidemic import write_outbreak_csv
from .thinning import lewis_sample

PROCESSES = ("hawkes", "rbf", "sir")
INTERVENTION_KINDS = ("identity", "explicit", "noise", "sir")


@dataclass
class InterventionSpec:
    """How the counterfactual model is obtained from the factual one.

    ``explicit`` uses ``counterfactual`` (an intensity config) as is.  ``noise``
    shifts the Hawkes ``alpha`` or one RBF amplitude by ``eps ~ N(0, sigma)``,
    clipped at zero; ``component`` fixes the RBF component, otherwise one is
    picked at random.  ``sir`` applies the epidemic intervention in ``sir``.
    """

    kind: str = "identity"
    counterfactual: dict | None = None
    sigma: float = 0.5
    component: int | None = None
    epsilon_per_realization: bool = False
    sir: dict | None = None

    def validate(self, process: str) -> None:
        if self.kind not in INTERVENTION_KINDS:
            raise ConfigError(f"unknown intervention kind {self.kind!r}")
        if (self.kind == "sir") != (process == "sir") and self.kind != "identity":
            raise ConfigError(f"intervention {self.kind!r} does not apply to process {process!r}")
        if self.kind == "explicit" and self.counterfactual is None:
            raise ConfigError("explicit intervention needs a 'counterfactual' intensity")
        if self.kind == "noise" and not self.sigma >= 0:
            raise ConfigError("noise sigma must be nonnegative")
        if self.kind == "sir":
            intervention_from_config(self.sir)


@dataclass
class ScenarioConfig:
    process: str
    factual: dict
    horizon: float
    n_observed: int
    n_counterfactual: int
    seed: int
    intervention: InterventionSpec = field(default_factory=InterventionSpec)
    grouping: str | list = "tercile"
    window: tuple[float, float] | None = None
    grid_points: int = 200
    lambda_max: float | None = None
    mode: str = "exact"
    k: int = 100
    event_cap: int = DEFAULT_EVENT_CAP
    level: float = 0.95
    n_resamples: int = 1000
    raw_counterfactuals: bool = False
    name: str = ""

    def __post_init__(self):
        if isinstance(self.intervention, dict):
            self.intervention = _from_dict(InterventionSpec, self.intervention, "intervention")
        if self.window is not None:
            self.window = (float(self.window[0]), float(self.window[1]))
        self.validate()

    def validate(self) -> None:
        if self.process not in PROCESSES:
            raise ConfigError(f"unknown process {self.process!r}; expected one of {PROCESSES}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigError("horizon must be positive and finite")
        if self.n_observed < 1 or self.n_counterfactual < 1:
            raise ConfigError("n_observed and n_counterfactual must be at least 1")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        if self.mode not in ("exact", "montecarlo"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0 <= self.level < 1:
            raise ConfigError("level must lie in [0, 1)")
        if self.window is not None and not 0 <= self.window[0] <= self.window[1] <= self.horizon:
            raise ConfigError("window must satisfy 0 <= a <= b <= horizon")
        if not (self.grouping in ("tercile", "none") or isinstance(self.grouping, list)):
            raise ConfigError("grouping must be 'tercile', 'none' or a list of [lo, hi] bins")
        self.intervention.validate(self.process)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return _from_dict(cls, d, "scenario")

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.window is not None:
            d["window"] = list(self.window)
        return d


def _from_dict(cls, d, what):
    if not isinstance(d, dict):
        raise ConfigError(f"{what} config must be a JSON object")
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown {what} keys {sorted(extra)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"malformed {what} config: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(d)


# ---------------------------------------------------------------- bootstrap

def _resample_counts(n: int, n_resamples: int, stream: Stream) -> np.ndarray:
    """Multinomial resampling weights, shape (n_resamples, n)."""
    idx = stream.integers(n, size=n_resamples * n)
    rows = np.repeat(np.arange(n_resamples), n)
    return np.bincount(rows * n + idx, minlength=n_resamples * n).reshape(n_resamples, n)


def bootstrap_ci(samples, level: float = 0.95, n_resamples: int = 1000,
                 stream: Stream | None = None):
    """Percentile bootstrap interval for the mean.

    ``samples`` may be 2-D, in which case rows are resampled jointly and the
    interval is returned per column.
    """
    x = np.asarray(samples, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("bootstrap_ci needs at least one sample")
    if x.shape[0] < 2:
        raise ValueError("bootstrap_ci needs at least two samples")
    if not 0 <= level < 1:
        raise ValueError("level must lie in [0, 1)")
    if stream is None:
        stream = make_stream(0, (Label.BOOTSTRAP, 0))
    w = _resample_counts(x.shape[0], n_resamples, stream)
    means = np.tensordot(w, x, axes=(1, 0)) / x.shape[0]
    a = (1 - level) / 2
    lo, hi = np.quantile(means, [a, 1 - a], axis=0)
    return lo, hi


# ---------------------------------------------------------------- per-realization work

@dataclass
class RealizationResult:
    index: int
    observed_times: np.ndarray
    observed_curve: np.ndarray        # counts on the grid
    cf_curves: np.ndarray             # (n_counterfactual, grid) counts
    observed_window: int
    cf_window: np.ndarray             # per-replicate window counts
    epsilon: float | None = None
    truncated: int = 0
    cf_raw: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


@dataclass
class _Context:
    cfg: ScenarioConfig
    grid: np.ndarray
    window: tuple[float, float]
    factual: object = None
    network: object = None
    geography: object = None
    sir_params: object = None
    sir_intervention: object = None
    scenario_eps: tuple | None = None


def _window_count(times: np.ndarray, window) -> int:
    a, b = window
    return int(np.searchsorted(times, b, side="right") - np.searchsorted(times, a, side="left"))


def _draw_shift(cfg: ScenarioConfig, stream: Stream, factual) -> tuple[int | None, float]:
    iv = cfg.intervention
    comp = None
    if isinstance(factual, RbfMixtureIntensity):
        comp = iv.component if iv.component is not None else stream.integers(len(factual.components))
        if not 0 <= comp < len(factual.components):
            raise ConfigError(f"component {comp} out of range")
    return comp, stream.normal(iv.sigma)


def _cf_model(ctx: _Context, r: int):
    """Counterfactual intensity for realization ``r`` and the noise draw, if any."""
    cfg, f = ctx.cfg, ctx.factual
    iv = cfg.intervention
    if iv.kind == "identity":
        return f, None
    if iv.kind == "explicit":
        return intensity_from_config(iv.counterfactual), None
    if iv.epsilon_per_realization:
        comp, eps = _draw_shift(cfg, make_stream(cfg.seed, (Label.REALIZATION, r),
                                                 (Label.INTERVENTION, 0)), f)
    else:
        comp, eps = ctx.scenario_eps
    if isinstance(f, HawkesParams):
        return HawkesParams(f.mu, max(f.alpha + eps, 0.0), f.omega), eps
    return f.with_amplitude(comp, max(f.components[comp].phi + eps, 0.0)), eps


def _run_point_process(ctx: _Context, r: int) -> RealizationResult:
    cfg, f = ctx.cfg, ctx.factual
    T = cfg.horizon
    hawkes = isinstance(f, HawkesParams)
    bound = (lambda m: m.peak()) if hawkes else (lambda m: m.upper_bound(T))
    lam_f = cfg.lambda_max if cfg.lambda_max is not None else bound(f)
    fs = make_stream(cfg.seed, (Label.REALIZATION, r))
    if hawkes:
        obs, _ = sample_hawkes(f, lam_f, T, fs, cfg.event_cap)
    else:
        obs = lewis_sample(f, lam_f, T, fs).accepted
    cf_model, eps = _cf_model(ctx, r)
    lam_cf = max(lam_f, bound(cf_model))
    n_cf = cfg.n_counterfactual
    curves = np.empty((n_cf, ctx.grid.size), dtype=np.int64)
    wins = np.empty(n_cf, dtype=np.int64)
    truncated = 0
    raw = []
    for c in range(n_cf):
        cs = make_stream(cfg.seed, (Label.REALIZATION, r), (Label.REPLICATE, c))
        if hawkes:
            tr = counterfactual_hawkes_trace(f, cf_model, obs, lam_cf, T, cs, cfg.mode, cfg.k,
                                             cfg.event_cap)
            times, truncated = tr.events.times, truncated + tr.truncated
            if cfg.raw_counterfactuals:
                raw.extend((r, c, t, ORIGINS[o]) for t, o in zip(times.tolist(), tr.origin.tolist()))
        else:
            times = counterfactual_poisson(f, cf_model, obs, lam_cf, T, cs, cfg.mode, cfg.k).times
            if cfg.raw_counterfactuals:
                raw.extend((r, c, t, "") for t in times.tolist())
        curves[c] = np.searchsorted(times, ctx.grid, side="right")
        wins[c] = _window_count(times, ctx.window)
    return RealizationResult(r, obs.times, np.searchsorted(obs.times, ctx.grid, side="right"),
                             curves, _window_count(obs.times, ctx.window), wins, eps, truncated, raw)


def _run_sir(ctx: _Context, r: int) -> RealizationResult:
    cfg, net, params = ctx.cfg, ctx.network, ctx.sir_params
    T = cfg.horizon
    seeds = seed_nodes(ctx.geography, net, make_stream(cfg.seed, (Label.SEEDING, r)))
    ob = sample_outbreak(net, params, seeds, T, make_stream(cfg.seed, (Label.REALIZATION, r)))
    obs_times = np.sort(ob.infection_time[ob.infected])
    n_cf = cfg.n_counterfactual
    curves = np.empty((n_cf, ctx.grid.size), dtype=np.int64)
    wins = np.empty(n_cf, dtype=np.int64)
    districts = np.zeros(len(net.district_ids))
    raw = []
    for c in range(n_cf):
        cs = make_stream(cfg.seed, (Label.REALIZATION, r), (Label.REPLICATE, c))
        net_cf, rates, _ = apply_intervention(ctx.sir_intervention, ob, net, params,
                                              cs.child(Label.INTERVENTION, 0))
        cf = counterfactual_outbreak(net, net_cf, params.beta, rates, ob, params, T, cs,
                                     cfg.mode, cfg.k)
        times = np.sort(cf.infection_time[cf.infected])
        curves[c] = np.searchsorted(times, ctx.grid, side="right")
        wins[c] = _window_count(times, ctx.window)
        districts += cf.district_totals(net)
        if cfg.raw_counterfactuals:
            raw.append((c, cf))
    extra = {"outbreak": ob, "district_factual": ob.district_totals(net),
             "district_cf": districts / n_cf}
    return RealizationResult(r, obs_times, np.searchsorted(obs_times, ctx.grid, side="right"),
                             curves, _window_count(obs_times, ctx.window), wins, None, 0, raw, extra)


def _run_block(ctx: _Context, block: list[int]) -> list[RealizationResult]:
    run = _run_sir if ctx.cfg.process == "sir" else _run_point_process
    return [run(ctx, r) for r in block]


def _build_context(cfg: ScenarioConfig) -> _Context:
    window = cfg.window if cfg.window is not None else (0.0, cfg.horizon)
    ctx = _Context(cfg, np.linspace(0.0, cfg.horizon, cfg.grid_points), window)
    if cfg.process == "sir":
        fcfg = cfg.factual
        geo_path = fcfg.get("geography")
        ctx.geography = load_geography(geo_path) if geo_path else bundled_geography()
        probs = SbmProbabilities.from_dict(fcfg.get("probs") or {})
        ctx.sir_params = SirParams(**{k: float(fcfg[k]) for k in ("beta", "delta") if k in fcfg})
        ctx.network = generate_network(ctx.geography, probs, make_stream(cfg.seed, (Label.NETWORK, 0)))
        iv = cfg.intervention
        ctx.sir_intervention = intervention_from_config(iv.sir) if iv.kind == "sir" else None
        return ctx
    ctx.factual = intensity_from_config(cfg.factual)
    if cfg.process == "hawkes" and not isinstance(ctx.factual, HawkesParams):
        raise ConfigError("hawkes process needs a 'hawkes' factual intensity")
    if cfg.process == "rbf" and not isinstance(ctx.factual, RbfMixtureIntensity):
        raise ConfigError("rbf process needs an 'rbf' factual intensity")
    if cfg.intervention.kind == "noise":
        ctx.scenario_eps = _draw_shift(cfg, make_stream(cfg.seed, (Label.INTERVENTION, 0)), ctx.factual)
    return ctx


def simulate(cfg: ScenarioConfig, threads: int = 1, progress=None) -> list[RealizationResult]:
    """All realizations of a scenario, in index order, for any worker count."""
    ctx = _build_context(cfg)
    idx = list(range(cfg.n_observed))
    size = max(1, math.ceil(len(idx) / (4 * max(threads, 1))))
    blocks = [idx[i:i + size] for i in range(0, len(idx), size)]
    out = []
    if threads <= 1:
        for b in blocks:
            out.extend(_run_block(ctx, b))
            if progress:
                progress(len(out), cfg.n_observed)
        return out
    with ProcessPoolExecutor(max_workers=threads) as ex:
        for res in ex.map(_run_block, [ctx] * len(blocks), blocks):
            out.extend(res)
            if progress:
                progress(len(out), cfg.n_observed)
    return out


# ---------------------------------------------------------------- aggregation

@dataclass
class GroupSummary:
    name: str
    count_range: tuple[int, int]
    members: np.ndarray
    mean_observed: float              # mean window count, factual
    mean_cf: float                    # mean window count, counterfactual
    cf_ci: tuple[float, float]
    grid: np.ndarray
    mean_factual_curve: np.ndarray
    mean_cf_curve: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @property
    def rel_change(self) -> float:
        return _rel(self.mean_cf, self.mean_observed)

    @property
    def rel_diff_curve(self) -> np.ndarray:
        return _rel(self.mean_cf_curve, self.mean_factual_curve)


@dataclass
class GroupedSummary:
    groups: list[GroupSummary]
    n_truncated: int = 0
    epsilons: list = field(default_factory=list)

    def group(self, name: str) -> GroupSummary:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)


def _rel(cf, f):
    cf, f = np.asarray(cf, dtype=float), np.asarray(f, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(f > 0, (cf - f) / np.where(f > 0, f, 1.0), np.where(cf == f, 0.0, np.nan))
    return float(out) if out.ndim == 0 else out


def assign_groups(counts: np.ndarray, grouping) -> list[tuple[str, np.ndarray]]:
    """Partition realization indices by count.

    ``tercile`` uses the empirical 1/3 and 2/3 quantiles with right-closed
    bins; a list of ``[lo, hi]`` pairs gives inclusive explicit bins.
    """
    counts = np.asarray(counts)
    if grouping == "none":
        return [("all", np.arange(counts.size))]
    if grouping == "tercile":
        q1, q2 = np.quantile(counts, [1 / 3, 2 / 3])
        labels = np.where(counts <= q1, 0, np.where(counts <= q2, 1, 2))
        return [(name, np.flatnonzero(labels == i)) for i, name in enumerate(("low", "mid", "high"))]
    out = []
    for i, (lo, hi) in enumerate(grouping):
        out.append((f"bin{i}", np.flatnonzero((counts >= lo) & (counts <= hi))))
    return out


def summarize(cfg: ScenarioConfig, results: list[RealizationResult]) -> GroupedSummary:
    grid = np.linspace(0.0, cfg.horizon, cfg.grid_points)
    obs_w = np.array([r.observed_window for r in results])
    groups = []
    for gi, (name, members) in enumerate(assign_groups(obs_w, cfg.grouping)):
        if members.size == 0:
            continue
        sub = [results[i] for i in members]
        f_curves = np.array([r.observed_curve for r in sub], dtype=float)
        cf_means = np.array([r.cf_curves.mean(axis=0) for r in sub])
        cf_w = np.array([r.cf_window.mean() for r in sub])
        bs = make_stream(cfg.seed, (Label.BOOTSTRAP, gi))
        if len(sub) >= 2:
            unit_curves, unit_w = cf_means, cf_w
        else:
            unit_curves, unit_w = sub[0].cf_curves.astype(float), sub[0].cf_window.astype(float)
        if unit_w.size >= 2:
            lo, hi = bootstrap_ci(unit_curves, cfg.level, cfg.n_resamples, bs)
            wlo, whi = bootstrap_ci(unit_w, cfg.level, cfg.n_resamples, bs)
        else:
            lo = hi = unit_curves[0]
            wlo = whi = float(unit_w[0])
        groups.append(GroupSummary(name, (int(obs_w[members].min()), int(obs_w[members].max())),
                                   members, float(obs_w[members].mean()), float(cf_w.mean()),
                                   (float(wlo), float(whi)), grid, f_curves.mean(axis=0),
                                   cf_means.mean(axis=0), lo, hi))
    return GroupedSummary(groups, sum(r.truncated for r in results),
                          [r.epsilon for r in results] if cfg.intervention.epsilon_per_realization
                          else [results[0].epsilon] if results else [])


def run_scenario(cfg: ScenarioConfig, threads: int = 1, progress=None):
    """Simulate and summarize; returns ``(summary, results)``."""
    results = simulate(cfg, threads, progress)
    return summarize(cfg, results), results


def scenario_network(cfg: ScenarioConfig):
    """The contact network an SIR scenario runs on."""
    return _build_context(cfg).network


# ---------------------------------------------------------------- output

def _g(v) -> str:
    return repr(float(v))


def write_outputs(out_dir, cfg: ScenarioConfig, summary: GroupedSummary,
                  results: list[RealizationResult], wall_time: float | None = None,
                  network=None) -> None:
    out = Path(out_dir)
    (out / "raw_events").mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "t", "mean_factual", "mean_cf", "lo", "hi", "rel_diff"])
        for g in summary.groups:
            rel = g.rel_diff_curve
            for i, t in enumerate(g.grid):
                w.writerow([g.name, _g(t), _g(g.mean_factual_curve[i]), _g(g.mean_cf_curve[i]),
                            _g(g.lo[i]), _g(g.hi[i]), _g(rel[i])])
    with open(out / "groups.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "count_lo", "count_hi", "n_realizations", "mean_observed",
                    "mean_cf", "cf_lo", "cf_hi", "rel_change"])
        for g in summary.groups:
            w.writerow([g.name, g.count_range[0], g.count_range[1], g.members.size,
                        _g(g.mean_observed), _g(g.mean_cf), _g(g.cf_ci[0]), _g(g.cf_ci[1]),
                        _g(g.rel_change)])
    if cfg.process == "sir":
        _write_sir_raw(out, results, network if network is not None else scenario_network(cfg))
    else:
        _write_pp_raw(out, cfg, results)
    meta = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "n_truncated": summary.n_truncated,
        "epsilons": summary.epsilons,
        "wall_time_s": wall_time,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _write_pp_raw(out: Path, cfg, results) -> None:
    with open(out / "raw_events" / "observed.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["realization", "t"])
        for r in results:
            w.writerows((r.index, _g(t)) for t in r.observed_times)
    if cfg.raw_counterfactuals:
        with open(out / "raw_events" / "counterfactual.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["realization", "replicate", "t", "origin"])
            for r in results:
                w.writerows((a, b, _g(t), o) for a, b, t, o in r.cf_raw)


def _write_sir_raw(out: Path, results, ctx_net) -> None:
    for r in results:
        write_outbreak_csv(out / "raw_events" / f"observed_{r.index}.csv", r.extra["outbreak"], ctx_net)
        for c, cf in r.cf_raw:
            write_outbreak_csv(out / "raw_events" / f"cf_{r.index}_{c}.csv", cf, ctx_net)
    with open(out / "districts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["realization", "district", "country", "factual", "mean_cf"])
        for r in results:
            for d, did in enumerate(ctx_net.district_ids):
                w.writerow([r.index, did, ctx_net.countries[d], int(r.extra["district_factual"][d]),
                            _g(r.extra["district_cf"][d])])
