"""Forward and counterfactual SIR outbreaks on a contact network.

Infection pressure from an infectious node ``i`` on a susceptible neighbour
``j`` is a Poisson process of rate ``beta`` on ``[t_i, tau_i)``; ``j`` is
infected by the first event over all its infectious neighbours.  Viewing each
directed edge as one branch of a multivariate Hawkes process, the
counterfactual re-thins every edge process with the Gumbel-Max model: the
factual edge was observed either to fire at ``t_j`` (the recorded infector) or
to stay silent while both ends were in the right state.
"""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ObservationError
from ..gumbel_scm import counterfactual_sample
from ..randomness import Stream
from .network import ContactNetwork, Geography

SEED = -1
UNINFECTED = -2


@dataclass(frozen=True)
class SirParams:
    beta: float = 1 / 15.3    # per-edge infection rate, 1/days
    delta: float = 1 / 11.4   # recovery rate, 1/days

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError("beta must be nonnegative")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def transmissibility(self) -> float:
        """Probability that an infectious node infects one given susceptible neighbour."""
        return self.beta / (self.beta + self.delta)


@dataclass(frozen=True, eq=False)
class Outbreak:
    infection_time: np.ndarray   # inf when never infected
    recovery_time: np.ndarray    # inf when never infected
    infector: np.ndarray         # node id, SEED, or UNINFECTED
    horizon: float

    def __eq__(self, other):
        if not isinstance(other, Outbreak):
            return NotImplemented
        return (np.array_equal(self.infection_time, other.infection_time)
                and np.array_equal(self.recovery_time, other.recovery_time)
                and np.array_equal(self.infector, other.infector))

    @property
    def n_nodes(self) -> int:
        return self.infection_time.size

    @property
    def infected(self) -> np.ndarray:
        return np.isfinite(self.infection_time)

    @property
    def seeds(self) -> np.ndarray:
        return np.flatnonzero(self.infector == SEED)

    @property
    def size(self) -> int:
        return int(self.infected.sum())

    def cumulative(self, t) -> np.ndarray:
        """Number of infections up to and including each time in ``t``."""
        times = np.sort(self.infection_time[self.infected])
        return np.searchsorted(times, t, side="right")

    def active(self, t) -> np.ndarray:
        inf = np.sort(self.infection_time[self.infected])
        rec = np.sort(self.recovery_time[self.infected])
        return np.searchsorted(inf, t, side="right") - np.searchsorted(rec, t, side="right")

    def validate(self) -> None:
        """Check the infector map against infection and recovery times."""
        inf = self.infected
        if np.any(self.recovery_time[inf] <= self.infection_time[inf]):
            raise ObservationError("recovery must follow infection")
        if np.any(self.infection_time[self.infector == SEED] != 0):
            raise ObservationError("seeds must be infected at time 0")
        src = np.flatnonzero(self.infector >= 0)
        par = self.infector[src]
        if np.any(self.infection_time[par] >= self.infection_time[src]):
            raise ObservationError("infector must be infected first")
        if np.any(self.infection_time[src] >= self.recovery_time[par]):
            raise ObservationError("infection after the infector recovered")
        if np.any(self.infected != (self.infector != UNINFECTED)):
            raise ObservationError("infector map disagrees with infection times")

    def district_totals(self, network: ContactNetwork) -> np.ndarray:
        return np.bincount(network.district[self.infected], minlength=len(network.district_ids))


def seed_nodes(geo: Geography, network: ContactNetwork, stream: Stream) -> np.ndarray:
    """One distinct random node per recorded seed case, drawn within its district."""
    seeds = []
    for did, count in geo.seed_cases:
        pool = network.nodes_in(did)
        pool = pool[~np.isin(pool, seeds)]
        if count > pool.size:
            raise ValueError(f"district {did} has fewer than {count} nodes")
        pick = pool[stream.permutation(pool.size)[:count]]
        seeds.extend(pick.tolist())
    return np.array(sorted(seeds), dtype=np.int64)


def sample_outbreak(network: ContactNetwork, params: SirParams, seeds, horizon: float,
                    stream: Stream, stop_after_seeds: bool = False) -> Outbreak:
    """Event-driven SIR simulation by competing exponential clocks.

    With ``stop_after_seeds`` the run stops once every seed has recovered;
    the seeds' direct infections are then complete, which is all an R0
    estimate needs.
    """
    n = network.n_nodes
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    if seeds.size == 0:
        raise ValueError("at least one seed is required")
    if seeds.min() < 0 or seeds.max() >= n:
        raise ValueError("seed not in network")
    t_inf = [math.inf] * n
    tau = [math.inf] * n
    infector = [UNINFECTED] * n
    done = [False] * n
    heap = []
    for s in seeds.tolist():
        t_inf[s] = 0.0
        infector[s] = SEED
        heap.append((0.0, s))
    heapq.heapify(heap)
    indptr, indices = network.indptr.tolist(), network.indices.tolist()
    beta, delta = params.beta, params.delta
    u = stream.uniform
    stop = math.inf
    n_seeds_left = seeds.size
    while heap:
        t, i = heapq.heappop(heap)
        if done[i] or t != t_inf[i]:
            continue
        if t > stop:
            break
        done[i] = True
        tau[i] = t - math.log(u()) / delta
        if infector[i] == SEED and stop_after_seeds:
            n_seeds_left -= 1
            if n_seeds_left == 0:
                stop = max(tau[s] for s in seeds.tolist())
        if beta <= 0.0:
            continue
        for j in indices[indptr[i]:indptr[i + 1]]:
            if done[j]:
                continue
            c = t - math.log(u()) / beta
            if c < tau[i] and c <= horizon and c < t_inf[j]:
                t_inf[j] = c
                infector[j] = i
                heapq.heappush(heap, (c, j))
    return _outbreak(t_inf, tau, infector, horizon, done)


def _outbreak(t_inf, tau, infector, horizon, done) -> Outbreak:
    t_inf = np.asarray(t_inf, dtype=float)
    tau = np.asarray(tau, dtype=float)
    infector = np.asarray(infector, dtype=np.int64)
    # pending candidates that were never processed (early stop) are not infections
    pending = ~np.asarray(done, dtype=bool) & np.isfinite(t_inf)
    t_inf[pending] = math.inf
    infector[pending] = UNINFECTED
    return Outbreak(t_inf, tau, infector, horizon)


def counterfactual_outbreak(network_m: ContactNetwork, network_cf: ContactNetwork, beta_m: float,
                            rates, observed: Outbreak, params: SirParams, horizon: float,
                            stream: Stream, mode: str = "exact", k: int = 100) -> Outbreak:
    """Counterfactual outbreak under per-edge rates ``rates`` on ``network_cf``.

    Nodes are processed in counterfactual infection order.  For each processed
    node ``i`` and susceptible neighbour ``j`` the edge process ``i -> j`` is
    re-thinned: the factual edge intensity is ``beta_m`` from ``i``'s observed
    infection until ``i`` recovered or ``j`` got infected, and the observed
    transmission (when ``i`` was ``j``'s infector) is the one accepted event.
    A node keeps its observed recovery delay when its counterfactual infection
    time equals the observed one.
    """
    n = network_cf.n_nodes
    if observed.n_nodes != n or network_m.n_nodes != n:
        raise ValueError("networks and observed outbreak disagree on the number of nodes")
    lam_max = max(beta_m, rates.max_rate())
    if not lam_max > 0:
        return _seeds_only(observed)
    obs_t = observed.infection_time.tolist()
    obs_tau = observed.recovery_time.tolist()
    obs_inf = observed.infector.tolist()
    act = rates.activation_time
    delta = params.delta
    u = stream.uniform
    indptr, indices = network_cf.indptr.tolist(), network_cf.indices.tolist()
    same_net = network_cf is network_m
    m_indptr, m_indices = network_m.indptr, network_m.indices

    def factual_edge(i, j):
        if same_net:
            return True
        lo, hi = m_indptr[i], m_indptr[i + 1]
        pos = lo + np.searchsorted(m_indices[lo:hi], j)
        return pos < hi and m_indices[pos] == j

    t_c = [math.inf] * n
    tau_c = [math.inf] * n
    inf_c = [UNINFECTED] * n
    done = [False] * n
    heap = []
    for s in observed.seeds.tolist():
        t_c[s] = 0.0
        inf_c[s] = SEED
        heap.append((0.0, s))
    heapq.heapify(heap)

    while heap:
        t, i = heapq.heappop(heap)
        if done[i] or t != t_c[i]:
            continue
        done[i] = True
        tau_c[i] = obs_tau[i] if t == obs_t[i] else t - math.log(u()) / delta
        win_end = min(tau_c[i], horizon)
        ti_obs, taui_obs = obs_t[i], obs_tau[i]
        for j in indices[indptr[i]:indptr[i + 1]]:
            if done[j]:
                continue
            r0, r1 = rates.rates(i, j)
            if r0 <= 0.0 and r1 <= 0.0:
                continue
            if ti_obs < math.inf and factual_edge(i, j):
                m_start, m_end = ti_obs, min(taui_obs, obs_t[j])
                hit = obs_inf[j] == i
            else:
                m_start, m_end, hit = math.inf, math.inf, False
            c = _first_cf_event(t, win_end, r0, r1, act, beta_m, m_start, m_end,
                                obs_t[j] if hit else None, lam_max, u, stream, mode, k)
            if c < t_c[j]:
                t_c[j] = c
                inf_c[j] = i
                heapq.heappush(heap, (c, j))
    return _outbreak(t_c, tau_c, inf_c, horizon, done)


def _seeds_only(observed: Outbreak) -> Outbreak:
    s = observed.seeds
    t = np.full(observed.n_nodes, math.inf)
    tau = np.full(observed.n_nodes, math.inf)
    inf = np.full(observed.n_nodes, UNINFECTED, dtype=np.int64)
    t[s] = 0.0
    tau[s] = observed.recovery_time[s]
    inf[s] = SEED
    return Outbreak(t, tau, inf, observed.horizon)


def _first_cf_event(c_start, c_end, r0, r1, act, beta_m, m_start, m_end, t_obs, lam_max,
                    u, stream, mode, k) -> float:
    """Earliest counterfactually accepted event of one directed edge process.

    Counterfactual intensity: ``r0`` before ``act`` and ``r1`` after, on
    ``[c_start, c_end)``.  Factual intensity: ``beta_m`` on
    ``[m_start, m_end)``, closed at ``m_end`` when ``t_obs`` (the observed
    transmission at ``m_end``) is given.  Candidates outside the
    counterfactual window can never be accepted, so rejections are only
    sampled inside it.
    """
    def g_cf(s):
        if s < c_start or s >= c_end:
            return 0.0
        return r0 if s < act else r1

    def g_m(s):
        if s < m_start:
            return 0.0
        if s < m_end or (t_obs is not None and s == m_end):
            return beta_m
        return 0.0

    cands = []
    s = c_start
    while True:
        s -= math.log(u()) / lam_max
        if s > c_end:
            break
        if u() <= (lam_max - g_m(s)) / lam_max:
            cands.append((s, 0))
    if t_obs is not None:
        cands = [(r if r != t_obs else math.nextafter(r, math.inf), x) for r, x in cands]
        cands.append((t_obs, 1))
        cands.sort()
    for s, x in cands:
        lo, lc = g_m(s), g_cf(s)
        if mode == "exact":
            if x:
                p = 1.0 if lc >= lo else lc / lo
            else:
                p = 0.0 if lc <= lo else (lc - lo) / (lam_max - lo)
            if u() < p:
                return s
        elif counterfactual_sample(x, lo, lc, lam_max, stream, mode, k):
            return s
    return math.inf


# serialization ---------------------------------------------------------------

def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else repr(float(v))


def write_outbreak_csv(path, outbreak: Outbreak, network: ContactNetwork) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "district", "infection_time", "recovery_time", "infector"])
        for i in range(outbreak.n_nodes):
            src = int(outbreak.infector[i])
            label = "seed" if src == SEED else ("" if src == UNINFECTED else str(src))
            w.writerow([i, network.district_ids[network.district[i]],
                        _fmt(outbreak.infection_time[i]), _fmt(outbreak.recovery_time[i]), label])


def read_outbreak_csv(path, horizon: float = math.inf) -> Outbreak:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = len(rows)
    t = np.full(n, math.inf)
    tau = np.full(n, math.inf)
    inf = np.full(n, UNINFECTED, dtype=np.int64)
    for r in rows:
        i = int(r["node"])
        t[i] = float(r["infection_time"])
        tau[i] = float(r["recovery_time"])
        src = r["infector"].strip()
        inf[i] = SEED if src == "seed" else (UNINFECTED if src == "" else int(src))
    return Outbreak(t, tau, inf, horizon)


def write_network_csv(path, network: ContactNetwork) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v"])
        w.writerows(network.edges.tolist())


def write_nodes_csv(path, network: ContactNetwork) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "district", "country"])
        for i, d in enumerate(network.district.tolist()):
            w.writerow([i, network.district_ids[d], network.countries[d]])


def read_network_csv(edges_path, nodes_path) -> ContactNetwork:
    with open(nodes_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    ids, countries, district = [], [], []
    for r in rows:
        if r["district"] not in ids:
            ids.append(r["district"])
            countries.append(r["country"])
        district.append(ids.index(r["district"]))
    with open(edges_path, newline="") as fh:
        edges = [(int(r["u"]), int(r["v"])) for r in csv.DictReader(fh)]
    return ContactNetwork(np.array(district), np.array(edges, dtype=np.int64).reshape(-1, 2),
                          tuple(ids), tuple(countries))
