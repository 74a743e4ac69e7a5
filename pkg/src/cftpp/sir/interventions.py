"""Interventions expressed as counterfactual per-edge infection rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..randomness import Stream
from .epidemic import Outbreak, SirParams
from .network import ContactNetwork


@dataclass(frozen=True)
class ContactReductionGlobal:
    threshold: int
    reduction: float


@dataclass(frozen=True)
class DistrictIsolation:
    threshold: int
    within_reduction: float = 0.5
    cross_isolation: bool = True


@dataclass(frozen=True)
class Vaccination:
    coverage: float
    efficacy: float


def _check(iv) -> None:
    for name in ("reduction", "within_reduction", "coverage", "efficacy"):
        v = getattr(iv, name, None)
        if v is not None and not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name}={v} outside [0, 1]")
    th = getattr(iv, "threshold", None)
    if th is not None and th < 1:
        raise ConfigError("threshold must be at least 1")


def intervention_from_config(cfg: dict | None):
    if not cfg or cfg.get("kind") in (None, "none", "identity"):
        return None
    kind = cfg["kind"]
    args = {k: v for k, v in cfg.items() if k != "kind"}
    cls = {"contact_reduction": ContactReductionGlobal, "district_isolation": DistrictIsolation,
           "vaccination": Vaccination}.get(kind)
    if cls is None:
        raise ConfigError(f"unknown intervention kind {kind!r}")
    try:
        iv = cls(**args)
    except TypeError as exc:
        raise ConfigError(f"malformed {kind} intervention: {exc}") from exc
    _check(iv)
    return iv


def intervention_to_config(iv) -> dict:
    if iv is None:
        return {"kind": "identity"}
    kind = {ContactReductionGlobal: "contact_reduction", DistrictIsolation: "district_isolation",
            Vaccination: "vaccination"}[type(iv)]
    return {"kind": kind, **iv.__dict__}


@dataclass
class EdgeRates:
    """Counterfactual rate of every directed edge ``i -> j``.

    ``rates(i, j)`` gives the rate before and after ``activation_time``.
    Edges in ``removed_after`` drop to zero at activation; ``inbound_scale``
    multiplies the rate into each node from time zero (vaccination).
    """

    beta: float
    n_nodes: int
    activation_time: float = math.inf
    removed_after: set = field(default_factory=set)
    inbound_scale: np.ndarray | None = None

    def _key(self, i, j):
        return i * self.n_nodes + j if i < j else j * self.n_nodes + i

    def rates(self, i: int, j: int) -> tuple[float, float]:
        b = self.beta if self.inbound_scale is None else self.beta * self.inbound_scale[j]
        if self.removed_after and self._key(i, j) in self.removed_after:
            return b, 0.0
        return b, b

    def max_rate(self) -> float:
        if self.inbound_scale is None:
            return self.beta
        return self.beta * float(self.inbound_scale.max(initial=0.0))

    def is_identity(self, beta_m: float) -> bool:
        return (self.beta == beta_m and not self.removed_after
                and (self.inbound_scale is None or bool(np.all(self.inbound_scale == 1.0))))


def activation_time(observed: Outbreak, threshold: int) -> float:
    """First time the observed number of active infections reaches ``threshold``."""
    inf = observed.infected
    times = np.concatenate([observed.infection_time[inf], observed.recovery_time[inf]])
    delta = np.concatenate([np.ones(inf.sum(), np.int64), -np.ones(inf.sum(), np.int64)])
    # recoveries before infections at equal times
    order = np.lexsort((delta, times))
    active = np.cumsum(delta[order])
    hit = np.flatnonzero((active >= threshold) & (times[order] <= observed.horizon))
    return float(times[order][hit[0]]) if hit.size else math.inf


def _edge_keys(network: ContactNetwork, mask) -> set:
    e = network.edges[mask]
    return set((e[:, 0] * network.n_nodes + e[:, 1]).tolist())


def apply_intervention(intervention, observed: Outbreak, network: ContactNetwork, params: SirParams,
                       stream: Stream):
    """Return ``(network_cf, rates, activation_time)`` for an intervention.

    Threshold activations are read off the observed trajectory: before
    activation all intensities coincide, so the counterfactual trajectory
    equals the observed one up to that time.
    """
    n = network.n_nodes
    rates = EdgeRates(params.beta, n)
    if intervention is None:
        return network, rates, math.inf
    if isinstance(intervention, Vaccination):
        k = math.ceil(intervention.coverage * n - 1e-9)
        chosen = stream.permutation(n)[:k]
        scale = np.ones(n)
        scale[chosen] = 1.0 - intervention.efficacy
        rates.inbound_scale = scale
        rates.activation_time = 0.0
        return network, rates, 0.0
    act = activation_time(observed, intervention.threshold)
    if math.isinf(act):
        return network, rates, math.inf
    rates.activation_time = act
    u, v = network.edges[:, 0], network.edges[:, 1]
    if isinstance(intervention, ContactReductionGlobal):
        removed = stream.uniform(len(u)) < intervention.reduction
        rates.removed_after = _edge_keys(network, removed)
        return network, rates, act
    if isinstance(intervention, DistrictIsolation):
        target = target_district(observed, network, act)
        du, dv = network.district[u], network.district[v]
        within = (du == target) & (dv == target)
        removed = within & (stream.uniform(len(u)) < intervention.within_reduction)
        if intervention.cross_isolation:
            removed |= (du != dv) & ((du == target) | (dv == target))
        rates.removed_after = _edge_keys(network, removed)
        return network, rates, act
    raise ConfigError(f"unsupported intervention {intervention!r}")


def target_district(observed: Outbreak, network: ContactNetwork, t: float) -> int:
    """District with the most active infections at ``t``; ties go to the smallest id."""
    active = (observed.infection_time <= t) & (observed.recovery_time > t)
    counts = np.bincount(network.district[active], minlength=len(network.district_ids))
    best = counts.max()
    candidates = [d for d in range(counts.size) if counts[d] == best]
    return min(candidates, key=lambda d: network.district_ids[d])
