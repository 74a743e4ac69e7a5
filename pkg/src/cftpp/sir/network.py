"""District geography and stochastic-block-model contact networks."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..randomness import Stream

COUNTRIES = ("GN", "LB", "SL")
COUNTRY_FIELD = {"GN": "guinea", "LB": "liberia", "SL": "sierra_leone"}


@dataclass(frozen=True)
class District:
    id: str
    country: str
    weight: float


@dataclass(frozen=True)
class Geography:
    districts: tuple[District, ...]
    contiguity: frozenset[frozenset[str]]
    total_nodes: int = 8000
    seed_cases: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        ids = [d.id for d in self.districts]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate district ids")
        for d in self.districts:
            if d.country not in COUNTRIES:
                raise ConfigError(f"district {d.id}: unknown country {d.country!r}")
            if not d.weight > 0:
                raise ConfigError(f"district {d.id}: population weight must be positive")
        known = set(ids)
        for pair in self.contiguity:
            if len(pair) != 2 or not pair <= known:
                raise ConfigError(f"bad contiguity pair {sorted(pair)}")
        for did, _ in self.seed_cases:
            if did not in known:
                raise ConfigError(f"seed case in unknown district {did!r}")
        if self.total_nodes < len(self.districts):
            raise ConfigError("total_nodes smaller than the number of districts")

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.districts]

    def index(self) -> dict[str, int]:
        return {d.id: i for i, d in enumerate(self.districts)}

    def node_counts(self) -> np.ndarray:
        """Largest-remainder allocation of ``total_nodes`` proportional to weight."""
        w = np.array([d.weight for d in self.districts], dtype=float)
        quota = self.total_nodes * w / w.sum()
        counts = np.floor(quota).astype(np.int64)
        short = self.total_nodes - counts.sum()
        order = np.lexsort((np.arange(w.size), -(quota - counts)))
        counts[order[:short]] += 1
        return counts

    def contiguous(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.contiguity

    def to_dict(self) -> dict:
        d = {"districts": [asdict(x) for x in self.districts],
             "contiguity": sorted(sorted(p) for p in self.contiguity),
             "total_nodes": self.total_nodes}
        if self.seed_cases:
            d["seed_cases"] = [{"district": a, "count": n} for a, n in self.seed_cases]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Geography":
        try:
            districts = tuple(District(str(x["id"]), str(x["country"]), float(x["weight"]))
                              for x in d["districts"])
            contig = frozenset(frozenset((str(a), str(b))) for a, b in d.get("contiguity", []))
            seeds = tuple((str(s["district"]), int(s["count"])) for s in d.get("seed_cases", []))
            return cls(districts, contig, int(d.get("total_nodes", 8000)), seeds)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed geography: {exc}") from exc


def load_geography(path) -> Geography:
    return Geography.from_dict(json.loads(Path(path).read_text()))


def bundled_geography() -> Geography:
    """Synthetic 55-district West-Africa-like geography shipped with the package."""
    text = resources.files("cftpp.sir").joinpath("data/west_africa_synthetic.json").read_text()
    return Geography.from_dict(json.loads(text))


@dataclass(frozen=True)
class SbmProbabilities:
    within: float = 1e-2
    guinea: float = 2.15e-3
    liberia: float = 3e-3
    sierra_leone: float = 3.15e-3
    cross_country: float = 1.9e-3

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"edge probability {k}={v} outside [0, 1]")

    def pair(self, geo: Geography, a: District, b: District) -> float:
        if a.id == b.id:
            return self.within
        if not geo.contiguous(a.id, b.id):
            return 0.0
        if a.country != b.country:
            return self.cross_country
        return getattr(self, COUNTRY_FIELD[a.country])

    @classmethod
    def from_dict(cls, d: dict) -> "SbmProbabilities":
        try:
            return cls(**{k: float(v) for k, v in d.items()})
        except TypeError as exc:
            raise ConfigError(f"malformed edge probabilities: {exc}") from exc


@dataclass(frozen=True, eq=False)
class ContactNetwork:
    """Undirected simple graph; nodes are numbered district by district."""

    district: np.ndarray          # district index of every node
    edges: np.ndarray             # (E, 2) int array, u < v, lexicographically sorted
    district_ids: tuple[str, ...]
    countries: tuple[str, ...]    # country of every district
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        district = np.asarray(self.district, dtype=np.int64)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must satisfy u < v (no self loops)")
            if np.unique(edges, axis=0).shape[0] != edges.shape[0]:
                raise ValueError("duplicate edges")
        object.__setattr__(self, "district", district)
        object.__setattr__(self, "edges", edges)
        n = district.size
        both = np.concatenate([edges, edges[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        object.__setattr__(self, "indptr", np.cumsum(indptr))
        object.__setattr__(self, "indices", both[:, 1].copy())

    @property
    def n_nodes(self) -> int:
        return self.district.size

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def node_country(self) -> np.ndarray:
        return np.array(self.countries)[self.district]

    def nodes_in(self, district_id: str) -> np.ndarray:
        return np.flatnonzero(self.district == self.district_ids.index(district_id))

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < nb.size and nb[k] == v)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def without_edges(self, removed: np.ndarray) -> "ContactNetwork":
        keep = ~np.asarray(removed, dtype=bool)
        return ContactNetwork(self.district, self.edges[keep], self.district_ids, self.countries)


def generate_network(geo: Geography, probs: SbmProbabilities, stream: Stream) -> ContactNetwork:
    """Connect every node pair independently with its block probability."""
    counts = geo.node_counts()
    offsets = np.concatenate([[0], np.cumsum(counts)])
    district = np.repeat(np.arange(len(counts)), counts)
    blocks = []
    ds = geo.districts
    for a in range(len(ds)):
        for b in range(a, len(ds)):
            p = probs.pair(geo, ds[a], ds[b])
            if p <= 0.0:
                continue
            na, nb = counts[a], counts[b]
            if a == b:
                iu, ju = np.triu_indices(na, 1)
                hit = stream.uniform(iu.size) < p
                blocks.append(np.column_stack([iu[hit], ju[hit]]) + offsets[a])
            else:
                hit = (stream.uniform(na * nb) < p).reshape(na, nb)
                ii, jj = np.nonzero(hit)
                blocks.append(np.column_stack([ii + offsets[a], jj + offsets[b]]))
    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))] if edges.size else edges
    return ContactNetwork(district, edges, tuple(geo.ids), tuple(d.country for d in ds))
