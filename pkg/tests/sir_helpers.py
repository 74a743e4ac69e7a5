import math

import numpy as np

from cftpp.sir.epidemic import SEED, UNINFECTED, Outbreak
from cftpp.sir.network import ContactNetwork


def star(k: int) -> ContactNetwork:
    edges = np.array([[0, j] for j in range(1, k + 1)], dtype=np.int64)
    return ContactNetwork(np.zeros(k + 1, dtype=np.int64), edges, ("D0",), ("GN",))


def graph(n: int, edges) -> ContactNetwork:
    e = np.array(sorted(tuple(sorted(p)) for p in edges), dtype=np.int64).reshape(-1, 2)
    return ContactNetwork(np.zeros(n, dtype=np.int64), e, ("D0",), ("GN",))


def lewis_edge_outbreak(network, beta, delta, seeds, horizon, rng, lam_max):
    """Reference SIR sampler: every directed edge kernel thinned from a rate ``lam_max`` process."""
    n = network.n_nodes
    t = np.full(n, math.inf)
    tau = np.full(n, math.inf)
    src = np.full(n, UNINFECTED, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    t[seeds] = 0.0
    src[seeds] = SEED
    while True:
        pending = np.flatnonzero(~done & np.isfinite(t))
        if pending.size == 0:
            break
        i = pending[np.argmin(t[pending])]
        done[i] = True
        tau[i] = t[i] + rng.exponential(1 / delta)
        for j in network.neighbors(i):
            if done[j]:
                continue
            s = t[i]
            while True:
                s += rng.exponential(1 / lam_max)
                if s >= tau[i] or s > horizon:
                    break
                if rng.uniform() < beta / lam_max:
                    if s < t[j]:
                        t[j], src[j] = s, i
                    break
    return Outbreak(t, tau, src, horizon)
