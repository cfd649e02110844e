"""Ideal-model probe simulator.

Probes propagate root-to-leaf through each tree with independent Bernoulli
losses per link; only receiver bits are recorded, already collapsed into a
pattern table.  Randomness is addressed by (seed, replicate, tree, block):
probes are generated in fixed-size blocks with an independent counter-based
stream per block, so the output is bit-identical however the blocks are
distributed across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .params import LossRates, _unwrap
from .statistics import PatternTable
from .topology import GeneralNetwork

BLOCK_PROBES = 4096
THETA_CLAMP = 1e-6


@dataclass
class SimConfig:
    """One simulated experiment: cfg.probes total probes split evenly across
    trees (remainder to the lowest tree id)."""

    net: GeneralNetwork
    probes: int
    seed: int
    replicate: int = 0
    beta: tuple[float, float] | None = None   # provenance of the rates, if drawn

    def tree_probes(self) -> dict[int, int]:
        ids = [t.tree_id for t in self.net.trees]
        base, extra = divmod(self.probes, len(ids))
        return {k: base + (1 if pos < extra else 0) for pos, k in enumerate(ids)}


def sample_theta(a: float, b: float, net: GeneralNetwork,
                 rng: np.random.Generator) -> LossRates:
    """Draw i.i.d. Beta(a, b) loss rates per link, ascending link-id order."""
    if a <= 0 or b <= 0:
        raise ValueError("Beta parameters must be positive")
    ids = sorted(net.links)
    draws = rng.beta(a, b, size=len(ids))
    clipped = np.clip(draws, THETA_CLAMP, 1.0 - THETA_CLAMP)
    return LossRates({i: float(v) for i, v in zip(ids, clipped)})


def _block_patterns(cfg: SimConfig, theta: dict[int, float], tree_id: int,
                    rows: int, block: int) -> dict[str, int]:
    tree = cfg.net.tree_by_id[tree_id]
    order = tree.order
    col = {i: q for q, i in enumerate(order)}
    ss = np.random.SeedSequence((cfg.seed, cfg.replicate, tree_id, block))
    u = np.random.Generator(np.random.Philox(seed=ss)).random((rows, len(order)))
    passed = np.empty((rows, len(order)), dtype=bool)
    for q, i in enumerate(order):
        ok = u[:, q] >= theta[i]
        if i == tree.root_link:
            passed[:, q] = ok
        else:
            passed[:, q] = passed[:, col[tree.parent[i]]] & ok
    bits = passed[:, [col[leaf] for leaf in tree.leaves]]
    uniq, counts = np.unique(bits, axis=0, return_counts=True)
    return {"".join("1" if b else "0" for b in row): int(c)
            for row, c in zip(uniq, counts)}


def simulate(cfg: SimConfig, theta, workers: int = 1) -> PatternTable:
    """Run the experiment and return collapsed receiver observations."""
    th = _unwrap(theta, "theta")
    split = cfg.tree_probes()
    jobs = []
    for k in sorted(split):
        n_k = split[k]
        for block in range(0, max(1, (n_k + BLOCK_PROBES - 1) // BLOCK_PROBES)):
            rows = min(BLOCK_PROBES, n_k - block * BLOCK_PROBES)
            if rows > 0:
                jobs.append((k, rows, block))

    def run(job):
        k, rows, block = job
        return k, _block_patterns(cfg, th, k, rows, block)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(run, jobs))
    else:
        pieces = [run(job) for job in jobs]

    counts: dict[int, dict[str, int]] = {k: {} for k in split}
    for k, table in pieces:
        for bits, c in table.items():
            counts[k][bits] = counts[k].get(bits, 0) + c
    receivers = {k: cfg.net.tree_by_id[k].leaves for k in split}
    name = f"sim-seed{cfg.seed}-rep{cfg.replicate}"
    return PatternTable(name, split, receivers, counts)
