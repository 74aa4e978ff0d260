"""Heuristic gas-price oracles used as non-learned baselines."""

import numpy as np

from ..ingest import percentile

GETH_BLOCKS = 20
GETH_PERCENTILE = 60.0
GSE_BLOCKS = 200


def baseline_geth(minima, blocks=GETH_BLOCKS, rank=GETH_PERCENTILE):
    """Recommended price: the 60th percentile of the last 20 block minima."""
    x = np.asarray(minima, dtype=float)
    if x.size < blocks:
        raise ValueError(f"need at least {blocks} block minima, have {x.size}")
    return percentile(x[-blocks:], rank)


def baseline_gse(minima, candidate, blocks=GSE_BLOCKS):
    """Share of the last 200 blocks whose minimum price is at most ``candidate``."""
    x = np.asarray(minima, dtype=float)
    if x.size < blocks:
        raise ValueError(f"need at least {blocks} block minima, have {x.size}")
    return float(np.count_nonzero(x[-blocks:] <= candidate)) / blocks


def rolling_baseline_geth(minima, blocks=GETH_BLOCKS):
    """Recommendation after every block once ``blocks`` minima are available."""
    x = np.asarray(minima, dtype=float)
    return np.array([baseline_geth(x[:end], blocks) for end in range(blocks, x.size + 1)])
