"""Similarity distributions, anchor neighbourhoods, and consistency entropy.

A probability row is the temperature-scaled softmax of one query feature's
cosine scores against every memory row. An anchor neighbourhood is the
anchor itself plus its k most similar bank rows. The Shannon entropy of a
sample's probability row is the curriculum's difficulty score: a peaked row
means the sample sits in a sparse region with an easily separable, likely
class-pure neighbourhood, while a flat row marks a crowded, ambiguous one.

All log/entropy values use the natural logarithm; only the entropy ordering
matters for curriculum selection, so the base is a free choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError
from .memory import FeatureBank, all_similarities
from .numerics import stable_softmax


@dataclass(frozen=True)
class ProbRow:
    """Distribution of one query over all bank rows; entries sum to 1."""

    probs: np.ndarray  # (n,) float64
    anchor: int = -1  # bank index of the query, -1 if the query is external


@dataclass(frozen=True)
class Neighbourhood:
    """An anchor index plus its k nearest member indices.

    `members` lists the anchor first, then neighbours in decreasing
    similarity order; ties are broken by lower index everywhere so runs are
    reproducible. A singleton neighbourhood (k = 0) is the instance case.
    """

    anchor: int
    members: tuple[int, ...]
    k: int

    def __post_init__(self):
        if self.anchor not in self.members:
            raise ContractError(f"anchor {self.anchor} missing from members {self.members}")
        if len(self.members) != self.k + 1:
            raise ContractError(f"expected k+1={self.k + 1} members, got {len(self.members)}")
        if len(set(self.members)) != len(self.members):
            raise ContractError(f"duplicate members in {self.members}")


def singleton(anchor: int) -> Neighbourhood:
    return Neighbourhood(anchor=anchor, members=(anchor,), k=0)


def prob_row(query, bank: FeatureBank, tau: float, anchor: int = -1) -> ProbRow:
    """Softmax over cosine scores of `query` against the bank, at temperature `tau`."""
    if not tau > 0:
        raise ConfigurationError(f"temperature must be > 0, got {tau}")
    return ProbRow(probs=stable_softmax(all_similarities(bank, query) / tau), anchor=anchor)


def build_neighbourhoods(bank: FeatureBank, k: int) -> list[Neighbourhood]:
    """Exact top-k cosine neighbourhoods for every bank row.

    For anchor i the members are {i} plus the k other rows with the largest
    inner products against row i, ties resolved toward lower indices. Exact
    O(n^2) search; the bank is desk-scale by design.
    """
    n = bank.n
    if not 1 <= k <= n - 1:
        raise ConfigurationError(f"k must lie in [1, {n - 1}], got {k}")
    sims = bank.features @ bank.features.T
    np.fill_diagonal(sims, -np.inf)  # the anchor joins explicitly, not via search
    # stable argsort of -sims: equal scores keep ascending index order
    order = np.argsort(-sims, axis=1, kind="stable")
    out = []
    for i in range(n):
        picked = tuple(int(j) for j in order[i, :k])
        out.append(Neighbourhood(anchor=i, members=(i,) + picked, k=k))
    return out


def entropy(p: ProbRow) -> float:
    """Shannon entropy of a probability row, with 0 * log(0) taken as 0."""
    probs = p.probs
    nz = probs[probs > 0.0]
    return float(-(nz * np.log(nz)).sum())


def entropy_rows(prob_matrix: np.ndarray) -> np.ndarray:
    """Row-wise entropies of a stack of probability rows."""
    p = np.asarray(prob_matrix, dtype=np.float64)
    logp = np.where(p > 0.0, np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -(p * logp).sum(axis=1)
