"""Instance and neighbourhood supervision losses with exact gradients.

Both losses score a fresh, unit-norm batch feature x against the frozen
memory bank M (rows m_j) through the shared distribution

    p_j = softmax_j( (x . m_j) / tau ).

The instance loss is -log p_i (the anchor's own memory row is the target);
the neighbourhood loss is -log sum_{j in members} p_j. The instance case
is literally the neighbourhood case with the singleton member set {i}, and
the implementation shares one code path so the reduction is exact to the
last bit.

Gradients are taken with respect to x only, holding memory rows constant:
the memory is refreshed by its own moving-average rule, not by
backpropagation. Writing q = sum_{members} p_j and t_j = p_j / q for
members (0 otherwise),

    d(-log q)/dx = (1/tau) * sum_j (p_j - t_j) * m_j,

which the tests validate against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .affinity import Neighbourhood, prob_row
from .errors import ContractError
from .memory import FeatureBank
from .numerics import stable_softmax


@dataclass(frozen=True)
class LossGrad:
    loss: float
    grad: np.ndarray  # d(loss)/d(fresh feature), length d


def _member_term(anchor: int, x, members, bank: FeatureBank, tau: float) -> LossGrad:
    p = prob_row(x, bank, tau, anchor=anchor).probs
    idx = np.asarray(members, dtype=np.int64)
    q = p[idx].sum()
    target = np.zeros_like(p)
    target[idx] = p[idx] / q
    grad = (p - target) @ bank.features / tau
    return LossGrad(loss=float(-np.log(q)), grad=grad)


def instance_term(i: int, x_i, bank: FeatureBank, tau: float) -> LossGrad:
    """Self-recognition loss -log p_i for a sample treated as its own class."""
    return _member_term(i, x_i, (i,), bank, tau)


def neighbourhood_term(
    i: int, x_i, nb: Neighbourhood, bank: FeatureBank, tau: float
) -> LossGrad:
    """Neighbourhood-membership loss -log sum of member probabilities.

    Always at most the instance loss, since the member set contains the
    anchor; with a singleton member set the two are identical.
    """
    if nb.anchor != i:
        raise ContractError(f"neighbourhood anchored at {nb.anchor}, expected {i}")
    if not nb.members:
        raise ContractError("neighbourhood has no members")
    return _member_term(i, x_i, nb.members, bank, tau)


def round_batch_loss(
    batch: Sequence[tuple[int, np.ndarray]], plan, bank: FeatureBank, tau: float
) -> tuple[float, np.ndarray]:
    """Mean mixed loss over a batch and gradients of that mean.

    `plan` supplies a boolean `selected` mask over all samples and a
    `neighbourhood_for(anchor)` lookup for the selected ones. Selected
    anchors contribute their neighbourhood term, the rest their instance
    term. Row b of the returned gradient matrix is d(mean loss)/d(feature
    of sample b), ready to feed straight into the encoder backward pass.

    The whole batch is evaluated in one vectorised pass; the per-sample
    term functions above serve as its reference oracle in the tests.
    """
    indices = [int(i) for i, _ in batch]
    feats = np.stack([f for _, f in batch]).astype(np.float64, copy=False)
    b, n = len(indices), bank.n
    selected = np.asarray(plan.selected, dtype=bool)
    member_mask = np.zeros((b, n), dtype=bool)
    for row, i in enumerate(indices):
        if not 0 <= i < selected.size:
            raise ContractError(f"sample {i} missing from the round plan")
        if selected[i]:
            member_mask[row, list(plan.neighbourhood_for(i).members)] = True
        else:
            member_mask[row, i] = True

    p = stable_softmax(feats @ bank.features.T / tau)
    q = np.where(member_mask, p, 0.0).sum(axis=1)
    losses = -np.log(q)
    target = np.where(member_mask, p, 0.0) / q[:, None]
    grads = (p - target) @ bank.features / (tau * b)
    return float(losses.mean()), grads
