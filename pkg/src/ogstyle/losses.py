"""Training objectives: supervised cross-entropy over mined pairs, the
language-model discriminator loss, the semantic-similarity loss, and their
weighted combination.

Reductions, left implicit upstream, are fixed here: the supervised loss sums
over positions and averages over the batch; the language-model loss averages
over steps and batch.  Probabilities are floored at 1e-12 before any log.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import torch

from .errors import DataError

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Mixing weights: alpha balances supervised vs unsupervised, beta/gamma
    weight the language-model and similarity terms, tau is the Gumbel-Softmax
    temperature."""

    alpha: float = 0.7
    beta: float = 1.0
    gamma: float = 1.0
    tau: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise DataError(f"alpha out of range: {self.alpha}")
        if self.beta < 0 or self.gamma < 0:
            raise DataError("beta and gamma must be non-negative")
        if self.tau <= 0:
            raise DataError(f"tau must be positive: {self.tau}")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-step record of every loss component and their combination."""

    l_sup: float
    l_lm: float
    l_ss: float
    l_unsup: float
    l_total: float
    weights: LossWeights = field(default_factory=LossWeights)

    @classmethod
    def from_components(cls, l_sup: float, l_lm: float, l_ss: float,
                        weights: LossWeights) -> "LossBreakdown":
        l_unsup = weights.beta * l_lm + weights.gamma * l_ss
        l_total = weights.alpha * l_sup + (1.0 - weights.alpha) * l_unsup
        return cls(l_sup=float(l_sup), l_lm=float(l_lm), l_ss=float(l_ss),
                   l_unsup=float(l_unsup), l_total=float(l_total), weights=weights)

    def as_dict(self) -> dict:
        return {
            "l_sup": self.l_sup,
            "l_lm": self.l_lm,
            "l_ss": self.l_ss,
            "l_unsup": self.l_unsup,
            "l_total": self.l_total,
            "alpha": self.weights.alpha,
            "beta": self.weights.beta,
            "gamma": self.weights.gamma,
        }


def _as_batch(x: torch.Tensor) -> torch.Tensor:
    return x.unsqueeze(0) if x.dim() == 2 else x


def sup_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    mask: torch.Tensor | None = None,
) -> torch.Tensor:
    """Cross-entropy of predicted distributions against one-hot targets.

    `pred` holds probability rows, (N, V) or (B, N, V); `target` holds the
    true token ids.  The sum runs over positions, the mean over the batch.
    """
    pred = _as_batch(pred)
    if target.dim() == 1:
        target = target.unsqueeze(0)
    if pred.shape[:2] != target.shape:
        raise DataError(f"prediction/target length mismatch: {pred.shape} vs {target.shape}")
    nll = -torch.log(pred.clamp_min(PROB_FLOOR)).gather(-1, target.unsqueeze(-1)).squeeze(-1)
    if mask is not None:
        nll = nll * mask.to(nll.dtype)
    return nll.sum(dim=1).mean()


def lm_loss(
    pi: torch.Tensor,
    q: torch.Tensor,
    mask: torch.Tensor | None = None,
) -> torch.Tensor:
    """Cross-entropy between decoder distributions and LM next-token
    distributions, averaged over steps then over the batch.

    Minimized (at the entropy of pi) exactly when q matches pi step-wise.
    """
    pi = _as_batch(pi)
    q = _as_batch(q)
    if pi.shape != q.shape:
        raise DataError(f"misaligned distribution sequences: {pi.shape} vs {q.shape}")
    step_ce = -(pi * torch.log(q.clamp_min(PROB_FLOOR))).sum(dim=-1)
    if mask is None:
        return step_ce.mean(dim=1).mean()
    m = mask.to(step_ce.dtype)
    per_sent = (step_ce * m).sum(dim=1) / m.sum(dim=1).clamp_min(1.0)
    return per_sent.mean()


def ss_loss(src_reps: torch.Tensor, out_reps: torch.Tensor) -> torch.Tensor:
    """Mean squared (1 - cosine) between input and soft-output sentence
    representations; `src_reps` and `out_reps` are (M, dim)."""
    if src_reps.shape != out_reps.shape:
        raise DataError(f"batch shape mismatch: {src_reps.shape} vs {out_reps.shape}")
    if src_reps.dim() != 2:
        raise DataError("sentence representations must be (batch, dim)")
    norms = src_reps.norm(dim=1) * out_reps.norm(dim=1)
    with torch.no_grad():
        if bool((norms == 0).any()):
            logger.warning("zero-norm sentence representation in similarity loss")
    cos = (src_reps * out_reps).sum(dim=1) / norms.clamp_min(PROB_FLOOR)
    return ((1.0 - cos) ** 2).mean()


def unsup_loss(l_lm, l_ss, w: LossWeights):
    """Linear combination of the LM and similarity terms."""
    return w.beta * l_lm + w.gamma * l_ss


def joint_loss(l_sup, l_unsup, w: LossWeights):
    """Convex combination of the supervised and unsupervised objectives."""
    return w.alpha * l_sup + (1.0 - w.alpha) * l_unsup
