"""Per-criterion stability diagnostics over focus sets."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Set, Tuple

import numpy as np

from ..exceptions.audit_exceptions import EmptyCorpusError
from .schema import Schema
from .tensor import VoteTable

logger = logging.getLogger('schemaudit.stability')


@dataclass(frozen=True)
class VoteDistribution:
    """Share of focus units with exactly k votes, k in t..A; mass is None when the focus set is empty."""
    criterion_id: str
    threshold: int
    panel_size: int
    focus_size: int
    mass: Optional[Dict[int, float]]

    @property
    def is_empty(self) -> bool:
        return self.focus_size == 0


@dataclass(frozen=True)
class StabilityRow:
    """One criterion's stability summary at a threshold. Rates are None for empty focus sets."""
    criterion_id: str
    threshold: int
    activation: Optional[float]
    nt: Optional[float]
    as_: Optional[float]
    uy: Optional[float]
    ambiguity: Optional[float]
    focus_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'criterion_id': self.criterion_id,
            'threshold': self.threshold,
            'activation': self.activation,
            'nt': self.nt,
            'as': self.as_,
            'uy': self.uy,
            'ambiguity': self.ambiguity,
            'focus_size': self.focus_size,
        }


class StabilityAnalyzer:
    """Activation, vote distribution and zone rates per criterion."""

    @staticmethod
    def near_tie_levels(panel_size: int) -> Set[int]:
        """NT levels: 0 < k < A with |2k - A| <= 1 ({2, 3} when A = 5)."""
        return {k for k in range(1, panel_size) if abs(2 * k - panel_size) <= 1}

    @staticmethod
    def asymmetric_levels(panel_size: int, t: int) -> Set[int]:
        """AS levels: the split levels in {max(t,1)..A-1} that are not near-ties."""
        near_ties = StabilityAnalyzer.near_tie_levels(panel_size)
        return {k for k in range(max(t, 1), panel_size) if k not in near_ties}

    @staticmethod
    def activation_rate(votes: VoteTable, criterion_id: str, t: int) -> float:
        """Fraction of all units in the focus set of a criterion.

        Raises:
            EmptyCorpusError: If the vote table has no units
        """
        mask = votes.focus_mask(criterion_id, t)
        if votes.n_units == 0:
            raise EmptyCorpusError("Activation rate is undefined on an empty corpus")
        return int(mask.sum()) / votes.n_units

    @staticmethod
    def vote_distribution(votes: VoteTable, criterion_id: str, t: int) -> VoteDistribution:
        """Share of focus-set units with exactly k positive votes, for k in t..A."""
        column = votes.counts[:, votes.criterion_index(criterion_id)]
        votes.check_threshold(t)
        engaged = column[column >= t]
        focus_size = int(engaged.size)
        mass = None
        if focus_size:
            histogram = np.bincount(engaged, minlength=votes.panel_size + 1)
            mass = {k: int(histogram[k]) / focus_size for k in range(t, votes.panel_size + 1)}
        return VoteDistribution(criterion_id, t, votes.panel_size, focus_size, mass)

    @staticmethod
    def zone_rates(dist: VoteDistribution) -> Tuple[float, float, float]:
        """Return (UY, AS, NT) masses of a nonempty distribution.

        Raises:
            EmptyCorpusError: If the focus set is empty
        """
        if dist.is_empty:
            raise EmptyCorpusError(f"Zone rates undefined: empty focus set for {dist.criterion_id}")
        uy = dist.mass.get(dist.panel_size, 0.0)
        near_ties = StabilityAnalyzer.near_tie_levels(dist.panel_size)
        asymmetric = StabilityAnalyzer.asymmetric_levels(dist.panel_size, dist.threshold)
        nt = sum(m for k, m in dist.mass.items() if k in near_ties)
        as_ = sum(m for k, m in dist.mass.items() if k in asymmetric)
        return uy, as_, nt

    @staticmethod
    def ambiguity_rate(dist: VoteDistribution) -> float:
        """Near-tie mass among engaged units. Same statistic as NT."""
        return StabilityAnalyzer.zone_rates(dist)[2]

    @staticmethod
    def stability_row(votes: VoteTable, criterion_id: str, t: int) -> StabilityRow:
        dist = StabilityAnalyzer.vote_distribution(votes, criterion_id, t)
        activation = dist.focus_size / votes.n_units if votes.n_units else None
        if dist.is_empty:
            logger.warning(f"Empty focus set for {criterion_id} at t={t}")
            return StabilityRow(criterion_id, t, activation, None, None, None, None, 0)
        uy, as_, nt = StabilityAnalyzer.zone_rates(dist)
        return StabilityRow(criterion_id, t, activation, nt, as_, uy, nt, dist.focus_size)

    @staticmethod
    def stability_table(votes: VoteTable, schema: Schema, t: int) -> List[StabilityRow]:
        """One row per schema criterion, in schema order.

        Raises:
            TensorError: If a schema criterion is missing from the votes
        """
        votes.check_threshold(t)
        rows = [StabilityAnalyzer.stability_row(votes, q, t) for q in schema.criterion_ids]
        logger.info(f"Computed stability for {len(rows)} criteria at t={t}")
        return rows
