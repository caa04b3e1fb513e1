"""Threshold sweeps, fixed-size leave-one-out panels, rank stability and annotator profiles."""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions.audit_exceptions import RobustnessError
from .schema import Schema
from .separability import OverlapSummary, SeparabilityAnalyzer
from .stability import StabilityAnalyzer, StabilityRow
from .tensor import ResponseTensor, TensorBuilder, VoteTable

logger = logging.getLogger('schemaudit.robustness')

# StabilityRow attribute behind each rankable metric name
METRIC_ATTRIBUTES = {
    'activation': 'activation',
    'nt': 'nt',
    'ambiguity': 'ambiguity',
    'as': 'as_',
    'uy': 'uy',
}


@dataclass(frozen=True)
class PanelVariant:
    name: str
    annotator_ids: Tuple[str, ...]


@dataclass(frozen=True)
class ThresholdResult:
    """Stability and overlap at one threshold of a sweep."""
    threshold: int
    stability: Tuple[StabilityRow, ...]
    overlap: OverlapSummary


@dataclass(frozen=True)
class CriterionRank:
    criterion_id: str
    values: Dict[str, Optional[float]]
    ranks: Dict[str, int]
    top_k_count: int
    reference: Optional[float] = None

    @property
    def defined_values(self) -> List[float]:
        return [v for v in self.values.values() if v is not None]

    @property
    def value_min(self) -> Optional[float]:
        return min(self.defined_values) if self.defined_values else None

    @property
    def value_max(self) -> Optional[float]:
        return max(self.defined_values) if self.defined_values else None

    @property
    def delta(self) -> Optional[float]:
        if not self.defined_values:
            return None
        return self.value_max - self.value_min

    @property
    def rank_range(self) -> Tuple[int, int]:
        return min(self.ranks.values()), max(self.ranks.values())


@dataclass(frozen=True)
class RankStability:
    """Rank behaviour of one metric across variants (rank 1 = largest)."""
    metric: str
    k: int
    variant_names: Tuple[str, ...]
    rows: Tuple[CriterionRank, ...]

    def row(self, criterion_id: str) -> CriterionRank:
        for row in self.rows:
            if row.criterion_id == criterion_id:
                return row
        raise RobustnessError(f"Unknown criterion in rank table: {criterion_id}")

    def top_k(self, variant: str) -> List[str]:
        """Criteria ranked within the top k for one variant, best first."""
        ranked = sorted(self.rows, key=lambda r: r.ranks[variant])
        return [r.criterion_id for r in ranked[:self.k]]

    def to_rows(self) -> List[Dict[str, Any]]:
        n = len(self.variant_names)
        rows = []
        for r in self.rows:
            low, high = r.rank_range
            record: Dict[str, Any] = {'criterion_id': r.criterion_id}
            if r.reference is not None:
                record['reference'] = r.reference
            record.update({
                'min': r.value_min,
                'max': r.value_max,
                'delta': r.delta,
                'rank_range': f"{low}-{high}" if low != high else str(low),
                f'top{self.k}_freq': f"{r.top_k_count}/{n}",
            })
            rows.append(record)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            'metric': self.metric,
            'k': self.k,
            'variants': list(self.variant_names),
            'criteria': [
                {
                    'criterion_id': r.criterion_id,
                    'values': r.values,
                    'ranks': r.ranks,
                    'top_k_count': r.top_k_count,
                    'min': r.value_min,
                    'max': r.value_max,
                    'delta': r.delta,
                    'reference': r.reference,
                }
                for r in self.rows
            ],
        }


@dataclass(frozen=True)
class LooResult:
    threshold: int
    panel_size: int
    variants: Tuple[PanelVariant, ...]
    tables: Dict[str, Tuple[StabilityRow, ...]]
    nt: RankStability
    uy: RankStability


@dataclass(frozen=True, eq=False)
class AnnotatorProfiles:
    """Corpus-level activation rate per (annotator, criterion)."""
    annotator_ids: Tuple[str, ...]
    criterion_ids: Tuple[str, ...]
    rates: Optional[np.ndarray]

    def rate(self, annotator_id: str, criterion_id: str) -> Optional[float]:
        if self.rates is None:
            return None
        return float(self.rates[self.annotator_ids.index(annotator_id), self.criterion_ids.index(criterion_id)])

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {'annotator_id': a, **{q: self.rate(a, q) for q in self.criterion_ids}}
            for a in self.annotator_ids
        ]


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson (phi) correlations between annotators on one focus set."""
    criterion_id: str
    threshold: int
    annotator_ids: Tuple[str, ...]
    entries: Tuple[Tuple[Optional[float], ...], ...]
    focus_size: int

    def entry(self, a: str, b: str) -> Optional[float]:
        return self.entries[self.annotator_ids.index(a)][self.annotator_ids.index(b)]

    def off_diagonal(self) -> List[float]:
        n = len(self.annotator_ids)
        return [self.entries[i][j] for i in range(n) for j in range(i + 1, n) if self.entries[i][j] is not None]


@dataclass(frozen=True)
class CorrelationSummaryRow:
    criterion_id: str
    focus_size: int
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    mean: Optional[float] = None
    undefined_pairs: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'criterion_id': self.criterion_id,
            'focus_size': self.focus_size,
            'min': self.minimum,
            'max': self.maximum,
            'mean': self.mean,
            'undefined_pairs': self.undefined_pairs,
        }


class RobustnessAnalyzer:
    """Perturbs thresholds and panels and tracks how criterion rankings move."""

    @staticmethod
    def default_thresholds(panel_size: int) -> List[int]:
        """t = 1, 2 and ceil(A/2), deduplicated and capped at A."""
        candidates = sorted({1, 2, math.ceil(panel_size / 2)})
        return [t for t in candidates if t <= panel_size]

    @staticmethod
    def threshold_sweep(votes: VoteTable, schema: Schema, thresholds: Optional[Sequence[int]] = None) -> List[ThresholdResult]:
        """Recompute stability and overlap at every requested threshold.

        Args:
            votes: VoteTable of the full panel
            schema: Schema giving criterion order and category mapping
            thresholds: Thresholds in 0..A, defaults to default_thresholds(A)

        Returns:
            One ThresholdResult per threshold, in the order given
        """
        if thresholds is None:
            thresholds = RobustnessAnalyzer.default_thresholds(votes.panel_size)
        for t in thresholds:
            votes.check_threshold(t)
        results = []
        for t in thresholds:
            logger.info(f"Sweeping threshold t={t}")
            results.append(ThresholdResult(
                threshold=t,
                stability=tuple(StabilityAnalyzer.stability_table(votes, schema, t)),
                overlap=SeparabilityAnalyzer.overlap_summary(votes, schema, t),
            ))
        return results

    @staticmethod
    def loo_panels(tensor: ResponseTensor, pool: Sequence[str], panel_size: int) -> List[PanelVariant]:
        """Fixed-size panels obtained by removing one annotator from the pool.

        Raises:
            RobustnessError: If the pool is invalid, too small, or needs more than one removal
        """
        pool = list(pool)
        if len(set(pool)) != len(pool):
            raise RobustnessError("LOO pool contains duplicate annotators")
        unknown = [a for a in pool if a not in tensor.annotator_ids]
        if unknown:
            raise RobustnessError(f"LOO pool annotators not in tensor: {', '.join(unknown)}")
        if panel_size < 1:
            raise RobustnessError(f"Panel size must be positive, got {panel_size}")
        if panel_size > len(pool):
            raise RobustnessError(f"Panel size {panel_size} exceeds pool of {len(pool)} annotators")
        if len(pool) == panel_size:
            return [PanelVariant('full', tuple(pool))]
        if len(pool) - panel_size > 1:
            raise RobustnessError(
                f"Only remove-one panels are supported: pool of {len(pool)} with panel size {panel_size}")
        return [
            PanelVariant(f"drop:{dropped}", tuple(a for a in pool if a != dropped))
            for dropped in sorted(pool)
        ]

    @staticmethod
    def rank_stability(variants: Sequence[Tuple[str, Mapping[str, Optional[float]]]], k: int,
                       metric: str = '', reference: Optional[Mapping[str, Optional[float]]] = None) -> RankStability:
        """Per-criterion value range, rank range and top-k frequency across variants.

        Ranks are ordinal with rank 1 the largest value. Ties keep the criterion
        order of the first variant and absent values rank last.

        Raises:
            RobustnessError: If variants disagree on the criterion set, or k < 1
        """
        if k < 1:
            raise RobustnessError(f"k must be at least 1, got {k}")
        if not variants:
            raise RobustnessError("No variants to rank")
        order = list(variants[0][1])
        for name, values in variants:
            if set(values) != set(order):
                raise RobustnessError(f"Variant '{name}' covers a different criterion set")

        ranks: Dict[str, Dict[str, int]] = {q: {} for q in order}
        for name, values in variants:
            series = pd.Series([values[q] for q in order], index=order, dtype=float)
            ranked = series.rank(method='first', ascending=False, na_option='bottom')
            for q in order:
                ranks[q][name] = int(ranked[q])

        rows = tuple(
            CriterionRank(
                criterion_id=q,
                values={name: values[q] for name, values in variants},
                ranks=ranks[q],
                top_k_count=sum(1 for r in ranks[q].values() if r <= k),
                reference=reference.get(q) if reference else None,
            )
            for q in order
        )
        return RankStability(metric, k, tuple(name for name, _ in variants), rows)

    @staticmethod
    def metric_values(rows: Sequence[StabilityRow], metric: str) -> Dict[str, Optional[float]]:
        try:
            attribute = METRIC_ATTRIBUTES[metric]
        except KeyError:
            raise RobustnessError(f"Unknown metric '{metric}', expected one of {', '.join(METRIC_ATTRIBUTES)}")
        return {row.criterion_id: getattr(row, attribute) for row in rows}

    @staticmethod
    def loo_stability(tensor: ResponseTensor, schema: Schema, pool: Sequence[str], panel_size: int,
                      t: int = 1, k: int = 3, reference_ids: Optional[Sequence[str]] = None) -> LooResult:
        """Stability of every LOO panel plus NT and UY rank stability across them."""
        variants = RobustnessAnalyzer.loo_panels(tensor, pool, panel_size)
        tables: Dict[str, Tuple[StabilityRow, ...]] = {}
        for variant in variants:
            votes = TensorBuilder.vote_counts(tensor.select_annotators(variant.annotator_ids))
            tables[variant.name] = tuple(StabilityAnalyzer.stability_table(votes, schema, t))
            logger.debug(f"Evaluated panel {variant.name}")

        reference_rows = None
        if reference_ids is not None:
            reference_votes = TensorBuilder.vote_counts(tensor.select_annotators(reference_ids))
            reference_rows = StabilityAnalyzer.stability_table(reference_votes, schema, t)

        def ranks_for(metric: str) -> RankStability:
            return RobustnessAnalyzer.rank_stability(
                [(v.name, RobustnessAnalyzer.metric_values(tables[v.name], metric)) for v in variants],
                k,
                metric=metric,
                reference=RobustnessAnalyzer.metric_values(reference_rows, metric) if reference_rows else None,
            )

        logger.info(f"Evaluated {len(variants)} LOO panels of size {panel_size} at t={t}")
        return LooResult(t, panel_size, tuple(variants), tables, ranks_for('nt'), ranks_for('uy'))

    @staticmethod
    def threshold_rank_stability(sweep: Sequence[ThresholdResult], metric: str = 'ambiguity',
                                 k: int = 3) -> RankStability:
        """Rank stability of a metric across the thresholds of a sweep."""
        variants = [
            (f"t={result.threshold}", RobustnessAnalyzer.metric_values(result.stability, metric))
            for result in sweep
        ]
        return RobustnessAnalyzer.rank_stability(variants, k, metric=metric)

    @staticmethod
    def annotator_profiles(tensor: ResponseTensor, schema: Schema) -> AnnotatorProfiles:
        """Share of all units each annotator marks positive per criterion, criteria in schema order."""
        order = list(schema.criterion_ids)
        votes = TensorBuilder.vote_counts(tensor)
        columns = [votes.criterion_index(q) for q in order]
        rates = None
        if tensor.n_units:
            rates = tensor.values[:, :, columns].sum(axis=0, dtype=np.int64) / tensor.n_units
        return AnnotatorProfiles(tensor.annotator_ids, tuple(order), rates)

    @staticmethod
    def annotator_correlations(tensor: ResponseTensor, criterion_id: str, t: int) -> CorrelationMatrix:
        """Pairwise Pearson correlation of annotator votes restricted to the focus set.

        Cells involving an annotator whose votes are constant on the focus set are None.

        Raises:
            RobustnessError: If the focus set has fewer than two units
        """
        votes = TensorBuilder.vote_counts(tensor)
        mask = votes.focus_mask(criterion_id, t)
        focus_size = int(mask.sum())
        if focus_size < 2:
            raise RobustnessError(
                f"Focus set for {criterion_id} at t={t} has {focus_size} units, need at least 2")
        block = tensor.values[mask][:, :, votes.criterion_index(criterion_id)].astype(float)
        varies = block.std(axis=0) > 0
        n = tensor.panel_size
        entries: List[List[Optional[float]]] = [[None] * n for _ in range(n)]
        for i in range(n):
            if varies[i]:
                entries[i][i] = 1.0
            for j in range(i + 1, n):
                if varies[i] and varies[j]:
                    value = float(np.corrcoef(block[:, i], block[:, j])[0, 1])
                    entries[i][j] = entries[j][i] = value
        return CorrelationMatrix(criterion_id, t, tensor.annotator_ids,
                                 tuple(tuple(row) for row in entries), focus_size)

    @staticmethod
    def correlation_summary(tensor: ResponseTensor, schema: Schema, t: int) -> List[CorrelationSummaryRow]:
        """Min, max and mean off-diagonal correlation per criterion."""
        votes = TensorBuilder.vote_counts(tensor)
        n_pairs = tensor.panel_size * (tensor.panel_size - 1) // 2
        rows = []
        for q in schema.criterion_ids:
            focus_size = int(votes.focus_mask(q, t).sum())
            if focus_size < 2:
                rows.append(CorrelationSummaryRow(q, focus_size, undefined_pairs=n_pairs))
                continue
            values = RobustnessAnalyzer.annotator_correlations(tensor, q, t).off_diagonal()
            if not values:
                rows.append(CorrelationSummaryRow(q, focus_size, undefined_pairs=n_pairs))
                continue
            rows.append(CorrelationSummaryRow(
                q, focus_size, min(values), max(values), float(np.mean(values)), n_pairs - len(values)))
        return rows
