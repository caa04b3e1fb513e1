"""Cross-criterion co-activation and category-level overlap."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..exceptions.audit_exceptions import TensorError
from ..utils.constants import GAMMA_BUCKETS
from .schema import Schema
from .tensor import VoteTable

logger = logging.getLogger('schemaudit.separability')


@dataclass(frozen=True)
class EngagedSet:
    """Criteria engaged on one unit."""
    unit_index: int
    unit_id: str
    threshold: int
    criteria: Tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.criteria)


@dataclass(frozen=True)
class CategoryActivation:
    """Active substantive categories of one unit and their count m."""
    unit_index: int
    unit_id: str
    threshold: int
    active: Dict[str, bool]

    @property
    def m(self) -> int:
        return sum(self.active.values())

    @property
    def active_categories(self) -> Tuple[str, ...]:
        return tuple(c for c, on in self.active.items() if on)


@dataclass(frozen=True)
class OverlapMatrix:
    """Directed CondOv(q -> q') for every ordered pair; None where the antecedent focus set is empty.

    Rows are antecedents, columns consequents. Masking only affects rendering.
    """
    threshold: int
    criterion_ids: Tuple[str, ...]
    entries: Tuple[Tuple[Optional[float], ...], ...]
    masked: Tuple[Tuple[bool, ...], ...]
    focus_sizes: Tuple[int, ...]
    mask_within_category: bool = False

    def index(self, criterion_id: str) -> int:
        try:
            return self.criterion_ids.index(criterion_id)
        except ValueError:
            raise TensorError(f"Unknown criterion: {criterion_id}")

    def entry(self, source: str, target: str) -> Optional[float]:
        return self.entries[self.index(source)][self.index(target)]

    def is_masked(self, source: str, target: str) -> bool:
        return self.mask_within_category and self.masked[self.index(source)][self.index(target)]

    def to_rows(self) -> List[Dict[str, Any]]:
        """One row per antecedent; consequent columns keyed by criterion id."""
        rows = []
        for i, source in enumerate(self.criterion_ids):
            row: Dict[str, Any] = {'criterion_id': source}
            row.update({target: self.entries[i][j] for j, target in enumerate(self.criterion_ids)})
            rows.append(row)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            'threshold': self.threshold,
            'criterion_ids': list(self.criterion_ids),
            'entries': [list(r) for r in self.entries],
            'within_category': [list(r) for r in self.masked],
            'mask_within_category': self.mask_within_category,
            'focus_sizes': list(self.focus_sizes),
        }


@dataclass(frozen=True)
class OverlapSummary:
    """Coverage and overlap statistics at one threshold."""
    threshold: int
    n_units: int
    covered_count: int
    overlap_cat_count: int
    overlap_crit_count: int
    gamma_histogram: Dict[str, int]
    gamma_full_histogram: Dict[int, int] = field(default_factory=dict)

    @staticmethod
    def _ratio(num: int, den: int) -> Optional[float]:
        return num / den if den else None

    @property
    def coverage_rate(self) -> Optional[float]:
        return self._ratio(self.covered_count, self.n_units)

    @property
    def overlap_cat_given_cov(self) -> Optional[float]:
        return self._ratio(self.overlap_cat_count, self.covered_count)

    @property
    def overlap_cat(self) -> Optional[float]:
        return self._ratio(self.overlap_cat_count, self.n_units)

    @property
    def overlap_crit(self) -> Optional[float]:
        return self._ratio(self.overlap_crit_count, self.n_units)

    @property
    def overlap_crit_given_cov(self) -> Optional[float]:
        return self._ratio(self.overlap_crit_count, self.covered_count)

    @property
    def mean_gamma(self) -> Optional[float]:
        total = sum(k * n for k, n in self.gamma_full_histogram.items())
        return self._ratio(total, self.covered_count)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'threshold': self.threshold,
            'n_units': self.n_units,
            'covered_count': self.covered_count,
            'coverage_rate': self.coverage_rate,
            'overlap_cat_count': self.overlap_cat_count,
            'overlap_cat_given_cov': self.overlap_cat_given_cov,
            'overlap_cat': self.overlap_cat,
            'overlap_crit_count': self.overlap_crit_count,
            'overlap_crit': self.overlap_crit,
            'overlap_crit_given_cov': self.overlap_crit_given_cov,
            'mean_gamma': self.mean_gamma,
            'gamma_histogram': dict(self.gamma_histogram),
            'gamma_full_histogram': {str(k): v for k, v in sorted(self.gamma_full_histogram.items())},
        }


@dataclass(frozen=True)
class AsymmetryRow:
    """A cross-category criterion pair with both CondOv directions; source is the stronger antecedent."""
    source: str
    target: str
    forward: float
    backward: float

    @property
    def asymmetry(self) -> float:
        return abs(self.forward - self.backward)


@dataclass(frozen=True)
class CategoryPairRow:
    """Covered units where both categories of a substantive pair are active."""
    category_a: str
    category_b: str
    count: int
    covered_count: int

    @property
    def fraction(self) -> Optional[float]:
        return self.count / self.covered_count if self.covered_count else None


class SeparabilityAnalyzer:
    """Engaged-criteria sets, directed overlap and category lifting."""

    @staticmethod
    def _unit_index(votes: VoteTable, unit: Any) -> int:
        if isinstance(unit, (int, np.integer)) and not isinstance(unit, bool):
            if not 0 <= unit < votes.n_units:
                raise TensorError(f"Unit index {unit} outside 0..{votes.n_units - 1}")
            return int(unit)
        try:
            return votes.unit_ids.index(unit)
        except ValueError:
            raise TensorError(f"Unknown unit: {unit}")

    @staticmethod
    def category_matrix(votes: VoteTable, schema: Schema, t: int) -> Tuple[Tuple[str, ...], np.ndarray]:
        """Boolean units x categories matrix of active substantive categories, in schema order."""
        engaged = votes.engaged(t)
        category_ids = tuple(c.id for c in schema.substantive_categories)
        lifted = np.zeros((votes.n_units, len(category_ids)), dtype=bool)
        for k, category_id in enumerate(category_ids):
            columns = [votes.criterion_index(q) for q in votes.criterion_ids
                       if schema.category_of(q) == category_id]
            if columns:
                lifted[:, k] = engaged[:, columns].any(axis=1)
        return category_ids, lifted

    @staticmethod
    def engaged_criteria(votes: VoteTable, unit: Any, t: int) -> EngagedSet:
        """Criteria whose focus set contains the unit.

        Args:
            votes: Vote table
            unit: Unit index or unit id
            t: Engagement threshold

        Raises:
            TensorError: If the unit is unknown
            ThresholdError: If t lies outside 0..A
        """
        s = SeparabilityAnalyzer._unit_index(votes, unit)
        row = votes.engaged(t)[s]
        criteria = tuple(q for q, on in zip(votes.criterion_ids, row) if on)
        return EngagedSet(s, votes.unit_ids[s], t, criteria)

    @staticmethod
    def conditional_overlap(votes: VoteTable, source: str, target: str, t: int) -> Optional[float]:
        """Share of the source focus set also in the target focus set, None when the source set is empty."""
        antecedent = votes.focus_mask(source, t)
        consequent = votes.focus_mask(target, t)
        size = int(antecedent.sum())
        if size == 0:
            return None
        return int((antecedent & consequent).sum()) / size

    @staticmethod
    def category_activation(votes: VoteTable, schema: Schema, unit: Any, t: int) -> CategoryActivation:
        s = SeparabilityAnalyzer._unit_index(votes, unit)
        category_ids, lifted = SeparabilityAnalyzer.category_matrix(votes, schema, t)
        active = {c: bool(lifted[s, k]) for k, c in enumerate(category_ids)}
        return CategoryActivation(s, votes.unit_ids[s], t, active)

    @staticmethod
    def overlap_summary(votes: VoteTable, schema: Schema, t: int) -> OverlapSummary:
        """Coverage, category overlap (conditional and unconditional), criterion overlap and engaged-criteria histogram."""
        gamma = votes.engaged(t).sum(axis=1)
        _, lifted = SeparabilityAnalyzer.category_matrix(votes, schema, t)
        m = lifted.sum(axis=1)
        covered = m >= 1

        full = Counter(int(g) for g in gamma[covered])
        buckets = {label: 0 for label in GAMMA_BUCKETS}
        for size, count in full.items():
            label = str(size) if size < 4 else GAMMA_BUCKETS[-1]
            if label in buckets:
                buckets[label] += count

        summary = OverlapSummary(
            threshold=t,
            n_units=votes.n_units,
            covered_count=int(covered.sum()),
            overlap_cat_count=int((m >= 2).sum()),
            overlap_crit_count=int((gamma >= 2).sum()),
            gamma_histogram=buckets,
            gamma_full_histogram=dict(sorted(full.items())),
        )
        logger.info(f"Overlap at t={t}: {summary.covered_count} covered, "
                    f"{summary.overlap_cat_count} cross-category")
        return summary

    @staticmethod
    def leakage_matrix(votes: VoteTable, schema: Schema, t: int, mask_within: bool = True) -> OverlapMatrix:
        """Full Q x Q CondOv matrix with within-category cells flagged."""
        engaged = votes.engaged(t).astype(np.int64)
        joint = engaged.T @ engaged
        sizes = np.diag(joint)
        entries = tuple(
            tuple(int(joint[i, j]) / int(sizes[i]) if sizes[i] else None for j in range(len(sizes)))
            for i in range(len(sizes))
        )
        categories = [schema.category_of(q) for q in votes.criterion_ids]
        masked = tuple(tuple(a == b for b in categories) for a in categories)
        return OverlapMatrix(
            threshold=t,
            criterion_ids=votes.criterion_ids,
            entries=entries,
            masked=masked,
            focus_sizes=tuple(int(n) for n in sizes),
            mask_within_category=mask_within,
        )

    @staticmethod
    def directed_asymmetry(matrix: OverlapMatrix, schema: Schema, top: Optional[int] = None) -> List[AsymmetryRow]:
        """Cross-category pairs ranked by |CondOv(q->q') - CondOv(q'->q)|, largest first.

        Pairs with an undefined direction are skipped; ties keep schema order.
        """
        rows = []
        ids = matrix.criterion_ids
        for i, q in enumerate(ids):
            for j in range(i + 1, len(ids)):
                q2 = ids[j]
                if schema.category_of(q) == schema.category_of(q2):
                    continue
                forward, backward = matrix.entries[i][j], matrix.entries[j][i]
                if forward is None or backward is None:
                    continue
                if backward > forward:
                    rows.append(AsymmetryRow(q2, q, backward, forward))
                else:
                    rows.append(AsymmetryRow(q, q2, forward, backward))
        rows.sort(key=lambda r: -r.asymmetry)
        return rows[:top] if top is not None else rows

    @staticmethod
    def category_pair_coactivation(votes: VoteTable, schema: Schema, t: int) -> List[CategoryPairRow]:
        """For each unordered substantive pair, covered units with g_a = g_b = 1."""
        category_ids, lifted = SeparabilityAnalyzer.category_matrix(votes, schema, t)
        covered_count = int(lifted.any(axis=1).sum())
        rows = []
        for a in range(len(category_ids)):
            for b in range(a + 1, len(category_ids)):
                count = int((lifted[:, a] & lifted[:, b]).sum())
                rows.append(CategoryPairRow(category_ids[a], category_ids[b], count, covered_count))
        return rows
