"""Expert single-label reliability and its alignment with diagnostic overlap."""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Set, Tuple

import numpy as np
import pandas as pd
from statsmodels.stats.inter_rater import aggregate_raters, fleiss_kappa as sm_fleiss_kappa

from ..exceptions.audit_exceptions import ValidationDataError
from ..utils.constants import LABEL_COLUMNS
from .schema import Schema
from .separability import SeparabilityAnalyzer
from .tensor import VoteTable

logger = logging.getLogger('schemaudit.validation')


class LabelRecord(NamedTuple):
    """One expert label for one unit in one annotation pass."""
    unit_id: str
    expert_id: str
    pass_no: int
    category_id: str
    line: Optional[int] = None


@dataclass(frozen=True)
class HumanLabels:
    """Validated expert labels keyed by (unit, expert, pass)."""
    records: Tuple[LabelRecord, ...]

    def __post_init__(self):
        seen: Dict[Tuple[str, str, int], LabelRecord] = {}
        for record in self.records:
            key = (record.unit_id, record.expert_id, record.pass_no)
            if record.pass_no not in (1, 2):
                raise ValidationDataError(f"{self._where(record)}pass must be 1 or 2, got {record.pass_no}")
            if key in seen:
                raise ValidationDataError(f"{self._where(record)}duplicate label for {key}")
            seen[key] = record
        object.__setattr__(self, 'records', tuple(self.records))

    @staticmethod
    def _where(record: LabelRecord) -> str:
        return f"line {record.line}: " if record.line is not None else ''

    @staticmethod
    def from_records(records: Iterable[Tuple[str, str, int, str]], schema: Schema) -> 'HumanLabels':
        """Build from (unit, expert, pass, category) tuples, checking categories against the schema."""
        built = []
        for unit_id, expert_id, pass_no, category_id in records:
            if category_id not in schema.category_ids:
                raise ValidationDataError(f"Unknown category '{category_id}' for unit {unit_id}")
            built.append(LabelRecord(str(unit_id), str(expert_id), int(pass_no), str(category_id)))
        return HumanLabels(tuple(built))

    @property
    def expert_ids(self) -> List[str]:
        return list(dict.fromkeys(r.expert_id for r in self.records))

    def by_unit(self, pass_no: int = 1) -> Dict[str, Dict[str, str]]:
        """{unit: {expert: category}} for one pass, in first-appearance order."""
        table: Dict[str, Dict[str, str]] = {}
        for r in self.records:
            if r.pass_no == pass_no:
                table.setdefault(r.unit_id, {})[r.expert_id] = r.category_id
        return table


@dataclass(frozen=True)
class AgreementMatrix:
    expert_ids: Tuple[str, ...]
    entries: Tuple[Tuple[Optional[float], ...], ...]
    shared_counts: Tuple[Tuple[int, ...], ...]

    def entry(self, a: str, b: str) -> Optional[float]:
        return self.entries[self.expert_ids.index(a)][self.expert_ids.index(b)]

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {'expert_id': a, **{b: self.entries[i][j] for j, b in enumerate(self.expert_ids)}}
            for i, a in enumerate(self.expert_ids)
        ]


@dataclass(frozen=True)
class KappaResult:
    kappa: Optional[float]
    n_raters: int
    units_used: int
    units_dropped: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kappa': self.kappa,
            'n_raters': self.n_raters,
            'units_used': self.units_used,
            'units_dropped': list(self.units_dropped),
        }


@dataclass(frozen=True)
class BoundaryAlignmentRow:
    category_a: str
    category_b: str
    human_split_count: int
    diag_coact_count: int
    denominator: int

    @property
    def human_split(self) -> float:
        return self.human_split_count / self.denominator

    @property
    def diag_coact(self) -> float:
        return self.diag_coact_count / self.denominator

    def to_dict(self) -> Dict[str, Any]:
        return {
            'pair': f"{self.category_a}-{self.category_b}",
            'human_split': self.human_split,
            'diag_coact': self.diag_coact,
            'human_split_count': self.human_split_count,
            'diag_coact_count': self.diag_coact_count,
            'denominator': self.denominator,
        }


@dataclass(frozen=True)
class OverlapSplit:
    """Expert disagreement on single-category versus cross-category units."""
    threshold: int
    single_count: int
    single_disagreements: int
    multi_count: int
    multi_disagreements: int
    excluded: Tuple[str, ...] = field(default=())

    @property
    def single_rate(self) -> Optional[float]:
        return self.single_disagreements / self.single_count if self.single_count else None

    @property
    def multi_rate(self) -> Optional[float]:
        return self.multi_disagreements / self.multi_count if self.multi_count else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'threshold': self.threshold,
            'm_eq_1': {'units': self.single_count, 'disagreements': self.single_disagreements,
                       'rate': self.single_rate},
            'm_ge_2': {'units': self.multi_count, 'disagreements': self.multi_disagreements,
                       'rate': self.multi_rate},
        }


class HumanValidator:
    """Reliability statistics over expert labels and boundary alignment with the diagnostics."""

    @staticmethod
    def read_labels_csv(path: str, schema: Schema) -> HumanLabels:
        """Read `unit_id,expert_id,pass,category_id`; header is line 1.

        Raises:
            ValidationDataError: On missing columns, bad pass numbers, unknown categories or duplicates
        """
        if not os.path.isfile(path):
            raise ValidationDataError(f"Labels file does not exist: {path}")
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            raise ValidationDataError(f"{path}:1: file is empty")
        missing = [c for c in LABEL_COLUMNS if c not in frame.columns]
        if missing:
            raise ValidationDataError(f"{path}:1: missing columns: {', '.join(missing)}")

        records = []
        seen: Set[Tuple[str, str, int]] = set()
        for line, (unit_id, expert_id, pass_text, category_id) in enumerate(
                frame[list(LABEL_COLUMNS)].itertuples(index=False, name=None), start=2):
            if pass_text.strip() not in ('1', '2'):
                raise ValidationDataError(f"{path}:{line}: pass must be 1 or 2, got '{pass_text}'")
            if category_id not in schema.category_ids:
                raise ValidationDataError(f"{path}:{line}: unknown category id '{category_id}'")
            pass_no = int(pass_text)
            key = (unit_id, expert_id, pass_no)
            if key in seen:
                raise ValidationDataError(f"{path}:{line}: duplicate label for {key}")
            seen.add(key)
            records.append(LabelRecord(unit_id, expert_id, pass_no, category_id, line))

        labels = HumanLabels(tuple(records))
        logger.info(f"Read {len(records)} labels from {path} ({len(labels.expert_ids)} experts)")
        return labels

    @staticmethod
    def pairwise_agreement(labels: HumanLabels) -> AgreementMatrix:
        """Fraction of shared pass-1 units on which two experts chose the same category."""
        table = labels.by_unit(1)
        experts = tuple(labels.expert_ids)
        n = len(experts)
        entries: List[List[Optional[float]]] = [[None] * n for _ in range(n)]
        shared: List[List[int]] = [[0] * n for _ in range(n)]
        for i, a in enumerate(experts):
            for j, b in enumerate(experts):
                common = [u for u, by in table.items() if a in by and b in by]
                shared[i][j] = len(common)
                if common:
                    entries[i][j] = sum(table[u][a] == table[u][b] for u in common) / len(common)
        return AgreementMatrix(experts, tuple(map(tuple, entries)), tuple(map(tuple, shared)))

    @staticmethod
    def fleiss_kappa(labels: HumanLabels) -> KappaResult:
        """Fleiss' kappa over pass-1 labels.

        n is the largest number of raters on any unit; units with fewer raters
        are dropped and listed. kappa is None when expected agreement is 1.

        Raises:
            ValidationDataError: If no unit has at least two raters
        """
        table = labels.by_unit(1)
        n_raters = max((len(by) for by in table.values()), default=0)
        if n_raters < 2:
            raise ValidationDataError("Fleiss' kappa needs units rated by at least two experts")
        used = [u for u, by in table.items() if len(by) == n_raters]
        dropped = tuple(u for u, by in table.items() if len(by) != n_raters)
        if dropped:
            logger.info(f"Kappa: dropped {len(dropped)} units with fewer than {n_raters} raters")

        codes = {c: i for i, c in enumerate(sorted({c for u in used for c in table[u].values()}))}
        data = np.array([[codes[c] for c in table[u].values()] for u in used], dtype=int)
        counts, _ = aggregate_raters(data)
        proportions = counts.sum(axis=0) / counts.sum()
        if np.isclose(float((proportions ** 2).sum()), 1.0):
            logger.warning("Kappa undefined: every label falls in one category")
            return KappaResult(None, n_raters, len(used), dropped)
        kappa = float(sm_fleiss_kappa(counts, method='fleiss'))
        return KappaResult(kappa, n_raters, len(used), dropped)

    @staticmethod
    def test_retest(labels: HumanLabels) -> Dict[str, Optional[float]]:
        """Per-expert fraction of repeated units labelled identically in both passes."""
        first, second = labels.by_unit(1), labels.by_unit(2)
        result: Dict[str, Optional[float]] = {}
        for expert in labels.expert_ids:
            repeats = [u for u in second if expert in second[u] and expert in first.get(u, {})]
            if not repeats:
                result[expert] = None
                continue
            matches = sum(first[u][expert] == second[u][expert] for u in repeats)
            result[expert] = matches / len(repeats)
        return result

    @staticmethod
    def _covered_units(labels: HumanLabels, votes: VoteTable, schema: Schema,
                       t: int) -> Tuple[Dict[str, Dict[str, str]], Tuple[str, ...], np.ndarray, List[int]]:
        table = labels.by_unit(1)
        category_ids, lifted = SeparabilityAnalyzer.category_matrix(votes, schema, t)
        index = {u: i for i, u in enumerate(votes.unit_ids)}
        rows = [index[u] for u in table if u in index]
        return table, category_ids, lifted, rows

    @staticmethod
    def boundary_alignment(labels: HumanLabels, votes: VoteTable, schema: Schema, t: int) -> List[BoundaryAlignmentRow]:
        """Human split versus diagnostic co-activation per substantive category pair, on covered units.

        A unit counts toward every pair whose two categories both appear among
        its pass-1 labels.

        Raises:
            ValidationDataError: If no labelled unit is covered at t
        """
        table, category_ids, lifted, rows = HumanValidator._covered_units(labels, votes, schema, t)
        covered = [s for s in rows if lifted[s].any()]
        if not covered:
            raise ValidationDataError(f"No labelled unit is covered at t={t}")
        assigned = {s: set(table[votes.unit_ids[s]].values()) for s in covered}

        result = []
        for a in range(len(category_ids)):
            for b in range(a + 1, len(category_ids)):
                ca, cb = category_ids[a], category_ids[b]
                human = sum(1 for s in covered if ca in assigned[s] and cb in assigned[s])
                diag = sum(1 for s in covered if lifted[s, a] and lifted[s, b])
                result.append(BoundaryAlignmentRow(ca, cb, human, diag, len(covered)))
        logger.info(f"Boundary alignment on {len(covered)} covered labelled units at t={t}")
        return result

    @staticmethod
    def split_by_overlap(labels: HumanLabels, votes: VoteTable, schema: Schema, t: int) -> OverlapSplit:
        """Expert disagreement rate for units with m = 1 versus m >= 2.

        Only labelled units with at least two pass-1 labels enter either stratum.
        """
        table, _, lifted, rows = HumanValidator._covered_units(labels, votes, schema, t)
        single = multi = single_split = multi_split = 0
        excluded = []
        for s in rows:
            experts = table[votes.unit_ids[s]]
            m = int(lifted[s].sum())
            if len(experts) < 2 or m == 0:
                excluded.append(votes.unit_ids[s])
                continue
            split = len(set(experts.values())) > 1
            if m == 1:
                single += 1
                single_split += split
            else:
                multi += 1
                multi_split += split
        return OverlapSplit(t, single, single_split, multi, multi_split, tuple(excluded))
