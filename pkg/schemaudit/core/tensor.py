"""Binary response tensor, vote table and focus sets."""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions.audit_exceptions import TensorError, ThresholdError
from ..utils.constants import LONG_FORM_COLUMNS, RAW_FORM_COLUMNS
from .schema import Schema

logger = logging.getLogger('schemaudit.tensor')


class LongRow(NamedTuple):
    """One (unit, annotator, criterion) judgment, with its source line when read from a file."""
    unit_id: str
    annotator_id: str
    criterion_id: str
    value: int
    line: Optional[int] = None


@dataclass(frozen=True)
class DropReport:
    """Units removed to keep the tensor fully observed."""
    dropped: Tuple[Tuple[str, str], ...] = ()

    @property
    def dropped_unit_ids(self) -> Tuple[str, ...]:
        return tuple(unit_id for unit_id, _ in self.dropped)

    @property
    def count(self) -> int:
        return len(self.dropped)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dropped_count': self.count,
            'dropped': [{'unit_id': u, 'reason': r} for u, r in self.dropped],
        }


@dataclass(frozen=True, eq=False)
class ResponseTensor:
    """Dense units x annotators x criteria binary array with its axis labels."""
    unit_ids: Tuple[str, ...]
    annotator_ids: Tuple[str, ...]
    criterion_ids: Tuple[str, ...]
    values: np.ndarray
    drop_report: DropReport = field(default_factory=DropReport)
    source: str = ''

    def __post_init__(self):
        for name in ('unit_ids', 'annotator_ids', 'criterion_ids'):
            ids = tuple(getattr(self, name))
            if len(set(ids)) != len(ids):
                raise TensorError(f"Duplicate entries in {name}")
            object.__setattr__(self, name, ids)

        values = np.array(self.values, dtype=np.uint8, copy=True)
        expected = (len(self.unit_ids), len(self.annotator_ids), len(self.criterion_ids))
        if values.shape != expected:
            raise TensorError(f"Tensor values have shape {values.shape}, expected {expected}")
        if values.size and values.max() > 1:
            raise TensorError("Tensor values must be 0 or 1")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    @property
    def n_units(self) -> int:
        return len(self.unit_ids)

    @property
    def panel_size(self) -> int:
        return len(self.annotator_ids)

    def unit_index(self, unit_id: str) -> int:
        try:
            return self.unit_ids.index(unit_id)
        except ValueError:
            raise TensorError(f"Unknown unit: {unit_id}")

    def select_annotators(self, annotator_ids: Sequence[str]) -> 'ResponseTensor':
        """Restrict the panel to the given annotators, in the order given."""
        unknown = [a for a in annotator_ids if a not in self.annotator_ids]
        if unknown:
            raise TensorError(f"Unknown annotators: {', '.join(unknown)}")
        columns = [self.annotator_ids.index(a) for a in annotator_ids]
        return ResponseTensor(
            unit_ids=self.unit_ids,
            annotator_ids=tuple(annotator_ids),
            criterion_ids=self.criterion_ids,
            values=self.values[:, columns, :],
            drop_report=self.drop_report,
            source=self.source,
        )


@dataclass(frozen=True, eq=False)
class VoteTable:
    """Positive vote counts per unit and criterion."""
    counts: np.ndarray
    panel_size: int
    unit_ids: Tuple[str, ...]
    criterion_ids: Tuple[str, ...]

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.shape != (len(self.unit_ids), len(self.criterion_ids)):
            raise TensorError(f"Vote counts have shape {counts.shape}")
        if counts.size and (counts.min() < 0 or counts.max() > self.panel_size):
            raise TensorError(f"Vote counts must lie in 0..{self.panel_size}")
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'unit_ids', tuple(self.unit_ids))
        object.__setattr__(self, 'criterion_ids', tuple(self.criterion_ids))

    @property
    def n_units(self) -> int:
        return len(self.unit_ids)

    def criterion_index(self, criterion_id: str) -> int:
        try:
            return self.criterion_ids.index(criterion_id)
        except ValueError:
            raise TensorError(f"Unknown criterion: {criterion_id}")

    def check_threshold(self, t: int) -> None:
        if not 0 <= t <= self.panel_size:
            raise ThresholdError(f"Threshold t={t} outside 0..{self.panel_size}")

    def engaged(self, t: int) -> np.ndarray:
        """Boolean units x criteria matrix, true where the unit is in the focus set."""
        self.check_threshold(t)
        return self.counts >= t

    def focus_mask(self, criterion_id: str, t: int) -> np.ndarray:
        self.check_threshold(t)
        return self.counts[:, self.criterion_index(criterion_id)] >= t


@dataclass(frozen=True)
class FocusSet:
    """Units with at least t positive votes for a criterion."""
    criterion_id: str
    threshold: int
    members: FrozenSet[int]
    unit_ids: Tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return len(self.members)


class TensorBuilder:
    """Builds response tensors from long-form rows and derives vote tables."""

    @staticmethod
    def build_tensor(rows: Iterable[Sequence[Any]], schema: Schema, source: str = '') -> ResponseTensor:
        """Materialize a dense, fully observed tensor from long-form rows.

        Units missing any (annotator, criterion) cell are dropped and listed in
        the tensor's drop report.

        Args:
            rows: (unit_id, annotator_id, criterion_id, value[, line]) records
            schema: Schema the criterion ids are checked against
            source: Input description used in error messages

        Returns:
            ResponseTensor with criteria in schema order

        Raises:
            TensorError: On unknown or absent criteria, non-binary values or conflicting duplicates
        """
        cells: Dict[Tuple[str, str, str], int] = {}
        unit_order: Dict[str, None] = {}
        annotator_order: Dict[str, None] = {}
        seen_criteria = set()

        for raw in rows:
            row = LongRow(*raw)
            where = f"{source}:{row.line}: " if row.line is not None else (f"{source}: " if source else '')
            if not schema.has_criterion(row.criterion_id):
                raise TensorError(f"{where}unknown criterion id '{row.criterion_id}'")
            value = TensorBuilder._as_binary(row.value, where)
            key = (row.unit_id, row.annotator_id, row.criterion_id)
            previous = cells.get(key)
            if previous is not None:
                if previous != value:
                    raise TensorError(f"{where}conflicting duplicate cell for {key}")
                logger.debug(f"Ignoring identical duplicate cell {key}")
                continue
            cells[key] = value
            unit_order.setdefault(row.unit_id)
            annotator_order.setdefault(row.annotator_id)
            seen_criteria.add(row.criterion_id)

        criterion_ids = schema.criterion_ids
        missing_criteria = [q for q in criterion_ids if q not in seen_criteria]
        if cells and missing_criteria:
            raise TensorError(f"{source + ': ' if source else ''}schema criteria absent from input: "
                              f"{', '.join(missing_criteria)}")

        unit_ids = list(unit_order)
        annotator_ids = list(annotator_order)
        u_index = {u: i for i, u in enumerate(unit_ids)}
        a_index = {a: i for i, a in enumerate(annotator_ids)}
        q_index = {q: i for i, q in enumerate(criterion_ids)}

        dense = np.full((len(unit_ids), len(annotator_ids), len(criterion_ids)), -1, dtype=np.int8)
        for (u, a, q), value in cells.items():
            dense[u_index[u], a_index[a], q_index[q]] = value

        cells_per_unit = len(annotator_ids) * len(criterion_ids)
        observed = (dense >= 0).reshape(len(unit_ids), cells_per_unit)
        missing_per_unit = cells_per_unit - observed.sum(axis=1)
        keep = missing_per_unit == 0
        dropped = tuple(
            (unit_ids[i], f"missing {int(missing_per_unit[i])} of {cells_per_unit} cells")
            for i in np.flatnonzero(~keep)
        )
        if dropped:
            logger.info(f"Dropped {len(dropped)} units with missing cells: "
                        f"{', '.join(u for u, _ in dropped)}")

        tensor = ResponseTensor(
            unit_ids=tuple(u for u, k in zip(unit_ids, keep) if k),
            annotator_ids=tuple(annotator_ids),
            criterion_ids=criterion_ids,
            values=dense[keep].astype(np.uint8),
            drop_report=DropReport(dropped=dropped),
            source=source,
        )
        logger.info(f"Built tensor {tensor.shape[0]}x{tensor.shape[1]}x{tensor.shape[2]}"
                    f"{' from ' + source if source else ''}")
        return tensor

    @staticmethod
    def _as_binary(value: Any, where: str) -> int:
        text = str(value).strip()
        if text in ('0', '1'):
            return int(text)
        raise TensorError(f"{where}value must be 0 or 1, got '{value}'")

    @staticmethod
    def _read_frame(path: str, columns: Tuple[str, ...]) -> pd.DataFrame:
        if not os.path.isfile(path):
            raise TensorError(f"Input file does not exist: {path}")
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            raise TensorError(f"{path}:1: file is empty")
        except pd.errors.ParserError as e:
            raise TensorError(f"{path}: cannot parse CSV: {e}")
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise TensorError(f"{path}:1: missing columns: {', '.join(missing)}")
        return frame

    @staticmethod
    def is_raw_form(path: str) -> bool:
        """True when the CSV header carries raw_text instead of value."""
        if not os.path.isfile(path):
            raise TensorError(f"Input file does not exist: {path}")
        try:
            header = pd.read_csv(path, nrows=0).columns
        except pd.errors.EmptyDataError:
            raise TensorError(f"{path}:1: file is empty")
        return 'raw_text' in header and 'value' not in header

    @staticmethod
    def read_long_csv(path: str) -> List[LongRow]:
        """Read `unit_id,annotator_id,criterion_id,value` rows; header is line 1."""
        frame = TensorBuilder._read_frame(path, LONG_FORM_COLUMNS)
        rows = []
        for line, (u, a, q, v) in enumerate(frame[list(LONG_FORM_COLUMNS)].itertuples(index=False, name=None), start=2):
            rows.append(LongRow(u, a, q, TensorBuilder._as_binary(v, f"{path}:{line}: "), line))
        logger.info(f"Read {len(rows)} long-form rows from {path}")
        return rows

    @staticmethod
    def read_raw_csv(path: str) -> List[Tuple[str, str, str, Optional[str]]]:
        """Read `unit_id,annotator_id,criterion_id,raw_text` rows; an empty field is a missing response."""
        frame = TensorBuilder._read_frame(path, RAW_FORM_COLUMNS)
        rows = [
            (u, a, q, t if t != '' else None)
            for u, a, q, t in frame[list(RAW_FORM_COLUMNS)].itertuples(index=False, name=None)
        ]
        logger.info(f"Read {len(rows)} raw-form rows from {path}")
        return rows

    @staticmethod
    def to_frame(tensor: ResponseTensor) -> pd.DataFrame:
        """Long-form frame in unit, annotator, criterion order."""
        n_units, n_annotators, n_criteria = tensor.shape
        return pd.DataFrame({
            'unit_id': np.repeat(np.array(tensor.unit_ids, dtype=object), n_annotators * n_criteria),
            'annotator_id': np.tile(np.repeat(np.array(tensor.annotator_ids, dtype=object), n_criteria), n_units),
            'criterion_id': np.tile(np.array(tensor.criterion_ids, dtype=object), n_units * n_annotators),
            'value': tensor.values.reshape(-1).astype(int),
        }, columns=list(LONG_FORM_COLUMNS))

    @staticmethod
    def write_long_csv(tensor: ResponseTensor, path: str) -> None:
        TensorBuilder.to_frame(tensor).to_csv(path, index=False, lineterminator='\n')
        logger.info(f"Wrote {tensor.values.size} cells to {path}")

    @staticmethod
    def vote_counts(tensor: ResponseTensor) -> VoteTable:
        """Sum the annotator axis into per-unit, per-criterion vote counts."""
        return VoteTable(
            counts=tensor.values.sum(axis=1, dtype=np.int64),
            panel_size=tensor.panel_size,
            unit_ids=tensor.unit_ids,
            criterion_ids=tensor.criterion_ids,
        )

    @staticmethod
    def focus_set(votes: VoteTable, criterion_id: str, t: int) -> FocusSet:
        """Units with at least t positive votes; t=0 returns the whole corpus.

        Raises:
            ThresholdError: If t lies outside 0..A
        """
        members = np.flatnonzero(votes.focus_mask(criterion_id, t))
        return FocusSet(
            criterion_id=criterion_id,
            threshold=t,
            members=frozenset(int(i) for i in members),
            unit_ids=tuple(votes.unit_ids[i] for i in members),
        )

    @staticmethod
    def tensor_summary(tensor: ResponseTensor) -> Dict[str, Any]:
        """Counts describing a filtered tensor."""
        total = int(tensor.values.size)
        positive = int(tensor.values.sum())
        return {
            'units': tensor.n_units,
            'annotators': tensor.panel_size,
            'criteria': len(tensor.criterion_ids),
            'total_tuples': total,
            'positive': positive,
            'negative': total - positive,
            'positive_share': positive / total if total else None,
        }
