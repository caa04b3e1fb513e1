"""Normalization of raw annotator outputs into binary decisions."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from ..config.config_loader import ConfigLoader
from ..exceptions.audit_exceptions import NormalizationError
from ..utils.constants import DEFAULT_RULES_PATH

logger = logging.getLogger('schemaudit.normalize')

MARKDOWN_CHARS = '*_`'


class Decision(Enum):
    YES = 'yes'
    NO = 'no'
    MALFORMED = 'malformed'


@dataclass(frozen=True)
class NormalizationRule:
    """Surface forms mapped to one polarity."""
    surface_forms: FrozenSet[str]
    polarity: Decision
    case_sensitive: bool = False


def canonical_form(raw: str) -> str:
    """Trim, strip surrounding markdown emphasis, then case-fold."""
    return raw.strip().strip(MARKDOWN_CHARS).strip().casefold()


@dataclass(frozen=True)
class RuleTable:
    """Ordered set of normalization rules with disjoint yes/no forms."""
    rules: Tuple[NormalizationRule, ...]
    _folded: Dict[str, Decision] = field(default=None, init=False, repr=False, compare=False)
    _exact: Dict[str, Decision] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        folded: Dict[str, Decision] = {}
        exact: Dict[str, Decision] = {}
        for rule in self.rules:
            if rule.polarity is Decision.MALFORMED:
                raise NormalizationError("Rules may only map to yes or no")
            target = exact if rule.case_sensitive else folded
            for form in rule.surface_forms:
                key = form.strip() if rule.case_sensitive else canonical_form(form)
                if target.get(key, rule.polarity) is not rule.polarity:
                    raise NormalizationError(f"Surface form '{form}' is listed as both yes and no")
                target[key] = rule.polarity
        object.__setattr__(self, '_folded', folded)
        object.__setattr__(self, '_exact', exact)

    def lookup(self, raw: str) -> Decision:
        stripped = raw.strip()
        if stripped in self._exact:
            return self._exact[stripped]
        return self._folded.get(canonical_form(raw), Decision.MALFORMED)

    @staticmethod
    def from_config(config: Dict[str, Any]) -> 'RuleTable':
        """Build from a mapping {yes: [...], no: [...], case_sensitive: {yes: [...], no: [...]}}."""
        if not isinstance(config, dict):
            raise NormalizationError("Rule table must be a mapping")
        rules = []
        for polarity in (Decision.YES, Decision.NO):
            forms = config.get(polarity.value) or []
            rules.append(NormalizationRule(frozenset(str(f) for f in forms), polarity))
        sensitive = config.get('case_sensitive') or {}
        for polarity in (Decision.YES, Decision.NO):
            forms = sensitive.get(polarity.value) or []
            if forms:
                rules.append(NormalizationRule(frozenset(str(f) for f in forms), polarity, case_sensitive=True))
        return RuleTable(tuple(rules))

    @staticmethod
    def from_file(path: str) -> 'RuleTable':
        table = RuleTable.from_config(ConfigLoader.read_config(path))
        logger.info(f"Loaded normalization rules from {path}")
        return table

    @staticmethod
    def default() -> 'RuleTable':
        return RuleTable.from_file(DEFAULT_RULES_PATH)


@dataclass
class CleaningReport:
    """Per-annotator tallies of raw forms and tuple quality."""
    form_counts: Dict[str, Counter] = field(default_factory=dict)
    missing: Counter = field(default_factory=Counter)
    malformed: Counter = field(default_factory=Counter)
    blank: Counter = field(default_factory=Counter)
    valid: Counter = field(default_factory=Counter)
    invalid_cells: List[Tuple[str, str, str, str]] = field(default_factory=list)

    @property
    def annotator_ids(self) -> List[str]:
        return list(self.form_counts)

    def total(self, annotator_id: Optional[str] = None) -> int:
        if annotator_id is None:
            return sum(self.total(a) for a in self.form_counts)
        return self.missing[annotator_id] + self.malformed[annotator_id] + self.valid[annotator_id]

    def totals(self) -> Dict[str, int]:
        return {
            'total': self.total(),
            'missing': sum(self.missing.values()),
            'malformed': sum(self.malformed.values()),
            'blank': sum(self.blank.values()),
            'valid': sum(self.valid.values()),
        }

    def observed_forms(self) -> List[str]:
        """Raw forms ordered by overall frequency, ties alphabetical."""
        overall: Counter = Counter()
        for counts in self.form_counts.values():
            overall.update(counts)
        return sorted(overall, key=lambda f: (-overall[f], f))

    def to_rows(self) -> List[Dict[str, Any]]:
        """One row per annotator plus a TOTAL row: raw-form counts then quality columns."""
        forms = self.observed_forms()
        rows = []
        for annotator_id in self.form_counts:
            row: Dict[str, Any] = {'annotator_id': annotator_id}
            row.update({form: self.form_counts[annotator_id][form] for form in forms})
            row.update({
                'Missing': self.missing[annotator_id],
                'Malformed': self.malformed[annotator_id],
                'Valid': self.valid[annotator_id],
                'Total': self.total(annotator_id),
            })
            rows.append(row)
        totals = self.totals()
        total_row: Dict[str, Any] = {'annotator_id': 'TOTAL'}
        total_row.update({form: sum(c[form] for c in self.form_counts.values()) for form in forms})
        total_row.update({'Missing': totals['missing'], 'Malformed': totals['malformed'],
                          'Valid': totals['valid'], 'Total': totals['total']})
        rows.append(total_row)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            'totals': self.totals(),
            'per_annotator': {
                a: {
                    'forms': dict(sorted(self.form_counts[a].items())),
                    'missing': self.missing[a],
                    'malformed': self.malformed[a],
                    'blank': self.blank[a],
                    'valid': self.valid[a],
                    'total': self.total(a),
                }
                for a in self.form_counts
            },
            'invalid_cells': [
                {'unit_id': u, 'annotator_id': a, 'criterion_id': q, 'kind': kind}
                for u, a, q, kind in self.invalid_cells
            ],
        }


class ResponseNormalizer:
    """Maps raw text responses to yes/no decisions."""

    _default_rules: Optional[RuleTable] = None

    @staticmethod
    def default_rules() -> RuleTable:
        if ResponseNormalizer._default_rules is None:
            ResponseNormalizer._default_rules = RuleTable.default()
        return ResponseNormalizer._default_rules

    @staticmethod
    def normalize_response(raw: str, rules: Optional[RuleTable] = None) -> Decision:
        """Map one raw response to yes, no or malformed. Never raises."""
        rules = rules or ResponseNormalizer.default_rules()
        if raw is None:
            return Decision.MALFORMED
        return rules.lookup(str(raw))

    @staticmethod
    def clean_grid(raw_rows: Iterable[Sequence[Any]],
                   rules: Optional[RuleTable] = None) -> Tuple[List[Tuple[str, str, str, int]], CleaningReport]:
        """Normalize a raw grid, dropping missing and malformed cells.

        Args:
            raw_rows: (unit_id, annotator_id, criterion_id, raw_text) records; None raw_text is missing
            rules: Rule table, defaults to the shipped table

        Returns:
            Tuple of (binary long-form rows, cleaning report)
        """
        rules = rules or ResponseNormalizer.default_rules()
        report = CleaningReport()
        binary_rows = []
        for unit_id, annotator_id, criterion_id, raw in raw_rows:
            report.form_counts.setdefault(annotator_id, Counter())
            if raw is None or (isinstance(raw, float) and raw != raw):
                report.missing[annotator_id] += 1
                report.invalid_cells.append((unit_id, annotator_id, criterion_id, 'missing'))
                continue
            raw = str(raw)
            report.form_counts[annotator_id][raw.strip()] += 1
            decision = rules.lookup(raw)
            if decision is Decision.MALFORMED:
                report.malformed[annotator_id] += 1
                if not raw.strip():
                    report.blank[annotator_id] += 1
                report.invalid_cells.append((unit_id, annotator_id, criterion_id, 'malformed'))
                continue
            report.valid[annotator_id] += 1
            binary_rows.append((unit_id, annotator_id, criterion_id, 1 if decision is Decision.YES else 0))

        totals = report.totals()
        logger.info(f"Cleaned {totals['total']} tuples: {totals['valid']} valid, "
                    f"{totals['missing']} missing, {totals['malformed']} malformed")
        return binary_rows, report
