import math

import pytest
from hypothesis import given, settings, strategies as st

from schemaudit.core.human_validation import HumanLabels, HumanValidator, LabelRecord
from schemaudit.core.schema import SchemaLoader
from schemaudit.exceptions import ValidationDataError

from .conftest import TOY_SCHEMA, write_csv

SCHEMA = SchemaLoader.from_dict(TOY_SCHEMA)

LABEL_HEADER = ('unit_id', 'expert_id', 'pass', 'category_id')

LABELS = [
    ('s1', 'e1', 1, 'c1'), ('s1', 'e2', 1, 'c2'), ('s1', 'e3', 1, 'c1'),
    ('s2', 'e1', 1, 'c1'), ('s2', 'e2', 1, 'c1'), ('s2', 'e3', 1, 'c1'),
    ('s3', 'e1', 1, 'c2'), ('s3', 'e2', 1, 'c2'), ('s3', 'e3', 1, 'c2'),
    ('s4', 'e1', 1, 'c0'), ('s4', 'e2', 1, 'c0'),
    ('s1', 'e1', 2, 'c1'), ('s3', 'e1', 2, 'c1'),
]


@pytest.fixture
def labels(toy_schema):
    return HumanLabels.from_records(LABELS, toy_schema)


def test_read_labels_csv(tmp_path, toy_schema):
    path = write_csv(tmp_path / 'labels.csv', LABEL_HEADER, LABELS)
    labels = HumanValidator.read_labels_csv(path, toy_schema)
    assert labels.expert_ids == ['e1', 'e2', 'e3']
    assert labels.records[0] == LabelRecord('s1', 'e1', 1, 'c1', 2)


@pytest.mark.parametrize('rows, message', [
    ([('s1', 'e1', 3, 'c1')], r'labels.csv:2: pass must be 1 or 2'),
    ([('s1', 'e1', 1, 'c9')], r'labels.csv:2: unknown category'),
    ([('s1', 'e1', 1, 'c1'), ('s1', 'e1', 1, 'c2')], r'labels.csv:3: duplicate label'),
])
def test_read_labels_csv_errors(tmp_path, toy_schema, rows, message):
    path = write_csv(tmp_path / 'labels.csv', LABEL_HEADER, rows)
    with pytest.raises(ValidationDataError, match=message):
        HumanValidator.read_labels_csv(path, toy_schema)


def test_labels_reject_bad_pass_numbers():
    with pytest.raises(ValidationDataError):
        HumanLabels((LabelRecord('s1', 'e1', 0, 'c1'),))


def test_pairwise_agreement(labels):
    matrix = HumanValidator.pairwise_agreement(labels)
    assert matrix.entry('e1', 'e2') == pytest.approx(3 / 4)
    assert matrix.entry('e1', 'e3') == 1.0
    assert matrix.entry('e2', 'e2') == 1.0
    assert matrix.shared_counts[0][1] == 4


def test_fleiss_kappa(labels):
    result = HumanValidator.fleiss_kappa(labels)
    assert result.n_raters == 3
    assert result.units_used == 3
    assert result.units_dropped == ('s4',)
    assert result.kappa == pytest.approx(0.55)


def test_fleiss_kappa_is_one_under_perfect_agreement(toy_schema):
    records = [
        (unit, expert, 1, category)
        for unit, category in (('s1', 'c1'), ('s2', 'c2'), ('s3', 'c0'), ('s4', 'c1'))
        for expert in ('e1', 'e2', 'e3')
    ]
    result = HumanValidator.fleiss_kappa(HumanLabels.from_records(records, toy_schema))
    assert result.kappa == pytest.approx(1.0)
    assert result.units_used == 4


@st.composite
def rated_units(draw):
    n_experts = draw(st.integers(min_value=2, max_value=4))
    n_units = draw(st.integers(min_value=2, max_value=10))
    categories = draw(st.lists(st.sampled_from(['c0', 'c1', 'c2']),
                               min_size=n_units * n_experts, max_size=n_units * n_experts))
    records = [
        (f"s{u}", f"e{e}", 1, categories[u * n_experts + e])
        for u in range(n_units) for e in range(n_experts)
    ]
    relabel = dict(zip(['c0', 'c1', 'c2'], draw(st.permutations(['c0', 'c1', 'c2']))))
    return records, relabel


@pytest.mark.property
@settings(max_examples=100, deadline=None)
@given(rated_units())
def test_fleiss_kappa_ignores_category_names(case):
    records, relabel = case
    renamed = [(u, e, p, relabel[c]) for u, e, p, c in records]
    kappa = HumanValidator.fleiss_kappa(HumanLabels.from_records(records, SCHEMA)).kappa
    again = HumanValidator.fleiss_kappa(HumanLabels.from_records(renamed, SCHEMA)).kappa
    if kappa is None:
        assert again is None
    else:
        assert math.isclose(kappa, again, abs_tol=1e-9)


def test_fleiss_kappa_undefined_for_a_single_category(toy_schema):
    labels = HumanLabels.from_records([('s1', 'e1', 1, 'c1'), ('s1', 'e2', 1, 'c1')], toy_schema)
    assert HumanValidator.fleiss_kappa(labels).kappa is None


def test_fleiss_kappa_needs_two_raters(toy_schema):
    labels = HumanLabels.from_records([('s1', 'e1', 1, 'c1')], toy_schema)
    with pytest.raises(ValidationDataError):
        HumanValidator.fleiss_kappa(labels)


def test_test_retest(labels):
    assert HumanValidator.test_retest(labels) == {'e1': 0.5, 'e2': None, 'e3': None}


def test_boundary_alignment(labels, toy_votes, toy_schema):
    (row,) = HumanValidator.boundary_alignment(labels, toy_votes, toy_schema, 1)
    assert row.to_dict()['pair'] == 'c1-c2'
    assert row.denominator == 3
    assert row.human_split == pytest.approx(1 / 3)
    assert row.diag_coact == pytest.approx(2 / 3)


def test_boundary_alignment_needs_covered_units(toy_votes, toy_schema):
    labels = HumanLabels.from_records([('s9', 'e1', 1, 'c1')], toy_schema)
    with pytest.raises(ValidationDataError, match='covered'):
        HumanValidator.boundary_alignment(labels, toy_votes, toy_schema, 1)


def test_split_by_overlap(labels, toy_votes, toy_schema):
    split = HumanValidator.split_by_overlap(labels, toy_votes, toy_schema, 1)
    assert (split.single_count, split.single_disagreements) == (1, 0)
    assert (split.multi_count, split.multi_disagreements) == (2, 1)
    assert split.multi_rate == 0.5
    assert split.to_dict()['m_eq_1']['rate'] == 0.0
