import pytest

from schemaudit.core.normalize import Decision, ResponseNormalizer, RuleTable, canonical_form
from schemaudit.exceptions import NormalizationError


@pytest.mark.parametrize('raw, expected', [
    ('Oui', Decision.YES),
    ('oui', Decision.YES),
    ('  Oui.\n', Decision.YES),
    ('**Oui**', Decision.YES),
    ('**Oui', Decision.YES),
    ('Non', Decision.NO),
    ('NON.', Decision.NO),
    ('_Non_', Decision.NO),
    ('O', Decision.YES),
    ('o', Decision.MALFORMED),
    ('Peut-être', Decision.MALFORMED),
    ('Oui, mais', Decision.MALFORMED),
    ('', Decision.MALFORMED),
    ('   ', Decision.MALFORMED),
])
def test_default_rules(raw, expected):
    assert ResponseNormalizer.normalize_response(raw) is expected


def test_none_is_malformed():
    assert ResponseNormalizer.normalize_response(None) is Decision.MALFORMED


def test_canonical_form():
    assert canonical_form('  **Oui**  ') == 'oui'
    assert canonical_form('`NON`') == 'non'


def test_conflicting_rules_are_rejected():
    with pytest.raises(NormalizationError, match='both yes and no'):
        RuleTable.from_config({'yes': ['Yes'], 'no': ['yes']})


def test_rule_table_must_be_mapping():
    with pytest.raises(NormalizationError):
        RuleTable.from_config(['Yes'])


def test_custom_rules_from_file(tmp_path):
    path = tmp_path / 'rules.yml'
    path.write_text("yes: [Yes, Y]\nno: [No, N]\n", encoding='utf-8')
    rules = RuleTable.from_file(str(path))
    assert ResponseNormalizer.normalize_response('y', rules) is Decision.YES
    assert ResponseNormalizer.normalize_response('Oui', rules) is Decision.MALFORMED


def test_clean_grid_counts_every_tuple_once():
    raw = [
        ('s1', 'a1', 'q1', 'Oui'),
        ('s1', 'a1', 'q2', 'Non.'),
        ('s1', 'a2', 'q1', None),
        ('s1', 'a2', 'q2', '   '),
        ('s2', 'a1', 'q1', 'Maybe'),
        ('s2', 'a1', 'q2', '**Oui**'),
    ]
    rows, report = ResponseNormalizer.clean_grid(raw)
    assert rows == [('s1', 'a1', 'q1', 1), ('s1', 'a1', 'q2', 0), ('s2', 'a1', 'q2', 1)]
    assert report.totals() == {'total': 6, 'missing': 1, 'malformed': 2, 'blank': 1, 'valid': 3}
    for a in report.annotator_ids:
        assert report.total(a) == report.missing[a] + report.malformed[a] + report.valid[a]
    kinds = [kind for *_, kind in report.invalid_cells]
    assert kinds == ['missing', 'malformed', 'malformed']


def test_cleaning_rows_have_total_row():
    _, report = ResponseNormalizer.clean_grid([
        ('s1', 'a1', 'q1', 'Oui'), ('s1', 'a2', 'q1', 'Oui'), ('s2', 'a2', 'q1', 'Non'),
    ])
    rows = report.to_rows()
    assert [r['annotator_id'] for r in rows] == ['a1', 'a2', 'TOTAL']
    assert rows[-1]['Oui'] == 2
    assert rows[-1]['Non'] == 1
    assert rows[-1]['Total'] == 3
    # raw forms ordered by overall frequency
    assert list(rows[0])[1:3] == ['Oui', 'Non']
