import numpy as np
import pytest

from schemaudit.core.robustness import RobustnessAnalyzer
from schemaudit.core.tensor import ResponseTensor, TensorBuilder
from schemaudit.exceptions import RobustnessError, ThresholdError

# s x (a1, a2, a3) x (q1, q2)
POOL_VALUES = [
    [[1, 0], [1, 0], [0, 0]],
    [[1, 1], [0, 1], [1, 1]],
    [[0, 1], [0, 0], [0, 1]],
    [[1, 0], [1, 0], [1, 0]],
]


@pytest.fixture
def pool_tensor():
    return ResponseTensor(('s1', 's2', 's3', 's4'), ('a1', 'a2', 'a3'), ('q1', 'q2'),
                          np.array(POOL_VALUES, dtype=np.uint8))


@pytest.mark.parametrize('panel_size, expected', [(1, [1]), (2, [1, 2]), (3, [1, 2]), (5, [1, 2, 3]), (8, [1, 2, 4])])
def test_default_thresholds(panel_size, expected):
    assert RobustnessAnalyzer.default_thresholds(panel_size) == expected


def test_threshold_sweep(toy_votes, toy_schema):
    sweep = RobustnessAnalyzer.threshold_sweep(toy_votes, toy_schema)
    assert [r.threshold for r in sweep] == [1, 2]
    assert [row.criterion_id for row in sweep[0].stability] == ['q1', 'q2']
    assert sweep[0].overlap.covered_count == 3
    assert sweep[1].overlap.covered_count == 2
    with pytest.raises(ThresholdError):
        RobustnessAnalyzer.threshold_sweep(toy_votes, toy_schema, [1, 4])


def test_threshold_rank_stability(toy_votes, toy_schema):
    sweep = RobustnessAnalyzer.threshold_sweep(toy_votes, toy_schema, [1, 2])
    ranks = RobustnessAnalyzer.threshold_rank_stability(sweep, 'ambiguity', k=1)
    assert ranks.variant_names == ('t=1', 't=2')
    assert ranks.top_k('t=1') == ['q2']
    # a tie at t=2 keeps schema order
    assert ranks.top_k('t=2') == ['q1']
    q2 = ranks.row('q2')
    assert q2.rank_range == (1, 2)
    assert q2.delta == pytest.approx(2 / 3)


def test_loo_panels(pool_tensor):
    variants = RobustnessAnalyzer.loo_panels(pool_tensor, ['a3', 'a1', 'a2'], 2)
    assert [v.name for v in variants] == ['drop:a1', 'drop:a2', 'drop:a3']
    assert variants[0].annotator_ids == ('a3', 'a2')
    (full,) = RobustnessAnalyzer.loo_panels(pool_tensor, ['a1', 'a2'], 2)
    assert full.name == 'full'


@pytest.mark.parametrize('pool, size, message', [
    (['a1', 'a1', 'a2'], 2, 'duplicate'),
    (['a1', 'a9'], 1, 'not in tensor'),
    (['a1', 'a2'], 0, 'positive'),
    (['a1', 'a2'], 3, 'exceeds pool'),
    (['a1', 'a2', 'a3'], 1, 'remove-one'),
])
def test_loo_panel_errors(pool_tensor, pool, size, message):
    with pytest.raises(RobustnessError, match=message):
        RobustnessAnalyzer.loo_panels(pool_tensor, pool, size)


def test_loo_stability(pool_tensor, toy_schema):
    result = RobustnessAnalyzer.loo_stability(pool_tensor, toy_schema, ['a1', 'a2', 'a3'], 2, t=1, k=1,
                                              reference_ids=['a1', 'a2'])
    assert [v.name for v in result.variants] == ['drop:a1', 'drop:a2', 'drop:a3']

    q1 = result.nt.row('q1')
    assert q1.values['drop:a1'] == pytest.approx(2 / 3)
    assert q1.values['drop:a2'] == pytest.approx(1 / 3)
    assert q1.value_min == pytest.approx(1 / 3)
    assert q1.delta == pytest.approx(1 / 3)
    assert q1.rank_range == (1, 2)
    assert q1.top_k_count == 2
    assert q1.reference == pytest.approx(1 / 3)

    rows = {r['criterion_id']: r for r in result.nt.to_rows()}
    assert rows['q1']['top1_freq'] == '2/3'
    assert rows['q2']['top1_freq'] == '1/3'
    assert rows['q1']['rank_range'] == '1-2'

    assert result.uy.row('q2').values['drop:a2'] == 1.0


def test_rank_stability_puts_undefined_values_last():
    ranks = RobustnessAnalyzer.rank_stability([('v1', {'q1': None, 'q2': 0.5})], k=1)
    assert ranks.row('q1').ranks == {'v1': 2}
    assert ranks.row('q2').ranks == {'v1': 1}
    assert ranks.row('q1').delta is None


def test_rank_stability_rejects_mismatched_variants():
    with pytest.raises(RobustnessError, match='different criterion set'):
        RobustnessAnalyzer.rank_stability([('v1', {'q1': 0.1}), ('v2', {'q2': 0.1})], k=1)
    with pytest.raises(RobustnessError):
        RobustnessAnalyzer.rank_stability([('v1', {'q1': 0.1})], k=0)


def test_metric_values_rejects_unknown_metric(toy_votes, toy_schema):
    sweep = RobustnessAnalyzer.threshold_sweep(toy_votes, toy_schema, [1])
    with pytest.raises(RobustnessError, match='Unknown metric'):
        RobustnessAnalyzer.metric_values(sweep[0].stability, 'entropy')


def test_annotator_profiles(toy_tensor, toy_schema):
    profiles = RobustnessAnalyzer.annotator_profiles(toy_tensor, toy_schema)
    assert profiles.rate('a1', 'q1') == pytest.approx(2 / 3)
    assert profiles.rate('a2', 'q1') == pytest.approx(1 / 3)
    assert profiles.rate('a2', 'q2') == pytest.approx(2 / 3)
    assert profiles.to_rows()[0]['annotator_id'] == 'a1'


def test_annotator_correlations(toy_tensor):
    matrix = RobustnessAnalyzer.annotator_correlations(toy_tensor, 'q2', 1)
    assert matrix.focus_size == 3
    assert matrix.entry('a1', 'a2') == pytest.approx(-0.5)
    assert matrix.entry('a1', 'a1') == 1.0

    # a1 votes yes on both q1 focus units, so the pair is undefined
    constant = RobustnessAnalyzer.annotator_correlations(toy_tensor, 'q1', 1)
    assert constant.entry('a1', 'a2') is None
    assert constant.off_diagonal() == []

    with pytest.raises(RobustnessError, match='at least 2'):
        RobustnessAnalyzer.annotator_correlations(toy_tensor, 'q1', 2)


def test_correlation_summary(toy_tensor, toy_schema):
    rows = {r.criterion_id: r for r in RobustnessAnalyzer.correlation_summary(toy_tensor, toy_schema, 1)}
    assert rows['q1'].undefined_pairs == 1
    assert rows['q1'].mean is None
    assert rows['q2'].mean == pytest.approx(-0.5)
    assert rows['q2'].to_dict()['min'] == pytest.approx(-0.5)


def test_single_annotator_panel_is_unanimous(toy_tensor, toy_schema):
    votes = TensorBuilder.vote_counts(toy_tensor.select_annotators(['a1']))
    (result,) = RobustnessAnalyzer.threshold_sweep(votes, toy_schema)
    for row in result.stability:
        assert row.uy == 1.0
        assert row.nt == 0.0
