"""Checks against the released study annotations.

Set SCHEMAUDIT_PVE_DATA to a directory holding schema.json and tensor.csv
(optionally tensor_pool.csv with six annotators and labels.csv).
"""

import os

import pytest

from schemaudit.core.human_validation import HumanValidator
from schemaudit.core.robustness import RobustnessAnalyzer
from schemaudit.core.schema import SchemaLoader
from schemaudit.core.separability import SeparabilityAnalyzer
from schemaudit.core.stability import StabilityAnalyzer
from schemaudit.core.tensor import TensorBuilder
from schemaudit.report.report_builder import ReportBuilder

DATA_DIR = os.environ.get('SCHEMAUDIT_PVE_DATA')

pytestmark = [
    pytest.mark.reproduction,
    pytest.mark.skipif(not DATA_DIR, reason='SCHEMAUDIT_PVE_DATA is not set'),
]

PCT = 0.0005


def _path(name):
    path = os.path.join(DATA_DIR, name)
    if not os.path.isfile(path):
        pytest.skip(f'{name} not present in {DATA_DIR}')
    return path


@pytest.fixture(scope='module')
def schema():
    return SchemaLoader.load_schema(_path('schema.json'))


@pytest.fixture(scope='module')
def votes(schema):
    return TensorBuilder.vote_counts(ReportBuilder.load_inputs(_path('schema.json'), _path('tensor.csv')).panel)


def _row(votes, schema, q, t=1):
    return {r.criterion_id: r for r in StabilityAnalyzer.stability_table(votes, schema, t)}[q]


def test_criterion_stability_at_t1(votes, schema):
    q6 = _row(votes, schema, 'q6')
    assert q6.focus_size == 1130
    assert q6.activation == pytest.approx(0.240, abs=PCT)
    assert q6.uy == pytest.approx(0.449, abs=PCT)
    assert _row(votes, schema, 'q1').focus_size == 131
    q9 = _row(votes, schema, 'q9')
    assert q9.nt == pytest.approx(0.382, abs=PCT)
    assert q9.uy == pytest.approx(0.201, abs=PCT)


def test_coverage_and_overlap_at_t1(votes, schema):
    summary = SeparabilityAnalyzer.overlap_summary(votes, schema, 1)
    assert summary.covered_count == 1951
    assert summary.coverage_rate == pytest.approx(0.415, abs=PCT)
    assert summary.overlap_cat_given_cov == pytest.approx(0.446, abs=PCT)
    assert summary.mean_gamma == pytest.approx(2.56, abs=0.005)
    assert dict(summary.gamma_histogram) == {'1': 690, '2': 419, '3': 325, '>=4': 517}


@pytest.mark.parametrize('t,covered,coverage,given_cov,crit', [
    (1, 1951, 0.415, 0.446, 0.268),
    (2, 1605, 0.342, 0.391, 0.199),
    (3, 1358, 0.289, 0.364, 0.163),
])
def test_threshold_sweep(votes, schema, t, covered, coverage, given_cov, crit):
    summary = SeparabilityAnalyzer.overlap_summary(votes, schema, t)
    assert summary.covered_count == covered
    assert summary.coverage_rate == pytest.approx(coverage, abs=PCT)
    assert summary.overlap_cat_given_cov == pytest.approx(given_cov, abs=PCT)
    assert summary.overlap_crit == pytest.approx(crit, abs=PCT)


@pytest.mark.parametrize('t,forward,backward', [(1, 0.95, 0.37), (2, 0.96, 0.32), (3, 0.97, 0.29)])
def test_directed_overlap_q2_q6(votes, t, forward, backward):
    assert SeparabilityAnalyzer.conditional_overlap(votes, 'q2', 'q6', t) == pytest.approx(forward, abs=0.005)
    assert SeparabilityAnalyzer.conditional_overlap(votes, 'q6', 'q2', t) == pytest.approx(backward, abs=0.005)


def test_ambiguity_hotspots(votes, schema):
    sweep = RobustnessAnalyzer.threshold_sweep(votes, schema, [1, 2, 3])
    ranks = RobustnessAnalyzer.threshold_rank_stability(sweep, 'ambiguity', k=3)
    for variant in ranks.variant_names:
        assert set(ranks.top_k(variant)) == {'q4', 'q5', 'q9'}
    assert [ranks.row('q5').values[v] for v in ranks.variant_names] == pytest.approx(
        [0.480, 0.547, 0.508], abs=PCT)


def test_leave_one_out_panels(schema):
    pool = ReportBuilder.load_inputs(_path('schema.json'), _path('tensor_pool.csv')).panel
    assert pool.panel_size == 6
    result = RobustnessAnalyzer.loo_stability(pool, schema, pool.annotator_ids, 5, t=1, k=3)
    assert len(result.variants) == 6
    assert result.nt.row('q5').top_k_count == 6
    assert result.nt.row('q9').top_k_count == 6


def test_human_alignment(votes, schema):
    labels = HumanValidator.read_labels_csv(_path('labels.csv'), schema)
    rows = {(r.category_a, r.category_b): r for r in HumanValidator.boundary_alignment(labels, votes, schema, 1)}
    for pair, split, coact in [(('c1', 'c2'), 0.375, 0.838), (('c1', 'c3'), 0.165, 0.444),
                               (('c2', 'c3'), 0.149, 0.507)]:
        assert rows[pair].human_split == pytest.approx(split, abs=0.005)
        assert rows[pair].diag_coact == pytest.approx(coact, abs=0.005)


def test_expert_reliability(schema):
    labels = HumanValidator.read_labels_csv(_path('labels.csv'), schema)
    assert HumanValidator.fleiss_kappa(labels).kappa == pytest.approx(0.28, abs=0.02)
    for value in HumanValidator.test_retest(labels).values():
        if value is not None:
            assert 0.71 <= value <= 0.90
