import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from schemaudit.core.schema import SchemaLoader
from schemaudit.core.separability import SeparabilityAnalyzer
from schemaudit.core.stability import StabilityAnalyzer
from schemaudit.core.synth import CoactivationTarget, PlantedSpec, SyntheticGenerator
from schemaudit.core.tensor import ResponseTensor, TensorBuilder
from schemaudit.exceptions import ConfigurationError
from schemaudit.utils.constants import PLANTED_EXAMPLE_PATH

CRITERIA = ('q1', 'q2', 'q3', 'q4')
ORACLE_SCHEMA = SchemaLoader.from_dict({
    'categories': [
        {'id': 'c0', 'name': 'Neutral', 'non_target': True},
        {'id': 'c1', 'name': 'Gain'},
        {'id': 'c2', 'name': 'Comfort'},
        {'id': 'c3', 'name': 'Duty'},
    ],
    'criteria': [
        {'id': 'q1', 'category': 'c1'},
        {'id': 'q2', 'category': 'c1'},
        {'id': 'q3', 'category': 'c2'},
        {'id': 'q4', 'category': 'c3'},
    ],
})


def _close(a, b):
    if a is None or b is None:
        return a is None and b is None
    return math.isclose(a, b, abs_tol=1e-9)


@st.composite
def tensors(draw):
    panel_size = draw(st.sampled_from([2, 3, 5]))
    n_units = draw(st.integers(min_value=1, max_value=12))
    cells = draw(st.lists(st.integers(0, 1), min_size=n_units * panel_size * len(CRITERIA),
                          max_size=n_units * panel_size * len(CRITERIA)))
    values = np.array(cells, dtype=np.uint8).reshape(n_units, panel_size, len(CRITERIA))
    tensor = ResponseTensor(tuple(f"s{i}" for i in range(n_units)), tuple(f"a{i}" for i in range(panel_size)),
                            CRITERIA, values)
    t = draw(st.integers(min_value=0, max_value=panel_size))
    return tensor, t


@pytest.mark.property
@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(tensors())
def test_analyzers_match_loop_oracle(case):
    tensor, t = case
    oracle = SyntheticGenerator.oracle_audit(tensor, ORACLE_SCHEMA, t)
    votes = TensorBuilder.vote_counts(tensor)

    for row in StabilityAnalyzer.stability_table(votes, ORACLE_SCHEMA, t):
        expected = oracle['stability'][row.criterion_id]
        assert row.focus_size == expected['focus_size']
        assert _close(row.activation, expected['activation'])
        for name, value in (('uy', row.uy), ('as', row.as_), ('nt', row.nt)):
            assert _close(value, expected[name])
        dist = StabilityAnalyzer.vote_distribution(votes, row.criterion_id, t)
        if expected['distribution'] is None:
            assert dist.mass is None
        else:
            assert dist.mass.keys() == expected['distribution'].keys()
            for k, mass in expected['distribution'].items():
                assert _close(dist.mass[k], mass)

    matrix = SeparabilityAnalyzer.leakage_matrix(votes, ORACLE_SCHEMA, t)
    for (q, q2), value in oracle['condov'].items():
        assert _close(matrix.entry(q, q2), value)

    summary = SeparabilityAnalyzer.overlap_summary(votes, ORACLE_SCHEMA, t)
    assert summary.covered_count == oracle['covered_count']
    assert summary.overlap_cat_count == oracle['overlap_cat_count']
    assert summary.overlap_crit_count == oracle['overlap_crit_count']
    assert summary.gamma_full_histogram == oracle['gamma_histogram']
    assert _close(summary.mean_gamma, oracle['mean_gamma'])
    for s in range(tensor.n_units):
        assert SeparabilityAnalyzer.engaged_criteria(votes, s, t).size == oracle['gamma'][s]
        assert SeparabilityAnalyzer.category_activation(votes, ORACLE_SCHEMA, s, t).m == oracle['m'][s]


@pytest.mark.property
@settings(max_examples=100, deadline=None)
@given(tensors())
def test_zone_masses_sum_to_one_at_one_vote(case):
    tensor, _ = case
    votes = TensorBuilder.vote_counts(tensor)
    for row in StabilityAnalyzer.stability_table(votes, ORACLE_SCHEMA, 1):
        if row.focus_size:
            assert row.uy + row.as_ + row.nt == pytest.approx(1.0)
            assert 0.0 <= row.activation <= 1.0


def test_generation_is_deterministic():
    spec = PlantedSpec.from_file(PLANTED_EXAMPLE_PATH)
    first = SyntheticGenerator.generate(spec, 200)
    second = SyntheticGenerator.generate(spec, 200)
    assert np.array_equal(first.values, second.values)
    assert first.unit_ids[0] == 's1'
    assert first.annotator_ids == ('a1', 'a2', 'a3', 'a4', 'a5')
    other = SyntheticGenerator.generate(PlantedSpec(spec.panel_size, spec.distributions, spec.coactivation, 8), 200)
    assert not np.array_equal(first.values, other.values)


def test_near_tie_only_mass_is_all_near_tie():
    spec = PlantedSpec(5, {'q1': (0.0, 0.0, 0.5, 0.5, 0.0, 0.0)}, seed=4)
    tensor = SyntheticGenerator.generate(spec, 400)
    votes = TensorBuilder.vote_counts(tensor)
    assert set(np.unique(votes.counts)) <= {2, 3}
    dist = StabilityAnalyzer.vote_distribution(votes, 'q1', 1)
    assert dist.focus_size == 400
    assert set(dist.mass) == {1, 2, 3, 4, 5}
    uy, as_, nt = StabilityAnalyzer.zone_rates(dist)
    assert nt == pytest.approx(1.0)
    assert uy == 0.0
    assert as_ == 0.0
    row = StabilityAnalyzer.stability_row(votes, 'q1', 1)
    assert (row.activation, row.uy, row.as_, row.nt) == pytest.approx((1.0, 0.0, 0.0, 1.0))


@pytest.mark.slow
def test_planted_histograms_are_recovered():
    spec = PlantedSpec.from_file(PLANTED_EXAMPLE_PATH)
    tensor, report = SyntheticGenerator.generate_with_report(spec, 50000)
    votes = TensorBuilder.vote_counts(tensor)
    for q in spec.criterion_ids:
        assert report.total_variation(q) < 0.02
        histogram = np.bincount(votes.counts[:, votes.criterion_index(q)], minlength=spec.panel_size + 1)
        assert tuple(histogram / tensor.n_units) == pytest.approx(report.achieved_histograms[q])
    (link,) = report.coactivation
    assert link['achieved'] == pytest.approx(0.6, abs=0.05)
    assert report.infeasible == []


def test_infeasible_link_is_reported():
    spec = PlantedSpec(
        panel_size=2,
        distributions={'q1': (0.2, 0.4, 0.4), 'q2': (0.9, 0.05, 0.05)},
        coactivation=(CoactivationTarget('q1', 'q2', 0.9),),
        seed=1,
    )
    _, report = SyntheticGenerator.generate_with_report(spec, 50)
    assert report.infeasible == ['q1->q2']


@pytest.mark.parametrize('kwargs, message', [
    ({'distributions': {'q1': (0.5, 0.5)}}, 'expected 3'),
    ({'distributions': {'q1': (0.5, 0.2, 0.2)}}, 'sum to 1'),
    ({'coactivation': (CoactivationTarget('q1', 'q9', 0.5),)}, 'unknown criterion'),
    ({'coactivation': (CoactivationTarget('q1', 'q2', 1.5),)}, 'outside'),
    ({'coactivation': (CoactivationTarget('q1', 'q2', 0.5), CoactivationTarget('q2', 'q1', 0.5))}, 'cycle'),
])
def test_invalid_planted_specs(kwargs, message):
    base = {'panel_size': 2, 'distributions': {'q1': (0.5, 0.25, 0.25), 'q2': (0.5, 0.25, 0.25)}}
    base.update(kwargs)
    with pytest.raises(ConfigurationError, match=message):
        PlantedSpec(**base)


def test_to_long_rows_feeds_tensor_builder():
    spec = PlantedSpec(2, {'q1': (0.5, 0.25, 0.25), 'q2': (0.5, 0.25, 0.25)}, seed=3)
    tensor = SyntheticGenerator.generate(spec, 5)
    schema = SchemaLoader.from_dict({
        'categories': [{'id': 'c0', 'non_target': True}, {'id': 'c1'}],
        'criteria': [{'id': 'q1', 'category': 'c1'}, {'id': 'q2', 'category': 'c1'}],
    })
    rebuilt = TensorBuilder.build_tensor(SyntheticGenerator.to_long_rows(tensor), schema)
    assert np.array_equal(rebuilt.values, tensor.values)
