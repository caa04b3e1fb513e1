import dataclasses
import json
import os

import numpy as np
import pytest

from schemaudit.core.separability import SeparabilityAnalyzer
from schemaudit.core.stability import StabilityRow
from schemaudit.core.tensor import VoteTable
from schemaudit.exceptions import InvariantViolation, TensorError, ThresholdError
from schemaudit.report import AuditOptions, ReportBuilder, render_heatmap, render_stability_landscape
from schemaudit.report.report_builder import parse_threshold_list, split_ids
from schemaudit.report.svg import value_to_color

from .conftest import TOY_VALUES, long_rows, write_csv
from .test_human_validation import LABEL_HEADER, LABELS


def _strip_time(data):
    data = dict(data)
    data.pop('generated_at')
    return data


def test_run_audit_on_toy_tensor(toy_schema_path, toy_tensor_path):
    report = ReportBuilder.run_audit(toy_schema_path, toy_tensor_path)
    data = report.to_dict()
    assert [entry['threshold'] for entry in data['thresholds']] == [1, 2]
    first = data['thresholds'][0]
    assert first['panel'] == {'size': 2, 'annotators': ['a1', 'a2']}
    assert first['stability'][0]['nt'] == 0.5
    assert first['overlap']['covered_count'] == 3
    assert first['condov']['entries'][0] == [1.0, 1.0]
    assert first['asymmetry'][0]['source'] == 'q1'
    assert data['schema']['fingerprint'] == report.schema.fingerprint()
    assert data['tensor']['summary']['units'] == 3
    assert 'thresholds' in data['robustness']
    assert 'validation' not in data


def test_report_is_deterministic(toy_schema_path, toy_tensor_path, tmp_path):
    first = ReportBuilder.run_audit(toy_schema_path, toy_tensor_path)
    second = ReportBuilder.run_audit(toy_schema_path, toy_tensor_path)
    assert _strip_time(first.to_dict()) == _strip_time(second.to_dict())

    written_a = ReportBuilder.write_bundle(first, str(tmp_path / 'a'))
    written_b = ReportBuilder.write_bundle(second, str(tmp_path / 'b'))
    assert [os.path.basename(p) for p in written_a] == [os.path.basename(p) for p in written_b]
    for a, b in zip(written_a, written_b):
        if a.endswith('report.json'):
            continue
        with open(a, 'rb') as fa, open(b, 'rb') as fb:
            assert fa.read() == fb.read(), a


def test_bundle_contents(toy_schema_path, toy_tensor_path, tmp_path):
    labels = write_csv(tmp_path / 'labels.csv', LABEL_HEADER, LABELS)
    options = AuditOptions(thresholds=[1], loo_pool=['a1', 'a2'], panel_size=1, labels_path=labels)
    report = ReportBuilder.run_audit(toy_schema_path, toy_tensor_path, options)
    out = tmp_path / 'bundle'
    written = {os.path.basename(p) for p in ReportBuilder.write_bundle(report, str(out))}
    assert written == {
        'report.json', 'stability_t1.csv', 'overlap_t1.csv', 'condov_t1.csv', 'heatmap_t1.svg',
        'landscape_t1.svg', 'robustness_thresholds.csv', 'robustness_loo.csv', 'profiles.csv', 'alignment.csv',
    }
    data = json.loads((out / 'report.json').read_text(encoding='utf-8'))
    assert [v['name'] for v in data['robustness']['loo']['variants']] == ['drop:a1', 'drop:a2']
    assert data['validation']['fleiss_kappa']['kappa'] == pytest.approx(0.55)

    stability = (out / 'stability_t1.csv').read_text(encoding='utf-8').splitlines()
    assert stability[0] == 'criterion_id,name,act_pct,nt_pct,as_pct,uy_pct,focus_size'
    assert stability[1] == 'q1,Savings,66.7,50.0,0.0,50.0,2'


def test_raw_form_input_is_normalized(toy_schema_path, tmp_path):
    answers = {1: 'Oui', 0: 'Non'}
    rows = [(u, a, q, answers[v]) for u, a, q, v in long_rows(TOY_VALUES)]
    rows[0] = rows[0][:3] + ('Peut-être',)
    raw = write_csv(tmp_path / 'raw.csv', ('unit_id', 'annotator_id', 'criterion_id', 'raw_text'), rows)
    inputs = ReportBuilder.load_inputs(toy_schema_path, raw)
    assert inputs.cleaning.totals()['malformed'] == 1
    assert inputs.panel.unit_ids == ('s2', 's3')
    assert inputs.panel.drop_report.dropped_unit_ids == ('s1',)


def test_panel_selection(toy_schema_path, toy_tensor_path):
    inputs = ReportBuilder.load_inputs(toy_schema_path, toy_tensor_path, annotators=['a2'])
    assert inputs.panel.annotator_ids == ('a2',)
    with pytest.raises(TensorError, match='a7'):
        ReportBuilder.load_inputs(toy_schema_path, toy_tensor_path, annotators=['a7'])


def test_invariant_violation_is_detected(toy_schema_path, toy_tensor_path):
    report = ReportBuilder.run_audit(toy_schema_path, toy_tensor_path, AuditOptions(thresholds=[1]))
    result = report.sweep[0]
    broken = dataclasses.replace(result.overlap, overlap_cat_count=result.overlap.covered_count + 1)
    report.sweep[0] = dataclasses.replace(result, overlap=broken)
    with pytest.raises(InvariantViolation):
        ReportBuilder.check_invariants(report)


def test_parse_threshold_list():
    assert parse_threshold_list('1, 2,3') == [1, 2, 3]
    assert parse_threshold_list([2, 4]) == [2, 4]
    assert parse_threshold_list(None) is None
    with pytest.raises(ThresholdError):
        parse_threshold_list('1,two')
    assert split_ids('a1, a2,,a3') == ['a1', 'a2', 'a3']


def test_heatmap_marks_absent_and_masked_cells(five_panel_schema):
    votes = VoteTable(np.array([[1, 1, 0], [0, 1, 0]]), 1, ('s1', 's2'), ('q1', 'q2', 'q3'))
    matrix = SeparabilityAnalyzer.leakage_matrix(votes, five_panel_schema, 1)
    svg = render_heatmap(matrix, five_panel_schema)
    assert svg.startswith('<svg')
    assert svg.count('class="absent"') == 3
    # the q1/q2 block; q3 -> q3 is absent rather than masked
    assert svg.count('class="masked"') == 4
    assert '>0.00<' in svg
    assert '>0.50<' not in svg
    assert render_heatmap(matrix, five_panel_schema) == svg


def test_landscape_lists_omitted_criteria():
    rows = [
        StabilityRow('q1', 1, 0.4, 0.5, 0.1, 0.4, 0.5, 10),
        StabilityRow('q2', 1, 0.0, None, None, None, None, 0),
    ]
    svg = render_stability_landscape(rows)
    assert 'Omitted (empty focus set): q2' in svg
    assert svg.count('<circle') == 1


def test_value_to_color_bounds():
    assert value_to_color(0.0) == '#440154'
    assert value_to_color(1.0) == '#FFF7B2'
    assert value_to_color(7.0) == '#FFF7B2'
