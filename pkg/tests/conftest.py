"""Shared fixtures: a three-category toy schema and a hand-checkable two-annotator tensor."""

import json

import numpy as np
import pytest

from schemaudit.core.schema import SchemaLoader
from schemaudit.core.tensor import ResponseTensor, TensorBuilder

TOY_SCHEMA = {
    'version': 'toy-1',
    'categories': [
        {'id': 'c0', 'name': 'Neutral', 'non_target': True},
        {'id': 'c1', 'name': 'Gain'},
        {'id': 'c2', 'name': 'Comfort'},
    ],
    'criteria': [
        {'id': 'q1', 'name': 'Savings', 'category': 'c1', 'text': 'Does it mention savings?'},
        {'id': 'q2', 'name': 'Well-being', 'category': 'c2', 'text': 'Does it mention well-being?'},
    ],
}

# y[s][a][q] for units s1..s3, annotators a1, a2, criteria q1, q2
TOY_VALUES = [
    [[1, 1], [1, 0]],
    [[1, 0], [0, 1]],
    [[0, 1], [0, 1]],
]


def long_rows(values, unit_ids=None, annotator_ids=None, criterion_ids=('q1', 'q2')):
    """Expand a nested y[s][a][q] list into long-form rows."""
    unit_ids = unit_ids or [f"s{i + 1}" for i in range(len(values))]
    annotator_ids = annotator_ids or [f"a{i + 1}" for i in range(len(values[0]))]
    return [
        (u, a, q, values[s][i][j])
        for s, u in enumerate(unit_ids)
        for i, a in enumerate(annotator_ids)
        for j, q in enumerate(criterion_ids)
    ]


def write_csv(path, header, rows):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(','.join(header) + '\n')
        for row in rows:
            f.write(','.join('' if v is None else str(v) for v in row) + '\n')
    return str(path)


@pytest.fixture
def toy_schema():
    return SchemaLoader.from_dict(TOY_SCHEMA)


@pytest.fixture
def toy_schema_path(tmp_path):
    path = tmp_path / 'schema.json'
    path.write_text(json.dumps(TOY_SCHEMA), encoding='utf-8')
    return str(path)


@pytest.fixture
def toy_tensor():
    return ResponseTensor(
        unit_ids=('s1', 's2', 's3'),
        annotator_ids=('a1', 'a2'),
        criterion_ids=('q1', 'q2'),
        values=np.array(TOY_VALUES, dtype=np.uint8),
    )


@pytest.fixture
def toy_votes(toy_tensor):
    return TensorBuilder.vote_counts(toy_tensor)


@pytest.fixture
def toy_tensor_path(tmp_path):
    return write_csv(tmp_path / 'tensor.csv', ('unit_id', 'annotator_id', 'criterion_id', 'value'),
                     long_rows(TOY_VALUES))


@pytest.fixture
def five_panel_schema():
    return SchemaLoader.from_dict({
        'categories': [
            {'id': 'c0', 'name': 'Neutral', 'non_target': True},
            {'id': 'c1', 'name': 'Gain'},
            {'id': 'c2', 'name': 'Comfort'},
        ],
        'criteria': [
            {'id': 'q1', 'category': 'c1', 'text': 'savings'},
            {'id': 'q2', 'category': 'c1', 'text': 'efficiency'},
            {'id': 'q3', 'category': 'c2', 'text': 'well-being'},
        ],
    })


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    """Keep audit.yml lookups and default output directories inside tmp_path."""
    monkeypatch.chdir(tmp_path)
