"""Task schema model: categories, criteria and the criterion-to-category mapping."""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from ..exceptions.audit_exceptions import SchemaError

logger = logging.getLogger('schemaudit.schema')


@dataclass(frozen=True)
class Category:
    """A schema label; exactly one category per schema is the non-target one."""
    id: str
    name: str
    is_non_target: bool = False


@dataclass(frozen=True)
class Criterion:
    """A binary yes/no question supporting one substantive category."""
    id: str
    text: str
    category_id: str
    name: str = ''


@dataclass(frozen=True)
class Schema:
    """Immutable task schema. Ordering of both lists drives every report."""
    categories: Tuple[Category, ...]
    criteria: Tuple[Criterion, ...]
    version: str = ''
    _criterion_index: Dict[str, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'categories', tuple(self.categories))
        object.__setattr__(self, 'criteria', tuple(self.criteria))
        object.__setattr__(self, '_criterion_index', {q.id: i for i, q in enumerate(self.criteria)})

    @property
    def non_target(self) -> Category:
        return next(c for c in self.categories if c.is_non_target)

    @property
    def substantive_categories(self) -> Tuple[Category, ...]:
        return tuple(c for c in self.categories if not c.is_non_target)

    @property
    def category_ids(self) -> Tuple[str, ...]:
        return tuple(c.id for c in self.categories)

    @property
    def criterion_ids(self) -> Tuple[str, ...]:
        return tuple(q.id for q in self.criteria)

    def has_criterion(self, criterion_id: str) -> bool:
        return criterion_id in self._criterion_index

    def criterion(self, criterion_id: str) -> Criterion:
        try:
            return self.criteria[self._criterion_index[criterion_id]]
        except KeyError:
            raise SchemaError(f"Unknown criterion: {criterion_id}")

    def category(self, category_id: str) -> Category:
        for category in self.categories:
            if category.id == category_id:
                return category
        raise SchemaError(f"Unknown category: {category_id}")

    def category_of(self, criterion_id: str) -> str:
        """Category id of a criterion."""
        return self.criterion(criterion_id).category_id

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the schema file structure."""
        criteria = []
        for q in self.criteria:
            record = {'id': q.id, 'text': q.text, 'category': q.category_id}
            if q.name:
                record['name'] = q.name
            criteria.append(record)
        data: Dict[str, Any] = {}
        if self.version:
            data['version'] = self.version
        data['categories'] = [
            {'id': c.id, 'name': c.name, 'non_target': c.is_non_target} for c in self.categories
        ]
        data['criteria'] = criteria
        return data

    def fingerprint(self) -> str:
        """SHA-256 over the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


class SchemaLoader:
    """Loads, validates and writes schema files."""

    @staticmethod
    def load_schema(path: str) -> Schema:
        """Load and validate a schema JSON file.

        Args:
            path: Path to the schema file

        Returns:
            Validated Schema with file ordering preserved

        Raises:
            SchemaError: If the file is missing, unparsable or structurally invalid
        """
        if not os.path.isfile(path):
            raise SchemaError(f"Schema file does not exist: {path}")
        try:
            with open(path, encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}:{e.lineno}: cannot parse schema: {e.msg}")

        schema = SchemaLoader.from_dict(data, source=path)
        logger.info(f"Loaded schema from {path}: {len(schema.categories)} categories, "
                    f"{len(schema.criteria)} criteria")
        return schema

    @staticmethod
    def from_dict(data: Any, source: str = '<schema>') -> Schema:
        """Build a Schema from parsed JSON, enforcing every structural invariant."""
        if not isinstance(data, dict):
            raise SchemaError(f"{source}: top level must be an object")
        for key in ('categories', 'criteria'):
            if not isinstance(data.get(key), list):
                raise SchemaError(f"{source}: '{key}' must be a list")

        categories: List[Category] = []
        seen_categories = set()
        for i, raw in enumerate(data['categories']):
            if not isinstance(raw, dict) or not raw.get('id'):
                raise SchemaError(f"{source}: category #{i + 1} needs an 'id'")
            category = Category(
                id=str(raw['id']),
                name=str(raw.get('name', raw['id'])),
                is_non_target=bool(raw.get('non_target', False)),
            )
            if category.id in seen_categories:
                raise SchemaError(f"{source}: duplicate category id '{category.id}'")
            seen_categories.add(category.id)
            categories.append(category)

        non_target = [c.id for c in categories if c.is_non_target]
        if len(non_target) != 1:
            raise SchemaError(f"{source}: exactly one non-target category required, found {len(non_target)}")
        if len(categories) < 2:
            raise SchemaError(f"{source}: schema needs at least one substantive category")

        criteria: List[Criterion] = []
        seen_criteria = set()
        for i, raw in enumerate(data['criteria']):
            if not isinstance(raw, dict) or not raw.get('id'):
                raise SchemaError(f"{source}: criterion #{i + 1} needs an 'id'")
            criterion = Criterion(
                id=str(raw['id']),
                text=str(raw.get('text', '')),
                category_id=str(raw.get('category', '')),
                name=str(raw.get('name', '')),
            )
            if criterion.id in seen_criteria:
                raise SchemaError(f"{source}: duplicate criterion id '{criterion.id}'")
            if criterion.category_id not in seen_categories:
                raise SchemaError(
                    f"{source}: criterion '{criterion.id}' mapped to missing category '{criterion.category_id}'")
            if criterion.category_id == non_target[0]:
                raise SchemaError(f"{source}: criterion mapped to non-target category: '{criterion.id}'")
            seen_criteria.add(criterion.id)
            criteria.append(criterion)

        return Schema(tuple(categories), tuple(criteria), version=str(data.get('version', '')))

    @staticmethod
    def dump_schema(schema: Schema, path: str) -> None:
        """Write a schema in the same JSON format load_schema reads."""
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(schema.to_dict(), f, indent=2, ensure_ascii=False)
            f.write('\n')

    @staticmethod
    def supporting_criteria(schema: Schema, category_id: str) -> List[Criterion]:
        """Return Q_k, the criteria mapped to a substantive category, in schema order.

        Raises:
            SchemaError: If the category is unknown or is the non-target category
        """
        category = schema.category(category_id)
        if category.is_non_target:
            raise SchemaError(f"Category '{category_id}' is the non-target category and has no criteria")
        return [q for q in schema.criteria if q.category_id == category_id]

