"""Core analyses for schemaudit."""

from .audit_app import AuditApp
from .human_validation import HumanLabels, HumanValidator, LabelRecord
from .normalize import Decision, ResponseNormalizer, RuleTable
from .robustness import RobustnessAnalyzer
from .schema import Category, Criterion, Schema, SchemaLoader
from .separability import SeparabilityAnalyzer
from .stability import StabilityAnalyzer
from .synth import PlantedSpec, SyntheticGenerator
from .tensor import ResponseTensor, TensorBuilder, VoteTable

__all__ = [
    'AuditApp', 'Category', 'Criterion', 'Decision', 'HumanLabels', 'HumanValidator', 'LabelRecord',
    'PlantedSpec', 'ResponseNormalizer', 'ResponseTensor', 'RobustnessAnalyzer', 'RuleTable', 'Schema',
    'SchemaLoader', 'SeparabilityAnalyzer', 'StabilityAnalyzer', 'SyntheticGenerator', 'TensorBuilder',
    'VoteTable',
]
