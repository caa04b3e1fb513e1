"""Audit orchestration and report bundle emission."""

import datetime
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.human_validation import HumanValidator
from ..core.normalize import CleaningReport, ResponseNormalizer, RuleTable
from ..core.robustness import LooResult, RankStability, RobustnessAnalyzer, ThresholdResult
from ..core.schema import Schema, SchemaLoader
from ..core.separability import AsymmetryRow, CategoryPairRow, OverlapMatrix, OverlapSummary, SeparabilityAnalyzer
from ..core.stability import StabilityRow
from ..core.tensor import ResponseTensor, TensorBuilder, VoteTable
from ..exceptions.audit_exceptions import InvariantViolation, TensorError, ThresholdError
from ..utils.constants import (
    DEFAULT_CORRELATION_THRESHOLD, DEFAULT_LOO_THRESHOLD, DEFAULT_TOP_K, DEFAULT_VALIDATION_THRESHOLD, VERSION,
)
from .svg import render_heatmap, render_stability_landscape

logger = logging.getLogger('schemaudit.report')

ASYMMETRY_TOP = 10
ZONE_TOLERANCE = 1e-9


def pct(value: Optional[float]) -> str:
    """Percent with one decimal; empty for absent values."""
    return '' if value is None else f"{value * 100:.1f}"


def frac(value: Optional[float], digits: int = 3) -> str:
    return '' if value is None else f"{value:.{digits}f}"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialize {type(value).__name__}")


@dataclass
class AuditOptions:
    thresholds: Optional[List[int]] = None
    mask_within: bool = True
    top_k: int = DEFAULT_TOP_K
    loo_pool: Optional[List[str]] = None
    panel_size: Optional[int] = None
    loo_threshold: int = DEFAULT_LOO_THRESHOLD
    labels_path: Optional[str] = None
    rules_path: Optional[str] = None
    annotators: Optional[List[str]] = None
    correlation_threshold: int = DEFAULT_CORRELATION_THRESHOLD
    validation_threshold: int = DEFAULT_VALIDATION_THRESHOLD
    robustness: bool = True


@dataclass
class LoadedInputs:
    schema: Schema
    full: ResponseTensor
    panel: ResponseTensor
    cleaning: Optional[CleaningReport] = None


@dataclass
class AuditReport:
    """Every audit result plus provenance. Only generated_at varies between identical runs."""
    schema: Schema
    schema_path: str
    tensor: ResponseTensor
    sweep: List[ThresholdResult]
    matrices: Dict[int, OverlapMatrix]
    asymmetry: Dict[int, List[AsymmetryRow]]
    category_pairs: Dict[int, List[CategoryPairRow]]
    cleaning: Optional[CleaningReport] = None
    threshold_ranks: Dict[str, RankStability] = field(default_factory=dict)
    loo: Optional[LooResult] = None
    profiles: Optional[Any] = None
    correlations: List[Any] = field(default_factory=list)
    correlation_threshold: int = DEFAULT_CORRELATION_THRESHOLD
    validation: Optional[Dict[str, Any]] = None
    tool_version: str = VERSION
    generated_at: str = ''

    @property
    def panel(self) -> Dict[str, Any]:
        return {'size': self.tensor.panel_size, 'annotators': list(self.tensor.annotator_ids)}

    def to_dict(self) -> Dict[str, Any]:
        panel = self.panel
        data: Dict[str, Any] = {
            'tool_version': self.tool_version,
            'generated_at': self.generated_at,
            'schema': {
                'path': os.path.basename(self.schema_path),
                'version': self.schema.version,
                'fingerprint': self.schema.fingerprint(),
            },
            'tensor': {
                'source': os.path.basename(self.tensor.source),
                'summary': TensorBuilder.tensor_summary(self.tensor),
                'drop_report': self.tensor.drop_report.to_dict(),
            },
            'panel': panel,
            'thresholds': [],
        }
        for result in self.sweep:
            t = result.threshold
            data['thresholds'].append({
                'threshold': t,
                'panel': panel,
                'stability': [row.to_dict() for row in result.stability],
                'overlap': result.overlap.to_dict(),
                'condov': self.matrices[t].to_dict(),
                'asymmetry': [
                    {'source': r.source, 'target': r.target, 'forward': r.forward,
                     'backward': r.backward, 'asymmetry': r.asymmetry}
                    for r in self.asymmetry[t]
                ],
                'category_pairs': [
                    {'pair': f"{r.category_a}-{r.category_b}", 'count': r.count,
                     'covered_count': r.covered_count, 'fraction': r.fraction}
                    for r in self.category_pairs[t]
                ],
            })
        if self.cleaning is not None:
            data['cleaning'] = self.cleaning.to_dict()
        robustness: Dict[str, Any] = {}
        if self.threshold_ranks:
            robustness['thresholds'] = {m: r.to_dict() for m, r in self.threshold_ranks.items()}
        if self.loo is not None:
            robustness['loo'] = {
                'threshold': self.loo.threshold,
                'panel_size': self.loo.panel_size,
                'variants': [{'name': v.name, 'annotators': list(v.annotator_ids)} for v in self.loo.variants],
                'nt': self.loo.nt.to_dict(),
                'uy': self.loo.uy.to_dict(),
            }
        if self.profiles is not None:
            robustness['profiles'] = self.profiles.to_rows()
        if self.correlations:
            robustness['correlations'] = {
                'threshold': self.correlation_threshold,
                'criteria': [row.to_dict() for row in self.correlations],
            }
        if robustness:
            data['robustness'] = robustness
        if self.validation is not None:
            data['validation'] = self.validation
        return data


class ReportBuilder:
    """Runs the full audit and writes the report bundle."""

    @staticmethod
    def load_inputs(schema_path: str, tensor_path: str, rules_path: Optional[str] = None,
                    annotators: Optional[Sequence[str]] = None,
                    extra_annotators: Optional[Sequence[str]] = None) -> LoadedInputs:
        """Load schema and tensor; raw-form CSVs are normalized first.

        When a core panel is selected, only its annotators (plus any extra ones
        needed for LOO) enter tensor construction, so units are dropped only for
        cells missing from those annotators.
        """
        schema = SchemaLoader.load_schema(schema_path)
        cleaning = None
        if TensorBuilder.is_raw_form(tensor_path):
            rules = RuleTable.from_file(rules_path) if rules_path else None
            rows, cleaning = ResponseNormalizer.clean_grid(TensorBuilder.read_raw_csv(tensor_path), rules)
        else:
            rows = TensorBuilder.read_long_csv(tensor_path)

        if annotators:
            keep = set(annotators) | set(extra_annotators or ())
            rows = [r for r in rows if r[1] in keep]
        full = TensorBuilder.build_tensor(rows, schema, source=tensor_path)
        panel = full
        if annotators:
            missing = [a for a in annotators if a not in full.annotator_ids]
            if missing:
                raise TensorError(f"{tensor_path}: selected annotators not in input: {', '.join(missing)}")
            panel = full.select_annotators(annotators)
        return LoadedInputs(schema, full, panel, cleaning)

    @staticmethod
    def run_audit(schema_path: str, tensor_path: str, options: Optional[AuditOptions] = None) -> AuditReport:
        """Stability and separability at every threshold, robustness and validation when requested.

        Raises:
            AuditException subclasses from the loaders and analyzers
            InvariantViolation: If an internal consistency check fails
        """
        options = options or AuditOptions()
        inputs = ReportBuilder.load_inputs(schema_path, tensor_path, options.rules_path,
                                           options.annotators, options.loo_pool)
        schema, panel = inputs.schema, inputs.panel
        votes = TensorBuilder.vote_counts(panel)
        sweep = RobustnessAnalyzer.threshold_sweep(votes, schema, options.thresholds)

        matrices, asymmetry, pairs = {}, {}, {}
        for result in sweep:
            t = result.threshold
            matrices[t] = SeparabilityAnalyzer.leakage_matrix(votes, schema, t, options.mask_within)
            asymmetry[t] = SeparabilityAnalyzer.directed_asymmetry(matrices[t], schema, top=ASYMMETRY_TOP)
            pairs[t] = SeparabilityAnalyzer.category_pair_coactivation(votes, schema, t)

        report = AuditReport(
            schema=schema,
            schema_path=schema_path,
            tensor=panel,
            sweep=sweep,
            matrices=matrices,
            asymmetry=asymmetry,
            category_pairs=pairs,
            cleaning=inputs.cleaning,
            correlation_threshold=options.correlation_threshold,
        )

        if options.robustness:
            ReportBuilder._add_robustness(report, inputs, options)
        if options.labels_path:
            report.validation = ReportBuilder.validation_section(
                options.labels_path, schema, votes, options.validation_threshold)

        ReportBuilder.check_invariants(report)
        report.generated_at = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')
        logger.info(f"Audit complete: {panel.n_units} units, thresholds {[r.threshold for r in sweep]}")
        return report

    @staticmethod
    def _add_robustness(report: AuditReport, inputs: LoadedInputs, options: AuditOptions) -> None:
        if report.sweep:
            for metric in ('ambiguity', 'uy'):
                report.threshold_ranks[metric] = RobustnessAnalyzer.threshold_rank_stability(
                    report.sweep, metric, options.top_k)
        if options.loo_pool:
            panel_size = options.panel_size or inputs.panel.panel_size
            reference = None
            if set(inputs.panel.annotator_ids) <= set(options.loo_pool) and inputs.panel.panel_size == panel_size:
                reference = inputs.panel.annotator_ids
            report.loo = RobustnessAnalyzer.loo_stability(
                inputs.full, inputs.schema, options.loo_pool, panel_size,
                t=options.loo_threshold, k=options.top_k, reference_ids=reference)
        report.profiles = RobustnessAnalyzer.annotator_profiles(inputs.full, inputs.schema)
        report.correlations = RobustnessAnalyzer.correlation_summary(
            inputs.panel, inputs.schema, options.correlation_threshold)

    @staticmethod
    def validation_section(labels_path: str, schema: Schema, votes: VoteTable, t: int) -> Dict[str, Any]:
        labels = HumanValidator.read_labels_csv(labels_path, schema)
        agreement = HumanValidator.pairwise_agreement(labels)
        alignment = HumanValidator.boundary_alignment(labels, votes, schema, t)
        return {
            'threshold': t,
            'pairwise_agreement': {
                'experts': list(agreement.expert_ids),
                'entries': [list(r) for r in agreement.entries],
            },
            'fleiss_kappa': HumanValidator.fleiss_kappa(labels).to_dict(),
            'test_retest': HumanValidator.test_retest(labels),
            'boundary_alignment': [row.to_dict() for row in alignment],
            'split_by_overlap': HumanValidator.split_by_overlap(labels, votes, schema, t).to_dict(),
        }

    @staticmethod
    def check_invariants(report: AuditReport) -> None:
        """Consistency checks across results; failures are internal errors."""
        for result in report.sweep:
            for row in result.stability:
                if row.focus_size and result.threshold == 1:
                    total = row.uy + row.as_ + row.nt
                    if abs(total - 1.0) > ZONE_TOLERANCE:
                        raise InvariantViolation(
                            f"Zone masses for {row.criterion_id} at t={result.threshold} sum to {total}")
            overlap = result.overlap
            if overlap.overlap_cat_count > overlap.covered_count:
                raise InvariantViolation(f"More cross-category units than covered units at t={result.threshold}")
            matrix = report.matrices[result.threshold]
            for i, size in enumerate(matrix.focus_sizes):
                if size and matrix.entries[i][i] != 1.0:
                    raise InvariantViolation(f"CondOv diagonal for {matrix.criterion_ids[i]} is not 1")

    # ---- tables -------------------------------------------------------

    @staticmethod
    def stability_frame(rows: Sequence[StabilityRow], schema: Schema) -> pd.DataFrame:
        return pd.DataFrame([
            {
                'criterion_id': r.criterion_id,
                'name': schema.criterion(r.criterion_id).name,
                'act_pct': pct(r.activation),
                'nt_pct': pct(r.nt),
                'as_pct': pct(r.as_),
                'uy_pct': pct(r.uy),
                'focus_size': r.focus_size,
            }
            for r in rows
        ], columns=['criterion_id', 'name', 'act_pct', 'nt_pct', 'as_pct', 'uy_pct', 'focus_size'])

    @staticmethod
    def overlap_frame(summary: OverlapSummary) -> pd.DataFrame:
        record = {
            'threshold': summary.threshold,
            'covered_count': summary.covered_count,
            'coverage_pct': pct(summary.coverage_rate),
            'overlap_cat_given_cov_pct': pct(summary.overlap_cat_given_cov),
            'overlap_cat_pct': pct(summary.overlap_cat),
            'overlap_crit_pct': pct(summary.overlap_crit),
            'mean_gamma': frac(summary.mean_gamma, 2),
        }
        record.update({f'gamma_{label}': n for label, n in summary.gamma_histogram.items()})
        return pd.DataFrame([record])

    @staticmethod
    def condov_frame(matrix: OverlapMatrix) -> pd.DataFrame:
        return pd.DataFrame([
            {k: (v if k == 'criterion_id' else frac(v)) for k, v in row.items()}
            for row in matrix.to_rows()
        ], columns=['criterion_id', *matrix.criterion_ids])

    @staticmethod
    def ranks_frame(ranks: RankStability, value_format=pct) -> pd.DataFrame:
        rows = []
        for record, row in zip(ranks.to_rows(), ranks.rows):
            formatted = {'criterion_id': record['criterion_id']}
            formatted.update({name: value_format(row.values[name]) for name in ranks.variant_names})
            if 'reference' in record:
                formatted['reference'] = value_format(record['reference'])
            formatted['min'] = value_format(record['min'])
            formatted['max'] = value_format(record['max'])
            formatted['delta'] = value_format(record['delta'])
            formatted['rank_range'] = record['rank_range']
            formatted[f'top{ranks.k}_freq'] = record[f'top{ranks.k}_freq']
            rows.append(formatted)
        return pd.DataFrame(rows)

    @staticmethod
    def alignment_frame(alignment: Sequence[Dict[str, Any]]) -> pd.DataFrame:
        return pd.DataFrame([
            {
                'pair': row['pair'],
                'human_split_pct': pct(row['human_split']),
                'diag_coact_pct': pct(row['diag_coact']),
                'denominator': row['denominator'],
            }
            for row in alignment
        ], columns=['pair', 'human_split_pct', 'diag_coact_pct', 'denominator'])

    @staticmethod
    def write_csv(frame: pd.DataFrame, path: str) -> str:
        frame.to_csv(path, index=False, lineterminator='\n')
        return path

    @staticmethod
    def write_json(data: Dict[str, Any], path: str) -> str:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False, default=_json_default)
            f.write('\n')
        return path

    @staticmethod
    def write_text(text: str, path: str) -> str:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    @staticmethod
    def write_bundle(report: AuditReport, out_dir: str) -> List[str]:
        """Write report.json, per-threshold CSVs and SVGs, and the robustness/validation tables.

        Returns:
            Paths written, in write order
        """
        os.makedirs(out_dir, exist_ok=True)
        schema = report.schema
        written = [ReportBuilder.write_json(report.to_dict(), os.path.join(out_dir, 'report.json'))]

        for result in report.sweep:
            t = result.threshold
            written.append(ReportBuilder.write_csv(
                ReportBuilder.stability_frame(result.stability, schema), os.path.join(out_dir, f'stability_t{t}.csv')))
            written.append(ReportBuilder.write_csv(
                ReportBuilder.overlap_frame(result.overlap), os.path.join(out_dir, f'overlap_t{t}.csv')))
            written.append(ReportBuilder.write_csv(
                ReportBuilder.condov_frame(report.matrices[t]), os.path.join(out_dir, f'condov_t{t}.csv')))
            written.append(ReportBuilder.write_text(
                render_heatmap(report.matrices[t], schema), os.path.join(out_dir, f'heatmap_t{t}.svg')))
            written.append(ReportBuilder.write_text(
                render_stability_landscape(result.stability), os.path.join(out_dir, f'landscape_t{t}.svg')))

        written.extend(ReportBuilder.write_robustness(report, out_dir))
        if report.cleaning is not None:
            written.append(ReportBuilder.write_csv(
                pd.DataFrame(report.cleaning.to_rows()), os.path.join(out_dir, 'cleaning.csv')))
        if report.validation is not None:
            written.append(ReportBuilder.write_csv(
                ReportBuilder.alignment_frame(report.validation['boundary_alignment']),
                os.path.join(out_dir, 'alignment.csv')))

        logger.info(f"Wrote {len(written)} files to {out_dir}")
        return written

    @staticmethod
    def write_robustness(report: AuditReport, out_dir: str) -> List[str]:
        """Threshold ranks, leave-one-out ranks and annotator profiles, when present."""
        os.makedirs(out_dir, exist_ok=True)
        written = []
        if 'ambiguity' in report.threshold_ranks:
            written.append(ReportBuilder.write_csv(
                ReportBuilder.ranks_frame(report.threshold_ranks['ambiguity'], frac),
                os.path.join(out_dir, 'robustness_thresholds.csv')))
        if report.loo is not None:
            frames = []
            for metric, ranks in (('nt', report.loo.nt), ('uy', report.loo.uy)):
                frame = ReportBuilder.ranks_frame(ranks)
                frame.insert(0, 'metric', metric)
                frames.append(frame)
            written.append(ReportBuilder.write_csv(
                pd.concat(frames, ignore_index=True), os.path.join(out_dir, 'robustness_loo.csv')))
        if report.profiles is not None:
            profiles = pd.DataFrame(report.profiles.to_rows())
            for q in report.profiles.criterion_ids:
                profiles[q] = profiles[q].map(pct)
            written.append(ReportBuilder.write_csv(profiles, os.path.join(out_dir, 'profiles.csv')))
        return written


def parse_threshold_list(text: Optional[str]) -> Optional[List[int]]:
    """'1,2,3' -> [1, 2, 3]; None passes through."""
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [int(t) for t in text]
    try:
        return [int(part) for part in str(text).split(',') if part.strip()]
    except ValueError:
        raise ThresholdError(f"Thresholds must be comma-separated integers, got '{text}'")


def split_ids(text: Optional[Any]) -> Optional[List[str]]:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [part.strip() for part in str(text).split(',') if part.strip()]
