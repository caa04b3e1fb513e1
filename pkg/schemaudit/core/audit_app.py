"""Main schemaudit application class."""

import asyncio
import dataclasses
import logging
import os
from typing import Any, Callable, Dict

import pandas as pd

from ..cli.parser import build_parser
from ..config.config_loader import ConfigLoader
from ..exceptions.audit_exceptions import AuditException, InvariantViolation
from ..panel.panel_client import PanelClient, load_panel_config
from ..panel.prompt_template import load_template
from ..report.report_builder import AuditOptions, ReportBuilder, parse_threshold_list, pct, split_ids
from ..report.svg import render_heatmap, render_stability_landscape
from ..utils.constants import (
    DEFAULT_CONFIG, DEFAULT_OUT_DIR, DEFAULT_VALIDATION_THRESHOLD, EXIT_INPUT_ERROR, EXIT_INTERNAL_ERROR, EXIT_OK,
    LONG_FORM_COLUMNS, VERSION,
)
from .normalize import ResponseNormalizer, RuleTable
from .robustness import RobustnessAnalyzer
from .schema import SchemaLoader
from .separability import SeparabilityAnalyzer
from .stability import StabilityAnalyzer
from .synth import PlantedSpec, SyntheticGenerator
from .tensor import TensorBuilder

logger = logging.getLogger('schemaudit.app')


class AuditApp:
    """Dispatches CLI subcommands and maps failures to exit codes."""

    def __init__(self):
        self.config_loader = ConfigLoader()
        self.commands: Dict[str, Callable[[Dict[str, Any]], None]] = {
            'ingest': self._ingest,
            'normalize': self._normalize,
            'stability': self._stability,
            'overlap': self._overlap,
            'robustness': self._robustness,
            'validate': self._validate,
            'synth': self._synth,
            'collect': self._collect,
            'report': self._report,
        }

    def run(self, args: Dict[str, Any]) -> int:
        """Run one subcommand.

        Args:
            args: Parsed command-line arguments

        Returns:
            Exit code: 0 success, 1 input error, 2 internal invariant violation
        """
        if args.get('version'):
            print(VERSION)
            return EXIT_OK

        log_level = (args.get('log_level') or 'info').upper()
        logging.getLogger('schemaudit').setLevel(getattr(logging, log_level, logging.INFO))

        command = args.get('command')
        if command not in self.commands:
            build_parser().print_help()
            return EXIT_INPUT_ERROR

        try:
            defaults = self.config_loader.load_audit_defaults(args.get('config'), DEFAULT_CONFIG)
            settings = self.config_loader.merge_settings(args, defaults)
            self.commands[command](settings)
            return EXIT_OK
        except InvariantViolation as e:
            logger.error(f"Internal consistency check failed: {e}")
            print(f"Error: {e}")
            return EXIT_INTERNAL_ERROR
        except AuditException as e:
            logger.error(f"Error: {e}")
            print(f"Error: {e}")
            return EXIT_INPUT_ERROR
        except Exception as e:
            logger.exception(f"Unexpected error: {e}")
            print(f"Unexpected error: {e}")
            return EXIT_INTERNAL_ERROR

    @staticmethod
    def _out_dir(settings: Dict[str, Any]) -> str:
        out = settings.get('out') or DEFAULT_OUT_DIR
        os.makedirs(out, exist_ok=True)
        return out

    @staticmethod
    def _options(settings: Dict[str, Any]) -> AuditOptions:
        options = AuditOptions(
            thresholds=parse_threshold_list(settings.get('thresholds')),
            loo_pool=split_ids(settings.get('loo_pool')),
            panel_size=settings.get('panel_size'),
            labels_path=settings.get('labels'),
            rules_path=settings.get('rules'),
            annotators=split_ids(settings.get('annotators')),
        )
        for key in ('mask_within', 'top_k', 'loo_threshold', 'correlation_threshold', 'validation_threshold'):
            if settings.get(key) is not None:
                setattr(options, key, settings[key])
        return options

    @staticmethod
    def _load(settings: Dict[str, Any]):
        return ReportBuilder.load_inputs(
            settings['schema'], settings['tensor'], settings.get('rules'), split_ids(settings.get('annotators')))

    @staticmethod
    def _thresholds(settings: Dict[str, Any], panel_size: int):
        return parse_threshold_list(settings.get('thresholds')) or RobustnessAnalyzer.default_thresholds(panel_size)

    def _ingest(self, settings: Dict[str, Any]) -> None:
        inputs = self._load(settings)
        out = self._out_dir(settings)
        tensor_path = os.path.join(out, 'tensor.csv')
        TensorBuilder.write_long_csv(inputs.panel, tensor_path)
        summary = {
            'summary': TensorBuilder.tensor_summary(inputs.panel),
            'drop_report': inputs.panel.drop_report.to_dict(),
            'panel': list(inputs.panel.annotator_ids),
        }
        if inputs.cleaning is not None:
            summary['cleaning'] = inputs.cleaning.to_dict()
            ReportBuilder.write_csv(pd.DataFrame(inputs.cleaning.to_rows()), os.path.join(out, 'cleaning.csv'))
        ReportBuilder.write_json(summary, os.path.join(out, 'ingest.json'))
        counts = summary['summary']
        print(f"Tensor: {counts['units']} units x {counts['annotators']} annotators x {counts['criteria']} criteria; "
              f"dropped {inputs.panel.drop_report.count} units")
        print(f"Wrote {tensor_path}")

    def _normalize(self, settings: Dict[str, Any]) -> None:
        rules = RuleTable.from_file(settings['rules']) if settings.get('rules') else None
        rows, report = ResponseNormalizer.clean_grid(TensorBuilder.read_raw_csv(settings['input']), rules)
        out = self._out_dir(settings)
        ReportBuilder.write_csv(pd.DataFrame(rows, columns=list(LONG_FORM_COLUMNS)),
                                os.path.join(out, 'normalized.csv'))
        ReportBuilder.write_csv(pd.DataFrame(report.to_rows()), os.path.join(out, 'cleaning.csv'))
        ReportBuilder.write_json(report.to_dict(), os.path.join(out, 'cleaning.json'))
        totals = report.totals()
        print(f"{totals['valid']} valid, {totals['missing']} missing, {totals['malformed']} malformed "
              f"of {totals['total']} tuples")

    def _stability(self, settings: Dict[str, Any]) -> None:
        inputs = self._load(settings)
        votes = TensorBuilder.vote_counts(inputs.panel)
        out = self._out_dir(settings)
        results = []
        for t in self._thresholds(settings, votes.panel_size):
            rows = StabilityAnalyzer.stability_table(votes, inputs.schema, t)
            ReportBuilder.write_csv(ReportBuilder.stability_frame(rows, inputs.schema),
                                    os.path.join(out, f'stability_t{t}.csv'))
            ReportBuilder.write_text(render_stability_landscape(rows), os.path.join(out, f'landscape_t{t}.svg'))
            results.append({'threshold': t, 'rows': [r.to_dict() for r in rows]})
        ReportBuilder.write_json({'panel': list(inputs.panel.annotator_ids), 'thresholds': results},
                                 os.path.join(out, 'stability.json'))
        print(f"Wrote stability tables for {len(results)} thresholds to {out}")

    def _overlap(self, settings: Dict[str, Any]) -> None:
        inputs = self._load(settings)
        schema = inputs.schema
        votes = TensorBuilder.vote_counts(inputs.panel)
        mask_within = settings.get('mask_within')
        mask_within = True if mask_within is None else mask_within
        out = self._out_dir(settings)
        results = []
        for t in self._thresholds(settings, votes.panel_size):
            summary = SeparabilityAnalyzer.overlap_summary(votes, schema, t)
            matrix = SeparabilityAnalyzer.leakage_matrix(votes, schema, t, mask_within)
            ReportBuilder.write_csv(ReportBuilder.overlap_frame(summary), os.path.join(out, f'overlap_t{t}.csv'))
            ReportBuilder.write_csv(ReportBuilder.condov_frame(matrix), os.path.join(out, f'condov_t{t}.csv'))
            ReportBuilder.write_text(render_heatmap(matrix, schema), os.path.join(out, f'heatmap_t{t}.svg'))
            results.append({
                'summary': summary.to_dict(),
                'condov': matrix.to_dict(),
                'asymmetry': [
                    {**dataclasses.asdict(r), 'asymmetry': r.asymmetry}
                    for r in SeparabilityAnalyzer.directed_asymmetry(matrix, schema)
                ],
                'category_pairs': [
                    {**dataclasses.asdict(r), 'fraction': r.fraction}
                    for r in SeparabilityAnalyzer.category_pair_coactivation(votes, schema, t)
                ],
            })
            print(f"t={t}: covered {summary.covered_count}/{summary.n_units}, "
                  f"overlap given coverage {pct(summary.overlap_cat_given_cov) or '-'}%")
        ReportBuilder.write_json({'panel': list(inputs.panel.annotator_ids), 'thresholds': results},
                                 os.path.join(out, 'overlap.json'))

    def _robustness(self, settings: Dict[str, Any]) -> None:
        report = ReportBuilder.run_audit(settings['schema'], settings['tensor'], self._options(settings))
        out = self._out_dir(settings)
        written = ReportBuilder.write_robustness(report, out)
        robustness = report.to_dict().get('robustness', {})
        written.append(ReportBuilder.write_json(robustness, os.path.join(out, 'robustness.json')))
        print(f"Wrote {len(written)} files to {out}")

    def _validate(self, settings: Dict[str, Any]) -> None:
        inputs = self._load(settings)
        votes = TensorBuilder.vote_counts(inputs.panel)
        t = settings.get('validation_threshold')
        if t is None:
            t = DEFAULT_VALIDATION_THRESHOLD
        section = ReportBuilder.validation_section(settings['labels'], inputs.schema, votes, t)
        out = self._out_dir(settings)
        ReportBuilder.write_csv(ReportBuilder.alignment_frame(section['boundary_alignment']),
                                os.path.join(out, 'alignment.csv'))
        ReportBuilder.write_json(section, os.path.join(out, 'validation.json'))
        kappa = section['fleiss_kappa']['kappa']
        print(f"Fleiss' kappa: {'undefined' if kappa is None else f'{kappa:.3f}'}")

    def _synth(self, settings: Dict[str, Any]) -> None:
        spec = PlantedSpec.from_file(settings['spec'])
        if settings.get('seed') is not None:
            spec = dataclasses.replace(spec, seed=settings['seed'])
        tensor, report = SyntheticGenerator.generate_with_report(spec, settings['units'])
        path = settings.get('output_file') or 'synth.csv'
        TensorBuilder.write_long_csv(tensor, path)
        if settings.get('report'):
            ReportBuilder.write_json(report.to_dict(), settings['report'])
        if report.infeasible:
            print(f"Infeasible targets: {', '.join(report.infeasible)}")
        print(f"Wrote {path}")

    def _collect(self, settings: Dict[str, Any]) -> None:
        schema = SchemaLoader.load_schema(settings['schema'])
        corpus = PanelClient.read_corpus_csv(settings['corpus'])
        config = load_panel_config(settings['panel'])
        transport = PanelClient.get_transport(config)
        client = PanelClient(config, transport, load_template(settings['template']))
        try:
            result = asyncio.run(client.collect(corpus, schema))
        finally:
            transport.close()
        path = settings.get('output_file') or 'raw.csv'
        PanelClient.write_raw_csv(result, path)
        print(f"Collected {len(result.cells)} cells, {len(result.missing)} missing; wrote {path}")

    def _report(self, settings: Dict[str, Any]) -> None:
        report = ReportBuilder.run_audit(settings['schema'], settings['tensor'], self._options(settings))
        out = self._out_dir(settings)
        written = ReportBuilder.write_bundle(report, out)
        print(f"Wrote {len(written)} files to {out}")
