"""Command-line argument parsing module."""

import argparse
import textwrap
from typing import Any, Dict, List, Optional

from ..utils.constants import DEFAULT_TEMPLATE_PATH, PLANTED_EXAMPLE_PATH

COMMANDS = ('ingest', 'normalize', 'stability', 'overlap', 'robustness', 'validate', 'synth', 'collect', 'report')


def _add_inputs(parser: argparse.ArgumentParser, rules: bool = True) -> None:
    parser.add_argument('--schema', required=True,
                        help='Path to the schema JSON file')
    parser.add_argument('--tensor', required=True,
                        help='Long-form (value) or raw-form (raw_text) annotation CSV')
    parser.add_argument('--annotators',
                        help='Comma-separated annotator ids forming the core panel')
    if rules:
        parser.add_argument('--rules',
                            help='Normalization rule table for raw-form input')


def _add_out(parser: argparse.ArgumentParser, help_text: str = 'Output directory', dest: str = 'out') -> None:
    parser.add_argument('-o', '--out', dest=dest, help=help_text)


def _add_thresholds(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--thresholds',
                        help='Comma-separated vote thresholds (default: 1,2,ceil(A/2))')


def _add_robustness(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--loo-pool',
                        help='Comma-separated annotator pool for leave-one-out panels')
    parser.add_argument('--panel-size', type=int,
                        help='Fixed panel size for leave-one-out panels')
    parser.add_argument('--top-k', type=int,
                        help='Rank cut-off for top-k frequencies (default: 3)')
    parser.add_argument('--loo-threshold', type=int,
                        help='Threshold at which leave-one-out panels are evaluated (default: 1)')
    parser.add_argument('--correlation-threshold', type=int,
                        help='Focus-set threshold for inter-annotator correlations (default: 1)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='audit',
        description='Audit annotation schemas from multi-annotator criterion judgments',
        epilog=textwrap.dedent("""\
        Defaults for thresholds, panels and output are read from audit.yml in the
        working directory (or --config). Command-line flags take precedence.
        """),
        formatter_class=argparse.RawTextHelpFormatter,
    )
    parser.add_argument('-c', '--config',
                        help='Path to an audit defaults file')
    parser.add_argument('-v', '--version',
                        help='Show version',
                        action='store_true')
    parser.add_argument('-l', '--log-level',
                        help='Set logging level (debug, info, warning, error)',
                        choices=['debug', 'info', 'warning', 'error'],
                        default='info')

    sub = parser.add_subparsers(dest='command', metavar='command')

    ingest = sub.add_parser('ingest', help='Build the filtered tensor and report dropped units')
    _add_inputs(ingest)
    _add_out(ingest)

    normalize = sub.add_parser('normalize', help='Normalize raw responses into binary long-form rows')
    normalize.add_argument('--input', required=True, help='Raw-form CSV (unit_id,annotator_id,criterion_id,raw_text)')
    normalize.add_argument('--rules', help='Normalization rule table')
    _add_out(normalize)

    stability = sub.add_parser('stability', help='Per-criterion activation and zone rates')
    _add_inputs(stability)
    _add_thresholds(stability)
    _add_out(stability)

    overlap = sub.add_parser('overlap', help='Coverage, category overlap and conditional overlap matrices')
    _add_inputs(overlap)
    _add_thresholds(overlap)
    overlap.add_argument('--mask-within', action=argparse.BooleanOptionalAction, default=None,
                         help='Mask within-category cells in heatmaps (default: on)')
    _add_out(overlap)

    robustness = sub.add_parser('robustness', help='Threshold sweeps, leave-one-out panels and annotator profiles')
    _add_inputs(robustness)
    _add_thresholds(robustness)
    _add_robustness(robustness)
    _add_out(robustness)

    validate = sub.add_parser('validate', help='Expert reliability and boundary alignment')
    _add_inputs(validate)
    validate.add_argument('--labels', required=True, help='Labels CSV (unit_id,expert_id,pass,category_id)')
    validate.add_argument('--threshold', dest='validation_threshold', type=int,
                          help='Threshold defining covered units (default: 1)')
    _add_out(validate)

    synth = sub.add_parser('synth', help='Generate a synthetic long-form tensor from a planted spec')
    synth.add_argument('--spec', default=PLANTED_EXAMPLE_PATH, help='Planted spec YAML')
    synth.add_argument('--units', type=int, default=1000, help='Number of units to generate')
    synth.add_argument('--seed', type=int, help='Override the spec seed')
    synth.add_argument('--report', help='Write the achieved-versus-target report to this JSON file')
    _add_out(synth, 'Output long-form CSV path (default: synth.csv)', dest='output_file')

    collect = sub.add_parser('collect', help='Query an annotator panel for a raw-form grid')
    collect.add_argument('--schema', required=True, help='Path to the schema JSON file')
    collect.add_argument('--corpus', required=True, help='Corpus CSV (unit_id,sentence)')
    collect.add_argument('--panel', required=True, help='Panel config YAML')
    collect.add_argument('--template', default=DEFAULT_TEMPLATE_PATH, help='Prompt template YAML')
    _add_out(collect, 'Output raw-form CSV path (default: raw.csv)', dest='output_file')

    report = sub.add_parser('report', help='Run the full audit and write the report bundle')
    _add_inputs(report)
    _add_thresholds(report)
    _add_robustness(report)
    report.add_argument('--labels', help='Labels CSV for validation')
    report.add_argument('--validation-threshold', type=int, help='Threshold defining covered units (default: 1)')
    report.add_argument('--mask-within', action=argparse.BooleanOptionalAction, default=None,
                        help='Mask within-category cells in heatmaps (default: on)')
    report.add_argument('--seed', type=int, help='Accepted for symmetry with synth; the audit itself is deterministic')
    _add_out(report)

    return parser


def parse_arguments(argv: Optional[List[str]] = None) -> Dict[str, Any]:
    """Parse command-line arguments.

    Args:
        argv: Argument list, defaults to sys.argv[1:]

    Returns:
        Dictionary of parsed arguments
    """
    return vars(build_parser().parse_args(argv))
