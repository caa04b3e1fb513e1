"""Collects raw criterion-level annotation grids from a panel of text-generation services."""

import asyncio
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import pandas as pd

from ..config.config_loader import ConfigLoader
from ..core.schema import Schema
from ..exceptions.audit_exceptions import ConfigurationError, PromptError, TransportError
from ..utils.constants import (
    CORPUS_COLUMNS, DEFAULT_BACKOFF_SECONDS, DEFAULT_MAX_ATTEMPTS, DEFAULT_MAX_IN_FLIGHT,
    DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, RAW_FORM_COLUMNS,
)
from .live import LiveTransport
from .prompt_template import PromptTemplate
from .replay import RECORD, ReplayTransport
from .transport_base import Transport

logger = logging.getLogger('schemaudit.panel')


@dataclass(frozen=True)
class AnnotatorEntry:
    id: str
    endpoint: str = ''
    model: str = ''


@dataclass(frozen=True)
class Decoding:
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    backoff_seconds: float = DEFAULT_BACKOFF_SECONDS


@dataclass(frozen=True)
class PanelConfig:
    annotators: Tuple[AnnotatorEntry, ...]
    decoding: Decoding = Decoding()
    retry: RetryPolicy = RetryPolicy()
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    transport: Dict[str, Any] = field(default_factory=lambda: {'kind': 'replay'})
    base_dir: str = '.'

    def __post_init__(self):
        ids = [a.id for a in self.annotators]
        if not ids:
            raise ConfigurationError("Panel config needs at least one annotator")
        if len(set(ids)) != len(ids):
            raise ConfigurationError("Annotator ids in panel config must be unique")
        if self.retry.max_attempts < 1:
            raise ConfigurationError("retry.max_attempts must be at least 1")
        if self.max_in_flight < 1:
            raise ConfigurationError("max_in_flight must be at least 1")

    @property
    def annotator_ids(self) -> Tuple[str, ...]:
        return tuple(a.id for a in self.annotators)


@dataclass(frozen=True)
class MissingCell:
    unit_id: str
    annotator_id: str
    criterion_id: str
    reason: str


@dataclass
class CollectionResult:
    """Raw cells keyed by (unit, annotator, criterion) plus cells that failed after retries."""
    unit_ids: Tuple[str, ...]
    annotator_ids: Tuple[str, ...]
    criterion_ids: Tuple[str, ...]
    cells: Dict[Tuple[str, str, str], str] = field(default_factory=dict)
    missing: List[MissingCell] = field(default_factory=list)

    def rows(self) -> List[Tuple[str, str, str, Optional[str]]]:
        """Raw-form rows in unit, annotator, criterion order; None marks a missing cell."""
        return [
            (u, a, q, self.cells.get((u, a, q)))
            for u in self.unit_ids for a in self.annotator_ids for q in self.criterion_ids
        ]


def load_panel_config(path: str) -> PanelConfig:
    """Load a panel YAML file; relative fixture paths resolve against its directory.

    Raises:
        ConfigurationError: On missing annotators, duplicate ids or bad settings
    """
    config = ConfigLoader.read_config(path)
    try:
        annotators = tuple(
            AnnotatorEntry(str(a['id']), str(a.get('endpoint', '')), str(a.get('model', a['id'])))
            for a in config.get('annotators') or []
        )
        decoding = config.get('decoding') or {}
        retry = config.get('retry') or {}
        panel = PanelConfig(
            annotators=annotators,
            decoding=Decoding(float(decoding.get('temperature', DEFAULT_TEMPERATURE)),
                              int(decoding.get('max_tokens', DEFAULT_MAX_TOKENS))),
            retry=RetryPolicy(int(retry.get('max_attempts', DEFAULT_MAX_ATTEMPTS)),
                              float(retry.get('backoff_seconds', DEFAULT_BACKOFF_SECONDS))),
            max_in_flight=int(config.get('max_in_flight', DEFAULT_MAX_IN_FLIGHT)),
            transport=dict(config.get('transport') or {'kind': 'replay'}),
            base_dir=os.path.dirname(os.path.abspath(path)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid panel config {path}: {e}")
    logger.info(f"Loaded panel config from {path}: {len(panel.annotators)} annotators")
    return panel


class PanelClient:
    """Queries every (unit, annotator, criterion) cell independently through a transport."""

    # Map of transport kinds to their classes
    TRANSPORTS_MAP: Dict[str, Type[Transport]] = {
        'replay': ReplayTransport,
        'live': LiveTransport,
    }

    def __init__(self, config: PanelConfig, transport: Transport, template: PromptTemplate):
        self.config = config
        self.transport = transport
        self.template = template

    @staticmethod
    def get_transport(config: PanelConfig) -> Transport:
        """Build the transport named by `transport.kind`.

        A replay transport in record mode wraps a live transport. Credentials
        are only read for live requests.
        """
        settings = config.transport
        kind = settings.get('kind', 'replay')
        if kind not in PanelClient.TRANSPORTS_MAP:
            raise ConfigurationError(
                f"Unknown transport kind '{kind}', expected one of {', '.join(PanelClient.TRANSPORTS_MAP)}")
        if kind == 'live':
            return LiveTransport.from_config(settings, config.base_dir)
        path = settings.get('path')
        if not path:
            raise ConfigurationError("Replay transport needs a fixture 'path'")
        if not os.path.isabs(path):
            path = os.path.join(config.base_dir, path)
        mode = settings.get('mode', 'replay')
        inner = LiveTransport.from_config(settings, config.base_dir) if mode == RECORD else None
        return ReplayTransport(path, mode=mode, inner=inner)

    @staticmethod
    def read_corpus_csv(path: str) -> List[Tuple[str, str]]:
        """Read `unit_id,sentence` rows, header on line 1."""
        if not os.path.isfile(path):
            raise PromptError(f"Corpus file does not exist: {path}")
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        missing = [c for c in CORPUS_COLUMNS if c not in frame.columns]
        if missing:
            raise PromptError(f"{path}:1: missing columns: {', '.join(missing)}")
        corpus, seen = [], set()
        for line, (unit_id, sentence) in enumerate(
                frame[list(CORPUS_COLUMNS)].itertuples(index=False, name=None), start=2):
            if unit_id in seen:
                raise PromptError(f"{path}:{line}: duplicate unit id '{unit_id}'")
            if not sentence.strip():
                raise PromptError(f"{path}:{line}: empty sentence for unit '{unit_id}'")
            seen.add(unit_id)
            corpus.append((unit_id, sentence))
        logger.info(f"Read {len(corpus)} corpus units from {path}")
        return corpus

    async def _query_cell(self, semaphore: asyncio.Semaphore, annotator: AnnotatorEntry,
                          prompt: str) -> Tuple[Optional[str], str]:
        policy = self.config.retry
        reason = ''
        for attempt in range(1, policy.max_attempts + 1):
            async with semaphore:
                try:
                    return await self.transport.complete(annotator, prompt, self.config.decoding), ''
                except TransportError as e:
                    reason = str(e)
                    logger.debug(f"Attempt {attempt}/{policy.max_attempts} failed: {e}")
            if attempt < policy.max_attempts and policy.backoff_seconds > 0:
                await asyncio.sleep(policy.backoff_seconds * attempt)
        return None, reason

    async def collect(self, corpus: Sequence[Tuple[str, str]], schema: Schema) -> CollectionResult:
        """Query every cell, each criterion in its own request and each unit in isolation.

        Args:
            corpus: (unit_id, sentence) pairs
            schema: Schema whose criteria are asked

        Returns:
            CollectionResult; cells still failing after retries are listed as missing
        """
        unit_ids = [u for u, _ in corpus]
        if len(set(unit_ids)) != len(unit_ids):
            raise PromptError("Corpus contains duplicate unit ids")
        prompts: Dict[Tuple[str, str], str] = {
            (unit_id, q.id): self.template.render(sentence, q)
            for unit_id, sentence in corpus for q in schema.criteria
        }

        semaphore = asyncio.Semaphore(self.config.max_in_flight)
        keys = [
            (unit_id, annotator, q)
            for unit_id in unit_ids for annotator in self.config.annotators for q in schema.criteria
        ]
        outcomes = await asyncio.gather(*(
            self._query_cell(semaphore, annotator, prompts[(unit_id, q.id)])
            for unit_id, annotator, q in keys
        ))

        result = CollectionResult(tuple(unit_ids), self.config.annotator_ids, schema.criterion_ids)
        for (unit_id, annotator, q), (response, reason) in zip(keys, outcomes):
            key = (unit_id, annotator.id, q.id)
            if response is None:
                result.missing.append(MissingCell(*key, reason))
            else:
                result.cells[key] = response
        if result.missing:
            logger.warning(f"{len(result.missing)} cells failed after {self.config.retry.max_attempts} attempts")
        logger.info(f"Collected {len(result.cells)} cells from {len(self.config.annotators)} annotators")
        return result

    @staticmethod
    def write_raw_csv(result: CollectionResult, path: str) -> None:
        """Write raw-form CSV; a missing cell is an empty raw_text field."""
        frame = pd.DataFrame(
            [(u, a, q, '' if text is None else text) for u, a, q, text in result.rows()],
            columns=list(RAW_FORM_COLUMNS),
        )
        frame.to_csv(path, index=False, lineterminator='\n')
        logger.info(f"Wrote {len(frame)} raw cells to {path}")
