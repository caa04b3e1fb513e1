"""Record/replay transport backed by newline-delimited JSON fixtures."""

import asyncio
import hashlib
import json
import logging
import os
from typing import Any, Dict, Optional

from ..exceptions.audit_exceptions import ConfigurationError, TransportError
from .transport_base import Transport

logger = logging.getLogger('schemaudit.panel')

REPLAY = 'replay'
RECORD = 'record'


class ReplayTransport(Transport):
    """Serves responses from a JSONL fixture of {key, annotator, response} records.

    In record mode every request is forwarded to an inner transport and the
    answer is appended to the fixture. A null response records a failure.
    """

    kind = 'replay'

    def __init__(self, path: str, mode: str = REPLAY, inner: Optional[Transport] = None):
        if mode not in (REPLAY, RECORD):
            raise ConfigurationError(f"Replay mode must be '{REPLAY}' or '{RECORD}', got '{mode}'")
        if mode == RECORD and inner is None:
            raise ConfigurationError("Record mode needs an inner transport")
        self.path = path
        self.mode = mode
        self.inner = inner
        self._responses: Dict[str, Optional[str]] = {}
        self._lock = asyncio.Lock()
        if mode == REPLAY:
            self._load()

    @staticmethod
    def key_for(annotator_id: str, prompt: str) -> str:
        return hashlib.sha256(f"{annotator_id}\x00{prompt}".encode('utf-8')).hexdigest()

    def _load(self) -> None:
        if not os.path.isfile(self.path):
            raise ConfigurationError(f"Replay fixture does not exist: {self.path}")
        with open(self.path, encoding='utf-8') as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    self._responses[record['key']] = record.get('response')
                except (ValueError, KeyError, TypeError) as e:
                    raise ConfigurationError(f"{self.path}:{line_no}: bad replay record: {e}")
        logger.info(f"Loaded {len(self._responses)} replay records from {self.path}")

    async def complete(self, annotator: Any, prompt: str, decoding: Any) -> str:
        key = self.key_for(annotator.id, prompt)
        if self.mode == REPLAY:
            if key not in self._responses:
                raise TransportError(f"No replay record for annotator {annotator.id} (key {key[:12]})")
            response = self._responses[key]
            if response is None:
                raise TransportError(f"Replay record for annotator {annotator.id} is a recorded failure")
            return response

        try:
            response = await self.inner.complete(annotator, prompt, decoding)
        except TransportError:
            await self._append(key, annotator.id, None)
            raise
        await self._append(key, annotator.id, response)
        return response

    async def _append(self, key: str, annotator_id: str, response: Optional[str]) -> None:
        async with self._lock:
            self._responses[key] = response
            with open(self.path, 'a', encoding='utf-8') as f:
                f.write(json.dumps({'key': key, 'annotator': annotator_id, 'response': response},
                                   ensure_ascii=False, sort_keys=True) + '\n')

    @staticmethod
    def write_fixture(path: str, records: Dict[str, Dict[str, Any]]) -> None:
        """Write {key: {annotator, response}} records as a fixture, sorted by key."""
        with open(path, 'w', encoding='utf-8') as f:
            for key in sorted(records):
                record = {'key': key, **records[key]}
                f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + '\n')
