"""Live transport for OpenAI-compatible chat-completion endpoints."""

import asyncio
import json
import logging
import os
import urllib.error
import urllib.request
from typing import Any, Dict

from ..exceptions.audit_exceptions import ConfigurationError, TransportError
from .transport_base import Transport

logger = logging.getLogger('schemaudit.panel')

DEFAULT_TIMEOUT_SECONDS = 60.0


class LiveTransport(Transport):
    """POSTs each prompt to `<endpoint>/chat/completions` in a worker thread."""

    kind = 'live'

    def __init__(self, api_key: str, timeout: float = DEFAULT_TIMEOUT_SECONDS):
        self._api_key = api_key
        self.timeout = timeout

    @classmethod
    def from_config(cls, transport_config: Dict[str, Any], base_dir: str) -> 'LiveTransport':
        """Read the credential from the environment variable named by `api_key_env`.

        Raises:
            ConfigurationError: If the variable is not named or not set
        """
        env_name = transport_config.get('api_key_env')
        if not env_name:
            raise ConfigurationError("Live transport needs 'api_key_env'")
        api_key = os.environ.get(env_name)
        if not api_key:
            raise ConfigurationError(f"Environment variable {env_name} is not set")
        return cls(api_key, float(transport_config.get('timeout', DEFAULT_TIMEOUT_SECONDS)))

    def _post(self, url: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        request = urllib.request.Request(
            url,
            data=json.dumps(payload).encode('utf-8'),
            headers={'Content-Type': 'application/json', 'Authorization': f"Bearer {self._api_key}"},
            method='POST',
        )
        with urllib.request.urlopen(request, timeout=self.timeout) as response:
            return json.loads(response.read().decode('utf-8'))

    async def complete(self, annotator: Any, prompt: str, decoding: Any) -> str:
        url = f"{annotator.endpoint.rstrip('/')}/chat/completions"
        payload = {
            'model': annotator.model,
            'messages': [{'role': 'user', 'content': prompt}],
            'temperature': decoding.temperature,
            'max_tokens': decoding.max_tokens,
        }
        try:
            body = await asyncio.to_thread(self._post, url, payload)
            return body['choices'][0]['message']['content'] or ''
        except urllib.error.HTTPError as e:
            raise TransportError(f"{annotator.id}: HTTP {e.code} from {url}")
        except (urllib.error.URLError, TimeoutError, OSError) as e:
            raise TransportError(f"{annotator.id}: cannot reach {url}: {e}")
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"{annotator.id}: unexpected response shape: {e}")
