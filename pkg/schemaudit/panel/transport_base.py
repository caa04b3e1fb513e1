"""Base class for panel transports."""

from typing import Any, Dict


class Transport:
    """Answers one (annotator, prompt) request with raw text.

    Implementations raise TransportError for a failed request; the panel
    client retries and finally records the cell as missing.
    """

    kind = 'base'

    async def complete(self, annotator: Any, prompt: str, decoding: Any) -> str:
        """Send one prompt to one annotator.

        Args:
            annotator: AnnotatorEntry with id, endpoint and model
            prompt: Fully rendered prompt
            decoding: Decoding settings (temperature, max_tokens)

        Returns:
            Raw response text
        """
        raise NotImplementedError

    @classmethod
    def from_config(cls, transport_config: Dict[str, Any], base_dir: str) -> 'Transport':
        """Build the transport from the `transport` block of a panel config."""
        return cls()

    def close(self) -> None:
        """Release any resources held by the transport."""
