"""Panel collection: prompt templates, transports and the panel client."""

from .live import LiveTransport
from .panel_client import (
    AnnotatorEntry, CollectionResult, Decoding, MissingCell, PanelClient, PanelConfig,
    RetryPolicy, load_panel_config,
)
from .prompt_template import PromptTemplate, load_template, render_prompt
from .replay import ReplayTransport
from .transport_base import Transport

__all__ = [
    'AnnotatorEntry', 'CollectionResult', 'Decoding', 'LiveTransport', 'MissingCell',
    'PanelClient', 'PanelConfig', 'PromptTemplate', 'ReplayTransport', 'RetryPolicy',
    'Transport', 'load_panel_config', 'load_template', 'render_prompt',
]
