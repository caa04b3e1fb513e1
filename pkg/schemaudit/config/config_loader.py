"""Configuration loader module."""

import json
import os
import re
import yaml
import logging
from typing import Dict, Any, Optional

from ..exceptions.audit_exceptions import ConfigurationError

logger = logging.getLogger('schemaudit.config')

# Keys accepted in an audit.yml defaults file
AUDIT_KEYS = {
    'thresholds', 'mask_within', 'top_k', 'panel_size', 'loo_pool', 'rules',
    'out', 'correlation_threshold', 'validation_threshold', 'annotators',
}

SENSITIVE_MARKERS = ('key', 'token', 'secret', 'password')

class ConfigLoader:
    """Handles config loading with support for includes and environment variables."""

    @staticmethod
    def read_config(config_path: str, tag: str = '!ENV') -> Dict[str, Any]:
        """Read and parse configuration from a YAML file.

        Args:
            config_path: Path to the configuration file
            tag: Environment variable tag to process

        Returns:
            Dict containing the parsed configuration

        Raises:
            ConfigurationError: If config file doesn't exist or has invalid format
        """
        if not os.path.isfile(config_path):
            raise ConfigurationError(f"Config file does not exist at {config_path}")

        # REGEX for ${word}
        tag_regex = re.compile(r'.*?\${(\w+)}.*?')

        class Loader(yaml.SafeLoader):
            """Per-call loader so tag registration never leaks between files."""

        Loader.add_implicit_resolver(tag, tag_regex, None)

        def env_variables(loader, node):
            """Process environment variables in configuration."""
            scalar = loader.construct_scalar(node)
            match = tag_regex.findall(scalar)
            if match:
                value = scalar
                for g in match:
                    value = value.replace(f'${{{g}}}', os.environ.get(g, g))
                return value
            return scalar

        def include_constructor(loader, node):
            """Process include directives in configuration."""
            include_path = loader.construct_scalar(node)

            # Handle relative paths
            if not os.path.isabs(include_path):
                base_dir = os.path.dirname(os.path.abspath(config_path))
                include_path = os.path.join(base_dir, include_path)

            if not os.path.exists(include_path):
                raise ConfigurationError(f"Included file does not exist: {include_path}")

            with open(include_path, 'r', encoding='utf-8') as f:
                return yaml.load(f, Loader=Loader)

        Loader.add_constructor(tag, env_variables)
        Loader.add_constructor('!include', include_constructor)

        try:
            with open(config_path, encoding='utf-8') as file:
                config = yaml.load(file, Loader=Loader)
        except yaml.YAMLError as e:
            logger.error(f"Error parsing YAML config: {e}")
            raise ConfigurationError(f"Error parsing YAML config {config_path}: {e}")

        if config is None:
            config = {}
        if not isinstance(config, dict):
            raise ConfigurationError(f"Config file {config_path} must contain a mapping at top level")

        logger.debug(f"Loaded config from {config_path}: "
                     f"{json.dumps(ConfigLoader.sanitize_config(config), indent=2, default=str)}")
        return config

    @staticmethod
    def load_audit_defaults(config_path: Optional[str], default_path: str) -> Dict[str, Any]:
        """Load the audit defaults file if one is present.

        An explicit path must exist; the implicit default file is optional.

        Args:
            config_path: Path given with --config, or None
            default_path: File looked up in the working directory otherwise

        Returns:
            Dict of recognised audit settings (possibly empty)

        Raises:
            ConfigurationError: If an explicit file is missing or has unknown keys
        """
        if config_path is None:
            if not os.path.isfile(default_path):
                return {}
            config_path = default_path

        config = ConfigLoader.read_config(config_path)
        unknown = sorted(set(config) - AUDIT_KEYS)
        if unknown:
            raise ConfigurationError(f"Unknown keys in {config_path}: {', '.join(unknown)}")
        logger.info(f"Loaded audit defaults from {config_path}")
        return config

    @staticmethod
    def merge_settings(cli_args: Dict[str, Any], defaults: Dict[str, Any]) -> Dict[str, Any]:
        """Overlay CLI values on file defaults; None on the CLI means 'not given'."""
        merged = dict(defaults)
        for key, value in cli_args.items():
            if value is not None or key not in merged:
                merged[key] = value
        return merged

    @staticmethod
    def sanitize_config(config: Any) -> Any:
        """Remove sensitive data from config for logging purposes."""
        if isinstance(config, dict):
            return {
                k: '***' if any(m in str(k).lower() for m in SENSITIVE_MARKERS)
                else ConfigLoader.sanitize_config(v)
                for k, v in config.items()
            }
        elif isinstance(config, list):
            return [ConfigLoader.sanitize_config(i) for i in config]
        else:
            return config
