#!/usr/bin/env python3
"""Main entry point for the audit command."""

import logging
import sys
from typing import List, Optional

from .cli.parser import parse_arguments
from .core.audit_app import AuditApp

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler()
    ]
)
logger = logging.getLogger('schemaudit')


def main(argv: Optional[List[str]] = None) -> None:
    """Parse arguments, run one subcommand and exit with its status code."""
    args = parse_arguments(argv)
    sys.exit(AuditApp().run(args))


if __name__ == "__main__":
    main()
