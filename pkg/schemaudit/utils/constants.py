"""Constants used throughout the application."""

import os

# Version
VERSION = '0.1.0'

# File paths and directories
DEFAULT_CONFIG = 'audit.yml'
DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data')
PVE_SCHEMA_PATH = os.path.join(DATA_DIR, 'pve_schema.json')
PVE_REFINED_SCHEMA_PATH = os.path.join(DATA_DIR, 'pve_schema_refined.json')
DEFAULT_RULES_PATH = os.path.join(DATA_DIR, 'rules.yml')
PROMPTS_DIR = os.path.join(DATA_DIR, 'prompts')
DEFAULT_TEMPLATE_PATH = os.path.join(PROMPTS_DIR, 'pve_fr.yml')
ENGLISH_TEMPLATE_PATH = os.path.join(PROMPTS_DIR, 'pve_en.yml')
PLANTED_EXAMPLE_PATH = os.path.join(DATA_DIR, 'planted.example.yml')
DEFAULT_OUT_DIR = 'audit_out'

# Input formats
LONG_FORM_COLUMNS = ('unit_id', 'annotator_id', 'criterion_id', 'value')
RAW_FORM_COLUMNS = ('unit_id', 'annotator_id', 'criterion_id', 'raw_text')
LABEL_COLUMNS = ('unit_id', 'expert_id', 'pass', 'category_id')
CORPUS_COLUMNS = ('unit_id', 'sentence')

# Analysis defaults
DEFAULT_TOP_K = 3
DEFAULT_LOO_THRESHOLD = 1
DEFAULT_CORRELATION_THRESHOLD = 1
DEFAULT_VALIDATION_THRESHOLD = 1
GAMMA_BUCKETS = ('1', '2', '3', '>=4')

# Decoding settings for panel collection
DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 3
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_BACKOFF_SECONDS = 1.0
DEFAULT_MAX_IN_FLIGHT = 8

# Exit codes
EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INTERNAL_ERROR = 2
