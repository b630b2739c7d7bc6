import copy
import json
import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Process-level settings read from the environment."""

    CONFIG_PATH = os.getenv("BOREHOLE_CONFIG")
    LOG_LEVEL = os.getenv("BOREHOLE_LOG_LEVEL", "INFO")
    LOG_DIR = os.getenv("BOREHOLE_LOG_DIR", "logs")

    # Celery
    CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL", "memory://")
    CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", "cache+memory://")
    CELERY_TASK_ALWAYS_EAGER = os.getenv("CELERY_TASK_ALWAYS_EAGER", "True") == "True"


def merge_documents(base, override):
    """Recursively merge override into a copy of base (dicts merge, everything else replaces)"""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_documents(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_document(path):
    """Read a JSON config document; a missing path yields an empty document"""
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle)
    if not isinstance(document, dict):
        from blasthole.utils.exceptions import ConfigError

        raise ConfigError(f"Config document {path} must be a JSON object")
    return document


def load_pipeline_config(path=None, overrides=None):
    """
    Build the layered PipelineConfig.

    Layers, lowest first: built-in defaults, the JSON document at `path`
    (or BOREHOLE_CONFIG when no path is given), then `overrides`.

    Args:
        path: Optional path to a JSON config document
        overrides: Optional mapping applied last (e.g. CLI --seed)

    Returns:
        PipelineConfig
    """
    from blasthole.schemas.config import pipeline_config_schema
    from blasthole.utils.logger import logger

    path = path or Config.CONFIG_PATH
    document = merge_documents(read_config_document(path), overrides)
    logger.debug(f"Loading pipeline config from {path or 'defaults'}")
    return pipeline_config_schema.load(document)
