import logging
import os
from configparser import ConfigParser
from typing import Optional

import numpy as np

SECTION = "sepadv"

DEFAULTS = {
    "reference_mode": "1",
    "log_level": "INFO",
    "log_file": "",
    "output_dir": "sepadv_output",
    "jobs": "1",
}

ENV_VARS = {
    "reference_mode": "SEPADV_REFERENCE_MODE",
    "log_level": "SEPADV_LOG_LEVEL",
    "log_file": "SEPADV_LOG_FILE",
    "output_dir": "SEPADV_OUTPUT_DIR",
    "jobs": "SEPADV_JOBS",
}


def get_config(ini_path: Optional[str] = None) -> ConfigParser:
    """Load settings in this priority: env vars -> config.ini -> built-in defaults."""
    cfg = ConfigParser()
    cfg[SECTION] = {}

    # 1) Environment variables
    for key, env_name in ENV_VARS.items():
        value = os.getenv(env_name)
        if value is not None and value != "":
            cfg[SECTION][key] = value

    # 2) config.ini (local-only fallback)
    if ini_path is None:
        ini_path = os.path.abspath(os.path.join(os.path.dirname(__file__), "config.ini"))
    if os.path.exists(ini_path):
        ini = ConfigParser()
        ini.read(ini_path)
        if ini.has_section(SECTION):
            for k, v in ini.items(SECTION):
                if not cfg[SECTION].get(k):
                    cfg[SECTION][k] = v

    # 3) Defaults
    for k, v in DEFAULTS.items():
        if not cfg[SECTION].get(k):
            cfg[SECTION][k] = v

    return cfg


def reference_mode() -> bool:
    return get_config()[SECTION].getboolean("reference_mode")


def compute_dtype():
    """float64 in reference mode, float32 on the fast path."""
    return np.float64 if reference_mode() else np.float32


def log_level() -> int:
    name = get_config()[SECTION]["log_level"].upper()
    return getattr(logging, name, logging.INFO)
