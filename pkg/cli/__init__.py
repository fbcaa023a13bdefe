from cli.config_loader import apply_override, load_config, parse_override
from cli.main import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_UNEXPECTED, build_parser, main

__all__ = [
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_NUMERIC",
    "EXIT_OK",
    "EXIT_UNEXPECTED",
    "apply_override",
    "build_parser",
    "load_config",
    "main",
    "parse_override",
]
