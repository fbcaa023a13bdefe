import logging
from typing import Optional


def configure_logging(log_file: Optional[str] = None, log_level: int = logging.INFO):
    """Configure logging with an optional file handler and a console handler.

    The console handler writes to stderr so stdout stays free for the one-line
    run summary printed by the command-line front end.
    """
    logging.basicConfig(level=log_level)

    # Clear any existing handlers
    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(log_level)

    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    root.addHandler(console_handler)
