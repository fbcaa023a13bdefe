import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from pydantic import BaseModel, ValidationError

from cli.schemas import SCHEMAS
from errors import ConfigError

logger = logging.getLogger(__name__)


def read_config_file(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object, got {type(document).__name__}")
    return document


def parse_override(item: str) -> Tuple[str, Any]:
    """``a.b.c=value``; the value is parsed as JSON when possible, else kept as a string."""
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Override '{item}' is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def apply_override(document: Dict[str, Any], dotted_key: str, value: Any):
    """Set a nested value; numeric path parts index into lists."""
    parts = dotted_key.split(".")
    node: Any = document
    for depth, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            node = node[_list_index(node, part, dotted_key)]
            continue
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        if not isinstance(child, (dict, list)):
            raise ConfigError(f"Override '{dotted_key}': '{'.'.join(parts[:depth + 1])}' is not an object")
        node = child
    last = parts[-1]
    if isinstance(node, list):
        node[_list_index(node, last, dotted_key)] = value
    else:
        node[last] = value


def _list_index(node: list, part: str, dotted_key: str) -> int:
    try:
        index = int(part)
        node[index]
    except (ValueError, IndexError):
        raise ConfigError(f"Override '{dotted_key}': '{part}' is not a valid index into a list of {len(node)}") from None
    return index


def load_config(
    subcommand: str,
    config_path: Optional[str],
    overrides: Sequence[str] = (),
    output_dir: Optional[str] = None,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
    fallbacks: Optional[Dict[str, Any]] = None,
) -> BaseModel:
    """Read, override and validate the config of ``subcommand`` before any work starts.

    Precedence: command-line flags, then overrides, then the config file, then
    ``fallbacks`` (process settings), then schema defaults.
    """
    schema = SCHEMAS[subcommand]
    document = read_config_file(config_path)
    for key, value in (fallbacks or {}).items():
        if key in schema.model_fields:
            document.setdefault(key, value)
    for item in overrides:
        key, value = parse_override(item)
        apply_override(document, key, value)
        logger.debug(f"Override {key} = {value!r}")
    if output_dir is not None:
        document["output_dir"] = output_dir
    if seed is not None:
        document["seed"] = seed
    if jobs is not None and "jobs" in schema.model_fields:
        document["jobs"] = jobs
    try:
        return schema.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"Invalid {subcommand} config:\n{e}") from e


def resolved_echo(subcommand: str, config: BaseModel) -> Dict[str, Any]:
    """Fully resolved config (defaults and overrides applied), as written to run.json."""
    return {"subcommand": subcommand, "config": config.model_dump(mode="json", by_alias=True)}
