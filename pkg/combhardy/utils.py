import csv
import hashlib
import json
import logging
import math
import os
from logging import Logger
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from combhardy.errors import IoError


def setup_logger(name: str, level: int = logging.INFO, log_file_path: Optional[str] = None) -> Logger:
    """
    Setup a logger with the specified name, level, and optional log file.

    Parameters:
    - name (str): The name of the logger
    - level (int): The logging level (default: logging.INFO)
    - log_file_path (str): The path to the log file (default: None, logs to stderr)

    Returns:
    - Logger: Configured logger object
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Remove all handlers to avoid duplicate logs when called twice
    logger.handlers = []

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    if log_file_path:
        file_handler = logging.FileHandler(log_file_path)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    else:
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger


def tail_window(n: int, fraction: float = 0.5) -> Tuple[int, int]:
    """
    Inclusive index window [ceil(n * fraction), n] used for every tail diagnostic.

    Parameters:
    - n: int: Last index of the series (1-based)
    - fraction: float: Where the tail starts, as a fraction of n

    Returns:
    - Tuple[int, int]: First and last index of the tail, both 1-based
    """
    start = max(1, int(math.ceil(n * fraction)))
    return start, n


def file_sha256(path: str) -> str:
    """Hex sha256 digest of a file's content."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(65536), b''):
            digest.update(block)
    return digest.hexdigest()


def format_float(value: float) -> str:
    """Shortest round-tripping text for a float; 'inf'/'-inf'/'nan' for non-finite values."""
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return repr(float(value))


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """
    Write rows as UTF-8 CSV with a mandatory header row.

    Floats are written with format_float so that reruns produce identical bytes.
    """
    try:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_json(path: str, payload: Any) -> None:
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write('\n')
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def ensure_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create output directory {path}: {e}") from e
    if not os.access(path, os.W_OK):
        raise IoError(f"output directory {path} is not writable")


def json_float(value: float) -> Any:
    """JSON-safe float: non-finite values become the strings 'inf', '-inf' or 'nan'."""
    value = float(value)
    if math.isfinite(value):
        return value
    return format_float(value)


def manifest_entries(directory: str, names: List[str]) -> Dict[str, str]:
    """Map each output file name to its sha256, in sorted name order."""
    return {name: file_sha256(os.path.join(directory, name)) for name in sorted(names)}
