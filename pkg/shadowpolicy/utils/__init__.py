import hashlib
import logging
import os
import pathlib
import sys
from typing import Any, Optional, Union

import orjson


def get_logger(name=None, level: Optional[int] = None):
    logger = logging.getLogger(name)

    if level is None:
        log_level = os.environ.get("LOG_LEVEL", "INFO").upper()
        level = logging.getLevelName(log_level)

        if not isinstance(level, int):
            print(
                "Unknown log level: {}, fallback to INFO".format(log_level),
                file=sys.stderr,
            )
            level = 20

    logger.setLevel(level)

    if name is None:
        configure_root_logger(logger, level)

    return logger


def configure_root_logger(logger, level: int = 20):
    logger.setLevel(level)

    if logger.handlers:
        return

    handler = logging.StreamHandler()
    formatter = logging.Formatter(
        "%(asctime)s :: %(processName)s :: "
        "%(threadName)s :: %(levelname)s :: "
        "%(message)s"
    )
    handler.setFormatter(formatter)
    handler.setLevel(level)
    logger.addHandler(handler)


def load_json(path: Union[str, pathlib.Path]) -> Any:
    with open(str(path), "rb") as f:
        return orjson.loads(f.read())


def dump_json(path: Union[str, pathlib.Path], item: Any) -> None:
    with open(str(path), "wb") as f:
        f.write(
            orjson.dumps(
                item,
                option=orjson.OPT_INDENT_2
                | orjson.OPT_SORT_KEYS
                | orjson.OPT_SERIALIZE_NUMPY,
            )
        )


def file_digest(path: Union[str, pathlib.Path]) -> str:
    """Return the SHA-256 hex digest of a file's content."""
    sha = hashlib.sha256()

    with open(str(path), "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            sha.update(block)

    return sha.hexdigest()
