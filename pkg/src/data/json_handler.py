"""
JSON document operations: ledgers, reports and run metadata.
"""
import json
import logging
import os
import sys
from datetime import datetime

import numpy as np

from ..privacy.accountant import Ledger, LedgerMode
from ..utils.errors import StreamParseError
from ..utils.helpers import parse_timestamp, utc_now_iso

logger = logging.getLogger(__name__)

LEDGER_VERSION = 1


class JsonHandler:
    """
    Handles reading and writing one JSON document; ``-`` means stdin/stdout.
    """
    def __init__(self, file_path):
        """
        Initialize the JSON handler with the specified file path.

        Args:
            file_path (str): Path to the JSON file, or "-"
        """
        self.file_path = file_path

    def _ensure_directory(self):
        directory = os.path.dirname(self.file_path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)

    def load_data(self):
        """
        Load the document.

        Returns:
            The decoded JSON value
        """
        try:
            if self.file_path == "-":
                content = sys.stdin.read()
            else:
                with open(self.file_path, "r", encoding="utf-8") as file:
                    content = file.read()
        except OSError as e:
            logger.error("Error loading data from %s: %s", self.file_path, e)
            raise StreamParseError(f"cannot read {self.file_path}: {e}") from e

        if not content.strip():
            raise StreamParseError(f"{self.file_path} is empty")
        try:
            return json.loads(content)
        except json.JSONDecodeError as e:
            logger.error("JSON decode error in %s: %s", self.file_path, e)
            raise StreamParseError(e.msg, line=e.lineno, column=e.colno) from e

    def save_data(self, data):
        """
        Save a document.

        Args:
            data: JSON-serialisable value (datetimes and numpy scalars allowed)
        """
        text = json.dumps(data, indent=2, default=self._json_serial) + "\n"
        if self.file_path == "-":
            sys.stdout.write(text)
            return
        self._ensure_directory()
        try:
            with open(self.file_path, "w", encoding="utf-8") as file:
                file.write(text)
        except OSError as e:
            logger.error("Error saving data to %s: %s", self.file_path, e)
            raise

    @staticmethod
    def _json_serial(obj):
        """
        JSON serializer for objects not serializable by default json code

        Args:
            obj: Object to serialize

        Returns:
            Serialized object
        """
        if isinstance(obj, datetime):
            return obj.isoformat()
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        raise TypeError(f"Type {type(obj)} not serializable")


def ledger_to_document(ledger):
    """
    Versioned JSON document of a ledger.

    Floats go through ``repr``, the shortest form that parses back to the same
    double, so a save/load cycle is bit-exact.

    Args:
        ledger (Ledger): Ledger to serialise

    Returns:
        dict: The document
    """
    return {
        "version": LEDGER_VERSION,
        "mode": ledger.mode.value,
        "gamma": float(ledger.gamma),
        "lambda_grid": [int(lam) for lam in ledger.lambda_grid],
        "cum_cost": [float(c) for c in ledger.cum_cost],
        "steps": int(ledger.steps),
        "saved_at": utc_now_iso(),
    }


def ledger_from_document(document):
    """
    Rebuild a ledger from its JSON document.

    Args:
        document (dict): Decoded ledger document

    Returns:
        Ledger: The ledger
    """
    if not isinstance(document, dict):
        raise StreamParseError("ledger document must be a JSON object")
    version = document.get("version")
    if version != LEDGER_VERSION:
        raise StreamParseError(f"unsupported ledger version {version!r}")
    missing = [key for key in ("mode", "gamma", "lambda_grid", "cum_cost", "steps") if key not in document]
    if missing:
        raise StreamParseError(f"ledger document lacks {', '.join(missing)}")
    try:
        mode = LedgerMode(document["mode"])
    except ValueError as e:
        raise StreamParseError(f"unknown ledger mode {document['mode']!r}") from e
    return Ledger(
        mode=mode,
        lambda_grid=tuple(document["lambda_grid"]),
        gamma=float(document["gamma"]),
        cum_cost=np.asarray(document["cum_cost"], dtype=float),
        steps=int(document["steps"]),
        saved_at=parse_timestamp(document.get("saved_at")),
    )


def save_ledger(ledger, file_path):
    """
    Write a ledger document to ``file_path``.
    """
    JsonHandler(file_path).save_data(ledger_to_document(ledger))
    logger.info("saved %s ledger (%d steps) to %s", ledger.mode.value, ledger.steps, file_path)


def load_ledger(file_path):
    """
    Read a ledger document from ``file_path``.

    Returns:
        Ledger: The ledger
    """
    return ledger_from_document(JsonHandler(file_path).load_data())
