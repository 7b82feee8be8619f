"""
Helper utilities for display and timestamps.
"""
import math
from datetime import datetime, timezone

from dateutil import parser

MAX_PERCENT_DECIMALS = 15


def parse_timestamp(date_str):
    """
    Parse an optional ISO timestamp.

    Args:
        date_str: ISO format date string or None

    Returns:
        datetime: Parsed timestamp, or None when absent or unreadable
    """
    if not date_str:
        return None
    try:
        return parser.isoparse(date_str)
    except (ValueError, OverflowError):
        return None


def utc_now_iso():
    """
    Current UTC time as an ISO-8601 string.
    """
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def significant(value, digits=4):
    """
    Round a number to a count of significant digits for display.

    Args:
        value (float): Number to round
        digits (int): Significant digits to keep

    Returns:
        str: The rounded number
    """
    if value is None or not math.isfinite(value):
        return str(value)
    return f"{value:.{digits}g}"


def format_percent(probability, digits=4):
    """
    Format a probability as a percentage with ``digits`` significant digits.

    Args:
        probability (float): Value in [0, 1]
        digits (int): Significant digits of the percentage

    A probability below one never prints as 100%; decimals are added until
    the text falls below it.

    Returns:
        str: e.g. "89.84%", or "99.995%" for 0.9999546
    """
    percent = 100.0 * probability
    if percent == 0:
        return "0%"
    decimals = max(digits - 1 - int(math.floor(math.log10(abs(percent)))), 0)
    text = f"{percent:.{decimals}f}"
    while percent < 100.0 and float(text) >= 100.0 and decimals < MAX_PERCENT_DECIMALS:
        decimals += 1
        text = f"{percent:.{decimals}f}"
    return f"{text}%"
