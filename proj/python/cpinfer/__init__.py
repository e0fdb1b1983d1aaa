"""Changepoint detection with post-selection p-values.

Reports come back as plain dicts with the same layout as the CLI's JSON.
"""

import json

from ._cpinfer import (
    ConfigError,
    DataError,
    InternalError,
    adjust,
    estimate_sigma_mad,
    p_value,
    simulate,
)
from . import _cpinfer

__all__ = [
    "ConfigError",
    "DataError",
    "InternalError",
    "adjust",
    "detect",
    "estimate_sigma_mad",
    "null_study",
    "p_value",
    "power_study",
    "simulate",
    "test",
]


def detect(values, **kwargs):
    """Run a detector; returns the detect report."""
    return json.loads(_cpinfer._detect(list(values), **kwargs))


def test(values, **kwargs):
    """Detect, then compute a p-value per changepoint; returns the test report."""
    return json.loads(_cpinfer._test(list(values), **kwargs))


test.__test__ = False  # not a pytest test


def null_study(length, **kwargs):
    return json.loads(_cpinfer._study("null", length, **kwargs))


def power_study(length, changepoints, means, **kwargs):
    return json.loads(_cpinfer._study("power", length, changepoints=changepoints, means=means, **kwargs))
