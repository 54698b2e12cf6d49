"""Tests and intervals for the shrinkage of expected-utility portfolio weights.

Array arguments use the column-per-period layout: ``x`` is ``p x n``.
Structured results come back as plain dicts.
"""

import json

from . import _core
from ._core import (
    SCHEMA_VERSION,
    NumericalError,
    ParseError,
    ScenarioConfig,
    __version__,
    eu_weights,
    gmv_weights,
    plugin_eu_weights,
    sample_moments,
    shrinkage_intensity,
)

GMV = float("inf")


def shrinkage_test(x, w0, gamma, variant="tilde"):
    return json.loads(_core.shrinkage_test(x, w0, gamma, variant))


def shrinkage_ci(x, w0, gamma, level=0.95, variant="tilde"):
    return json.loads(_core.shrinkage_ci(x, w0, gamma, level, variant))


def mahalanobis_test(x, l, r, gamma, high_dimensional=True):
    return json.loads(_core.mahalanobis_test(x, l, r, gamma, high_dimensional))


def empirical_size(tests, config, k=(10,)):
    return json.loads(_core.empirical_size(list(tests), config, list(k)))


def power_curve(tests, config, kappa, k=(10,)):
    return json.loads(_core.power_curve(list(tests), config, list(kappa), list(k)))


def roc_curve(tests, config, k=(10,)):
    return json.loads(_core.roc_curve(list(tests), config, list(k)))


def verify_theory(config, tolerance=1.0):
    return json.loads(_core.verify_theory(config, tolerance))


def rolling_analysis(path, p, c, gamma=5.0, level=0.95, test="t-alpha-tilde"):
    return json.loads(_core.rolling_analysis(str(path), p, c, gamma, level, test))


def make_config(**fields):
    """ScenarioConfig with the given fields set, e.g. make_config(p=50, c=0.3)."""
    cfg = ScenarioConfig()
    for name, value in fields.items():
        if not hasattr(cfg, name):
            raise AttributeError(f"ScenarioConfig has no field {name!r}")
        setattr(cfg, name, value)
    return cfg
