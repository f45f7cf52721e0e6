"""Deep-unfolding cascaded channel estimation for RIS-aided mmWave SIMO links."""

import json as _json

from ._risu import *  # noqa: F401,F403
from ._risu import run_study as _run_study, resolve_config as _resolve_config

__version__ = "0.1.0"


def _dump(config):
    if isinstance(config, str):
        return config
    return _json.dumps({"schema_version": 1, **(config or {})})


def resolve_config(config=None):
    """Full experiment config as a dict; `config` may be a dict or JSON text."""
    return _json.loads(_resolve_config(_dump(config)))


def run_study(name, config=None):
    """Run one of "overhead", "paths", "train-snr", "angle-range".

    Returns a list of (curve, test_snr_db, nmse, n_samples) tuples.
    """
    return _run_study(name, _dump(config))
