"""Trajectory-to-long-context compilation toolkit (native core)."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import AccError, __version__, compile_record as _compile_record


def compile_trajectory(record, seed=0, budget=DEFAULT_TOKEN_BUDGET, policy="keep"):  # noqa: F405
    """Compile one trajectory (dict or JSON line) into a dataset record dict."""
    line = record if isinstance(record, str) else _json.dumps(record)
    return _json.loads(_compile_record(line, seed, budget, policy))


__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
