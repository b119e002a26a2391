"""Python bindings for the plancurate planning core."""

import json

from . import _core
from ._core import PlanCurateError, __version__, detection_prompt, detection_variants, needs_decomposition

__all__ = [
    "PlanCurateError",
    "__version__",
    "detection_prompt",
    "detection_variants",
    "load_session",
    "mock_eval",
    "needs_decomposition",
    "replay",
    "run_walkthrough",
    "verify_walkthrough",
]


def run_walkthrough(script_path):
    """Run the scripted PhD-application walkthrough and return the session dict."""
    return json.loads(_core.run_walkthrough(str(script_path)))


def verify_walkthrough(session):
    return _core.verify_walkthrough(json.dumps(session))


def load_session(path):
    return json.loads(_core.load_session(str(path)))


def replay(session):
    """Rebuild a session from its event log."""
    return json.loads(_core.replay(json.dumps(session)))


def mock_eval(suite_path, strategies=(), runs=1, policy="oracle"):
    return json.loads(_core.mock_eval(str(suite_path), list(strategies), runs, policy))
