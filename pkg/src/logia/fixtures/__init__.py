"""Packaged configuration and test data: taxonomy, guideline corpora,
feasibility cases with expert annotations, and the default visibility policy.
"""

import json
from importlib import resources
from pathlib import Path


def fixture_path(*parts: str) -> Path:
    root = resources.files(__package__)
    target = root
    for part in parts:
        target = target / part
    return Path(str(target))


def load_json(*parts: str):
    return json.loads(fixture_path(*parts).read_text())
