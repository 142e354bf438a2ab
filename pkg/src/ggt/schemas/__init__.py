"""JSON schemas for the command line outputs."""

import json
from importlib import resources

NAMES = ("pushout", "partition", "expansion", "pair", "report", "state")


def load(name: str) -> dict:
    if name not in NAMES:
        raise KeyError(name)
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
