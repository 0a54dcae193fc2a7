"""JSON schemas for every document the CLI reads or writes."""
import json
from importlib import resources

NAMES = ("form", "manifest", "certificate", "critical_points", "spurious_report", "oracle", "eval")


def load_schema(name):
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())
