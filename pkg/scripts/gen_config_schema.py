"""Regenerate docs/schemas/perf_config.schema.json from the reference parameters.

Every leaf carries its 8-bit reference value as ``default``; all keys are
optional in override files.
"""
import json
import sys
from pathlib import Path

from reramsim.perfmodel import config_to_dict, make_config

OUT = Path(__file__).resolve().parents[1] / "docs" / "schemas" / "perf_config.schema.json"


def _node(value):
    if isinstance(value, dict):
        if value and all(k.isdigit() for k in value):
            return {"type": "object", "default": value,
                    "propertyNames": {"enum": sorted(value)},
                    "additionalProperties": {"type": "number"}}
        return {"type": "object", "additionalProperties": False,
                "properties": {k: _node(v) for k, v in value.items()}}
    if isinstance(value, bool):
        return {"type": "boolean", "default": value}
    if isinstance(value, int):
        return {"type": "integer", "default": value}
    if isinstance(value, float):
        return {"type": "number", "default": value}
    if isinstance(value, list):
        return {"type": "array", "items": {"type": "number"}, "minItems": len(value),
                "maxItems": len(value), "default": value}
    return {"type": "string", "default": value}


def build() -> dict:
    schema = _node(config_to_dict(make_config(8)))
    schema["properties"]["bits"]["enum"] = [8, 4, 2]
    schema["properties"]["latency_mode"]["enum"] = ["printed", "exact"]
    schema["properties"]["binary_reram"]["properties"]["read_latency_ns"]["type"] = ["number", "null"]
    schema["properties"]["binary_reram"]["properties"]["read_latency_ns"]["description"] = \
        "null derives the latency from the RC model"
    schema["properties"]["coding"]["description"] = "Defaults shown are the 8-bit preset; 4- and 2-bit use their own presets."
    return {"$schema": "https://json-schema.org/draft/2020-12/schema",
            "title": "reramsim perf --config overrides", **schema}


if __name__ == "__main__":
    text = json.dumps(build(), indent=1) + "\n"
    if "--check" in sys.argv:
        sys.exit(0 if OUT.read_text() == text else 1)
    OUT.write_text(text)
