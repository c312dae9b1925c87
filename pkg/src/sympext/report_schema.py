"""JSON schema for CLI reports, used by the test suite and external consumers."""

VERDICT_SCHEMA = {
    "type": "object",
    "properties": {
        "ok": {"type": ["boolean", "null"]},
        "value": {},
        "tolerance": {"type": ["number", "null"]},
        "horizon": {"type": ["integer", "null"]},
        "detail": {},
    },
    "required": ["ok", "value", "tolerance", "horizon"],
    "additionalProperties": True,
}

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "command": {
            "type": "string",
            "enum": [
                "validate",
                "atkinson",
                "solve",
                "disconjugacy",
                "recessive",
                "classify",
                "friedrichs",
                "membership",
            ],
        },
        "config": {"type": "object"},
        "verdicts": {
            "type": "object",
            "additionalProperties": VERDICT_SCHEMA,
        },
        "warnings": {"type": "array", "items": {"type": "string"}},
        "timing": {
            "type": "object",
            "properties": {"seconds": {"type": "number"}},
            "required": ["seconds"],
        },
        "exit_code": {"type": "integer", "enum": [0, 1, 2]},
    },
    "required": ["command", "config", "verdicts", "warnings", "timing", "exit_code"],
    "additionalProperties": False,
}
