"""Run reports: canonical JSON payloads with exact rationals and replay hashes.

Every pipeline invocation produces one RunReport.  Rationals are carried as
{"num": str, "den": str} so arbitrary precision survives serialization; sets
carry their elements plus a content hash of their canonical set-file form.
The determinism hash covers the whole payload except wall-clock timing, so a
re-run with the same seed and inputs must reproduce it byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, is_dataclass
from dataclasses import fields as dc_fields
from fractions import Fraction

from .groups import GSet, format_set_file
from .progressions import Progression

SCHEMA = "aplab/1"

HASH_EXCLUDED = ("timing_ms", "determinism_hash")


@dataclass(frozen=True)
class Verdict:
    """One named exact check: margin = bound − attained, a rational, ≥ 0 iff pass."""

    check: str
    passed: bool
    margin: Fraction | int


def all_pass(verdicts) -> bool:
    return all(v.passed if isinstance(v, Verdict) else v["passed"] for v in verdicts)


def to_payload(value):
    """Recursive canonical form: JSON-ready, idempotent, exact.

    Fractions → {"num","den"} string pairs; sets/progressions/certificates →
    dicts of their fields; tuples → lists; dict keys → strings.  Already
    canonical values pass through unchanged.
    """
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return value  # advisory values only; never a verdict margin
    if isinstance(value, Fraction):
        return {"num": str(value.numerator), "den": str(value.denominator)}
    if isinstance(value, GSet):
        return set_payload(value)
    if isinstance(value, Progression):
        return to_payload(value.to_payload())
    if isinstance(value, Verdict):
        return {"check": value.check, "passed": value.passed, "margin": to_payload(value.margin)}
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_payload(getattr(value, f.name)) for f in dc_fields(value)}
    if isinstance(value, dict):
        return {str(k): to_payload(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_payload(v) for v in value]
    raise TypeError(f"no canonical payload form for {type(value).__name__}")


def set_payload(A: GSet) -> dict:
    """Elements plus a content hash of the canonical set-file text."""
    text = format_set_file(A)
    return {
        "group": A.group.spec(),
        "elements": [list(a) for a in A.elements],
        "sha256": hashlib.sha256(text.encode()).hexdigest(),
    }


def payload_fraction(p) -> Fraction:
    """Inverse of the {"num","den"} encoding (ints pass through)."""
    if isinstance(p, dict):
        return Fraction(int(p["num"]), int(p["den"]))
    return Fraction(p)


def _canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def determinism_hash(payload: dict) -> str:
    """sha256 of the canonical payload with timing and the hash itself removed."""
    trimmed = {k: v for k, v in payload.items() if k not in HASH_EXCLUDED}
    return hashlib.sha256(_canonical_json(trimmed).encode()).hexdigest()


@dataclass
class RunReport:
    """One pipeline invocation: inputs, parameters, results, verdicts, timing."""

    command: str
    inputs: dict
    parameters: dict
    results: dict
    verdicts: list
    seed: int
    version: str
    timing_ms: int = 0
    schema: str = field(default=SCHEMA)

    def payload(self) -> dict:
        body = {
            "schema": self.schema,
            "command": self.command,
            "inputs": to_payload(self.inputs),
            "parameters": to_payload(self.parameters),
            "results": to_payload(self.results),
            "verdicts": [to_payload(v) for v in self.verdicts],
            "seed": self.seed,
            "version": self.version,
            "timing_ms": self.timing_ms,
        }
        body["determinism_hash"] = determinism_hash(body)
        return body

    def to_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        """Verdict table: check,passed,margin (margin as num/den)."""
        import csv
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "passed", "margin"])
        for v in self.verdicts:
            p = to_payload(v)
            m = p["margin"]
            margin = f"{m['num']}/{m['den']}" if isinstance(m, dict) else str(m)
            w.writerow([p["check"], p["passed"], margin])
        return buf.getvalue()

    def passed(self) -> bool:
        return all_pass(self.verdicts)


def report_from_json(text: str) -> RunReport:
    """Parse a serialized report back into payload-form fields (bit-exact)."""
    data = json.loads(text)
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {data.get('schema')!r}")
    missing = [
        k
        for k in ("command", "inputs", "parameters", "results", "verdicts", "seed", "version")
        if k not in data
    ]
    if missing:
        raise ValueError(f"report is missing fields: {', '.join(missing)}")
    return RunReport(
        command=data["command"],
        inputs=data["inputs"],
        parameters=data["parameters"],
        results=data["results"],
        verdicts=data["verdicts"],
        seed=data["seed"],
        version=data["version"],
        timing_ms=data.get("timing_ms", 0),
        schema=data["schema"],
    )


def stored_hash_consistent(payload: dict) -> bool:
    """Does the payload's recorded determinism hash match its own contents?"""
    return payload.get("determinism_hash") == determinism_hash(payload)
