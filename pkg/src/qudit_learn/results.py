"""Result envelopes and their CSV / JSON serialization.

CSV files hold only the rows, with the column order fixed per command by
``COLUMNS`` for the current ``SCHEMA_VERSION``. JSON files hold the whole
envelope. Floats are written with 17 significant digits in CSV and with
Python's shortest round-trip repr in JSON; both parse back bit for bit.
Wall time lives in ``metadata`` and is only written when asked for, so
files are byte-identical across reruns of the same config.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

SCHEMA_VERSION = "1.0"

COLUMNS = {
    "verify": ["check", "d", "value", "tolerance", "passed"],
    "learn": ["q", "p", "y_true_re", "y_true_im", "y_hat_re", "y_hat_im",
              "abs_error", "within_eps"],
    "shadows": ["observable", "estimate_re", "estimate_im", "true_re", "true_im",
                "z_score", "oracle_var", "empirical_var", "var_z_score", "passed"],
    "scaling": ["d", "protocol", "samples_to_success", "success_rate", "trials", "seed"],
    "twirl": ["k", "d", "rank", "max_deviation", "idempotency", "hermiticity", "passed"],
    "norms": ["lemma", "d", "m", "k", "value", "bound", "flag", "passed"],
}


@dataclass
class ResultEnvelope:
    command: str
    config: dict
    rows: list
    summary: dict
    metadata: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", False))

    @property
    def input_hash(self) -> str:
        return content_hash(self.config)

    def to_dict(self, include_metadata: bool = False) -> dict:
        out = {"schema_version": self.schema_version, "command": self.command,
               "config": self.config, "input_hash": self.input_hash,
               "summary": self.summary, "rows": self.rows}
        if include_metadata:
            out["metadata"] = self.metadata
        return out


def content_hash(obj) -> str:
    """git-style blob hash (sha1 of 'blob <len>\\0' + canonical JSON)."""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(payload) + payload).hexdigest()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def to_csv(env: ResultEnvelope) -> str:
    cols = COLUMNS[env.command]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in env.rows:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def to_json(env: ResultEnvelope, include_metadata: bool = False) -> str:
    return json.dumps(env.to_dict(include_metadata), sort_keys=True, indent=2,
                      allow_nan=True) + "\n"


def render(env: ResultEnvelope, fmt: str, include_metadata: bool = False) -> str:
    if fmt == "csv":
        return to_csv(env)
    if fmt == "json":
        return to_json(env, include_metadata)
    raise ValueError(f"unknown format {fmt!r}; use csv or json")


def write_results(env: ResultEnvelope, path: str, fmt: str, include_metadata: bool = False) -> None:
    text = render(env, fmt, include_metadata)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc.strerror or exc}") from exc


def read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
