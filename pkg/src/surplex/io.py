"""Scenario CSV and acceptance-spec JSON files.

Scenario files have the header ``outcome,prob,<name1>,<name2>,...`` and one
row per outcome; each named column is one position.  Numbers are parsed
with :func:`float` and written with :func:`repr`, so every double survives a
write/read cycle bit-for-bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .acceptance import AcceptanceSpec, spec_from_json
from .errors import NonPositiveProbability, ParseError, ProbabilitySumMismatch, SpecError
from .prob_core import OutcomeSpace, RandVar, make_space

__all__ = ["load_scenarios", "write_scenarios", "load_spec", "dump_spec", "parse_spec_text"]


def _number(text: str, path, line: int, column: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", path, line, column) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", path, line, column)
    return v


def load_scenarios(path, normalize: bool = False) -> tuple[OutcomeSpace, dict]:
    """Read a scenario CSV into an outcome space and named positions."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read scenario file: {exc.strerror}", path) from None
    rows = list(csv.reader(text.splitlines()))
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty scenario file", path, 1, 1)
    hline, header = rows[0]
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0].lower() != "outcome" or header[1].lower() != "prob":
        raise ParseError('header must start with "outcome,prob"', path, hline, 1)
    names = header[2:]
    if len(set(names)) != len(names):
        raise ParseError("duplicate column names", path, hline, 3)
    if len(rows) == 1:
        raise ParseError("scenario file has no outcome rows", path, hline + 1, 1)
    labels, probs, cols = [], [], [[] for _ in names]
    for line, r in rows[1:]:
        if len(r) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(r)}", path, line, min(len(r), len(header)) + 1)
        labels.append(r[0].strip())
        probs.append(_number(r[1].strip(), path, line, 2))
        for j, cell in enumerate(r[2:]):
            cols[j].append(_number(cell.strip(), path, line, j + 3))
    try:
        space = make_space(probs, normalize=normalize, labels=labels)
    except (NonPositiveProbability, ProbabilitySumMismatch) as exc:
        hint = "" if normalize else " (use --normalize to rescale)"
        raise ParseError(f"{exc}{hint}", path, None, 2) from None
    return space, {n: RandVar(c, space) for n, c in zip(names, cols)}


def write_scenarios(path, space: OutcomeSpace, columns: dict) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["outcome", "prob", *columns])
        vals = [c.values for c in columns.values()]
        for i in range(space.n):
            w.writerow([space.labels[i], repr(float(space.probs[i])), *(repr(float(v[i])) for v in vals)])


def parse_spec_text(text: str, space: OutcomeSpace | None = None, path=None) -> AcceptanceSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno, exc.colno) from None
    return spec_from_json(obj, space)


def load_spec(path, space: OutcomeSpace | None = None) -> AcceptanceSpec:
    """Read ``{"family": ..., "params": {...}}``; outcome-referencing
    families are bound to ``space``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read spec file: {exc.strerror}", path) from None
    try:
        return parse_spec_text(text, space, path)
    except SpecError as exc:
        raise SpecError(f"{path}: {exc}") from None


def dump_spec(spec: AcceptanceSpec, path=None) -> str:
    out = json.dumps(spec.to_json(), indent=2)
    if path is not None:
        Path(path).write_text(out + "\n", encoding="utf-8")
    return out
