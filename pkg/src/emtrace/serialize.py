"""Flat-file formats: form specs, cocycle tables, trace tables.

All documents are JSON objects carrying a mandatory ``format`` tag.  Group
descriptors are ``{"torsion": [...], "free_rank": r}``; on input a modulus
of 0 adds a copy of Z and a modulus of 1 is dropped.  Group elements are
always written as coordinate lists, never as flat indices.

Spec document (``emtrace-spec/1``)::

    {"format": "emtrace-spec/1",
     "group": {"torsion": [2, 2], "free_rank": 0},
     "coefficients": {"torsion": [4], "free_rank": 0},
     "quad": {"diag_torsion": [[1], [0]], "cross_torsion": [[2]],
              "diag_free": [], "cross_free": [], "mixed": []}}

Missing ``quad`` arrays default to zero.  ``cross_torsion`` and
``cross_free`` list pairs ``i < j`` lexicographically; ``mixed`` is
torsion-major.

Table document (``emtrace-table/1``) holds one ``[x, y, z, value]`` row per
``h`` entry and one ``[x, y, value]`` row per ``c`` entry, in canonical
element order, one row per line.  The CSV variant starts with a ``#`` line
carrying the format tag and both group descriptors, followed by a
``table,x,y,z,value`` header; coordinates inside a cell are space separated.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from emtrace import groups
from emtrace.cocycles import StructuredCocycle, TabulatedCocycle
from emtrace.errors import EmtraceError, ParseError
from emtrace.forms import BilinearFormMatrix, QuadraticFormParams, QuadraticFormTable
from emtrace.groups import FgAbGroup

SPEC_FORMAT = "emtrace-spec/1"
TABLE_FORMAT = "emtrace-table/1"
CLOSED_FORM_FORMAT = "emtrace-closed-form/1"
QUAD_TABLE_FORMAT = "emtrace-quad-table/1"

QUAD_FIELDS = ("diag_torsion", "cross_torsion", "diag_free", "cross_free", "mixed")


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def group_to_json(G: FgAbGroup) -> dict:
    return {"torsion": list(G.torsion), "free_rank": G.free_rank}


def group_from_json(d) -> FgAbGroup:
    if not isinstance(d, dict) or "torsion" not in d:
        raise ParseError(f"bad group descriptor: {d!r}")
    try:
        return FgAbGroup.from_moduli([int(n) for n in d["torsion"]], int(d.get("free_rank", 0)))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad group descriptor {d!r}: {exc}") from exc


def _element(G: FgAbGroup, raw, strict: bool = False) -> tuple[int, ...]:
    if not isinstance(raw, list) or not all(isinstance(v, int) for v in raw):
        raise ParseError(f"element must be a list of integers, got {raw!r}")
    if len(raw) != G.ngens:
        raise ParseError(f"element {raw} has {len(raw)} coordinates, {G} needs {G.ngens}")
    x = groups.reduce(G, raw)
    if strict and list(x) != raw:
        raise ParseError(f"element {raw} is not canonically reduced in {G}")
    return x


def _check_format(doc, tag: str) -> None:
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    if doc.get("format") != tag:
        raise ParseError(f"expected format {tag!r}, got {doc.get('format')!r}")


def loads_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc


# -- spec documents ---------------------------------------------------------


def spec_to_json(q: QuadraticFormParams) -> dict:
    return {
        "format": SPEC_FORMAT,
        "group": group_to_json(q.domain),
        "coefficients": group_to_json(q.coeffs),
        "quad": {name: [list(v) for v in getattr(q, name)] for name in QUAD_FIELDS},
    }


def spec_from_json(doc) -> QuadraticFormParams:
    """Parse (but do not validate) a quadratic form spec."""
    _check_format(doc, SPEC_FORMAT)
    G = group_from_json(doc.get("group"))
    M = group_from_json(doc.get("coefficients"))
    block = doc.get("quad", {})
    if not isinstance(block, dict):
        raise ParseError("'quad' must be an object")
    unknown = set(block) - set(QUAD_FIELDS)
    if unknown:
        raise ParseError(f"unknown quad fields: {sorted(unknown)}")
    kwargs = {}
    for name in QUAD_FIELDS:
        if name in block:
            if not isinstance(block[name], list):
                raise ParseError(f"'{name}' must be a list")
            kwargs[name] = [_element(M, v) for v in block[name]]
    try:
        return QuadraticFormParams(G, M, **kwargs)
    except EmtraceError as exc:
        raise ParseError(str(exc)) from exc


# -- cocycle tables ---------------------------------------------------------


def table_rows(tc: TabulatedCocycle):
    """``(h_rows, c_rows)`` as nested coordinate lists in canonical order."""
    E = groups.finite_index(tc.domain).elements
    N = len(E)
    h_rows = [
        [list(E[x]), list(E[y]), list(E[z]), tc.h[x, y, z].tolist()]
        for x in range(N) for y in range(N) for z in range(N)
    ]
    c_rows = [[list(E[x]), list(E[y]), tc.c[x, y].tolist()] for x in range(N) for y in range(N)]
    return h_rows, c_rows


def dumps_table(tc: TabulatedCocycle) -> str:
    h_rows, c_rows = table_rows(tc)
    lines = [
        "{",
        f'"format":"{TABLE_FORMAT}",',
        f'"group":{_dumps(group_to_json(tc.domain))},',
        f'"coefficients":{_dumps(group_to_json(tc.coeffs))},',
        '"h":[',
        ",\n".join(_dumps(r) for r in h_rows),
        "],",
        '"c":[',
        ",\n".join(_dumps(r) for r in c_rows),
        "]",
        "}",
    ]
    return "\n".join(lines) + "\n"


def dumps_table_csv(tc: TabulatedCocycle) -> str:
    h_rows, c_rows = table_rows(tc)
    out = io.StringIO()
    out.write(
        f"# {TABLE_FORMAT} group={_dumps(group_to_json(tc.domain))} "
        f"coefficients={_dumps(group_to_json(tc.coeffs))}\n"
    )
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["table", "x", "y", "z", "value"])
    cell = lambda v: " ".join(str(a) for a in v)  # noqa: E731
    for x, y, z, v in h_rows:
        w.writerow(["h", cell(x), cell(y), cell(z), cell(v)])
    for x, y, v in c_rows:
        w.writerow(["c", cell(x), cell(y), "", cell(v)])
    return out.getvalue()


def _fill_tables(G, M, h_rows, c_rows) -> TabulatedCocycle:
    N = G.order
    if len(h_rows) != N**3 or len(c_rows) != N**2:
        raise ParseError(f"expected {N**3} h rows and {N**2} c rows, got {len(h_rows)} and {len(c_rows)}")
    h = np.zeros((N, N, N, M.ngens), dtype=np.int64)
    c = np.zeros((N, N, M.ngens), dtype=np.int64)
    seen_h, seen_c = set(), set()
    for row in h_rows:
        if not isinstance(row, list) or len(row) != 4:
            raise ParseError(f"bad h row {row!r}")
        key = tuple(groups.element_index(G, _element(G, g, strict=True)) for g in row[:3])
        seen_h.add(key)
        h[key] = _element(M, row[3], strict=True)
    for row in c_rows:
        if not isinstance(row, list) or len(row) != 3:
            raise ParseError(f"bad c row {row!r}")
        key = tuple(groups.element_index(G, _element(G, g, strict=True)) for g in row[:2])
        seen_c.add(key)
        c[key] = _element(M, row[2], strict=True)
    if len(seen_h) != N**3 or len(seen_c) != N**2:
        raise ParseError("duplicate table rows")
    return TabulatedCocycle(G, M, h, c)


def table_from_json(doc) -> TabulatedCocycle:
    _check_format(doc, TABLE_FORMAT)
    G = group_from_json(doc.get("group"))
    M = group_from_json(doc.get("coefficients"))
    if not G.is_finite:
        raise ParseError("tables need a finite group")
    return _fill_tables(G, M, doc.get("h", []), doc.get("c", []))


def table_from_csv(text: str) -> TabulatedCocycle:
    first, _, rest = text.partition("\n")
    parts = first.split()
    if len(parts) != 4 or parts[0] != "#" or parts[1] != TABLE_FORMAT:
        raise ParseError("CSV table must start with '# emtrace-table/1 group=... coefficients=...'")
    try:
        G = group_from_json(loads_json(parts[2].removeprefix("group=")))
        M = group_from_json(loads_json(parts[3].removeprefix("coefficients=")))
    except IndexError as exc:  # pragma: no cover
        raise ParseError("bad CSV header") from exc
    reader = csv.reader(io.StringIO(rest))
    header = next(reader, None)
    if header != ["table", "x", "y", "z", "value"]:
        raise ParseError(f"bad CSV column header {header!r}")

    def cell(s):
        try:
            return [int(t) for t in s.split()]
        except ValueError as exc:
            raise ParseError(f"bad CSV cell {s!r}") from exc

    h_rows, c_rows = [], []
    for row in reader:
        if len(row) != 5:
            raise ParseError(f"bad CSV row {row!r}")
        kind, x, y, z, v = row
        if kind == "h":
            h_rows.append([cell(x), cell(y), cell(z), cell(v)])
        elif kind == "c":
            c_rows.append([cell(x), cell(y), cell(v)])
        else:
            raise ParseError(f"unknown table kind {kind!r}")
    return _fill_tables(G, M, h_rows, c_rows)


def loads_table(text: str) -> TabulatedCocycle:
    """Parse a table in either JSON or CSV form."""
    if text.startswith("#"):
        return table_from_csv(text)
    return table_from_json(loads_json(text))


# -- other documents --------------------------------------------------------


def closed_form_to_json(sc: StructuredCocycle) -> dict:
    return {
        "format": CLOSED_FORM_FORMAT,
        "group": group_to_json(sc.domain),
        "coefficients": group_to_json(sc.coeffs),
        "carry": [list(v) for v in sc.carry],
        "c_matrix": [[list(v) for v in row] for row in sc.c_matrix],
    }


def quad_table_to_json(t: QuadraticFormTable, params: QuadraticFormParams | None) -> dict:
    E = groups.enumerate_elements(t.domain)
    doc = {
        "format": QUAD_TABLE_FORMAT,
        "group": group_to_json(t.domain),
        "coefficients": group_to_json(t.coeffs),
        "values": [[list(x), list(v)] for x, v in zip(E, t.values)],
    }
    if params is not None:
        doc["params"] = spec_to_json(params)["quad"]
    return doc


def bilinear_to_json(c: BilinearFormMatrix) -> list:
    return [[list(v) for v in row] for row in c.entries]
