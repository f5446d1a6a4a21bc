"""Text formats: edge lists, point CSVs, partitions, result CSVs and manifests.

Reals are written with ``repr``, the shortest string that parses back to the
same double, so every save/load round trip is exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import ParseError
from .graph import WeightedGraph


def _fmt(x: float) -> str:
    return repr(float(x))


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield no, line


def _int(tok, no, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", no) from None


def _float(tok, no, what):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected number {what}, got {tok!r}", no) from None


def save_graph(path, g: WeightedGraph):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for a, b, w in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
            fh.write(f"{a} {b} {_fmt(w)}\n")


def load_graph(path) -> WeightedGraph:
    """Read ``n m`` then ``m`` lines of ``u v w``; blank and ``#`` lines are skipped."""
    lines = _data_lines(path)
    try:
        no, head = next(lines)
    except StopIteration:
        raise ParseError("missing 'n m' header", 1) from None
    parts = head.split()
    if len(parts) != 2:
        raise ParseError("header must be 'n m'", no)
    n, m = _int(parts[0], no, "n"), _int(parts[1], no, "m")
    if n < 0 or m < 0:
        raise ParseError("n and m must be nonnegative", no)
    u, v, w = [], [], []
    last = no
    for no, line in lines:
        last = no
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("edge line must be 'u v w'", no)
        a, b, x = _int(parts[0], no, "u"), _int(parts[1], no, "v"), _float(parts[2], no, "w")
        if not (0 <= a < n and 0 <= b < n):
            raise ParseError(f"vertex id out of range [0, {n})", no)
        if a == b:
            raise ParseError("self-loop", no)
        if not (np.isfinite(x) and x > 0):
            raise ParseError("weight must be finite and positive", no)
        u.append(a)
        v.append(b)
        w.append(x)
    if len(w) != m:
        raise ParseError(f"header promised {m} edges, found {len(w)}", last)
    return WeightedGraph(n, u, v, w)


def save_points(path, points, weights=None):
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{P.shape[1]} {P.shape[0]}\n")
        for i, row in enumerate(P.tolist()):
            cells = [_fmt(x) for x in row]
            if weights is not None:
                cells.append(_fmt(weights[i]))
            fh.write(",".join(cells) + "\n")


def load_points(path, header: bool = True):
    """Point CSV: ``d n`` header, then ``d`` coordinates and an optional weight
    per row.  Returns ``(points, weights_or_None)``.

    ``header=False`` reads a bare CSV (for example pixel rows ``x,y,r,g,b``)
    and takes the dimension from the first row.
    """
    lines = list(_data_lines(path))
    d = n = None
    if header:
        if not lines:
            raise ParseError("missing 'd n' header", 1)
        no, head = lines[0]
        parts = head.replace(",", " ").split()
        if len(parts) != 2:
            raise ParseError("header must be 'd n'", no)
        d, n = _int(parts[0], no, "d"), _int(parts[1], no, "n")
        if d < 1 or n < 0:
            raise ParseError("need d >= 1 and n >= 0", no)
        lines = lines[1:]
    rows, wts = [], []
    for no, line in lines:
        cells = [c.strip() for c in line.split(",")]
        if d is None:
            d = len(cells)
        if len(cells) == d:
            weighted = False
        elif len(cells) == d + 1:
            weighted = True
        else:
            raise ParseError(f"expected {d} or {d + 1} columns, got {len(cells)}", no)
        vals = [_float(c, no, "coordinate") for c in cells]
        if wts and (len(wts[0]) == 1) != weighted:
            raise ParseError("weight column present on some rows only", no)
        rows.append(vals[:d])
        wts.append(vals[d:])
    if n is not None and len(rows) != n:
        raise ParseError(f"header promised {n} points, found {len(rows)}", lines[-1][0] if lines else 1)
    P = np.array(rows, dtype=np.float64).reshape(len(rows), d or 0)
    w = np.array([x[0] for x in wts]) if wts and wts[0] else None
    return P, w


def save_partition(path, labels):
    with open(path, "w", encoding="utf-8") as fh:
        for i, c in enumerate(np.asarray(labels).tolist()):
            fh.write(f"{i},{int(c)}\n")


def load_partition(path, n: int | None = None) -> np.ndarray:
    pairs = {}
    for no, line in _data_lines(path):
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError("partition line must be 'vertex_id,cluster_id'", no)
        vid, cid = _int(parts[0].strip(), no, "vertex id"), _int(parts[1].strip(), no, "cluster id")
        if vid in pairs:
            raise ParseError(f"vertex {vid} listed twice", no)
        if vid < 0 or cid < 0:
            raise ParseError("ids must be nonnegative", no)
        pairs[vid] = cid
    size = n if n is not None else len(pairs)
    if sorted(pairs) != list(range(size)):
        raise ParseError(f"partition must list every vertex 0..{size - 1} exactly once", 1)
    return np.array([pairs[i] for i in range(size)], dtype=np.int64)


# ---------------------------------------------------------------------------
# result rows and manifests


def format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _fmt(x)
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return "" if x is None else str(x)


def write_rows(path, rows, columns, append: bool = False):
    path = Path(path)
    fresh = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        if fresh:
            wr.writerow(columns)
        for row in rows:
            wr.writerow([format_cell(row.get(c)) for c in columns])


def read_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def manifest_text(params: dict) -> str:
    """``key=value`` lines in sorted key order."""
    return "".join(f"{k}={format_cell(params[k])}\n" for k in sorted(params))


def manifest_hash(params: dict) -> str:
    return hashlib.sha256(manifest_text(params).encode()).hexdigest()[:16]


def save_manifest(path, params: dict):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(manifest_text(params))
    os.replace(tmp, path)


def load_manifest(path) -> dict:
    out = {}
    for no, line in _data_lines(path):
        if "=" not in line:
            raise ParseError("manifest line must be key=value", no)
        k, v = line.split("=", 1)
        out[k] = v
    return out


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=format_cell)
