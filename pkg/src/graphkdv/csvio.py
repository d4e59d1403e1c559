"""Deterministic CSV and JSON writers for all external file formats.

Floats are written with repr (shortest round-trip), newline = LF, UTF-8; the
same inputs always produce byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .graph import GraphFunction, GraphGrid, StarGraph


def _fmt(v) -> str:
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, obj):
    def default(o):
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not serializable: {type(o)}")

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")


def write_graph_function(path, f: GraphFunction):
    """Columns: edge_side, edge_index, node_index, x, value."""
    rows = []
    for side, ei, arr in f.edges():
        sign = -1.0 if side == "minus" else 1.0
        for j, v in enumerate(arr):
            rows.append((side, ei, j, sign * j * f.grid.h, v))
    write_csv(path, ["edge_side", "edge_index", "node_index", "x", "value"], rows)


def read_graph_function(path) -> GraphFunction:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != ["edge_side", "edge_index", "node_index", "x", "value"]:
            raise ValueError("unexpected graph-function CSV header")
        data = {}
        xs = {}
        for line in fh:
            side, ei, j, x, v = line.strip().split(",")
            data.setdefault((side, int(ei)), {})[int(j)] = float(v)
            xs.setdefault((side, int(ei)), {})[int(j)] = float(x)
    sides = {"minus": [], "plus": []}
    for (side, ei) in sorted(data, key=lambda k: (k[0], k[1])):
        vals = data[(side, ei)]
        arr = np.array([vals[j] for j in range(len(vals))])
        sides[side].append(arr)
    n_minus, n_plus = len(sides["minus"]), len(sides["plus"])
    m = len(sides["minus"][0])
    some = next(iter(xs.values()))
    h = abs(some[1]) if 1 in some else 1.0
    graph = StarGraph(n_minus, n_plus)
    grid = GraphGrid(h=h, points_per_edge=m)
    return GraphFunction(graph, grid, minus=sides["minus"], plus=sides["plus"])


def write_spacetime_field(path, field):
    """Columns: x, t, value."""
    rows = []
    for i, xv in enumerate(field.x):
        for k, tv in enumerate(field.t):
            rows.append((xv, tv, field.values[i, k]))
    write_csv(path, ["x", "t", "value"], rows)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
