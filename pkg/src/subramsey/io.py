"""Edge-list files: a header ``n m`` then one ``u v`` pair per line, 0-indexed, u < v."""

from __future__ import annotations

from pathlib import Path
from typing import TextIO

from .graph import Graph


class GraphFormatError(ValueError):
    pass


def format_edge_list(G: Graph) -> str:
    lines = [f"{G.n} {G.m}"]
    lines.extend(f"{u} {v}" for u, v in G.edge_array.tolist())
    return "\n".join(lines) + "\n"


def write_edge_list(G: Graph, dest: str | Path | TextIO) -> None:
    text = format_edge_list(G)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def parse_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise GraphFormatError("empty edge list")
    try:
        n, m = (int(x) for x in rows[0])
    except ValueError as exc:
        raise GraphFormatError(f"bad header {rows[0]!r}") from exc
    edges = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v'")
        try:
            u, v = int(row[0]), int(row[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer vertex") from None
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop at {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {lineno}: vertex out of range")
        if u > v:
            raise GraphFormatError(f"line {lineno}: expected u < v")
        if (u, v) in seen:
            raise GraphFormatError(f"line {lineno}: duplicate edge {u}-{v}")
        seen.add((u, v))
        edges.append((u, v))
    if len(edges) != m:
        raise GraphFormatError(f"header announces {m} edges, found {len(edges)}")
    return Graph.from_edges(n, edges)


def read_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())
