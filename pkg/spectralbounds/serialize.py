"""JSON interchange for metric graphs ("mgraph/1") and weighted graphs ("wgraph/1").

Floats are written with Python's shortest round-trip representation, so save followed by load
reproduces every length exactly, and identical graphs serialise to identical bytes.
"""

import json
from pathlib import Path
from typing import Union

import numpy as np

from spectralbounds.graph import CONDITIONS, GraphValidationError, MetricGraph
from spectralbounds.weighted import WeightedGraph

MGRAPH_FORMAT = "mgraph/1"
WGRAPH_FORMAT = "wgraph/1"

PathLike = Union[str, Path]


def _field(record: dict, key: str, where: str):
    if key not in record:
        raise GraphValidationError(f"Malformed graph file: {where} is missing '{key}'.")
    return record[key]


def _dense(records: list, kind: str) -> list:
    ordered = sorted(records, key=lambda r: _field(r, "id", kind))
    ids = [r["id"] for r in ordered]
    if ids != list(range(len(ids))):
        raise GraphValidationError(f"Malformed graph file: {kind} ids must be 0..{len(ids) - 1}.")
    return ordered


#### Metric graphs

def graph_to_dict(g: MetricGraph) -> dict:
    record = {
        "format": MGRAPH_FORMAT,
        "root": g.root,
        "allow_degree_two": g.allow_degree_two,
        "vertices": [v._asdict() for v in g.vertices],
        "edges": [e._asdict() for e in g.edges],
    }
    if g.family is not None:
        record["family"] = g.family
    return record


def graph_from_dict(record: dict) -> MetricGraph:
    if record.get("format") != MGRAPH_FORMAT:
        raise GraphValidationError(f"Malformed graph file: expected format '{MGRAPH_FORMAT}', got '{record.get('format')}'.")
    vertices = _dense(_field(record, "vertices", "graph"), "vertex")
    edges = _dense(_field(record, "edges", "graph"), "edge")
    for v in vertices:
        if v.get("condition") not in CONDITIONS:
            raise GraphValidationError(f"Vertex {v['id']} has unknown condition '{v.get('condition')}'.")
    try:
        return MetricGraph(
            sphere=[_field(v, "sphere", f"vertex {v['id']}") for v in vertices],
            ambient_degree=[_field(v, "ambient_degree", f"vertex {v['id']}") for v in vertices],
            condition=[v["condition"] for v in vertices],
            frontier=[bool(_field(v, "frontier", f"vertex {v['id']}")) for v in vertices],
            source=[_field(e, "source", f"edge {e['id']}") for e in edges],
            target=[_field(e, "target", f"edge {e['id']}") for e in edges],
            length=[float(_field(e, "length", f"edge {e['id']}")) for e in edges],
            root=record.get("root", 0),
            allow_degree_two=bool(record.get("allow_degree_two", False)),
            family=record.get("family"),
        )
    except (TypeError, ValueError) as error:
        raise GraphValidationError(f"Malformed graph file: {error}") from error


#### Weighted graphs

def weighted_to_dict(w: WeightedGraph) -> dict:
    edges = []
    for j in range(w.num_edges):
        edge = {"source": int(w.source[j]), "target": int(w.target[j]), "b": float(w.b[j])}
        if w.d is not None:
            edge["d"] = float(w.d[j])
        edges.append(edge)
    return {
        "format": WGRAPH_FORMAT,
        "vertices": [{"id": v, "m": float(w.m[v]), "dirichlet": bool(w.dirichlet[v])} for v in range(w.num_vertices)],
        "edges": edges,
    }


def weighted_from_dict(record: dict) -> WeightedGraph:
    if record.get("format") != WGRAPH_FORMAT:
        raise GraphValidationError(f"Malformed graph file: expected format '{WGRAPH_FORMAT}', got '{record.get('format')}'.")
    vertices = _dense(_field(record, "vertices", "graph"), "vertex")
    edges = _field(record, "edges", "graph")
    with_d = [("d" in e) for e in edges]
    if any(with_d) and not all(with_d):
        raise GraphValidationError("Malformed graph file: edge weight d must be given for every edge or none.")
    return WeightedGraph(
        m=[float(_field(v, "m", f"vertex {v['id']}")) for v in vertices],
        source=[int(_field(e, "source", "edge")) for e in edges],
        target=[int(_field(e, "target", "edge")) for e in edges],
        b=[float(_field(e, "b", "edge")) for e in edges],
        d=[float(e["d"]) for e in edges] if edges and all(with_d) else None,
        dirichlet=[bool(v.get("dirichlet", False)) for v in vertices],
    )


#### Files

def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialise {type(value).__name__}.")


def save(graph: Union[MetricGraph, WeightedGraph], path: PathLike):
    record = weighted_to_dict(graph) if isinstance(graph, WeightedGraph) else graph_to_dict(graph)
    Path(path).write_text(dumps(record))


def load(path: PathLike) -> Union[MetricGraph, WeightedGraph]:
    """Load either file format; the "format" key decides which."""
    try:
        record = json.loads(Path(path).read_text())
    except json.JSONDecodeError as error:
        raise GraphValidationError(f"Malformed graph file {path}: {error}") from error
    if not isinstance(record, dict):
        raise GraphValidationError(f"Malformed graph file {path}: top level must be an object.")
    if record.get("format") == WGRAPH_FORMAT:
        return weighted_from_dict(record)
    return graph_from_dict(record)
