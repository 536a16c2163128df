"""JSON network files and the built-in corridor example.

Schema (vertex labels are 1-based)::

    {
      "subsystem": {"J": M, "R": M, "Q": M, "B": M},
      "topology": {"n_vertices": 6,
                   "edges": [{"i": 1, "j": 2, "w_ij": 62.5, "w_ji": 62.5}, ...]},
      "io": {"G": M | "eK", "H": M | "eK"},
      "clusters": [[1, 2], [3], ...]          # optional
    }

A matrix ``M`` is either ``{"shape": [rows, cols], "data": [row-major]}`` or
a nested list of rows. ``"eK"`` is the K-th unit vector, a column for ``G``
and a row for ``H``; a list of such strings stacks several channels.
Floats are written with ``repr`` so a parse/emit round trip is bit-exact.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, UnknownExample
from .graph import NetworkTopology, check_assumption, underlying_undirected_edges
from .sysmodel import NetworkedSystem, Subsystem, assemble_network, make_subsystem

_UNIT = re.compile(r"^e(\d+)$")


@dataclass(frozen=True)
class NetworkFile:
    subsystem: Subsystem
    topology: NetworkTopology
    clusters: tuple[tuple[int, ...], ...] | None = None  # 0-based original vertices

    def network(self) -> NetworkedSystem:
        return assemble_network(self.subsystem, self.topology)


def _matrix(value, where: str) -> np.ndarray:
    if isinstance(value, dict):
        if set(value) != {"shape", "data"}:
            raise ParseError(f"{where}: matrix object needs exactly 'shape' and 'data'")
        shape, data = value["shape"], value["data"]
        if not (isinstance(shape, list) and len(shape) == 2 and all(isinstance(k, int) and k >= 0 for k in shape)):
            raise ParseError(f"{where}.shape: expected [rows, cols] of nonnegative integers")
        if not isinstance(data, list) or len(data) != shape[0] * shape[1]:
            raise ParseError(f"{where}.data: expected {shape[0] * shape[1]} numbers")
        arr = _numbers(data, f"{where}.data")
        return arr.reshape(shape)
    if isinstance(value, list) and value and all(isinstance(r, list) for r in value):
        widths = {len(r) for r in value}
        if len(widths) != 1:
            raise ParseError(f"{where}: rows have different lengths {sorted(widths)}")
        return np.array([_numbers(r, f"{where}[{k}]") for k, r in enumerate(value)])
    raise ParseError(f"{where}: expected a matrix ({{'shape', 'data'}} or list of rows)")


def _numbers(values, where: str) -> np.ndarray:
    for k, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{where}[{k}]: expected a number, got {v!r}")
    return np.array(values, dtype=float)


def _unit(value, n: int, where: str) -> np.ndarray:
    items = [value] if isinstance(value, str) else value
    cols = []
    for k, item in enumerate(items):
        m = _UNIT.match(item) if isinstance(item, str) else None
        if m is None:
            raise ParseError(f"{where}[{k}]: expected unit-vector shorthand 'eK', got {item!r}")
        idx = int(m.group(1))
        if not 1 <= idx <= n:
            raise ParseError(f"{where}: unit vector {item} out of range 1..{n}")
        cols.append(np.eye(n)[:, idx - 1])
    return np.column_stack(cols)


def _io(value, n: int, where: str, transpose: bool) -> np.ndarray:
    if isinstance(value, str) or (isinstance(value, list) and value and all(isinstance(v, str) for v in value)):
        m = _unit(value, n, where)
        return m.T if transpose else m
    return _matrix(value, where)


def _field(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}: missing field '{key}'")
    return obj[key]


def network_from_dict(doc) -> NetworkFile:
    """Validate a decoded JSON document.

    Raises
    ------
    ParseError
        Naming the offending field.
    ValidationError, AssumptionViolation
        From the subsystem and topology checks.
    """
    sub_doc = _field(doc, "subsystem", "<root>")
    mats = {k: _matrix(_field(sub_doc, k, "subsystem"), f"subsystem.{k}") for k in ("J", "R", "Q", "B")}
    subsystem = make_subsystem(mats["J"], mats["R"], mats["Q"], mats["B"])

    top_doc = _field(doc, "topology", "<root>")
    n = _field(top_doc, "n_vertices", "topology")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ParseError(f"topology.n_vertices: expected a positive integer, got {n!r}")
    edges_doc = _field(top_doc, "edges", "topology")
    if not isinstance(edges_doc, list):
        raise ParseError("topology.edges: expected a list")
    weights = np.zeros((n, n))
    seen = set()
    for k, e in enumerate(edges_doc):
        where = f"topology.edges[{k}]"
        vals = {key: _field(e, key, where) for key in ("i", "j", "w_ij", "w_ji")}
        i, j = vals["i"], vals["j"]
        for key in ("i", "j"):
            v = vals[key]
            if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= n:
                raise ParseError(f"{where}.{key}: expected a vertex in 1..{n}, got {v!r}")
        if i == j:
            raise ParseError(f"{where}: self-loop at vertex {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(f"{where}: duplicate edge {{{i}, {j}}}")
        seen.add(key)
        w = _numbers([vals["w_ij"], vals["w_ji"]], where)
        weights[i - 1, j - 1], weights[j - 1, i - 1] = w

    io_doc = _field(doc, "io", "<root>")
    g = _io(_field(io_doc, "G", "io"), n, "io.G", transpose=False)
    h = _io(_field(io_doc, "H", "io"), n, "io.H", transpose=True)
    topology = NetworkTopology(weights, g, h)
    check_assumption(topology)

    clusters = None
    if "clusters" in doc:
        raw = doc["clusters"]
        if not isinstance(raw, list) or not all(isinstance(b, list) and b for b in raw):
            raise ParseError("clusters: expected a list of non-empty vertex lists")
        clusters = []
        for k, block in enumerate(raw):
            for v in block:
                if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                    raise ParseError(f"clusters[{k}]: expected positive vertex labels, got {v!r}")
            clusters.append(tuple(v - 1 for v in block))
        if len(clusters) != n:
            raise ParseError(f"clusters: {len(clusters)} blocks for {n} vertices")
        flat = sorted(v for b in clusters for v in b)
        if flat != list(range(len(flat))):
            raise ParseError("clusters: blocks must partition 1..N without gaps or repeats")
        clusters = tuple(clusters)
    return NetworkFile(subsystem, topology, clusters)


def parse_network(path) -> NetworkFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return network_from_dict(doc)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _matrix_doc(m) -> dict:
    m = np.asarray(m, dtype=float)
    return {"shape": list(m.shape), "data": [float(v) for v in m.ravel()]}


def network_to_dict(subsystem: Subsystem, topology: NetworkTopology, clusters=None) -> dict:
    w = topology.weights
    doc = {
        "subsystem": {
            "J": _matrix_doc(subsystem.j_mat),
            "R": _matrix_doc(subsystem.r_mat),
            "Q": _matrix_doc(subsystem.q_mat),
            "B": _matrix_doc(subsystem.b_mat),
        },
        "topology": {
            "n_vertices": topology.n_vertices,
            "edges": [
                {"i": i + 1, "j": j + 1, "w_ij": float(w[i, j]), "w_ji": float(w[j, i])}
                for i, j in underlying_undirected_edges(topology)
            ],
        },
        "io": {"G": _matrix_doc(topology.g), "H": _matrix_doc(topology.h)},
    }
    if clusters is not None:
        doc["clusters"] = [[v + 1 for v in block] for block in clusters]
    return doc


def emit(path, subsystem: Subsystem, topology: NetworkTopology, clusters=None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(network_to_dict(subsystem, topology, clusters), indent=2) + "\n")
    return path


# --- built-in example -----------------------------------------------------

CORRIDOR = {
    "C1": 4.35e4,  # J/K, room air
    "C2": 9.24e6,  # J/K, walls, floor, furniture
    "R_int": 2.0e-3,  # K/W
    "R_out": 23e-3,  # K/W
    "R_wall": 16e-3,  # K/W
    "rooms": 6,
    "observed_room": 3,
}


def corridor_subsystem(
    c1=CORRIDOR["C1"],
    c2=CORRIDOR["C2"],
    r_int=CORRIDOR["R_int"],
    r_out=CORRIDOR["R_out"],
    heat_balance: bool = False,
) -> Subsystem:
    """Two thermal masses per room with state ``(T_air, T_mass)`` and ``Q = diag(C1, C2)``.

    By default ``R`` is the published room formula, whose off-diagonal entry
    is ``+1 / (R_int C1 C2)``. That sign makes the air-mass coupling in
    ``A = -R Q`` negative; ``heat_balance=True`` flips it so that
    ``C1 T1' = (T2 - T1) / R_int - T1 / R_out`` and ``C2 T2' = (T1 - T2) / R_int``
    hold exactly. Edge rankings do not depend on this choice.
    """
    off = -1.0 if heat_balance else 1.0
    r = np.array([[c2 / c1, off], [off, c1 / c2]]) / (r_int * c1 * c2)
    r[0, 0] += 1.0 / (r_out * c1**2)
    return make_subsystem(np.zeros((2, 2)), r, np.diag([c1, c2]), [[1.0 / c1], [0.0]])


def corridor_topology(rooms: int = CORRIDOR["rooms"], r_wall=CORRIDOR["R_wall"], observed: int = CORRIDOR["observed_room"]):
    """Path of ``rooms`` rooms, wall conductance ``1/R_wall`` both ways, I/O at one room (1-based)."""
    w = 1.0 / r_wall
    unit = np.eye(rooms)[:, [observed - 1]]
    return NetworkTopology.from_edges(rooms, [(k, k + 1, w, w) for k in range(rooms - 1)], unit, unit.T)


def corridor() -> NetworkFile:
    return NetworkFile(corridor_subsystem(), corridor_topology())


EXAMPLES = {"corridor": corridor}


def example(name: str) -> NetworkFile:
    if name not in EXAMPLES:
        raise UnknownExample(f"unknown example {name!r}; available: {', '.join(sorted(EXAMPLES))}")
    return EXAMPLES[name]()


def shipped_example_path(name: str = "corridor"):
    """Path to the JSON copy of an example bundled with the package."""
    return resources.files("netred") / "data" / f"{name}.json"
