"""Finite hexagonal patches with two qubits per edge.

The patch is drawn as a brick wall. Horizontal chains are indexed by ``k``
and vertices along a chain by ``x = 1 .. 2*cols + 1``. A logical wire ``w``
occupies one horizontal line of plaquettes bounded by chain ``2w`` (the
upper path) and chain ``2w + 1`` (the lower path); its rungs sit at odd ``x``.
Neighbouring wires are joined by a coupling row of plaquettes whose rungs sit
at even ``x``.

Every vertex has three leg slots ``(in, out, side)``. A slot without an edge
is a boundary virtual leg and is pinned to 0. Qubit sites are numbered
``2 * edge + position`` where position 0 is the endpoint with the lower vertex
index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .errors import CellRangeError, InvalidArgumentError

IN, OUT, SIDE = 0, 1, 2

ROLES = ("a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l")
UPPER_ROLES = ("a", "b", "c", "g", "h", "i")
LOWER_ROLES = ("d", "e", "f", "j", "k", "l")

# (path, column offset, slot) for every role inside a gate cell
_ROLE_GEOMETRY = {
    "b": (0, 0, IN), "c": (0, 0, OUT), "a": (0, 0, SIDE),
    "h": (0, 1, IN), "i": (0, 1, OUT), "g": (0, 1, SIDE),
    "e": (1, 0, IN), "f": (1, 0, OUT), "d": (1, 0, SIDE),
    "k": (1, 1, IN), "l": (1, 1, OUT), "j": (1, 1, SIDE),
}


@dataclass(frozen=True)
class SiteRole:
    role: str
    site: int
    wire: int
    step: int


@dataclass(frozen=True)
class LatticePatch:
    """Immutable patch geometry.

    ``legs[v]`` holds the edge index in each of the three slots of vertex
    ``v`` (``None`` for a pinned boundary leg). ``coords`` are ``(chain, x)``
    pairs for patches produced by :func:`build_patch` and arbitrary labels
    otherwise. ``wires``/``cells`` are zero for patches without a wire layout.
    """

    coords: tuple
    edges: tuple[tuple[int, int], ...]
    legs: tuple[tuple[int | None, int | None, int | None], ...]
    plaquettes: tuple[tuple[int, ...], ...] = ()
    wires: int = 0
    cells: int = 0
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for e, (u, v) in enumerate(self.edges):
            if not u < v:
                raise InvalidArgumentError(f"edge {e} must be stored as (lower, higher)")
            if e not in self.legs[u] or e not in self.legs[v]:
                raise InvalidArgumentError(f"edge {e} missing from its endpoint legs")
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.coords)})

    @property
    def vertices(self) -> list[int]:
        return list(range(len(self.coords)))

    @property
    def qubit_count(self) -> int:
        return 2 * len(self.edges)

    @property
    def boundary_virtual_legs(self) -> list[tuple[int, int]]:
        return [(v, s) for v, slots in enumerate(self.legs) for s in range(3) if slots[s] is None]

    def degree(self, v: int) -> int:
        return sum(e is not None for e in self.legs[v])

    def vertex_at(self, chain: int, x: int) -> int:
        return self._index[(chain, x)]

    def site(self, vertex: int, slot: int) -> int | None:
        """Qubit site carried by ``vertex`` on ``slot`` (None when pinned)."""
        e = self.legs[vertex][slot]
        if e is None:
            return None
        return 2 * e + (0 if self.edges[e][0] == vertex else 1)

    @cached_property
    def site_owner(self) -> dict[int, tuple[int, int]]:
        """Map qubit site -> (vertex, slot)."""
        out = {}
        for v in self.vertices:
            for s in range(3):
                q = self.site(v, s)
                if q is not None:
                    out[q] = (v, s)
        return out

    def partner(self, site: int) -> int:
        """The other qubit on the same edge."""
        return site ^ 1

    def cycle_rank(self) -> int:
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return len(self.edges) - len(self.coords) + nx.number_connected_components(g)

    def to_json(self) -> dict:
        return {
            "wires": self.wires,
            "cells": self.cells,
            "qubit_count": self.qubit_count,
            "vertices": [
                {"id": v, "coord": list(c) if isinstance(c, tuple) else c, "degree": self.degree(v)}
                for v, c in enumerate(self.coords)
            ],
            "edges": [
                {"id": e, "vertices": [u, v], "sites": [2 * e, 2 * e + 1]}
                for e, (u, v) in enumerate(self.edges)
            ],
            "plaquettes": [list(p) for p in self.plaquettes],
            "boundary_legs": [list(b) for b in self.boundary_virtual_legs],
        }


def build_patch(rows: int, cols: int) -> LatticePatch:
    """Build ``rows`` wire rows of ``cols`` plaquettes each.

    Adjacent wire rows are separated by a coupling row of ``cols - 1``
    plaquettes, so ``build_patch(1, c)`` is a single strip of ``c`` hexagons.
    """
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"patch dimensions must be positive, got {rows}x{cols}")
    xs = range(1, 2 * cols + 2)
    coords = tuple((k, x) for k in range(2 * rows) for x in xs)
    index = {c: i for i, c in enumerate(coords)}

    edge_pairs: list[tuple[tuple, tuple]] = []
    for k in range(2 * rows):
        for x in xs[:-1]:
            edge_pairs.append(((k, x), (k, x + 1)))
    for w in range(rows):
        for x in range(1, 2 * cols + 2, 2):
            edge_pairs.append(((2 * w, x), (2 * w + 1, x)))
        if w + 1 < rows:
            for x in range(2, 2 * cols + 1, 2):
                edge_pairs.append(((2 * w + 1, x), (2 * w + 2, x)))

    raw = sorted((min(index[p], index[q]), max(index[p], index[q])) for p, q in edge_pairs)
    edges = tuple(raw)
    edge_id = {pair: e for e, pair in enumerate(edges)}

    def eid(p, q):
        a, b = index[p], index[q]
        return edge_id[(min(a, b), max(a, b))]

    legs = []
    for (k, x) in coords:
        slot_in = eid((k, x), (k, x - 1)) if x > 1 else None
        slot_out = eid((k, x), (k, x + 1)) if x < 2 * cols + 1 else None
        side = None
        if x % 2 == 1:
            side = eid((k, x), (k ^ 1, x))
        elif k % 2 == 1 and k + 1 < 2 * rows:
            side = eid((k, x), (k + 1, x))
        elif k % 2 == 0 and k > 0:
            side = eid((k, x), (k - 1, x))
        legs.append((slot_in, slot_out, side))

    plaquettes = []
    for w in range(rows):
        for t in range(cols):
            plaquettes.append(_hexagon(eid, 2 * w, 2 * t + 1))
        if w + 1 < rows:
            for t in range(cols - 1):
                plaquettes.append(_hexagon(eid, 2 * w + 1, 2 * t + 2))
    return LatticePatch(coords, edges, tuple(legs), tuple(plaquettes), wires=rows, cells=cols)


def _hexagon(eid, top: int, x: int) -> tuple[int, ...]:
    bot = top + 1
    return tuple(sorted([
        eid((top, x), (top, x + 1)), eid((top, x + 1), (top, x + 2)),
        eid((bot, x), (bot, x + 1)), eid((bot, x + 1), (bot, x + 2)),
        eid((top, x), (bot, x)), eid((top, x + 2), (bot, x + 2)),
    ]))


def term_supports(patch: LatticePatch) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
    """Qubit sets ``(S_p, S_v, S_e)`` for plaquette, vertex and edge terms."""
    s_p = [sorted(q for e in p for q in (2 * e, 2 * e + 1)) for p in patch.plaquettes]
    s_v = [
        sorted(q for e in slots if e is not None for q in (2 * e, 2 * e + 1))
        for slots in patch.legs
    ]
    s_e = [[2 * e, 2 * e + 1] for e in range(len(patch.edges))]
    return s_p, s_v, s_e


def _check_wire(patch: LatticePatch, wire: int) -> None:
    if patch.wires == 0:
        raise CellRangeError("patch has no wire layout")
    if not 0 <= wire < patch.wires:
        raise CellRangeError(f"wire {wire} outside 0..{patch.wires - 1}")


def wire_cell(patch: LatticePatch, wire: int, step: int) -> list[SiteRole]:
    """Role assignment for gate cell ``step`` of ``wire``.

    Cell ``t`` covers columns ``x0 = 2t + 2`` (path vertices, side legs
    ``a``/``d`` into the coupling rows) and ``x1 = 2t + 3`` (rung vertices,
    rung qubits ``g``/``j``). Roles whose leg is pinned are omitted, so
    boundary wires lack ``a`` or ``d`` and the last cell lacks ``i``/``l``.
    """
    _check_wire(patch, wire)
    if not 0 <= step < patch.cells:
        raise CellRangeError(f"step {step} outside 0..{patch.cells - 1}")
    out = []
    for role in ROLES:
        path, dx, slot = _ROLE_GEOMETRY[role]
        v = patch.vertex_at(2 * wire + path, 2 * step + 2 + dx)
        q = patch.site(v, slot)
        if q is not None:
            out.append(SiteRole(role, q, wire, step))
    return out


def prologue_cell(patch: LatticePatch, wire: int) -> list[SiteRole]:
    """Sites of the left terminal rung of ``wire`` (step -1).

    Its in-legs are pinned, so only ``g``/``j`` (rung) and ``i``/``l``
    (outgoing path qubits) exist.
    """
    _check_wire(patch, wire)
    out = []
    for role in ("g", "i", "j", "l"):
        path, _, slot = _ROLE_GEOMETRY[role]
        q = patch.site(patch.vertex_at(2 * wire + path, 1), slot)
        out.append(SiteRole(role, q, wire, -1))
    return out


def cell_map(cell: list[SiteRole]) -> dict[str, int]:
    return {r.role: r.site for r in cell}
