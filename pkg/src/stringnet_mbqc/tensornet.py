"""Vertex tensors and exact contraction in the correlation space.

Each vertex carries one tensor ``T[p_in, p_out, p_side, v_in, v_out, v_side]``
that copies every virtual index onto its physical qubit and vanishes unless
the three virtual indices have even parity. Contracting one ``T`` per vertex
along the edges reproduces the closed-loop superposition; contracting a
physical leg against a measurement bra leaves the operator that the outcome
induces on the virtual bonds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import networkx as nx
import numpy as np

from .errors import (
    ImpossibleOutcomeError,
    IncompletePatternError,
    InvalidArgumentError,
    ResourceLimitError,
)
from .lattice import LatticePatch
from .oracle import DEFAULT_QUBIT_CAP, PROB_FLOOR, MeasurementBasis, StateVector, canonical_phase

ZERO = np.array([1.0, 0.0], dtype=complex)
ONES = np.array([1.0, 1.0], dtype=complex)


def vertex_tensor() -> np.ndarray:
    t = np.zeros((2,) * 6, dtype=complex)
    for i, j, k in product((0, 1), repeat=3):
        if (i + j + k) % 2 == 0:
            t[i, j, k, i, j, k] = 1.0
    return t


VERTEX_TENSOR = vertex_tensor()


class LTensor:
    """Dense tensor whose axes carry hashable labels."""

    __slots__ = ("data", "labels")

    def __init__(self, data: np.ndarray, labels):
        self.data = data
        self.labels = list(labels)
        if data.ndim != len(self.labels):
            raise ValueError("label count does not match tensor rank")

    def contract(self, other: "LTensor") -> "LTensor":
        common = [lab for lab in self.labels if lab in other.labels]
        ax_a = [self.labels.index(lab) for lab in common]
        ax_b = [other.labels.index(lab) for lab in common]
        data = np.tensordot(self.data, other.data, axes=(ax_a, ax_b))
        labels = [lab for lab in self.labels if lab not in common]
        labels += [lab for lab in other.labels if lab not in common]
        return LTensor(data, labels)

    def take(self, label, vec: np.ndarray) -> "LTensor":
        ax = self.labels.index(label)
        data = np.tensordot(vec, self.data, axes=(0, ax))
        return LTensor(data, self.labels[:ax] + self.labels[ax + 1:])

    def apply_matrix(self, label, mat: np.ndarray, new_label) -> "LTensor":
        """Contract ``label`` with the column index of ``mat``; its row index becomes ``new_label``."""
        ax = self.labels.index(label)
        data = np.moveaxis(np.tensordot(mat, self.data, axes=(1, ax)), 0, ax)
        labels = list(self.labels)
        labels[ax] = new_label
        return LTensor(data, labels)

    def cz_phase(self, la, lb) -> None:
        ia, ib = self.labels.index(la), self.labels.index(lb)
        idx = [slice(None)] * self.data.ndim
        idx[ia] = 1
        idx[ib] = 1
        self.data = self.data.copy()
        self.data[tuple(idx)] *= -1

    def transpose(self, labels) -> np.ndarray:
        return np.transpose(self.data, [self.labels.index(lab) for lab in labels])

    def copy(self) -> "LTensor":
        return LTensor(self.data.copy(), self.labels)


def q(site: int):
    return ("q", site)


def bond(edge: int):
    return ("e", edge)


def vertex_ltensor(patch: LatticePatch, v: int) -> LTensor:
    """Tensor of vertex ``v`` with pinned slots projected onto 0."""
    t = LTensor(VERTEX_TENSOR, [("p", 0), ("p", 1), ("p", 2), ("v", 0), ("v", 1), ("v", 2)])
    for slot, e in enumerate(patch.legs[v]):
        if e is None:
            t = t.take(("p", slot), ZERO).take(("v", slot), ZERO)
        else:
            t.labels[t.labels.index(("p", slot))] = q(patch.site(v, slot))
            t.labels[t.labels.index(("v", slot))] = bond(e)
    return t


def contract_patch(patch: LatticePatch, cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """Physical state of the whole patch, normalized, first amplitude real positive."""
    if patch.qubit_count > cap:
        raise ResourceLimitError(f"{patch.qubit_count} qubits exceeds cap {cap}")
    acc = LTensor(np.ones((), dtype=complex), [])
    for v in patch.vertices:
        acc = acc.contract(vertex_ltensor(patch, v))
    order = [q(s) for s in range(patch.qubit_count)]
    amps = acc.transpose(order).reshape(-1) if order else acc.data.reshape(-1)
    return StateVector(canonical_phase(amps), patch.qubit_count, cap=cap)


@dataclass
class CorrelationState:
    """Exact sequential-measurement state on a patch.

    The tensor holds every absorbed vertex with measured legs contracted.
    Its open labels are the virtual bonds into unabsorbed vertices and the
    physical legs not yet measured. Unabsorbed vertices act as a traced
    environment: a bond assignment is admissible iff every connected
    component of the unabsorbed graph receives even parity.
    """

    patch: LatticePatch
    tensor: LTensor = None
    absorbed: frozenset = frozenset()
    measured: frozenset = frozenset()
    pending_cz: tuple = ()
    frames: tuple = ()
    _env_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.tensor is None:
            self.tensor = LTensor(np.ones((), dtype=complex), [])
        for a, b in self.pending_cz:
            if a == b:
                raise InvalidArgumentError(f"CZ pair ({a}, {b}) repeats a site")

    def copy(self) -> "CorrelationState":
        return CorrelationState(
            self.patch, self.tensor.copy(), self.absorbed, self.measured,
            self.pending_cz, self.frames, self._env_cache,
        )

    # -- absorption ---------------------------------------------------
    def absorb(self, v: int) -> None:
        if v in self.absorbed:
            return
        self.tensor = self.tensor.contract(vertex_ltensor(self.patch, v))
        self.absorbed = self.absorbed | {v}
        remaining = []
        for a, b in self.pending_cz:
            if q(a) in self.tensor.labels and q(b) in self.tensor.labels:
                self.tensor.cz_phase(q(a), q(b))
            else:
                remaining.append((a, b))
        self.pending_cz = tuple(remaining)

    def ensure_site(self, site: int) -> None:
        if site in self.measured:
            raise InvalidArgumentError(f"site {site} already measured")
        owner = self.patch.site_owner
        self.absorb(owner[site][0])
        for a, b in list(self.pending_cz):
            if site in (a, b):
                other = b if site == a else a
                if other in self.measured:
                    raise InvalidArgumentError(f"CZ partner {other} of {site} already measured")
                self.absorb(owner[other][0])

    def apply_cz(self, a: int, b: int) -> None:
        if a == b:
            raise InvalidArgumentError(f"CZ pair ({a}, {b}) repeats a site")
        self.ensure_site(a)
        self.ensure_site(b)
        self.tensor.cz_phase(q(a), q(b))

    # -- environment ----------------------------------------------------
    def _env_mask(self) -> np.ndarray:
        """0/1 admissibility array over the tensor's axes (broadcastable)."""
        labels = self.tensor.labels
        key = (self.absorbed, tuple(labels))
        if key in self._env_cache:
            return self._env_cache[key]
        patch = self.patch
        rest = [v for v in patch.vertices if v not in self.absorbed]
        g = nx.Graph()
        g.add_nodes_from(rest)
        g.add_edges_from((u, v) for u, v in patch.edges if u not in self.absorbed and v not in self.absorbed)
        component_of = {}
        for i, c in enumerate(nx.connected_components(g)):
            for v in c:
                component_of[v] = i
        shape = [1] * len(labels)
        mask = np.ones(shape)
        groups: dict[int, list[int]] = {}
        for ax, lab in enumerate(labels):
            if lab[0] != "e":
                continue
            u, v = patch.edges[lab[1]]
            outside = v if u in self.absorbed else u
            groups.setdefault(component_of[outside], []).append(ax)
        for axes in groups.values():
            sh = [1] * len(labels)
            for ax in axes:
                sh[ax] = 2
            par = np.zeros(sh, dtype=np.int64)
            for ax in axes:
                s = [1] * len(labels)
                s[ax] = 2
                par = par ^ np.arange(2).reshape(s)
            mask = mask * (1 - par)
        self._env_cache[key] = mask
        return mask

    def weight(self, tensor: LTensor | None = None) -> float:
        t = self.tensor if tensor is None else tensor
        return float(np.sum(np.abs(t.data) ** 2 * self._env_mask()))

    # -- measurement ----------------------------------------------------
    def branch_probabilities(self, site: int, basis: MeasurementBasis) -> list[float]:
        self.ensure_site(site)
        total = self.weight()
        bras = basis.bras()
        out = []
        for m in (0, 1):
            t = self.tensor.take(q(site), bras[m])
            out.append(_weight_after(self, t) / total)
        return out


def _weight_after(state: CorrelationState, t: LTensor) -> float:
    probe = CorrelationState(
        state.patch, t, state.absorbed, state.measured, state.pending_cz, (), state._env_cache
    )
    return probe.weight()


def apply_measurement(
    state: CorrelationState, site: int, basis: MeasurementBasis, outcome: int
) -> tuple[CorrelationState, float]:
    """Project ``site`` onto outcome ``outcome``; returns the renormalized state and its probability."""
    state = state.copy()
    state.ensure_site(site)
    total = state.weight()
    t = state.tensor.take(q(site), basis.bras()[outcome])
    new = CorrelationState(
        state.patch, t, state.absorbed, state.measured | {site}, state.pending_cz,
        state.frames, state._env_cache,
    )
    w = new.weight()
    prob = w / total
    if prob <= PROB_FLOOR:
        raise ImpossibleOutcomeError(f"outcome {outcome} on site {site} has probability {prob:.3g}")
    new.tensor = LTensor(t.data / np.sqrt(w), t.labels)
    return new, prob


def fingerprint(state: CorrelationState, decimals: int = 9) -> bytes:
    """Phase-canonical rounded amplitudes; equal for physically identical branch states."""
    labels = sorted(state.tensor.labels)
    amps = state.tensor.transpose(labels).reshape(-1) * np.sqrt(
        np.broadcast_to(state._env_mask(), state.tensor.data.shape).transpose(
            [state.tensor.labels.index(lab) for lab in labels]
        ).reshape(-1)
    )
    amps = canonical_phase(amps)
    r = np.round(amps, decimals) + 0.0
    return repr(labels).encode() + r.tobytes()


# -- fragments ---------------------------------------------------------------

@dataclass(frozen=True)
class Fragment:
    """Open piece of a patch used for gate-level induced operators.

    ``inputs``/``outputs`` are the bond edges carrying the logical wires in
    and out, ordered (upper, lower) per wire. Side bonds leaving the fragment
    are summed freely, so a side-leg qubit of the fragment alone sets them.
    """

    patch: LatticePatch
    vertices: tuple
    inputs: tuple
    outputs: tuple

    @property
    def sites(self) -> list[int]:
        out = []
        for v in self.vertices:
            for slot in range(3):
                s = self.patch.site(v, slot)
                if s is not None:
                    out.append(s)
        return sorted(out)

    def open_tensor(self) -> LTensor:
        """Contraction with physical legs left open, labelled ``("q", site)``."""
        patch = self.patch
        inside = set(self.vertices)
        acc = LTensor(np.ones((), dtype=complex), [])
        for v in self.vertices:
            acc = acc.contract(vertex_ltensor(patch, v))
        for e in range(len(patch.edges)):
            u, w = patch.edges[e]
            if (u in inside) != (w in inside) and e not in self.inputs and e not in self.outputs:
                acc = acc.take(bond(e), ONES)
        return acc

    def cz_sites_present(self, pairs) -> None:
        sites = set(self.sites)
        for a, b in pairs:
            if a not in sites or b not in sites:
                raise InvalidArgumentError(f"CZ pair ({a}, {b}) not inside the fragment")


def induced_operators(
    fragment: Fragment,
    bases: dict,
    cz_pairs=(),
) -> np.ndarray:
    """Operators for every outcome combination at once.

    ``bases`` maps each fragment site to a :class:`MeasurementBasis`. The
    result has one outcome axis per site (in ``fragment.sites`` order)
    followed by the output-bond axes and the input-bond axes.
    """
    sites = fragment.sites
    missing = [s for s in sites if s not in bases]
    if missing:
        raise IncompletePatternError(f"sites without a basis: {missing}")
    t = fragment.open_tensor()
    fragment.cz_sites_present(cz_pairs)
    for a, b in cz_pairs:
        t.cz_phase(q(a), q(b))
    for s in sites:
        t = t.apply_matrix(q(s), bases[s].bras(), ("m", s))
    order = [("m", s) for s in sites]
    order += [bond(e) for e in fragment.outputs] + [bond(e) for e in fragment.inputs]
    return t.transpose(order)


def induced_operator(fragment: Fragment, bases: dict, outcomes: dict, cz_pairs=()) -> np.ndarray:
    """Operator (outputs x inputs) induced by one outcome branch."""
    sites = fragment.sites
    missing = [s for s in sites if s not in outcomes]
    if missing:
        raise IncompletePatternError(f"sites without an outcome: {missing}")
    sel = {s: np.eye(2, dtype=complex)[outcomes[s]] @ bases[s].bras() for s in sites}
    t = fragment.open_tensor()
    for a, b in cz_pairs:
        t.cz_phase(q(a), q(b))
    for s in sites:
        t = t.take(q(s), sel[s])
    dout = 2 ** len(fragment.outputs)
    din = 2 ** len(fragment.inputs)
    order = [bond(e) for e in fragment.outputs] + [bond(e) for e in fragment.inputs]
    return t.transpose(order).reshape(dout, din)
