"""String-net resource states built two independent ways."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import networkx as nx
import numpy as np

from .errors import DegenerateSeedError, InvalidArgumentError, ResourceLimitError
from .lattice import LatticePatch, term_supports
from .oracle import DEFAULT_QUBIT_CAP, StateVector, apply_cz, canonical_phase, parity_of

MAX_CYCLE_RANK = 20

# A loop configuration is an int bitmask over edge indices (bit e = edge e occupied).
LoopConfiguration = int


def occupied_edges(config: LoopConfiguration) -> list[int]:
    return [e for e in range(config.bit_length()) if config >> e & 1]


def is_closed(patch: LatticePatch, config: LoopConfiguration) -> bool:
    for slots in patch.legs:
        if sum(config >> e & 1 for e in slots if e is not None) % 2:
            return False
    return True


def basis_index(patch: LatticePatch, config: LoopConfiguration) -> int:
    """Computational-basis index with both qubits of every occupied edge set."""
    n = patch.qubit_count
    idx = 0
    for e in occupied_edges(config):
        idx |= 1 << (n - 1 - 2 * e)
        idx |= 1 << (n - 2 - 2 * e)
    return idx


def cycle_basis_masks(patch: LatticePatch) -> list[int]:
    """Fundamental cycles of a spanning forest, as edge bitmasks."""
    g = nx.Graph()
    g.add_nodes_from(patch.vertices)
    edge_id = {}
    for e, (u, v) in enumerate(patch.edges):
        g.add_edge(u, v)
        edge_id[(u, v)] = e
    masks = []
    for cycle in nx.cycle_basis(g):
        m = 0
        for u, v in zip(cycle, cycle[1:] + cycle[:1]):
            m |= 1 << edge_id[(min(u, v), max(u, v))]
        masks.append(m)
    return sorted(masks)


def enumerate_loops(patch: LatticePatch) -> list[LoopConfiguration]:
    """All closed-loop configurations, as the span of a cycle basis."""
    rank = patch.cycle_rank()
    if rank > MAX_CYCLE_RANK:
        raise ResourceLimitError(f"cycle rank {rank} exceeds {MAX_CYCLE_RANK}")
    basis = cycle_basis_masks(patch)
    configs = [0]
    for m in basis:
        configs += [c ^ m for c in configs]
    return sorted(configs)


@dataclass(frozen=True)
class ResourceState:
    state: StateVector
    signs: dict
    kind: str = "plain"
    cz_pairs: tuple = field(default=())

    @property
    def loop_count(self) -> int:
        return len(self.signs)

    def to_json(self, tol: float = 1e-12) -> dict:
        amps = self.state.amplitudes
        nz = np.flatnonzero(np.abs(amps) > tol)
        return {
            "kind": self.kind,
            "qubit_count": self.state.qubit_count,
            "cz_pairs": [list(p) for p in self.cz_pairs],
            "amplitudes": [[int(i), float(amps[i].real), float(amps[i].imag)] for i in nz],
        }


def _check_cap(patch: LatticePatch, cap: int) -> None:
    if patch.qubit_count > cap:
        raise ResourceLimitError(f"{patch.qubit_count} qubits exceeds cap {cap}")


def ground_state(patch: LatticePatch, cap: int = DEFAULT_QUBIT_CAP) -> ResourceState:
    _check_cap(patch, cap)
    configs = enumerate_loops(patch)
    amps = np.zeros(1 << patch.qubit_count, dtype=complex)
    amp = 1 / sqrt(len(configs))
    for c in configs:
        amps[basis_index(patch, c)] = amp
    return ResourceState(StateVector(amps, patch.qubit_count, cap=cap), {c: 1 for c in configs})


def stabilizer_project(patch: LatticePatch, cap: int = DEFAULT_QUBIT_CAP) -> ResourceState:
    """Project ``|0...0>`` onto the joint +1 eigenspace of all Hamiltonian terms."""
    if patch.qubit_count == 0:
        raise InvalidArgumentError("patch has no qubits")
    _check_cap(patch, cap)
    n = patch.qubit_count
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    idx = np.arange(1 << n, dtype=np.int64)
    s_p, s_v, s_e = term_supports(patch)
    for sites in s_p:
        mask = sum(1 << (n - 1 - q) for q in sites)
        amps = 0.5 * (amps + amps[idx ^ mask])
    for sites in s_v + s_e:
        mask = sum(1 << (n - 1 - q) for q in sites)
        amps = amps * (1 - parity_of(idx, mask))
    nrm = np.linalg.norm(amps)
    if nrm < 1e-12:
        raise DegenerateSeedError("projection annihilated the seed state")
    amps = canonical_phase(amps)
    configs = enumerate_loops(patch)
    signs = {c: int(np.sign(amps[basis_index(patch, c)].real)) for c in configs}
    return ResourceState(StateVector(amps, n, cap=cap), signs)


def apply_precoupling(resource: ResourceState, cz_pairs, patch: LatticePatch | None = None) -> ResourceState:
    """Apply physical CZ gates in advance; the result stays a signed loop superposition."""
    pairs = [tuple(int(s) for s in p) for p in cz_pairs]
    for a, b in pairs:
        if a == b:
            raise InvalidArgumentError(f"CZ pair ({a}, {b}) repeats a site")
    state = resource.state
    for a, b in pairs:
        state = apply_cz(state, a, b)
    signs = dict(resource.signs)
    if patch is not None:
        for c in signs:
            signs[c] = int(np.sign(state.amplitudes[basis_index(patch, c)].real))
    return ResourceState(state, signs, kind="modified", cz_pairs=resource.cz_pairs + tuple(pairs))


def loop_amplitudes(patch: LatticePatch, cz_pairs=()) -> dict[int, complex]:
    """Sparse ``basis index -> amplitude`` of the (optionally CZ-dressed) ground state.

    Needs no dense register, so it reaches patches beyond the qubit cap.
    CZ gates are diagonal, so each pair only multiplies an amplitude by
    ``-1`` when both of its sites are occupied.
    """
    n = patch.qubit_count
    pairs = [tuple(int(s) for s in p) for p in cz_pairs]
    for a, b in pairs:
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise InvalidArgumentError(f"bad CZ pair ({a}, {b})")
    configs = enumerate_loops(patch)
    amp = 1 / sqrt(len(configs))
    out = {}
    for c in configs:
        idx = basis_index(patch, c)
        sign = 1
        for a, b in pairs:
            if idx >> (n - 1 - a) & 1 and idx >> (n - 1 - b) & 1:
                sign = -sign
        out[idx] = sign * amp
    return out
