"""Dense statevector oracle over physical qubits.

Qubit ``q`` is axis ``q`` of the amplitude array reshaped to ``[2] * n``; in
flat indexing qubit 0 is the most significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin, sqrt

import numpy as np

from .errors import ImpossibleOutcomeError, InvalidArgumentError, ResourceLimitError

DEFAULT_QUBIT_CAP = 26
PROB_FLOOR = 1e-14


@dataclass(frozen=True)
class MeasurementBasis:
    """Single-qubit orthonormal basis; outcome 0 is the first vector (eigenvalue +1)."""

    family: str
    theta: float = 0.0

    FAMILIES = ("Z", "X", "ZRot", "XRot")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise InvalidArgumentError(f"unknown basis family {self.family!r}")

    def vectors(self) -> np.ndarray:
        """Rows are the two basis kets."""
        t = self.theta
        if self.family == "Z":
            return np.eye(2, dtype=complex)
        if self.family == "X":
            return np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)
        if self.family == "ZRot":
            ph = np.exp(-1j * t)
            return np.array([[1, ph], [1, -ph]], dtype=complex) / sqrt(2)
        return np.array(
            [[cos(t / 2), 1j * sin(t / 2)], [sin(t / 2), -1j * cos(t / 2)]], dtype=complex
        )

    def bras(self) -> np.ndarray:
        return self.vectors().conj()

    def to_json(self) -> dict:
        return {"family": self.family, "theta": self.theta}


Z_BASIS = MeasurementBasis("Z")
X_BASIS = MeasurementBasis("X")


class StateVector:
    """Dense ``2**n`` amplitude array."""

    __slots__ = ("amplitudes", "qubit_count")

    def __init__(self, amplitudes, qubit_count: int | None = None, cap: int = DEFAULT_QUBIT_CAP):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = qubit_count if qubit_count is not None else int(round(np.log2(amps.size)))
        if amps.size != 1 << n:
            raise InvalidArgumentError(f"{amps.size} amplitudes do not describe {n} qubits")
        if n > cap:
            raise ResourceLimitError(f"{n} qubits exceeds cap {cap}")
        self.amplitudes = amps
        self.qubit_count = n

    @classmethod
    def zeros(cls, n: int, cap: int = DEFAULT_QUBIT_CAP) -> "StateVector":
        if n > cap:
            raise ResourceLimitError(f"{n} qubits exceeds cap {cap}")
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(amps, n, cap=cap)

    @classmethod
    def from_bits(cls, bits: str) -> "StateVector":
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2) if bits else 0] = 1.0
        return cls(amps, len(bits))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.qubit_count)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.qubit_count, cap=64)

    def canonical(self) -> np.ndarray:
        """Normalized amplitudes with the first nonzero entry real positive."""
        return canonical_phase(self.amplitudes)

    def _check_sites(self, sites) -> list[int]:
        sites = [int(s) for s in sites]
        if len(set(sites)) != len(sites):
            raise InvalidArgumentError(f"duplicate site in {sites}")
        for s in sites:
            if not 0 <= s < self.qubit_count:
                raise InvalidArgumentError(f"site {s} outside 0..{self.qubit_count - 1}")
        return sites


def canonical_phase(amps: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(amps)
    if nrm == 0:
        return amps.copy()
    amps = amps / nrm
    nz = np.flatnonzero(np.abs(amps) > tol)
    if nz.size:
        ph = amps[nz[0]] / abs(amps[nz[0]])
        amps = amps / ph
    return amps


def _bit_masks(n: int, sites) -> np.ndarray:
    """Parity over ``sites`` of every basis index (0/1 array)."""
    mask = 0
    for s in sites:
        mask |= 1 << (n - 1 - s)
    return parity_of(np.arange(1 << n, dtype=np.int64), mask)


def parity_of(idx: np.ndarray, mask: int) -> np.ndarray:
    return (np.bitwise_count(idx & mask) & 1).astype(np.int64)


def apply_pauli_string(state: StateVector, sites, which: str) -> StateVector:
    """Multiply by ``X`` or ``Z`` on every listed site."""
    sites = state._check_sites(sites)
    n = state.qubit_count
    if which == "Z":
        par = _bit_masks(n, sites)
        amps = state.amplitudes * (1 - 2 * par)
    elif which == "X":
        mask = 0
        for s in sites:
            mask |= 1 << (n - 1 - s)
        amps = state.amplitudes[np.arange(1 << n) ^ mask]
    else:
        raise InvalidArgumentError(f"pauli must be 'X' or 'Z', got {which!r}")
    return StateVector(amps, n, cap=64)


def apply_cz(state: StateVector, site_a: int, site_b: int) -> StateVector:
    state._check_sites([site_a, site_b])
    t = state.tensor().copy()
    idx = [slice(None)] * state.qubit_count
    idx[site_a] = 1
    idx[site_b] = 1
    t[tuple(idx)] *= -1
    return StateVector(t.reshape(-1), state.qubit_count, cap=64)


def branch(state: StateVector, site: int, bra: np.ndarray, drop: bool = False) -> StateVector:
    """Unnormalized projection of ``site`` onto the ket whose conjugate is ``bra``.

    With ``drop`` the measured qubit is removed from the register.
    """
    t = np.moveaxis(state.tensor(), site, 0)
    if drop:
        proj = np.tensordot(bra, t, axes=(0, 0))
        return StateVector(proj.reshape(-1), state.qubit_count - 1, cap=64)
    ket = bra.conj()
    proj = np.tensordot(bra, t, axes=(0, 0))
    full = np.multiply.outer(ket, proj)
    return StateVector(np.moveaxis(full, 0, site).reshape(-1), state.qubit_count, cap=64)


def measure(
    state: StateVector,
    site: int,
    basis: MeasurementBasis,
    forced_outcome: int | None = None,
    rng: np.random.Generator | None = None,
    drop: bool = False,
) -> tuple[int, float, StateVector]:
    """Projective measurement of one site.

    Returns ``(outcome, probability, post_state)``. The probability is that of
    the returned outcome before projection. Without ``forced_outcome`` the
    outcome is sampled from ``rng``.
    """
    state._check_sites([site])
    bras = basis.bras()
    norm2 = state.norm() ** 2
    branches = [branch(state, site, bras[m], drop=drop) for m in (0, 1)]
    probs = [b.norm() ** 2 / norm2 for b in branches]
    if forced_outcome is None:
        if rng is None:
            raise InvalidArgumentError("sampling requires a seeded generator")
        outcome = int(rng.random() >= probs[0])
    else:
        outcome = int(forced_outcome)
        if probs[outcome] <= PROB_FLOOR:
            raise ImpossibleOutcomeError(
                f"outcome {outcome} on site {site} has probability {probs[outcome]:.3g}"
            )
    post = branches[outcome]
    post = StateVector(post.amplitudes / post.norm(), post.qubit_count, cap=64)
    return outcome, probs[outcome], post


def expectation(state: StateVector, pauli_term) -> float:
    """``<psi|P|psi>`` for ``pauli_term = (which, sites)`` or a list of such factors."""
    if isinstance(pauli_term[0], str):
        pauli_term = [pauli_term]
    out = state
    for which, sites in pauli_term:
        out = apply_pauli_string(out, sites, which)
    val = np.vdot(state.amplitudes, out.amplitudes)
    return float(val.real)


def hamiltonian_terms(patch) -> list[tuple[str, list[int]]]:
    from .lattice import term_supports

    s_p, s_v, s_e = term_supports(patch)
    return [("X", s) for s in s_p] + [("Z", s) for s in s_v] + [("Z", s) for s in s_e]


def energy(state: StateVector, patch) -> float:
    return -sum(expectation(state, term) for term in hamiltonian_terms(patch))
