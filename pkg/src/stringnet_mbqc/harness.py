"""Schedule execution, branch enumeration, sampling and verification.

Branches that agree on frames, on every outcome still referenced by a later
rule, and on the post-measurement state (up to phase) evolve identically,
so they are merged and their probabilities summed. A record therefore
stands for ``multiplicity`` outcome strings and keeps the lexicographically
smallest one as its representative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compiler import CircuitIR, MeasurementSchedule, ScheduleEntry, normalize_mode, print_circuit
from .errors import InvalidArgumentError, ResourceLimitError
from .lattice import LatticePatch
from .oracle import DEFAULT_QUBIT_CAP, PROB_FLOOR, MeasurementBasis, StateVector, apply_cz, branch, canonical_phase
from .patterns import PauliFrame, couple_frames, decode, role_pauli, updates_frame
from .resource import apply_precoupling, ground_state
from .tensornet import CorrelationState, apply_measurement, fingerprint

TVD_EXACT = 1e-10
DEFAULT_MAX_BRANCHES = 1 << 14


# -- backends --------------------------------------------------------------------

class TensorBackend:
    """Sequential contraction through :class:`CorrelationState`."""

    def __init__(self, state: CorrelationState):
        self.state = state

    @classmethod
    def start(cls, patch: LatticePatch, placements=(), cap: int = DEFAULT_QUBIT_CAP) -> "TensorBackend":
        return cls(CorrelationState(patch, pending_cz=tuple(placements)))

    def probabilities(self, site: int, basis: MeasurementBasis) -> list[float]:
        return self.state.branch_probabilities(site, basis)

    def project(self, site: int, basis: MeasurementBasis, outcome: int) -> "TensorBackend":
        new, _ = apply_measurement(self.state, site, basis, outcome)
        return TensorBackend(new)

    def cz(self, a: int, b: int) -> "TensorBackend":
        st = self.state.copy()
        st.apply_cz(a, b)
        return TensorBackend(st)

    def key(self) -> bytes:
        return fingerprint(self.state)


class DenseBackend:
    """Full statevector; measured qubits are dropped from the register."""

    def __init__(self, state: StateVector, live: tuple):
        self.state = state
        self.live = live

    @classmethod
    def start(cls, patch: LatticePatch, placements=(), cap: int = DEFAULT_QUBIT_CAP) -> "DenseBackend":
        res = ground_state(patch, cap=cap)
        if placements:
            res = apply_precoupling(res, placements, patch)
        return cls(res.state, tuple(range(patch.qubit_count)))

    def _axis(self, site: int) -> int:
        try:
            return self.live.index(site)
        except ValueError:
            raise InvalidArgumentError(f"site {site} is not live") from None

    def probabilities(self, site: int, basis: MeasurementBasis) -> list[float]:
        ax = self._axis(site)
        total = self.state.norm() ** 2
        return [branch(self.state, ax, bra, drop=True).norm() ** 2 / total for bra in basis.bras()]

    def project(self, site: int, basis: MeasurementBasis, outcome: int) -> "DenseBackend":
        ax = self._axis(site)
        post = branch(self.state, ax, basis.bras()[outcome], drop=True)
        post = StateVector(post.amplitudes / post.norm(), post.qubit_count, cap=64)
        return DenseBackend(post, self.live[:ax] + self.live[ax + 1:])

    def cz(self, a: int, b: int) -> "DenseBackend":
        return DenseBackend(apply_cz(self.state, self._axis(a), self._axis(b)), self.live)

    def key(self) -> bytes:
        return np.round(canonical_phase(self.state.amplitudes), 9).tobytes()


BACKENDS = {"tensor": TensorBackend, "dense": DenseBackend}


# -- records -------------------------------------------------------------------------

@dataclass
class BranchRecord:
    outcomes: str
    probability: float
    frames: tuple
    decoded: str
    multiplicity: int = 1
    operator: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "outcomes": self.outcomes,
            "probability": self.probability,
            "frames": [f.to_json() for f in self.frames],
            "decoded": self.decoded,
            "multiplicity": self.multiplicity,
        }


@dataclass
class _Branch:
    backend: object
    frames: tuple
    memo: dict
    bits: str
    prob: float
    mult: int = 1

    def merge_key(self) -> tuple:
        return (self.frames, tuple(sorted(self.memo.items())), self.backend.key())


def _referenced_sites(schedule: MeasurementSchedule) -> dict[int, int]:
    """Site -> index of its last use (len(entries) for readout sites)."""
    last = {}
    entries = schedule.all_entries
    for i, e in enumerate(entries):
        if e.kind == "measure" and e.angle_rule:
            for s in e.angle_rule["xor_sites"]:
                last[s] = i
    for d in schedule.epilogue:
        last[d["upper_site"]] = len(entries)
        last[d["lower_site"]] = len(entries)
    return last


def resolve_basis(entry: ScheduleEntry, frames: tuple, memo: dict) -> MeasurementBasis:
    theta = entry.theta
    rule = entry.angle_rule
    if rule:
        flip = getattr(frames[rule["wire"]], rule["frame"])
        for s in rule["xor_sites"]:
            flip ^= memo[s]
        if flip:
            theta = -theta
    return MeasurementBasis(entry.basis, theta)


def _frame_after(entry: ScheduleEntry, frames: tuple, outcome: int) -> tuple:
    if not updates_frame(entry.pattern, entry.role):
        return frames
    frames = list(frames)
    frames[entry.wire] = frames[entry.wire].apply(*role_pauli(entry.role, entry.basis, outcome))
    return tuple(frames)


def _couple(entry: ScheduleEntry, frames: tuple) -> tuple:
    u, l = entry.wires
    frames = list(frames)
    frames[u], frames[l] = couple_frames(frames[u], frames[l])
    return tuple(frames)


class _Executor:
    def __init__(self, schedule: MeasurementSchedule, patch: LatticePatch, backend: str, cap: int):
        if (patch.wires, patch.cells) != tuple(schedule.patch_dims):
            raise InvalidArgumentError(
                f"schedule was compiled for {schedule.patch_dims}, patch is {(patch.wires, patch.cells)}"
            )
        if backend not in BACKENDS:
            raise InvalidArgumentError(f"backend must be one of {sorted(BACKENDS)}")
        self.schedule = schedule
        self.patch = patch
        self.entries = schedule.all_entries
        self.last_use = _referenced_sites(schedule)
        self.root = _Branch(
            BACKENDS[backend].start(patch, schedule.precoupling, cap),
            tuple(PauliFrame() for _ in range(patch.wires)),
            {}, "", 1.0,
        )

    def _keep(self, memo: dict, site: int, outcome: int, index: int) -> dict:
        if site in self.last_use:
            memo = {**memo, site: outcome}
        return {s: m for s, m in memo.items() if self.last_use[s] > index}

    def children(self, br: _Branch, index: int) -> list[tuple[int, float, _Branch]]:
        """(outcome, conditional probability, child) for each nonzero outcome."""
        e = self.entries[index]
        if e.kind == "cz":
            return [(-1, 1.0, _Branch(br.backend.cz(*e.sites), br.frames, br.memo, br.bits, br.prob, br.mult))]
        if e.kind == "couple":
            return [(-1, 1.0, _Branch(br.backend, _couple(e, br.frames), br.memo, br.bits, br.prob, br.mult))]
        basis = resolve_basis(e, br.frames, br.memo)
        probs = br.backend.probabilities(e.site, basis)
        out = []
        for m, p in enumerate(probs):
            if p <= PROB_FLOOR:
                continue
            out.append((m, p, _Branch(
                br.backend.project(e.site, basis, m),
                _frame_after(e, br.frames, m),
                self._keep(br.memo, e.site, m, index),
                br.bits + str(m), br.prob * p, br.mult,
            )))
        return out

    def decode(self, br: _Branch) -> str:
        bits = []
        for d in self.schedule.epilogue[: self.schedule.logical_wires]:
            w = d["wire"]
            bits.append(str(decode(br.frames[w], br.memo[d["upper_site"]], br.memo[d["lower_site"]])))
        for d in self.schedule.epilogue[self.schedule.logical_wires:]:
            decode(br.frames[d["wire"]], br.memo[d["upper_site"]], br.memo[d["lower_site"]])
        return "".join(bits)


def run_exhaustive(
    schedule: MeasurementSchedule,
    patch: LatticePatch,
    mode: str | None = None,
    backend: str = "tensor",
    max_branches: int = DEFAULT_MAX_BRANCHES,
    cap: int = DEFAULT_QUBIT_CAP,
) -> list[BranchRecord]:
    """Every nonzero-probability branch, merged into equivalence classes."""
    if mode is not None and normalize_mode(mode) != schedule.mode:
        raise InvalidArgumentError(f"schedule was compiled for mode {schedule.mode!r}")
    ex = _Executor(schedule, patch, backend, cap)
    live = [ex.root]
    for i in range(len(ex.entries)):
        merged: dict = {}
        for br in live:
            for _, _, child in ex.children(br, i):
                key = child.merge_key()
                if key in merged:
                    old = merged[key]
                    old.prob += child.prob
                    old.mult += child.mult
                    if child.bits < old.bits:
                        old.bits = child.bits
                else:
                    merged[key] = child
        live = list(merged.values())
        if len(live) > max_branches:
            raise ResourceLimitError(f"{len(live)} live branches exceed the cap {max_branches}")
    records = [
        BranchRecord(br.bits, br.prob, br.frames, ex.decode(br), br.mult) for br in live
    ]
    records.sort(key=lambda r: r.outcomes)
    return records


@dataclass
class SampleResult:
    seed: int
    shots: int
    decoded: np.ndarray
    counts: dict = field(default_factory=dict)
    outcomes: np.ndarray | None = None

    def distribution(self) -> dict:
        return {k: v / self.shots for k, v in sorted(self.counts.items())}

    def to_json(self) -> dict:
        return {"seed": self.seed, "shots": self.shots, "counts": dict(sorted(self.counts.items()))}


def run_sampled(
    schedule: MeasurementSchedule,
    patch: LatticePatch,
    mode: str | None = None,
    seed: int = 0,
    shots: int = 1000,
    backend: str = "tensor",
    keep_outcomes: bool = False,
    cap: int = DEFAULT_QUBIT_CAP,
) -> SampleResult:
    """Independent shots; each shot draws its own uniform per measurement.

    Shots sitting in the same merged branch share the state update, so the
    cost scales with the number of distinct branches, not with ``shots``.
    """
    if shots < 1:
        raise InvalidArgumentError(f"shots must be >= 1, got {shots}")
    if mode is not None and normalize_mode(mode) != schedule.mode:
        raise InvalidArgumentError(f"schedule was compiled for mode {schedule.mode!r}")
    rng = np.random.default_rng(seed)
    ex = _Executor(schedule, patch, backend, cap)
    n_meas = sum(e.kind == "measure" for e in ex.entries)
    outcomes = np.zeros((shots, n_meas), dtype=np.uint8) if keep_outcomes else None
    groups = [(ex.root, np.arange(shots))]
    col = 0
    for i, e in enumerate(ex.entries):
        nxt: dict = {}
        for br, idx in groups:
            kids = ex.children(br, i)
            if e.kind != "measure":
                child = kids[0][2]
                _add_group(nxt, child, idx)
                continue
            if len(kids) == 1:
                picked = {kids[0][0]: idx}
            else:
                p0 = kids[0][1] / (kids[0][1] + kids[1][1])
                ones = rng.random(len(idx)) >= p0
                picked = {0: idx[~ones], 1: idx[ones]}
            for m, p, child in kids:
                sel = picked.get(m)
                if sel is None or not len(sel):
                    continue
                if outcomes is not None:
                    outcomes[sel, col] = m
                _add_group(nxt, child, sel)
        groups = list(nxt.values())
        if e.kind == "measure":
            col += 1
    decoded = np.empty(shots, dtype=object)
    for br, idx in groups:
        decoded[idx] = ex.decode(br)
    values, counts = np.unique(decoded.astype(str), return_counts=True)
    return SampleResult(seed, shots, decoded, {str(v): int(c) for v, c in zip(values, counts)}, outcomes)


def _add_group(groups: dict, child: _Branch, idx: np.ndarray) -> None:
    key = child.merge_key()
    if key in groups:
        br, old = groups[key]
        groups[key] = (br, np.concatenate([old, idx]))
    else:
        groups[key] = (child, idx)


# -- distributions and verification --------------------------------------------------

def record_distribution(records) -> dict:
    dist: dict = {}
    for r in records:
        dist[r.decoded] = dist.get(r.decoded, 0.0) + r.probability
    return dict(sorted(dist.items()))


def ideal_statevector(ir: CircuitIR) -> np.ndarray:
    """Dense simulation from ``|0...0>``; wire 0 is the most significant bit."""
    n = ir.wire_count
    psi = np.zeros([2] * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for g in ir.gates:
        if g.kind == "rz":
            u = np.diag([np.exp(-0.5j * g.theta), np.exp(0.5j * g.theta)])
        elif g.kind == "rx":
            c, s = math.cos(g.theta / 2), math.sin(g.theta / 2)
            u = np.array([[c, -1j * s], [-1j * s, c]])
        elif g.kind == "cz":
            a, b = g.wires
            idx = [slice(None)] * n
            idx[a] = idx[b] = 1
            psi[tuple(idx)] *= -1
            continue
        else:
            continue
        w = g.wires[0]
        psi = np.moveaxis(np.tensordot(u, psi, axes=(1, w)), 0, w)
    return psi.reshape(-1)


def ideal_distribution(ir: CircuitIR) -> dict:
    probs = np.abs(ideal_statevector(ir)) ** 2
    n = ir.wire_count
    return {format(i, f"0{n}b"): float(p) for i, p in enumerate(probs)}


def tvd(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def verify_against_ideal(ir: CircuitIR, records, mode: str = "", tol: float = TVD_EXACT) -> dict:
    observed = record_distribution(records)
    ideal = ideal_distribution(ir)
    total = sum(r.probability for r in records)
    dist = tvd(observed, ideal)
    return {
        "circuit": print_circuit(ir),
        "mode": mode,
        "branches": len(records),
        "branch_multiplicity": sum(r.multiplicity for r in records),
        "probability_sum": total,
        "observed": observed,
        "ideal": ideal,
        "tvd": dist,
        "pass": bool(dist < tol and abs(total - 1.0) < TVD_EXACT),
    }


def verify_pattern(pattern, target: np.ndarray | None = None) -> dict:
    """Certify a pattern on its minimal fragment; returns the report JSON."""
    from .certify import certify

    return certify(pattern, target=target).to_json()
