"""Gate-level certification of patterns on minimal lattice fragments.

Every outcome branch of a pattern is contracted exactly through the vertex
tensors, restricted to the incoming encoding, and compared with the frame
prediction ``Enc_out X^v' Z^r' U`` up to global phase.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .lattice import LatticePatch, build_patch, cell_map, prologue_cell, wire_cell
from .patterns import (
    ENCODINGS,
    ROLE_ORDER,
    X0_ROLES,
    GatePattern,
    PauliFrame,
    encoding_isometry,
    init_frame,
    role_pauli,
)
from .oracle import MeasurementBasis
from .tensornet import Fragment, induced_operators

TOL = 1e-10
ZERO_BRANCH = 1e-12

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_PAULI = {(v, r): np.linalg.matrix_power(_X, v) @ np.linalg.matrix_power(_Z, r) for v in (0, 1) for r in (0, 1)}
_ENC = {t: encoding_isometry(ENCODINGS[t]) for t in (0, 1)}


@dataclass
class PatternReport:
    kind: str
    theta: float
    branches: int = 0
    max_deviation: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and self.branches > 0

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "theta": self.theta,
            "branches": self.branches,
            "max_deviation": self.max_deviation,
            "pass": self.passed,
            "failures": self.failures[:20],
        }


# -- fragments -------------------------------------------------------------

def _vertex(patch: LatticePatch, site: int) -> int:
    return patch.site_owner[site][0]


def cell_fragment(patch: LatticePatch, wire: int, step: int) -> tuple[Fragment, dict]:
    roles = cell_map(wire_cell(patch, wire, step))
    verts = sorted({_vertex(patch, s) for s in roles.values()})
    inputs = tuple(roles[r] // 2 for r in ("b", "e"))
    outputs = tuple(roles[r] // 2 for r in ("i", "l") if r in roles)
    return Fragment(patch, tuple(verts), inputs, outputs), roles


def column_fragment(patch: LatticePatch, wires, step: int) -> tuple[Fragment, list[dict]]:
    """The path column (roles a..f) of several wires in one cell."""
    per_wire = []
    verts = set()
    inputs, outputs = [], []
    for w in wires:
        roles = {r: s for r, s in cell_map(wire_cell(patch, w, step)).items() if r in X0_ROLES}
        per_wire.append(roles)
        verts |= {_vertex(patch, s) for s in roles.values()}
        inputs += [roles["b"] // 2, roles["e"] // 2]
        outputs += [roles["c"] // 2, roles["f"] // 2]
    return Fragment(patch, tuple(sorted(verts)), tuple(inputs), tuple(outputs)), per_wire


def prologue_fragment(patch: LatticePatch, wire: int) -> tuple[Fragment, dict]:
    roles = cell_map(prologue_cell(patch, wire))
    verts = sorted({_vertex(patch, s) for s in roles.values()})
    outputs = (roles["i"] // 2, roles["l"] // 2)
    return Fragment(patch, tuple(verts), (), outputs), roles


# -- vectorized frame algebra ------------------------------------------------

def _contributions(pattern: GatePattern, roles: list[str]) -> np.ndarray:
    """Row per role: (xu, zu, xl, zl) its outcome-1 Pauli applies."""
    return np.array([role_pauli(r, pattern.bases[r][0], 1) for r in roles], dtype=np.int64)


def _frame_bits(frame: PauliFrame, bits: np.ndarray, contrib: np.ndarray):
    """Vectorized ``PauliFrame.apply`` over outcome rows; returns (v, r, tau) arrays."""
    p = bits @ contrib % 2
    v = frame.v ^ p[:, 0]
    r = frame.r ^ p[:, 1] ^ p[:, 3]
    tau = frame.tau ^ p[:, 0] ^ p[:, 2]
    return v, r, tau


def _all_bits(n: int) -> np.ndarray:
    return np.array(list(product((0, 1), repeat=n)), dtype=np.int64)


def _fidelity_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a.reshape(len(a), -1), axis=1)
    nb = np.linalg.norm(b.reshape(len(b), -1), axis=1)
    ov = np.abs(np.einsum("nij,nij->n", a.conj(), b))
    return ov / np.maximum(na * nb, 1e-300)


def _branch_tables(pattern, fragment, roles):
    """Branch operators for both signs of the adaptive angle, contracted once.

    Returns (bits, site roles, frame contributions, {sign: ops[n, out, in]}).
    """
    sites = fragment.sites
    role_of = {s: r for r, s in roles.items()}
    site_roles = [role_of[s] for s in sites]
    bits = _all_bits(len(sites))
    contrib = _contributions(pattern, site_roles)
    adaptive = [r for r in pattern.rules if r in roles]
    dout = 2 ** len(fragment.outputs)
    din = 2 ** len(fragment.inputs)
    by_sign = {}
    for sign in ((1, -1) if adaptive else (1,)):
        bases = {}
        for s, role in zip(sites, site_roles):
            fam, th = pattern.bases[role]
            bases[s] = MeasurementBasis(fam, sign * th if role in adaptive else th)
        by_sign[sign] = induced_operators(fragment, bases).reshape(len(bits), dout, din)
    return bits, site_roles, contrib, by_sign


def _resolve_ops(pattern, frame, bits, site_roles, contrib, by_sign) -> np.ndarray:
    """Pick, per branch, the operator measured with the angle the rule prescribes."""
    adaptive = [r for r in pattern.rules if r in site_roles]
    if not adaptive:
        return by_sign[1]
    (role,) = adaptive
    rule = pattern.rules[role]
    earlier = np.array([ROLE_ORDER.index(r) < ROLE_ORDER.index(role) for r in site_roles])
    v, r, _ = _frame_bits(frame, bits * earlier, contrib)
    flip = {"v": v, "r": r}[rule.bit].copy()
    for extra in rule.roles:
        flip ^= bits[:, site_roles.index(extra)]
    return np.where((flip == 0)[:, None, None], by_sign[1], by_sign[-1])


def certify_single_wire(pattern: GatePattern, patch: LatticePatch | None = None, target=None) -> PatternReport:
    """All input frames x all outcome branches of a one-wire cell pattern."""
    report = PatternReport(pattern.kind, pattern.theta)
    if patch is None:
        patch = build_patch(3, 2)
    wire = patch.wires // 2
    step = patch.cells - 1 if pattern.kind == "Readout" else 0
    fragment, roles = cell_fragment(patch, wire, step)
    if target is None:
        target = pattern.target()
    tables = _branch_tables(pattern, fragment, roles)
    bits, site_roles, contrib, _ = tables
    for v, r, tau in product((0, 1), repeat=3):
        frame = PauliFrame(v, r, ENCODINGS[tau])
        ops = _resolve_ops(pattern, frame, *tables)
        a = ops @ _ENC[tau] @ _PAULI[(v, r)]
        live = np.linalg.norm(a.reshape(len(a), -1), axis=1) > ZERO_BRANCH
        if pattern.kind == "Readout":
            x0 = np.array([r_ in X0_ROLES for r_ in site_roles])
            mv, _, mtau = _frame_bits(frame, bits * x0, contrib)
            hb = bits[:, site_roles.index("h")]
            kb = bits[:, site_roles.index("k")]
            consistent = (hb ^ kb) == mtau
            bad = live & ~consistent
            for n in np.flatnonzero(bad):
                report.failures.append({"frame": [v, r, tau], "outcomes": bits[n].tolist(), "reason": "inconsistent"})
            decoded = hb ^ mv
            b = np.zeros((len(bits), 1, 2), dtype=complex)
            b[np.arange(len(bits)), 0, decoded] = 1.0
        else:
            nv, nr, ntau = _frame_bits(frame, bits, contrib)
            b = np.stack([_ENC[t] @ _PAULI[(x, z)] @ target for x, z, t in zip(nv, nr, ntau)])
        _score(report, a, b, live, bits, (v, r, tau))
    return report


def certify_cz(patch: LatticePatch | None = None, target=None) -> PatternReport:
    """CZ coupling on the path column of two adjacent wires, every input frame pair."""
    from .patterns import couple_frames, cz_couple

    pattern = cz_couple()
    report = PatternReport(pattern.kind, 0.0)
    if patch is None:
        patch = build_patch(4, 2)
    w = 1
    fragment, per_wire = column_fragment(patch, (w, w + 1), 0)
    sites = fragment.sites
    owner = {}
    for k, roles in enumerate(per_wire):
        for role, s in roles.items():
            owner[s] = (k, role)
    bases = {s: MeasurementBasis(*pattern.bases[owner[s][1]]) for s in sites}
    cz = [(per_wire[0][pattern.couple[0]], per_wire[1][pattern.couple[1]])]
    t = induced_operators(fragment, bases, cz_pairs=cz)
    bits = _all_bits(len(sites))
    ops = t.reshape(len(bits), 16, 16)
    contribs = []
    for k in (0, 1):
        rows = []
        for s in sites:
            wk, role = owner[s]
            rows.append(role_pauli(role, pattern.bases[role][0], 1) if wk == k else (0, 0, 0, 0))
        contribs.append(np.array(rows, dtype=np.int64))
    if target is None:
        target = pattern.target()
    # Predicted operator for every (upper, lower) frame reaching the coupling.
    table = np.empty((64, 16, 4), dtype=complex)
    for n, (a_v, a_r, a_t, b_v, b_r, b_t) in enumerate(product((0, 1), repeat=6)):
        up, lo = couple_frames(PauliFrame(a_v, a_r, ENCODINGS[a_t]), PauliFrame(b_v, b_r, ENCODINGS[b_t]))
        table[n] = np.kron(_ENC[up.tau], _ENC[lo.tau]) @ np.kron(up.byproduct(), lo.byproduct()) @ target
    for fu, fl in product(product((0, 1), repeat=3), repeat=2):
        frames = [PauliFrame(fu[0], fu[1], ENCODINGS[fu[2]]), PauliFrame(fl[0], fl[1], ENCODINGS[fl[2]])]
        enc_in = np.kron(_ENC[fu[2]], _ENC[fl[2]])
        p_in = np.kron(_PAULI[fu[:2]], _PAULI[fl[:2]])
        a = ops @ enc_in @ p_in
        live = np.linalg.norm(a.reshape(len(a), -1), axis=1) > ZERO_BRANCH
        (uv, ur, ut), (lv, lr, lt) = (_frame_bits(frames[k], bits, contribs[k]) for k in (0, 1))
        code = ((((uv * 2 + ur) * 2 + ut) * 2 + lv) * 2 + lr) * 2 + lt
        b = table[code]
        _score(report, a, b, live, bits, fu + fl)
    return report


def certify_init(patch: LatticePatch | None = None) -> PatternReport:
    from .patterns import init_leg

    pattern = init_leg()
    report = PatternReport(pattern.kind, 0.0)
    if patch is None:
        patch = build_patch(1, 1)
    fragment, roles = prologue_fragment(patch, 0)
    role_of = {s: r for r, s in roles.items()}
    sites = fragment.sites
    bases = {s: MeasurementBasis(*pattern.bases[role_of[s]]) for s in sites}
    t = induced_operators(fragment, bases)
    bits = _all_bits(len(sites))
    ops = t.reshape(len(bits), 4, 1)
    live = np.linalg.norm(ops.reshape(len(bits), -1), axis=1) > ZERO_BRANCH
    b = np.zeros_like(ops)
    for n in np.flatnonzero(live):
        out = {role_of[s]: int(x) for s, x in zip(sites, bits[n])}
        f = init_frame(out)
        b[n] = _ENC[f.tau] @ f.byproduct() @ np.array([[1.0], [0.0]])
    _score(report, ops, b, live, bits, ())
    return report


def _score(report: PatternReport, a, b, live, bits, frame_key) -> None:
    if not live.any():
        return
    fid = _fidelity_rows(a[live], b[live])
    dev = np.abs(1.0 - fid)
    report.branches += int(live.sum())
    report.max_deviation = max(report.max_deviation, float(dev.max()))
    for n, d in zip(np.flatnonzero(live), dev):
        if d > TOL:
            report.failures.append({"frame": list(frame_key), "outcomes": bits[n].tolist(), "deviation": float(d)})


def certify(pattern: GatePattern, target=None) -> PatternReport:
    """Dispatch on kind. ``target`` overrides the pattern's own gate (ignored for Init/Readout)."""
    if pattern.kind == "CZCouple":
        return certify_cz(target=target)
    if pattern.kind == "Init":
        return certify_init()
    return certify_single_wire(pattern, target=target)
