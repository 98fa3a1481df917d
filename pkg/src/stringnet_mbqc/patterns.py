"""Measurement patterns for one gate cell and their Pauli-frame rules.

A wire's two virtual bonds (upper, lower) carry one logical qubit:
type I encodes ``|0_L> = |00>, |1_L> = |11>`` and type II encodes
``|0_L> = |01>, |1_L> = |10>``. In both types ``X_L = X (x) X`` and
``Z_L = Z (x) I``. The physical bond state is always
``Enc_tau X_L^v Z_L^r |psi>`` for the logical state ``psi`` the circuit
would hold; ``(v, r, tau)`` is the frame.

Every measured site acts on the bonds as a Pauli fixed by its role and
outcome (plus, for rotated bases, the target rotation), so the frame update
only has to XOR bits in.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import cos, sin

import numpy as np

from .errors import DecodingError, InvalidArgumentError
from .oracle import MeasurementBasis

ENCODINGS = ("I", "II")

# Order of roles along the operator sequence inside one cell.
ROLE_ORDER = ("a", "b", "c", "d", "e", "f", "h", "k", "j", "g", "i", "l")
X0_ROLES = ("a", "b", "c", "d", "e", "f")
HORIZONTAL_UPPER = ("b", "c", "h", "i")
HORIZONTAL_LOWER = ("e", "f", "k", "l")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class PauliFrame:
    v: int = 0
    r: int = 0
    encoding: str = "I"

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise InvalidArgumentError(f"encoding must be I or II, got {self.encoding!r}")

    @property
    def tau(self) -> int:
        return ENCODINGS.index(self.encoding)

    def apply(self, xu: int = 0, zu: int = 0, xl: int = 0, zl: int = 0) -> "PauliFrame":
        """Frame after the physical Pauli ``X^xu Z^zu (x) X^xl Z^zl`` hits the bonds."""
        return PauliFrame(self.v ^ xu, self.r ^ zu ^ zl, ENCODINGS[self.tau ^ xu ^ xl])

    def byproduct(self) -> np.ndarray:
        """Logical ``X^v Z^r``."""
        return np.linalg.matrix_power(_X, self.v) @ np.linalg.matrix_power(_Z, self.r)

    def to_json(self) -> dict:
        return {"v": self.v, "r": self.r, "encoding": self.encoding}


def couple_frames(upper: PauliFrame, lower: PauliFrame) -> tuple[PauliFrame, PauliFrame]:
    """Push a physical CZ between the upper wire's lower bond and the lower wire's upper bond.

    The physical gate is logical CZ times ``I (x) Z_L`` when the upper wire is
    type II; conjugating the byproducts through CZ adds ``Z`` on the partner.
    """
    return (
        replace(upper, r=upper.r ^ lower.v),
        replace(lower, r=lower.r ^ upper.v ^ upper.tau),
    )


def role_pauli(role: str, family: str, outcome: int) -> tuple[int, int, int, int]:
    """Physical Pauli ``(xu, zu, xl, zl)`` a measured role applies to its wire."""
    m = outcome
    if role == "a":
        return (m, 0, 0, 0) if family == "Z" else (0, 0, 0, 0)
    if role == "d":
        return (0, 0, m, 0) if family == "Z" else (0, 0, 0, 0)
    if role == "g":
        return (m, 0, m, 0)
    if role == "j":
        return (0, 0, 0, 0)
    if family == "Z":
        return (0, 0, 0, 0)
    if role in HORIZONTAL_UPPER:
        return (0, m, 0, 0)
    if role in HORIZONTAL_LOWER:
        return (0, 0, 0, m)
    raise InvalidArgumentError(f"unknown role {role!r}")


@dataclass(frozen=True)
class AngleRule:
    """Negate the base angle when ``frame.<bit>`` XOR the listed role outcomes is 1."""

    bit: str
    roles: tuple = ()

    def sign(self, frame: PauliFrame, outcomes: dict) -> int:
        flip = getattr(frame, self.bit)
        for role in self.roles:
            flip ^= outcomes[role]
        return -1 if flip else 1

    def to_json(self) -> dict:
        return {"negate_if": {"frame": self.bit, "xor_outcomes": list(self.roles)}}


@dataclass(frozen=True)
class GatePattern:
    """Role -> basis assignment for one cell.

    ``bases`` values are ``(family, theta)``; ``rules`` holds the adaptive
    sign of rotated roles. For ``CZCouple`` the assignment applies to both
    wires and ``couple`` names the (upper-wire role, lower-wire role) pair
    joined by the physical CZ.
    """

    kind: str
    bases: dict
    rules: dict = field(default_factory=dict)
    theta: float = 0.0
    couple: tuple | None = None

    def basis_for(self, role: str, frame: PauliFrame, outcomes: dict) -> MeasurementBasis:
        family, theta = self.bases[role]
        if role in self.rules:
            theta = self.rules[role].sign(frame, outcomes) * theta
        return MeasurementBasis(family, theta)

    def target(self) -> np.ndarray:
        t = self.theta
        if self.kind == "RotZ":
            return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
        if self.kind == "RotX":
            return cos(t / 2) * _I2 - 1j * sin(t / 2) * _X
        if self.kind == "CZCouple":
            return np.diag([1, 1, 1, -1]).astype(complex)
        return _I2.copy()

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "theta": self.theta,
            "bases": {
                role: {"family": fam, "theta": th, **(self.rules[role].to_json() if role in self.rules else {})}
                for role, (fam, th) in sorted(self.bases.items())
            },
        }
        if self.couple:
            out["couple"] = list(self.couple)
        return out


def _identity_bases() -> dict:
    bases = {r: ("X", 0.0) for r in HORIZONTAL_UPPER + HORIZONTAL_LOWER}
    bases.update({r: ("Z", 0.0) for r in ("a", "d", "g", "j")})
    return bases


def path_step() -> GatePattern:
    return GatePattern("PathStep", _identity_bases())


def rot_z(theta: float) -> GatePattern:
    bases = _identity_bases()
    bases["h"] = ("ZRot", float(theta))
    return GatePattern("RotZ", bases, {"h": AngleRule("v")}, theta=float(theta))


def rot_x(theta: float) -> GatePattern:
    bases = _identity_bases()
    bases["g"] = ("XRot", float(theta))
    bases["j"] = ("X", 0.0)
    return GatePattern("RotX", bases, {"g": AngleRule("r", ("j",))}, theta=float(theta))


def cz_couple() -> GatePattern:
    return GatePattern("CZCouple", _identity_bases(), couple=("f", "c"))


def init_leg() -> GatePattern:
    """Z on the rung (and on ``h``/``k`` where those legs exist) fixes the outgoing bonds."""
    bases = {"g": ("Z", 0.0), "j": ("Z", 0.0), "h": ("Z", 0.0), "k": ("Z", 0.0),
             "i": ("X", 0.0), "l": ("X", 0.0)}
    return GatePattern("Init", bases)


def readout() -> GatePattern:
    bases = {r: b for r, b in _identity_bases().items() if r in X0_ROLES}
    bases.update({r: ("Z", 0.0) for r in ("g", "h", "j", "k")})
    return GatePattern("Readout", bases)


def init_frame(outcomes: dict) -> PauliFrame:
    """Frame after the init pattern.

    The rung fixes both outgoing bonds to ``mu_g`` XOR the Z-measured in-leg
    (absent, i.e. 0, at the left terminal).
    """
    up = outcomes.get("h", 0) ^ outcomes["g"]
    lo = outcomes.get("k", 0) ^ outcomes.get("j", outcomes["g"])
    frame = PauliFrame(v=up, r=0, encoding=ENCODINGS[up ^ lo])
    for role in ("i", "l"):
        if role in outcomes:
            frame = frame.apply(*role_pauli(role, "X", outcomes[role]))
    return frame


def updates_frame(kind: str, role: str) -> bool:
    """Readout's terminal measurements feed the decoder, not the frame (no bond leaves the cell)."""
    return kind != "Readout" or role in X0_ROLES


def update_frame(frame: PauliFrame, pattern: GatePattern, outcomes: dict, roles=None) -> PauliFrame:
    """Apply the Pauli of every measured role (in ``roles`` or all present) to ``frame``."""
    for role in ROLE_ORDER:
        if role not in outcomes or (roles is not None and role not in roles):
            continue
        if not updates_frame(pattern.kind, role):
            continue
        family = pattern.bases[role][0]
        frame = frame.apply(*role_pauli(role, family, outcomes[role]))
    return frame


def frame_before(frame: PauliFrame, pattern: GatePattern, outcomes: dict, role: str) -> PauliFrame:
    """Frame at the position of ``role`` (effects of earlier roles only)."""
    earlier = ROLE_ORDER[: ROLE_ORDER.index(role)]
    return update_frame(frame, pattern, outcomes, roles=earlier)


def decode(frame: PauliFrame, upper_bit: int, lower_bit: int) -> int:
    """Logical readout bit from the Z outcomes on the upper and lower in-bonds."""
    if upper_bit ^ lower_bit != frame.tau:
        raise DecodingError(
            f"bits ({upper_bit}, {lower_bit}) inconsistent with encoding {frame.encoding}"
        )
    return upper_bit ^ frame.v


def encoding_isometry(encoding: str) -> np.ndarray:
    """4x2 map from logical amplitudes to (upper, lower) bond amplitudes."""
    enc = np.zeros((4, 2), dtype=complex)
    flip = ENCODINGS.index(encoding)
    for bit in (0, 1):
        enc[2 * bit + (bit ^ flip), bit] = 1.0
    return enc


def operator_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|tr(A^dag B)| / (||A|| ||B||)``: 1 iff proportional."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(a, b)) / (na * nb))
