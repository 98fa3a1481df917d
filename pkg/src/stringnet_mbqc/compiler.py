"""Circuit IR parsing and compilation to a measurement schedule."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .errors import CapacityError, InvalidArgumentError, ParseError, SemanticError
from .lattice import LatticePatch, build_patch, cell_map, prologue_cell, wire_cell
from .patterns import (
    ROLE_ORDER,
    X0_ROLES,
    GatePattern,
    cz_couple,
    init_leg,
    path_step,
    readout,
    rot_x,
    rot_z,
)

MODES = ("live", "precoupled")
_MODE_ALIASES = {"live": "live", "live-cz": "live", "precoupled": "precoupled"}
MAX_PRECOUPLED_WIRES = 2

# -- circuit IR ----------------------------------------------------------------

_ARITY = {"rz": (1, True), "rx": (1, True), "cz": (2, False), "id": (1, False)}


@dataclass(frozen=True)
class Gate:
    kind: str
    wires: tuple
    theta: float | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "wires": list(self.wires)}
        if self.theta is not None:
            out["theta"] = self.theta
        return out


@dataclass(frozen=True)
class CircuitIR:
    wire_count: int
    gates: tuple = ()

    def __post_init__(self):
        if self.wire_count < 1:
            raise InvalidArgumentError("a circuit needs at least one wire")
        for g in self.gates:
            if g.kind not in _ARITY:
                raise InvalidArgumentError(f"unknown gate {g.kind!r}")
            for w in g.wires:
                if not 0 <= w < self.wire_count:
                    raise InvalidArgumentError(f"wire {w} out of range")
            if g.kind == "cz" and abs(g.wires[0] - g.wires[1]) != 1:
                raise InvalidArgumentError(f"cz needs adjacent wires, got {g.wires}")
            if g.theta is not None and not math.isfinite(g.theta):
                raise InvalidArgumentError("angles must be finite")

    @property
    def cz_count(self) -> int:
        return sum(g.kind == "cz" for g in self.gates)

    def to_json(self) -> dict:
        return {"wires": self.wire_count, "gates": [g.to_json() for g in self.gates]}


_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_ANGLE = re.compile(
    rf"^(?P<sign>[-+]?)(?:(?P<coef>{_NUMBER})\*?)?(?P<pi>pi)?(?:/(?P<den>{_NUMBER}))?$"
)


def parse_angle(text: str) -> float:
    """Decimal radians or a multiple of pi such as ``pi/4``, ``-3pi/8``, ``0.5*pi``."""
    m = _ANGLE.match(text)
    if not m or (m["coef"] is None and m["pi"] is None):
        raise ValueError(f"malformed angle {text!r}")
    if m["pi"] is None and "*" in text:
        raise ValueError(f"malformed angle {text!r}")
    value = float(m["coef"]) if m["coef"] is not None else 1.0
    if m["pi"]:
        value = value * math.pi
    if m["den"] is not None:
        den = float(m["den"])
        if den == 0:
            raise ValueError("division by zero in angle")
        value = value / den
    if m["sign"] == "-":
        value = -value
    if not math.isfinite(value):
        raise ValueError(f"angle {text!r} is not finite")
    return value


def format_angle(theta: float) -> str:
    """Shortest text that parses back to exactly ``theta``."""
    if theta == 0:
        return "0"
    for den in (1, 2, 3, 4, 6, 8, 12, 16):
        num = round(theta * den / math.pi)
        if num == 0:
            continue
        text = ("-" if num < 0 else "") + (f"{abs(num)}*pi" if abs(num) != 1 else "pi")
        if den != 1:
            text += f"/{den}"
        if parse_angle(text) == theta:
            return text
    return repr(float(theta))


def _tokens(line: str):
    """(column, token) pairs with 1-based columns, stopping at ``#``."""
    return [(m.start() + 1, m.group()) for m in re.finditer(r"[^\s#]+|#", line)]


def _wire_index(tok: str, line: int, col: int, wire_count: int | None) -> int:
    if not re.fullmatch(r"\d+", tok):
        raise ParseError(f"expected a wire index, got {tok!r}", line, col)
    w = int(tok)
    if wire_count is not None and w >= wire_count:
        raise ParseError(f"wire {w} out of range 0..{wire_count - 1}", line, col)
    return w


def parse_circuit(text: str) -> CircuitIR:
    wire_count = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(raw)
        if toks and toks[0][1] == "#":
            continue
        toks = toks[: next((i for i, (_, t) in enumerate(toks) if t == "#"), len(toks))]
        if not toks:
            continue
        col, head = toks[0]
        args = toks[1:]
        if head == "wires":
            if wire_count is not None:
                raise ParseError("duplicate wires declaration", lineno, col)
            if gates:
                raise ParseError("wires must come before any gate", lineno, col)
            if len(args) != 1:
                raise ParseError("wires takes exactly one count", lineno, col)
            acol, atok = args[0]
            if not re.fullmatch(r"\d+", atok) or int(atok) < 1:
                raise ParseError(f"wire count must be a positive integer, got {atok!r}", lineno, acol)
            wire_count = int(atok)
            continue
        if head not in _ARITY:
            raise ParseError(f"unknown mnemonic {head!r}", lineno, col)
        if wire_count is None:
            raise ParseError("missing 'wires N' before first gate", lineno, col)
        n_wires, has_angle = _ARITY[head]
        expected = n_wires + int(has_angle)
        if len(args) != expected:
            where = args[expected][0] if len(args) > expected else col
            raise ParseError(f"{head} takes {expected} operand(s), got {len(args)}", lineno, where)
        wires = tuple(_wire_index(t, lineno, c, wire_count) for c, t in args[:n_wires])
        theta = None
        if has_angle:
            acol, atok = args[-1]
            try:
                theta = parse_angle(atok)
            except ValueError as exc:
                raise ParseError(str(exc), lineno, acol) from None
        if head == "cz":
            a, b = wires
            if abs(a - b) != 1:
                raise SemanticError(f"cz needs vertically adjacent wires, got {a} and {b}", lineno, args[1][0])
        gates.append(Gate(head, wires, theta))
    if wire_count is None:
        raise ParseError("empty program: missing 'wires N'", 1, 1)
    return CircuitIR(wire_count, tuple(gates))


def print_circuit(ir: CircuitIR) -> str:
    lines = [f"wires {ir.wire_count}"]
    for g in ir.gates:
        parts = [g.kind, *map(str, g.wires)]
        if g.theta is not None:
            parts.append(format_angle(g.theta))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# -- schedule ------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleEntry:
    """One schedule step.

    ``measure`` entries carry a site, its basis and an optional angle rule
    ``{"frame": "v"|"r", "wire": w, "xor_sites": [...]}`` that negates theta.
    ``cz`` entries are physical two-qubit gates (live mode only).
    ``couple`` entries update the frames of two wires after a CZ coupling.
    """

    kind: str
    cell: int
    wire: int | None = None
    role: str | None = None
    site: int | None = None
    basis: str | None = None
    theta: float = 0.0
    angle_rule: dict | None = None
    sites: tuple = ()
    wires: tuple = ()
    pattern: str = ""

    def to_json(self) -> dict:
        out = {"kind": self.kind, "cell": self.cell, "pattern": self.pattern}
        if self.kind == "measure":
            out.update(
                site=self.site, wire=self.wire, role=self.role,
                basis={"family": self.basis, "theta": self.theta},
                angle_rule=self.angle_rule,
            )
        elif self.kind == "cz":
            out.update(sites=list(self.sites), wires=list(self.wires))
        else:
            out.update(wires=list(self.wires))
        return out


@dataclass(frozen=True)
class MeasurementSchedule:
    mode: str
    patch_dims: tuple
    logical_wires: int
    prologue: tuple
    entries: tuple
    epilogue: tuple
    precoupling: tuple = ()
    layout: tuple = field(default=())

    @property
    def all_entries(self) -> tuple:
        return self.prologue + self.entries

    @property
    def two_qubit_count(self) -> int:
        return sum(e.kind == "cz" for e in self.all_entries)

    @property
    def measured_sites(self) -> list[int]:
        return [e.site for e in self.all_entries if e.kind == "measure"]

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "patch": {"rows": self.patch_dims[0], "cols": self.patch_dims[1]},
            "logical_wires": self.logical_wires,
            "precoupling": [list(p) for p in self.precoupling],
            "layout": [list(c) for c in self.layout],
            "prologue": [e.to_json() for e in self.prologue],
            "entries": [e.to_json() for e in self.entries],
            "epilogue": [dict(d) for d in self.epilogue],
        }


_BASIS_SCHEMA = {
    "type": "object",
    "required": ["family", "theta"],
    "properties": {"family": {"enum": ["Z", "X", "ZRot", "XRot"]}, "theta": {"type": "number"}},
}
_RULE_SCHEMA = {
    "oneOf": [
        {"type": "null"},
        {
            "type": "object",
            "required": ["frame", "wire", "xor_sites"],
            "properties": {
                "frame": {"enum": ["v", "r"]},
                "wire": {"type": "integer", "minimum": 0},
                "xor_sites": {"type": "array", "items": {"type": "integer"}},
            },
        },
    ]
}
_ENTRY_SCHEMA = {
    "type": "object",
    "required": ["kind", "cell", "pattern"],
    "properties": {
        "kind": {"enum": ["measure", "cz", "couple"]},
        "cell": {"type": "integer", "minimum": -1},
        "pattern": {"type": "string"},
        "site": {"type": "integer", "minimum": 0},
        "wire": {"type": "integer", "minimum": 0},
        "role": {"type": "string"},
        "basis": _BASIS_SCHEMA,
        "angle_rule": _RULE_SCHEMA,
        "sites": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "wires": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "measure"}}},
         "then": {"required": ["site", "wire", "role", "basis", "angle_rule"]}},
        {"if": {"properties": {"kind": {"const": "cz"}}}, "then": {"required": ["sites", "wires"]}},
        {"if": {"properties": {"kind": {"const": "couple"}}}, "then": {"required": ["wires"]}},
    ],
}
SCHEDULE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["mode", "patch", "logical_wires", "precoupling", "prologue", "entries", "epilogue"],
    "properties": {
        "mode": {"enum": list(MODES)},
        "patch": {
            "type": "object",
            "required": ["rows", "cols"],
            "properties": {"rows": {"type": "integer", "minimum": 1}, "cols": {"type": "integer", "minimum": 1}},
        },
        "logical_wires": {"type": "integer", "minimum": 1},
        "precoupling": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "layout": {"type": "array"},
        "prologue": {"type": "array", "items": _ENTRY_SCHEMA},
        "entries": {"type": "array", "items": _ENTRY_SCHEMA},
        "epilogue": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["wire", "upper_site", "lower_site"],
                "properties": {
                    "wire": {"type": "integer"},
                    "upper_site": {"type": "integer"},
                    "lower_site": {"type": "integer"},
                },
            },
        },
    },
}


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode.lower()]
    except (KeyError, AttributeError):
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}") from None


def _gate_pattern(gate) -> GatePattern:
    if gate.kind == "rz":
        return rot_z(gate.theta)
    if gate.kind == "rx":
        return rot_x(gate.theta)
    return path_step()


class _Frontier:
    """Gates whose predecessors on every wire they touch are already placed."""

    def __init__(self, ir: CircuitIR):
        self.gates = list(ir.gates)
        self.done = [False] * len(self.gates)
        self.wire_count = ir.wire_count

    def __bool__(self) -> bool:
        return not all(self.done)

    def _head(self, w: int) -> int | None:
        for i, g in enumerate(self.gates):
            if not self.done[i] and w in g.wires:
                return i
        return None

    def ready_single(self, kinds=("rz", "rx", "id")) -> dict:
        out = {}
        for w in range(self.wire_count):
            i = self._head(w)
            if i is not None and self.gates[i].kind in kinds:
                out[w] = i
        return out

    def ready_cz(self) -> int | None:
        for w in range(self.wire_count - 1):
            i = self._head(w)
            if i is not None and self.gates[i].kind == "cz" and self._head(w + 1) == i:
                return i
        return None

    def take(self, indices) -> list:
        for i in indices:
            self.done[i] = True
        return [self.gates[i] for i in sorted(indices)]


def _plan_live(ir: CircuitIR) -> list[dict]:
    """ASAP layering: single-wire gates in parallel, else one ready CZ."""
    plan = []
    front = _Frontier(ir)
    while front:
        single = front.ready_single()
        if single:
            plan.append({"gates": front.take(single.values()), "cz": None, "placed": False})
            continue
        i = front.ready_cz()
        gate = front.take([i])[0]
        plan.append({"gates": [], "cz": gate.wires, "placed": False})
    return plan


def _plan_precoupled(ir: CircuitIR, placements: bool) -> list[dict]:
    """Layering driven by the pending-CZ state machine.

    Every gate cell carries a pre-placed logical CZ. A ``cz`` gate consumes
    it. Otherwise the placement is unwanted and the next cell's placement
    cancels it; in between only gates commuting with CZ (``rz``) may run.
    """
    if not placements:
        return _plan_live(ir)
    plan = []
    pending = 0
    front = _Frontier(ir)
    while front:
        if pending:
            single = front.ready_single()
            plan.append({"gates": front.take(single.values()), "cz": (0, 1), "placed": True})
            pending = 0
            continue
        i = front.ready_cz()
        if i is not None:
            front.take([i])
            plan.append({"gates": [], "cz": (0, 1), "placed": True})
            continue
        diagonal = front.ready_single(kinds=("rz",))
        plan.append({"gates": front.take(diagonal.values()), "cz": (0, 1), "placed": True})
        pending = 1
    if pending:
        plan.append({"gates": [], "cz": (0, 1), "placed": True})
    return plan


def required_cells(ir: CircuitIR, mode: str) -> int:
    mode = normalize_mode(mode)
    placements = mode == "precoupled" and ir.wire_count == 2
    plan = _plan_precoupled(ir, placements) if mode == "precoupled" else _plan_live(ir)
    return len(plan) + 1


def patch_for(ir: CircuitIR, mode: str = "live") -> LatticePatch:
    """Smallest patch that hosts ``ir`` in ``mode``."""
    return build_patch(ir.wire_count, required_cells(ir, mode))


def precoupling_pairs(patch: LatticePatch) -> list[tuple[int, int]]:
    """Physical CZ placements of the precoupled resource: one per gate cell."""
    if patch.wires > MAX_PRECOUPLED_WIRES:
        raise InvalidArgumentError(
            f"precoupled resources support at most {MAX_PRECOUPLED_WIRES} wires, patch has {patch.wires}"
        )
    if patch.wires < 2:
        return []
    up, lo = cz_couple().couple
    pairs = []
    for t in range(patch.cells - 1):
        a = cell_map(wire_cell(patch, 0, t))[up]
        b = cell_map(wire_cell(patch, 1, t))[lo]
        pairs.append((a, b))
    return pairs


def _measure_entry(pattern: GatePattern, role: str, site: int, wire: int, cell: int, roles: dict) -> ScheduleEntry:
    family, theta = pattern.bases[role]
    rule = None
    if role in pattern.rules:
        r = pattern.rules[role]
        rule = {"frame": r.bit, "wire": wire, "xor_sites": [roles[x] for x in r.roles]}
    return ScheduleEntry(
        "measure", cell, wire=wire, role=role, site=site, basis=family,
        theta=theta, angle_rule=rule, pattern=pattern.kind,
    )


def compile_circuit(ir: CircuitIR, patch: LatticePatch, mode: str = "live") -> MeasurementSchedule:
    mode = normalize_mode(mode)
    if patch.wires < ir.wire_count:
        raise CapacityError(f"circuit needs {ir.wire_count} wires, patch has {patch.wires}")
    placements = []
    if mode == "precoupled":
        if ir.wire_count > MAX_PRECOUPLED_WIRES:
            raise CapacityError(f"precoupled mode supports at most {MAX_PRECOUPLED_WIRES} wires")
        placements = precoupling_pairs(patch)
        plan = _plan_precoupled(ir, bool(placements))
    else:
        plan = _plan_live(ir)
    if len(plan) + 1 > patch.cells:
        raise CapacityError(f"circuit needs {len(plan) + 1} cells, patch has {patch.cells}")
    # Cells past the plan still carry placements; they are identity steps.
    plan += [{"gates": [], "cz": (0, 1) if placements else None, "placed": bool(placements)}
             for _ in range(patch.cells - 1 - len(plan))]

    wires = range(patch.wires)
    prologue = []
    init = init_leg()
    for w in wires:
        roles = cell_map(prologue_cell(patch, w))
        for role in ("g", "j", "i", "l"):
            prologue.append(_measure_entry(init, role, roles[role], w, -1, roles))

    entries = []
    layout = []
    for t, item in enumerate(plan):
        per_wire = {w: path_step() for w in wires}
        cz = item["cz"]
        if cz is not None:
            upper = min(cz)
            for w in (upper, upper + 1):
                per_wire[w] = cz_couple()
        # A rotation may share its cell with a placement; the x0 bases agree.
        for gate in item["gates"]:
            per_wire[gate.wires[0]] = _gate_pattern(gate)
        layout.append(tuple(per_wire[w].kind for w in wires))
        cells = {w: cell_map(wire_cell(patch, w, t)) for w in wires}
        if cz is not None and not item["placed"]:
            up, lo = cz_couple().couple
            upper = min(cz)
            entries.append(ScheduleEntry(
                "cz", t, sites=(cells[upper][up], cells[upper + 1][lo]),
                wires=(upper, upper + 1), pattern="CZCouple",
            ))
        for w in wires:
            for role in X0_ROLES:
                if role in cells[w]:
                    entries.append(_measure_entry(per_wire[w], role, cells[w][role], w, t, cells[w]))
        if cz is not None:
            upper = min(cz)
            entries.append(ScheduleEntry("couple", t, wires=(upper, upper + 1), pattern="CZCouple"))
        for w in wires:
            for role in ROLE_ORDER:
                if role not in X0_ROLES and role in cells[w]:
                    entries.append(_measure_entry(per_wire[w], role, cells[w][role], w, t, cells[w]))

    t = patch.cells - 1
    ro = readout()
    epilogue = []
    for w in wires:
        cells = cell_map(wire_cell(patch, w, t))
        for role in ROLE_ORDER:
            if role in cells:
                entries.append(_measure_entry(ro, role, cells[role], w, t, cells))
        epilogue.append({"wire": w, "upper_site": cells["h"], "lower_site": cells["k"]})
    layout.append(tuple("Readout" for _ in wires))

    schedule = MeasurementSchedule(
        mode=mode,
        patch_dims=(patch.wires, patch.cells),
        logical_wires=ir.wire_count,
        prologue=tuple(prologue),
        entries=tuple(entries),
        epilogue=tuple(epilogue),
        precoupling=tuple(placements),
        layout=tuple(layout),
    )
    check_schedule(schedule, patch)
    return schedule


def check_schedule(schedule: MeasurementSchedule, patch: LatticePatch | None = None) -> None:
    """Raise unless every site is measured once and every rule looks only backwards."""
    seen = set()
    for idx, e in enumerate(schedule.all_entries):
        if e.kind == "measure":
            if e.site in seen:
                raise InvalidArgumentError(f"site {e.site} measured twice (entry {idx})")
            if e.angle_rule:
                for s in e.angle_rule["xor_sites"]:
                    if s not in seen:
                        raise InvalidArgumentError(f"entry {idx} reads site {s} before it is measured")
            seen.add(e.site)
        elif e.kind == "cz":
            if any(s in seen for s in e.sites):
                raise InvalidArgumentError(f"cz on already measured site (entry {idx})")
    for d in schedule.epilogue:
        for key in ("upper_site", "lower_site"):
            if d[key] not in seen:
                raise InvalidArgumentError(f"readout site {d[key]} never measured")
    if patch is not None and len(seen) != patch.qubit_count:
        raise InvalidArgumentError(f"schedule measures {len(seen)} of {patch.qubit_count} qubits")


def _fmt_entry(e: ScheduleEntry) -> str:
    if e.kind == "cz":
        return f"  cz    {e.sites[0]:>4} {e.sites[1]:>4}   wires {e.wires[0]},{e.wires[1]}"
    if e.kind == "couple":
        return f"  frame couple wires {e.wires[0]},{e.wires[1]}"
    basis = e.basis if e.basis in ("Z", "X") else f"{e.basis}({format_angle(e.theta)})"
    line = f"  meas  {e.site:>4}  w{e.wire} {e.role}  {basis}"
    if e.angle_rule:
        rule = e.angle_rule
        cond = f"{rule['frame']}[w{rule['wire']}]" + "".join(f"^m{s}" for s in rule["xor_sites"])
        line += f"  negate if {cond}"
    return line


def print_schedule(schedule: MeasurementSchedule, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(schedule.to_json(), indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise InvalidArgumentError(f"format must be text or json, got {fmt!r}")
    rows, cols = schedule.patch_dims
    out = [f"schedule mode={schedule.mode} patch={rows}x{cols} logical_wires={schedule.logical_wires}"]
    if schedule.precoupling:
        out.append("precoupled cz " + " ".join(f"{a}-{b}" for a, b in schedule.precoupling))
    out.append("prologue")
    out += [_fmt_entry(e) for e in schedule.prologue]
    cell = None
    for e in schedule.entries:
        if e.cell != cell:
            cell = e.cell
            out.append(f"cell {cell}  [{' '.join(schedule.layout[cell])}]")
        out.append(_fmt_entry(e))
    out.append("epilogue")
    for d in schedule.epilogue:
        out.append(f"  decode w{d['wire']} from m{d['upper_site']} m{d['lower_site']}")
    return "\n".join(out) + "\n"
