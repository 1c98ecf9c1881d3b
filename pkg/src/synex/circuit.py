"""Flat stabilizer-circuit IR, noise insertion, and text (de)serialization.

The text format is the common stabilizer-circuit grammar restricted to the
instruction subset this package emits, so external tools can be used as
oracles on the same files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

GATE_KINDS = {"R", "RX", "H", "CX", "M", "MX"}
NOISE_KINDS = {"DEPOLARIZE1", "DEPOLARIZE2"}
ANNOTATION_KINDS = {"DETECTOR", "OBSERVABLE_INCLUDE", "QUBIT_COORDS",
                    "SHIFT_COORDS", "TICK"}
ALL_KINDS = GATE_KINDS | NOISE_KINDS | ANNOTATION_KINDS
TWO_QUBIT_KINDS = {"CX", "DEPOLARIZE2"}
MEASURE_KINDS = {"M", "MX"}


@dataclass(frozen=True)
class Instruction:
    kind: str
    targets: tuple[int, ...] = ()  # qubit ids, or rec offsets (< 0) for annotations
    args: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise CircuitError(f"unknown instruction kind {self.kind!r}")
        if self.kind in TWO_QUBIT_KINDS and len(self.targets) % 2:
            raise CircuitError(f"{self.kind} needs target pairs")
        if self.kind in NOISE_KINDS:
            if len(self.args) != 1 or not (0 < self.args[0] < 1):
                raise CircuitError(f"{self.kind} needs a probability in (0, 1)")


class CircuitError(ValueError):
    pass


@dataclass
class CircuitParseError(CircuitError):
    line: int
    col: int
    message: str

    def __str__(self):
        return f"line {self.line}, col {self.col}: {self.message}"


@dataclass
class Circuit:
    instructions: list[Instruction] = field(default_factory=list)

    @property
    def num_qubits(self) -> int:
        qs = [max(i.targets, default=-1) for i in self.instructions
              if i.kind in GATE_KINDS | NOISE_KINDS | {"QUBIT_COORDS"}]
        return max(qs, default=-1) + 1

    @property
    def num_measurements(self) -> int:
        return sum(len(i.targets) for i in self.instructions
                   if i.kind in MEASURE_KINDS)

    @property
    def num_detectors(self) -> int:
        return sum(1 for i in self.instructions if i.kind == "DETECTOR")

    @property
    def num_observables(self) -> int:
        idx = [int(i.args[0]) for i in self.instructions
               if i.kind == "OBSERVABLE_INCLUDE"]
        return max(idx, default=-1) + 1

    def qubit_coords(self) -> dict[int, tuple[float, ...]]:
        return {i.targets[0]: i.args for i in self.instructions
                if i.kind == "QUBIT_COORDS"}

    def validate(self) -> None:
        """Offsets must resolve and no TICK layer may reuse a qubit in gates."""
        seen = 0
        busy: set[int] = set()
        for ins in self.instructions:
            if ins.kind == "TICK":
                busy.clear()
            elif ins.kind in GATE_KINDS:
                for q in ins.targets:
                    if q in busy:
                        raise CircuitError(f"qubit {q} reused inside a layer")
                    busy.add(q)
            if ins.kind in MEASURE_KINDS:
                seen += len(ins.targets)
            if ins.kind in ("DETECTOR", "OBSERVABLE_INCLUDE"):
                for t in ins.targets:
                    if t >= 0 or seen + t < 0:
                        raise CircuitError(
                            f"record offset {t} does not resolve "
                            f"({seen} measurements so far)")

    def without_noise(self) -> "Circuit":
        return Circuit([i for i in self.instructions
                        if i.kind not in NOISE_KINDS])

    def __eq__(self, other):
        return isinstance(other, Circuit) and self.instructions == other.instructions


def _fmt_arg(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return repr(v)


def serialize(circuit: Circuit) -> str:
    lines = []
    for ins in circuit.instructions:
        name = ins.kind
        if ins.args:
            name += "(" + ", ".join(_fmt_arg(a) for a in ins.args) + ")"
        if ins.kind in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            tgts = " ".join(f"rec[{t}]" for t in ins.targets)
        else:
            tgts = " ".join(str(t) for t in ins.targets)
        lines.append((name + " " + tgts).rstrip())
    return "\n".join(lines) + "\n"


def parse(text: str) -> Circuit:
    instructions = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        body = line.strip()
        name, _, rest = body.partition(" ")
        args: tuple[float, ...] = ()
        if "(" in name:
            if not name.endswith(")"):
                raise CircuitParseError(ln, col, f"malformed arguments in {name!r}")
            base, argtext = name[:-1].split("(", 1)
            try:
                args = tuple(float(a) for a in argtext.split(",") if a.strip())
            except ValueError:
                raise CircuitParseError(ln, col, f"bad argument list {argtext!r}")
            name = base
        if name not in ALL_KINDS:
            raise CircuitParseError(ln, col, f"unknown instruction {name!r}")
        targets = []
        for tok in rest.split():
            tcol = line.index(tok) + 1
            if tok.startswith("rec[") and tok.endswith("]"):
                try:
                    off = int(tok[4:-1])
                except ValueError:
                    raise CircuitParseError(ln, tcol, f"bad record target {tok!r}")
                if off >= 0:
                    raise CircuitParseError(ln, tcol, "record offsets must be negative")
                targets.append(off)
            else:
                try:
                    q = int(tok)
                except ValueError:
                    raise CircuitParseError(ln, tcol, f"bad target {tok!r}")
                if q < 0:
                    raise CircuitParseError(ln, tcol, "qubit targets must be >= 0")
                targets.append(q)
        try:
            instructions.append(Instruction(name, tuple(targets), args))
        except CircuitError as e:
            raise CircuitParseError(ln, col, str(e))
    c = Circuit(instructions)
    c.validate()
    return c


def lower(plan, p: float, noise: str = "all-ops") -> Circuit:
    """Lower a schedule plan to a flat circuit with depolarizing noise.

    ``all-ops`` (default) treats measurement and reset as noisy single-qubit
    operations: DEPOLARIZE1 after each reset and Hadamard and before each
    measurement, DEPOLARIZE2 after each CX pair.  ``gates-only`` restricts
    noise to H and CX.
    """
    if not (0 <= p < 1):
        raise CircuitError(f"noise strength must be in [0, 1), got {p}")
    if noise not in ("all-ops", "gates-only"):
        raise CircuitError(f"unknown noise placement {noise!r}")
    ins: list[Instruction] = []
    qubits = plan.qubit_order
    index = {q: i for i, q in enumerate(qubits)}
    for q in qubits:
        ins.append(Instruction("QUBIT_COORDS", (index[q],),
                               (q[0] / 2, q[1] / 2)))

    def depol1(qs):
        if p > 0 and qs:
            ins.append(Instruction("DEPOLARIZE1", tuple(qs), (p,)))

    emitted = 0
    det_cursor = 0
    dets = sorted(plan.detector_defs, key=lambda d: max(d.records))
    for step in plan.steps():
        kind, qs = step
        qs_idx = tuple(index[q] for q in qs)
        if kind == "TICK":
            ins.append(Instruction("TICK"))
            continue
        if kind in ("R", "RX", "H"):
            if qs_idx:
                ins.append(Instruction(kind, qs_idx))
                if kind == "H" or noise == "all-ops":
                    depol1(qs_idx)
            continue
        if kind == "CX":
            if qs_idx:
                ins.append(Instruction("CX", qs_idx))
                if p > 0:
                    ins.append(Instruction("DEPOLARIZE2", qs_idx, (p,)))
            continue
        if kind in ("M", "MX"):
            if noise == "all-ops":
                depol1(qs_idx)
            ins.append(Instruction(kind, qs_idx))
            emitted += len(qs_idx)
            while det_cursor < len(dets) and max(dets[det_cursor].records) < emitted:
                d = dets[det_cursor]
                ins.append(Instruction(
                    "DETECTOR", tuple(r - emitted for r in sorted(d.records)),
                    (d.coord[0] / 2, d.coord[1] / 2, float(d.round))))
                det_cursor += 1
            continue
        raise CircuitError(f"unknown plan step {kind!r}")
    assert det_cursor == len(dets), "detector records exceed measurement count"
    for oi, obs in enumerate(plan.observable_defs):
        ins.append(Instruction(
            "OBSERVABLE_INCLUDE",
            tuple(r - emitted for r in sorted(obs.records)), (float(oi),)))
    c = Circuit(ins)
    c.validate()
    return c
