"""Sparse Pauli algebra, stabilizer-flow analysis, and frame sampling.

The Tableau class is a destabilizer/stabilizer tableau that additionally
tags every stabilizer row with the set of measurement records its sign
depends on.  Deterministic measurement outcomes therefore come back with the
exact record set they are correlated with, which is how detector definitions
are derived and how detectors are checked for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Instruction, MEASURE_KINDS, NOISE_KINDS

_XZ = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PAULI = {(1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


class PauliString:
    """Sign-free sparse Pauli operator over integer qubit ids."""

    __slots__ = ("xbits", "zbits")

    def __init__(self, terms: dict[int, str] | None = None, *, xbits: int = 0,
                 zbits: int = 0):
        self.xbits = xbits
        self.zbits = zbits
        if terms:
            for q, p in terms.items():
                x, z = _XZ[p]
                if x:
                    self.xbits |= 1 << q
                if z:
                    self.zbits |= 1 << q

    def get(self, q: int) -> str | None:
        key = (self.xbits >> q & 1, self.zbits >> q & 1)
        return _PAULI.get(key)

    def items(self):
        bits = self.xbits | self.zbits
        q = 0
        while bits:
            if bits & 1:
                yield q, self.get(q)
            bits >>= 1
            q += 1

    @property
    def weight(self) -> int:
        return (self.xbits | self.zbits).bit_count()

    def __bool__(self):
        return bool(self.xbits | self.zbits)

    def __eq__(self, other):
        return (isinstance(other, PauliString)
                and self.xbits == other.xbits and self.zbits == other.zbits)

    def __hash__(self):
        return hash((self.xbits, self.zbits))

    def __mul__(self, other: "PauliString") -> "PauliString":
        return PauliString(xbits=self.xbits ^ other.xbits,
                           zbits=self.zbits ^ other.zbits)

    def commutes_with(self, other: "PauliString") -> bool:
        return ((self.xbits & other.zbits).bit_count()
                + (self.zbits & other.xbits).bit_count()) % 2 == 0

    def __repr__(self):
        return "PauliString({" + ", ".join(
            f"{q}: {p!r}" for q, p in self.items()) + "})"


def conjugate(p: PauliString, gate: str, targets: tuple[int, ...]) -> PauliString:
    """Propagate a sign-free Pauli through a Clifford operation.

    RESET projects away the targeted qubits; MEASURE leaves the frame alone.
    """
    x, z = p.xbits, p.zbits
    if gate == "H":
        for q in targets:
            m = 1 << q
            xb, zb = x & m, z & m
            x = (x & ~m) | zb
            z = (z & ~m) | xb
    elif gate == "CX":
        for c, t in zip(targets[0::2], targets[1::2]):
            if x >> c & 1:
                x ^= 1 << t
            if z >> t & 1:
                z ^= 1 << c
    elif gate in ("R", "RX", "RESET"):
        for q in targets:
            m = ~(1 << q)
            x &= m
            z &= m
    elif gate in ("M", "MX", "MEASURE"):
        pass
    else:
        raise ValueError(f"cannot conjugate through {gate!r}")
    return PauliString(xbits=x, zbits=z)


# ---------------------------------------------------------------------------
# Destabilizer tableau with record masks


class Tableau:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.mask = [0] * (2 * n)
        for i in range(n):
            self.x[i, i] = True          # destabilizer X_i
            self.z[n + i, i] = True      # stabilizer Z_i

    # -- gates ------------------------------------------------------------

    def h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def cx(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    # -- internals ----------------------------------------------------------

    def _g_sum(self, x1, z1, x2, z2) -> int:
        x1 = x1.astype(np.int8)
        z1 = z1.astype(np.int8)
        x2 = x2.astype(np.int8)
        z2 = z2.astype(np.int8)
        g = (x1 * z1 * (z2 - x2)
             + x1 * (1 - z1) * z2 * (2 * x2 - 1)
             + (1 - x1) * z1 * x2 * (1 - 2 * z2))
        return int(g.sum())

    def _rowsum(self, h: int, i: int) -> None:
        phase = 2 * int(self.r[h]) + 2 * int(self.r[i]) + self._g_sum(
            self.x[i], self.z[i], self.x[h], self.z[h])
        self.r[h] = (phase % 4) // 2
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]
        self.mask[h] ^= self.mask[i]

    def _scratch_accumulate(self, rows) -> tuple[np.ndarray, np.ndarray, int, int]:
        xs = np.zeros(self.n, dtype=bool)
        zs = np.zeros(self.n, dtype=bool)
        phase = 0
        mask = 0
        for i in rows:
            phase = (phase + 2 * int(self.r[i])
                     + self._g_sum(self.x[i], self.z[i], xs, zs)) % 4
            xs ^= self.x[i]
            zs ^= self.z[i]
            mask ^= self.mask[i]
        return xs, zs, phase // 2, mask

    # -- measurement and reset ---------------------------------------------

    def measure_z(self, q: int, record: int | None) -> tuple[bool, int, int]:
        """Measure Z_q.  Returns (deterministic, sign, mask).

        For a random outcome the mask is {record}; for deterministic outcomes
        the outcome value equals sign XOR parity(records in mask).
        """
        n = self.n
        stab_hits = np.nonzero(self.x[n:, q])[0]
        if stab_hits.size:
            p = n + int(stab_hits[0])
            for i in np.nonzero(self.x[:, q])[0]:
                if int(i) != p:
                    self._rowsum(int(i), p)
            # old stabilizer becomes the destabilizer of the new Z_q row
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.mask[p - n] = 0
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            self.r[p] = 0
            self.mask[p] = (1 << record) if record is not None else 0
            return False, 0, self.mask[p]
        destab_hits = [int(i) for i in np.nonzero(self.x[:n, q])[0]]
        xs, zs, sign, mask = self._scratch_accumulate(n + np.array(destab_hits))
        assert not xs.any() and zs.sum() == 1 and zs[q], "scratch is not Z_q"
        if record is not None and destab_hits:
            # re-anchor: make Z_q itself a generator tagged with this record,
            # so later rounds reference it instead of the whole history
            j = n + destab_hits[-1]
            for i in destab_hits[:-1]:
                self._rowsum(i, destab_hits[-1])
            self.x[j] = False
            self.z[j] = False
            self.z[j, q] = True
            self.r[j] = 0
            self.mask[j] = 1 << record
        return True, sign, mask

    def reset_z(self, q: int) -> None:
        n = self.n
        stab_hits = np.nonzero(self.x[n:, q])[0]
        if stab_hits.size:
            p = n + int(stab_hits[0])
            for i in np.nonzero(self.x[:, q])[0]:
                if int(i) != p:
                    self._rowsum(int(i), p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.mask[p - n] = 0
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            self.r[p] = 0
            self.mask[p] = 0
            return
        destab_hits = [int(i) for i in np.nonzero(self.x[:n, q])[0]]
        _, _, sign, mask = self._scratch_accumulate(n + np.array(destab_hits))
        if sign or mask:
            # conditional flip: force Z_q to +1 regardless of prior value
            rows = np.nonzero(self.z[:, q] & ~self.x[:, q])[0]
            for i in rows:
                self.r[i] ^= sign
                if i >= n:
                    self.mask[i] ^= mask
        if destab_hits:
            j = n + destab_hits[-1]
            for i in destab_hits[:-1]:
                self._rowsum(i, destab_hits[-1])
            self.x[j] = False
            self.z[j] = False
            self.z[j, q] = True
            self.r[j] = 0
            self.mask[j] = 0

    def measure_x(self, q: int, record: int | None):
        self.h(q)
        out = self.measure_z(q, record)
        self.h(q)
        return out

    def reset_x(self, q: int) -> None:
        self.reset_z(q)
        self.h(q)

    def derive(self, p: PauliString) -> tuple[int, int] | None:
        """Express a data Pauli over the current group: (sign, record mask).

        Returns None when the operator is not in the stabilizer group.
        """
        n = self.n
        px = np.zeros(n, dtype=bool)
        pz = np.zeros(n, dtype=bool)
        for q, pa in p.items():
            x, z = _XZ[pa]
            px[q] = bool(x)
            pz[q] = bool(z)
        # anticommutation with stabilizer rows means not in the group
        anti_stab = ((self.x[n:] & pz[None, :]).sum(axis=1)
                     + (self.z[n:] & px[None, :]).sum(axis=1)) % 2
        if anti_stab.any():
            return None
        anti_destab = ((self.x[:n] & pz[None, :]).sum(axis=1)
                       + (self.z[:n] & px[None, :]).sum(axis=1)) % 2
        rows = n + np.nonzero(anti_destab)[0]
        xs, zs, sign, mask = self._scratch_accumulate(rows)
        if not (xs == px).all() or not (zs == pz).all():
            return None
        return sign, mask


# ---------------------------------------------------------------------------
# Circuit-level records, determinism report, detecting regions


def _absolute_defs(circuit: Circuit):
    """Detector/observable record sets with absolute record indices."""
    seen = 0
    detectors: list[tuple[tuple[int, ...], tuple[float, ...]]] = []
    observables: dict[int, set[int]] = {}
    for ins in circuit.instructions:
        if ins.kind in MEASURE_KINDS:
            seen += len(ins.targets)
        elif ins.kind == "DETECTOR":
            detectors.append((tuple(seen + t for t in ins.targets), ins.args))
        elif ins.kind == "OBSERVABLE_INCLUDE":
            observables.setdefault(int(ins.args[0]), set()).update(
                seen + t for t in ins.targets)
    obs = [tuple(sorted(observables.get(i, ())))
           for i in range(max(observables, default=-1) + 1)]
    return detectors, obs


@dataclass
class DeterminismReport:
    ok: bool
    bad_detectors: list[tuple[int, str]] = field(default_factory=list)
    bad_observables: list[tuple[int, str]] = field(default_factory=list)


def record_expressions(circuit: Circuit) -> list[tuple[int, int]]:
    """Per record: (constant, free-variable bitset) under noiseless flow."""
    n = circuit.num_qubits
    tab = Tableau(n)
    exprs: list[tuple[int, int]] = []
    k = 0
    for ins in circuit.instructions:
        if ins.kind in NOISE_KINDS or ins.kind in (
                "TICK", "DETECTOR", "OBSERVABLE_INCLUDE", "QUBIT_COORDS",
                "SHIFT_COORDS"):
            continue
        if ins.kind == "H":
            for q in ins.targets:
                tab.h(q)
        elif ins.kind == "CX":
            for c, t in zip(ins.targets[0::2], ins.targets[1::2]):
                tab.cx(c, t)
        elif ins.kind == "R":
            for q in ins.targets:
                tab.reset_z(q)
        elif ins.kind == "RX":
            for q in ins.targets:
                tab.reset_x(q)
        elif ins.kind in ("M", "MX"):
            for q in ins.targets:
                fn = tab.measure_z if ins.kind == "M" else tab.measure_x
                deterministic, sign, mask = fn(q, k)
                if deterministic:
                    const, xvars = sign, 0
                    for rr in _bits(mask):
                        c2, v2 = exprs[rr]
                        const ^= c2
                        xvars ^= v2
                    exprs.append((const, xvars))
                else:
                    exprs.append((0, 1 << k))
                k += 1
    return exprs


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def check_determinism(circuit: Circuit) -> DeterminismReport:
    """Verify every detector is deterministically 0 and observables fixed."""
    exprs = record_expressions(circuit.without_noise())
    detectors, observables = _absolute_defs(circuit)
    report = DeterminismReport(ok=True)
    for di, (recs, _args) in enumerate(detectors):
        const, xvars = 0, 0
        for rr in recs:
            c2, v2 = exprs[rr]
            const ^= c2
            xvars ^= v2
        if xvars:
            report.bad_detectors.append((di, "outcome not deterministic"))
        elif const:
            report.bad_detectors.append((di, "deterministic but nonzero"))
    for oi, recs in enumerate(observables):
        const, xvars = 0, 0
        for rr in recs:
            c2, v2 = exprs[rr]
            const ^= c2
            xvars ^= v2
        if xvars:
            report.bad_observables.append((oi, "outcome not deterministic"))
    report.ok = not report.bad_detectors and not report.bad_observables
    return report


# ---------------------------------------------------------------------------
# Backward web propagation (detecting regions and error enumeration)


@dataclass
class DetectingRegion:
    detector: int
    slices: dict[int, PauliString]


def propagate_webs(circuit: Circuit, slice_for: set | None = None,
                   on_channel=None):
    """Walk the circuit backward carrying one Pauli web per detector and
    observable.

    ``on_channel(instr_index, kind, p, targets, flips_of)`` is called at each
    noise channel while the web state describes that moment; ``flips_of(E)``
    maps a sparse error to the list of web ids it flips.  When ``slice_for``
    is given, returns {web_id: {tick_index: PauliString}} snapshots taken at
    every TICK.
    """
    detectors, observables = _absolute_defs(circuit)
    rec_owner: dict[int, list] = {}
    for di, (recs, _args) in enumerate(detectors):
        for rr in recs:
            rec_owner.setdefault(rr, []).append(("D", di))
    for oi, recs in enumerate(observables):
        for rr in recs:
            rec_owner.setdefault(rr, []).append(("L", oi))

    webs: dict = {}
    qubit_index: dict[int, set] = {}
    slices: dict = {}

    def touch(wid, q, x, z):
        web = webs.setdefault(wid, {})
        ox, oz = web.get(q, (0, 0))
        nx, nz = ox ^ x, oz ^ z
        if nx or nz:
            web[q] = (nx, nz)
            qubit_index.setdefault(q, set()).add(wid)
        else:
            web.pop(q, None)
            qubit_index.get(q, set()).discard(wid)

    def flips_of(err: dict[int, str]):
        cands = set()
        for q in err:
            cands |= qubit_index.get(q, set())
        out = []
        for wid in cands:
            web = webs[wid]
            par = 0
            for q, pa in err.items():
                ex, ez = _XZ[pa]
                wx, wz = web.get(q, (0, 0))
                par ^= (ex & wz) ^ (ez & wx)
            if par:
                out.append(wid)
        return out

    n_ticks = sum(1 for i in circuit.instructions if i.kind == "TICK")
    tick = n_ticks
    rec = circuit.num_measurements
    for idx in range(len(circuit.instructions) - 1, -1, -1):
        ins = circuit.instructions[idx]
        kind = ins.kind
        if kind == "TICK":
            tick -= 1
            if slice_for is not None:
                for wid in slice_for:
                    web = webs.get(wid)
                    if web:
                        slices.setdefault(wid, {})[tick] = PauliString(
                            {q: _PAULI[xz] for q, xz in web.items()})
            continue
        if kind in ("DETECTOR", "OBSERVABLE_INCLUDE", "QUBIT_COORDS",
                    "SHIFT_COORDS"):
            continue
        if kind in MEASURE_KINDS:
            for q in reversed(ins.targets):
                rec -= 1
                for wid in rec_owner.get(rec, ()):
                    x, z = (0, 1) if kind == "M" else (1, 0)
                    touch(wid, q, x, z)
            continue
        if kind in ("R", "RX"):
            for q in ins.targets:
                for wid in list(qubit_index.get(q, ())):
                    web = webs[wid]
                    web.pop(q, None)
                qubit_index.pop(q, None)
            continue
        if kind == "H":
            for q in ins.targets:
                for wid in qubit_index.get(q, ()):
                    x, z = webs[wid][q]
                    webs[wid][q] = (z, x)
            continue
        if kind == "CX":
            for c, t in zip(ins.targets[0::2], ins.targets[1::2]):
                for wid in qubit_index.get(c, set()) | qubit_index.get(t, set()):
                    web = webs[wid]
                    xc, zc = web.get(c, (0, 0))
                    xt, zt = web.get(t, (0, 0))
                    touch(wid, c, 0, zt)
                    touch(wid, t, xc, 0)
            continue
        if kind in NOISE_KINDS:
            if on_channel is not None:
                on_channel(idx, kind, ins.args[0], ins.targets, flips_of)
            continue
        raise ValueError(f"unsupported instruction {kind}")
    return slices


def detecting_region(circuit: Circuit, detector: int) -> DetectingRegion:
    slices = propagate_webs(circuit, slice_for={("D", detector)})
    return DetectingRegion(detector, slices.get(("D", detector), {}))


# ---------------------------------------------------------------------------
# Pauli-frame sampling


@dataclass
class ShotTable:
    shots: int
    num_detectors: int
    num_observables: int
    det: np.ndarray  # bool (shots, D)
    obs: np.ndarray  # bool (shots, O)

    def to_binary(self) -> bytes:
        head = b"SHOT" + np.array(
            [self.shots, self.num_detectors, self.num_observables],
            dtype="<u8").tobytes()
        return (head + np.packbits(self.det, axis=1).tobytes()
                + np.packbits(self.obs, axis=1).tobytes())

    @staticmethod
    def from_binary(blob: bytes) -> "ShotTable":
        if blob[:4] != b"SHOT":
            raise ValueError("bad shot table header")
        n, d, o = np.frombuffer(blob[4:28], dtype="<u8").astype(int)
        db = (d + 7) // 8
        ob = (o + 7) // 8
        body = blob[28:]
        det = np.unpackbits(
            np.frombuffer(body[:n * db], dtype=np.uint8).reshape(n, db),
            axis=1)[:, :d].astype(bool)
        obs = np.unpackbits(
            np.frombuffer(body[n * db:n * db + n * ob],
                          dtype=np.uint8).reshape(n, ob),
            axis=1)[:, :o].astype(bool)
        return ShotTable(int(n), int(d), int(o), det, obs)

    def to_text(self) -> str:
        rows = []
        for i in range(self.shots):
            bits = "".join("1" if b else "0" for b in self.det[i])
            bits += " "
            bits += "".join("1" if b else "0" for b in self.obs[i])
            rows.append(bits)
        return "\n".join(rows) + "\n"


_D2_TABLE = np.array(
    [(a, b) for a in range(4) for b in range(4) if (a, b) != (0, 0)],
    dtype=np.uint8)  # 15 two-qubit Paulis as (xz, xz) codes: 1=X, 2=Z, 3=Y


class _CompiledSampler:
    def __init__(self, circuit: Circuit):
        circuit.validate()
        self.n = circuit.num_qubits
        self.num_meas = circuit.num_measurements
        dets, obs = _absolute_defs(circuit)
        self.det_recs = [d[0] for d in dets]
        self.obs_recs = obs
        self.ops = []
        rec = 0
        for ins in circuit.instructions:
            k = ins.kind
            if k in ("TICK", "DETECTOR", "OBSERVABLE_INCLUDE", "QUBIT_COORDS",
                     "SHIFT_COORDS"):
                continue
            if k in MEASURE_KINDS:
                ks = np.arange(rec, rec + len(ins.targets))
                self.ops.append((k, np.array(ins.targets), ks))
                rec += len(ins.targets)
            elif k in NOISE_KINDS:
                self.ops.append((k, np.array(ins.targets), ins.args[0]))
            elif k == "CX":
                self.ops.append((k, np.array(ins.targets[0::2]),
                                 np.array(ins.targets[1::2])))
            else:
                self.ops.append((k, np.array(ins.targets), None))

    def run_batch(self, rng: np.random.Generator, batch: int):
        words = batch // 64
        fx = np.zeros((self.n, words), dtype=np.uint64)
        fz = np.zeros((self.n, words), dtype=np.uint64)
        rec = np.zeros((self.num_meas, words), dtype=np.uint64)

        def pack(bits: np.ndarray) -> np.ndarray:
            return np.packbits(bits, axis=-1, bitorder="little").view(
                np.uint64).reshape(bits.shape[0], words)

        for op in self.ops:
            k = op[0]
            if k == "CX":
                _, cs, ts = op
                fx[ts] ^= fx[cs]
                fz[cs] ^= fz[ts]
            elif k == "DEPOLARIZE1":
                _, qs, p = op
                u = rng.random((len(qs), batch))
                hit = u < p
                kind = np.minimum((u * (3.0 / p)).astype(np.uint8), 2)
                fx[qs] ^= pack(hit & (kind != 2))
                fz[qs] ^= pack(hit & (kind != 0))
            elif k == "DEPOLARIZE2":
                _, targets, p = op
                a, b = targets[0::2], targets[1::2]
                u = rng.random((len(a), batch))
                hit = u < p
                idx = np.minimum((u * (15.0 / p)).astype(np.uint8), 14)
                code = _D2_TABLE[idx]
                ca, cb = code[..., 0], code[..., 1]
                fx[a] ^= pack(hit & (ca & 1).astype(bool))
                fz[a] ^= pack(hit & (ca & 2).astype(bool))
                fx[b] ^= pack(hit & (cb & 1).astype(bool))
                fz[b] ^= pack(hit & (cb & 2).astype(bool))
            elif k == "M":
                _, qs, ks = op
                rec[ks] = fx[qs]
            elif k == "MX":
                _, qs, ks = op
                rec[ks] = fz[qs]
            elif k in ("R", "RX"):
                qs = op[1]
                fx[qs] = 0
                fz[qs] = 0
            elif k == "H":
                qs = op[1]
                tmp = fx[qs].copy()
                fx[qs] = fz[qs]
                fz[qs] = tmp
            else:
                raise ValueError(k)

        def fold(rec_sets, count):
            out = np.zeros((count, words), dtype=np.uint64)
            for i, rr in enumerate(rec_sets):
                for r in rr:
                    out[i] ^= rec[r]
            return out

        det = fold(self.det_recs, len(self.det_recs))
        obs = fold(self.obs_recs, len(self.obs_recs))
        return det, obs


def _unpack(words: np.ndarray, batch: int) -> np.ndarray:
    u8 = words.view(np.uint8).reshape(words.shape[0], -1)
    return np.unpackbits(u8, axis=1, bitorder="little")[:, :batch].astype(bool)


BATCH = 8192


def sample_batches(circuit: Circuit, shots: int, seed: int,
                   batch: int = BATCH):
    """Yield (det bool (b, D), obs bool (b, O)) batches, reproducibly.

    The stream depends only on (seed, batch index), never on consumer
    behavior, so partitioning work across processes cannot change results.
    """
    comp = _CompiledSampler(circuit)
    done = 0
    bi = 0
    while done < shots:
        take = min(batch, shots - done)
        rng = np.random.default_rng((seed, bi))
        det, obs = comp.run_batch(rng, batch)
        yield _unpack(det, batch)[:, :, None].swapaxes(1, 2).reshape(
            batch, -1)[:take][:, :len(comp.det_recs)], \
            _unpack(obs, batch)[:, :, None].swapaxes(1, 2).reshape(
            batch, -1)[:take][:, :len(comp.obs_recs)]
        done += take
        bi += 1


def frame_sample(circuit: Circuit, shots: int, seed: int) -> ShotTable:
    """Monte Carlo sample detector/observable bits under the circuit noise."""
    report = check_determinism(circuit)
    if not report.ok:
        raise ValueError(f"circuit is not deterministic: {report}")
    dets = []
    obss = []
    for det, obs in sample_batches(circuit, shots, seed):
        dets.append(det)
        obss.append(obs)
    det = np.concatenate(dets) if dets else np.zeros((0, 0), bool)
    obs = np.concatenate(obss) if obss else np.zeros((0, 0), bool)
    return ShotTable(shots, det.shape[1], obs.shape[1], det, obs)


def inject_frame(circuit: Circuit, events) -> tuple[set[int], int]:
    """Propagate specific Pauli faults and report flipped detectors.

    ``events`` is a list of (instruction_index, {qubit: pauli}) pairs; each
    error applies immediately after its instruction executes.  Returns the
    set of flipped detector ids and the observable bitmask.
    """
    by_idx: dict[int, list] = {}
    for idx, err in events:
        by_idx.setdefault(idx, []).append(err)
    fx = 0
    fz = 0
    rec_flips = []
    for idx, ins in enumerate(circuit.instructions):
        k = ins.kind
        if k == "CX":
            for c, t in zip(ins.targets[0::2], ins.targets[1::2]):
                if fx >> c & 1:
                    fx ^= 1 << t
                if fz >> t & 1:
                    fz ^= 1 << c
        elif k == "H":
            for q in ins.targets:
                xb = fx >> q & 1
                zb = fz >> q & 1
                if xb != zb:
                    fx ^= 1 << q
                    fz ^= 1 << q
        elif k in ("R", "RX"):
            for q in ins.targets:
                fx &= ~(1 << q)
                fz &= ~(1 << q)
        elif k == "M":
            for q in ins.targets:
                rec_flips.append(fx >> q & 1)
        elif k == "MX":
            for q in ins.targets:
                rec_flips.append(fz >> q & 1)
        for err in by_idx.get(idx, ()):
            for q, pa in err.items():
                ex, ez = _XZ[pa]
                fx ^= ex << q
                fz ^= ez << q
    detectors, observables = _absolute_defs(circuit)
    flipped = {di for di, (recs, _a) in enumerate(detectors)
               if sum(rec_flips[r] for r in recs) % 2}
    mask = 0
    for oi, recs in enumerate(observables):
        if sum(rec_flips[r] for r in recs) % 2:
            mask |= 1 << oi
    return flipped, mask
