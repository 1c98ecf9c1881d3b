"""Geometry of rotated-surface-code patches.

Coordinates are stored as doubled integers so half-integer positions stay
exact: a data qubit at (x, y) is stored as (2x, 2y) with both entries even,
and plaquette centers / measurement qubits get odd entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

Coord = tuple[int, int]  # doubled (2x, 2y)

# Doubled offsets from a plaquette anchor (odd, odd) to its four corners.
CORNERS = ((-1, -1), (1, -1), (-1, 1), (1, 1))


def parity(pos: Coord) -> int:
    """Checkerboard parity of a plaquette anchor with odd doubled coords."""
    return (((pos[0] - 1) // 2) + ((pos[1] - 1) // 2)) % 2


@dataclass(frozen=True, order=True)
class Tile:
    basis: str  # 'Z' or 'X'
    center: Coord  # mean of supports, doubled
    supports: tuple[Coord, ...]  # sorted data-qubit coords

    def __post_init__(self):
        if self.basis not in ("Z", "X"):
            raise ValueError(f"bad tile basis {self.basis!r}")


@dataclass(frozen=True)
class BoundarySegment:
    basis: str
    start: Coord  # doubled, axis aligned, start <= end
    end: Coord


@dataclass(frozen=True)
class Logical:
    basis: str
    chain: tuple[Coord, ...]


@dataclass
class Layout:
    name: str
    data_qubits: frozenset[Coord]
    tiles: tuple[Tile, ...]
    boundary_segments: tuple[BoundarySegment, ...]
    logicals: tuple[Logical, ...]
    distance: int

    def tiles_of(self, basis: str) -> list[Tile]:
        return [t for t in self.tiles if t.basis == basis]

    def edge_boundary_basis(self, a: Coord, b: Coord) -> str | None:
        """Boundary type of the perimeter edge joining adjacent data a, b.

        Returns None when the edge does not lie on any declared segment.
        """
        lo = (min(a[0], b[0]), min(a[1], b[1]))
        hi = (max(a[0], b[0]), max(a[1], b[1]))
        for seg in self.boundary_segments:
            (sx, sy), (ex, ey) = seg.start, seg.end
            if sx == ex:  # vertical segment
                if lo[0] == hi[0] == sx and sy <= lo[1] and hi[1] <= ey:
                    return seg.basis
            else:  # horizontal
                if lo[1] == hi[1] == sy and sx <= lo[0] and hi[0] <= ex:
                    return seg.basis
        return None

    def validate(self) -> None:
        for t in self.tiles:
            if len(t.supports) not in (2, 4):
                raise LayoutError(f"tile {t} has {len(t.supports)} supports")
            if not set(t.supports) <= self.data_qubits:
                raise LayoutError(f"tile {t} leaves the data set")
        for a, b in combinations(self.tiles, 2):
            if a.basis != b.basis and len(set(a.supports) & set(b.supports)) % 2:
                raise LayoutError(f"tiles anticommute: {a} vs {b}")
            if a.basis == b.basis and a.supports == b.supports:
                raise LayoutError(f"duplicate tile {a}")
        for log in self.logicals:
            for t in self.tiles:
                if t.basis != log.basis and len(set(t.supports) & set(log.chain)) % 2:
                    raise LayoutError(f"logical {log} anticommutes with {t}")

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "distance": self.distance,
            "data_qubits": sorted(self.data_qubits),
            "tiles": [
                {"basis": t.basis, "center": list(t.center),
                 "supports": [list(s) for s in t.supports]}
                for t in sorted(self.tiles)
            ],
            "boundaries": [
                {"basis": s.basis, "start": list(s.start), "end": list(s.end)}
                for s in self.boundary_segments
            ],
            "logicals": [
                {"basis": l.basis, "chain": [list(c) for c in l.chain]}
                for l in self.logicals
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Layout":
        doc = json.loads(text)
        return Layout(
            name=doc["name"],
            data_qubits=frozenset(tuple(q) for q in doc["data_qubits"]),
            tiles=tuple(
                Tile(t["basis"], tuple(t["center"]),
                     tuple(sorted(tuple(s) for s in t["supports"])))
                for t in doc["tiles"]
            ),
            boundary_segments=tuple(
                BoundarySegment(s["basis"], tuple(s["start"]), tuple(s["end"]))
                for s in doc["boundaries"]
            ),
            logicals=tuple(
                Logical(l["basis"], tuple(tuple(c) for c in l["chain"]))
                for l in doc["logicals"]
            ),
            distance=doc["distance"],
        )


class LayoutError(ValueError):
    pass


class IntractableSearch(RuntimeError):
    pass


def _mean(coords) -> Coord:
    xs = [c[0] for c in coords]
    ys = [c[1] for c in coords]
    return (sum(xs) // len(xs), sum(ys) // len(ys))


def _scan_tiles(data: frozenset[Coord], layout_probe) -> list[Tile]:
    """Collect plaquettes over the bounding box expanded by one half step.

    ``layout_probe(pos, sup)`` decides whether a 2-support candidate on the
    perimeter is kept (full 4-support squares are always kept).  The basis of
    a candidate is fixed by the checkerboard: even parity is Z, odd is X.
    """
    xs = [c[0] for c in data]
    ys = [c[1] for c in data]
    tiles = []
    for px in range(min(xs) - 1, max(xs) + 2, 2):
        for py in range(min(ys) - 1, max(ys) + 2, 2):
            pos = (px, py)
            sup = tuple(sorted((px + dx, py + dy) for dx, dy in CORNERS
                               if (px + dx, py + dy) in data))
            basis = "Z" if parity(pos) == 0 else "X"
            if len(sup) == 4:
                tiles.append(Tile(basis, _mean(sup), sup))
            elif len(sup) == 2 and layout_probe(basis, pos, sup):
                tiles.append(Tile(basis, _mean(sup), sup))
    return tiles


def build_memory_layout(d: int, orientation: str = "standard") -> Layout:
    """Square distance-d patch.

    ``standard`` puts the Z boundaries on top/bottom (vertical Z logical);
    ``rotated`` swaps the two boundary types (used by the cross-moving
    interleaved schedule, which needs tiles to walk into opposite-type
    boundaries).
    """
    if d < 3 or d % 2 == 0:
        raise LayoutError(f"distance must be odd and >= 3, got {d}")
    data = frozenset((2 * i, 2 * j) for i in range(d) for j in range(d))
    m = 2 * (d - 1)
    if orientation == "standard":
        horiz, vert = "Z", "X"  # top/bottom basis, left/right basis
    elif orientation == "rotated":
        horiz, vert = "X", "Z"
    else:
        raise LayoutError(f"unknown orientation {orientation!r}")
    segments = (
        BoundarySegment(horiz, (0, 0), (m, 0)),
        BoundarySegment(horiz, (0, m), (m, m)),
        BoundarySegment(vert, (0, 0), (0, m)),
        BoundarySegment(vert, (m, 0), (m, m)),
    )

    def probe(basis, pos, sup):
        edge = _edge_basis_static(segments, sup)
        return edge == basis

    tiles = _scan_tiles(data, probe)
    if horiz == "Z":
        logicals = (
            Logical("Z", tuple((0, 2 * j) for j in range(d))),
            Logical("X", tuple((2 * i, 0) for i in range(d))),
        )
    else:
        logicals = (
            Logical("Z", tuple((2 * i, 0) for i in range(d))),
            Logical("X", tuple((0, 2 * j) for j in range(d))),
        )
    layout = Layout(
        name=f"memory_d{d}" + ("" if orientation == "standard" else "_rot"),
        data_qubits=data,
        tiles=tuple(sorted(tiles)),
        boundary_segments=segments,
        logicals=logicals,
        distance=d,
    )
    layout.validate()
    return layout


def _edge_basis_static(segments, sup) -> str | None:
    lo = (min(s[0] for s in sup), min(s[1] for s in sup))
    hi = (max(s[0] for s in sup), max(s[1] for s in sup))
    for seg in segments:
        (sx, sy), (ex, ey) = seg.start, seg.end
        if sx == ex and lo[0] == hi[0] == sx and sy <= lo[1] and hi[1] <= ey:
            return seg.basis
        if sy == ey and lo[1] == hi[1] == sy and sx <= lo[0] and hi[0] <= ex:
            return seg.basis
    return None


def build_xx_merged_layout(d: int) -> Layout:
    """Two distance-d patches joined through a one-column channel.

    The patches sit side by side along x with the shared column at x = d.
    The outer left/right boundaries are X type and the top/bottom are Z type
    except for a two-support X cap over the channel column on each side.  The
    Z half-tiles that would share a single qubit with a cap are dropped, which
    is what lets one horizontal and one vertical weight-d X representative
    terminate cleanly.
    """
    if d < 3 or d % 2 == 0:
        raise LayoutError(f"distance must be odd and >= 3, got {d}")
    w = 2 * d + 1
    data = frozenset((2 * i, 2 * j) for i in range(w) for j in range(d))
    mx = 2 * (w - 1)
    my = 2 * (d - 1)
    dd = 2 * d  # doubled x of the channel column
    segments = (
        # bottom: Z, then the X cap section around the channel, then Z again
        BoundarySegment("Z", (0, 0), (dd - 4, 0)),
        BoundarySegment("X", (dd - 4, 0), (dd + 2, 0)),
        BoundarySegment("Z", (dd + 2, 0), (mx, 0)),
        # top: mirrored, staggered one column to the right
        BoundarySegment("Z", (0, my), (dd - 2, my)),
        BoundarySegment("X", (dd - 2, my), (dd + 4, my)),
        BoundarySegment("Z", (dd + 4, my), (mx, my)),
        BoundarySegment("X", (0, 0), (0, my)),
        BoundarySegment("X", (mx, 0), (mx, my)),
    )

    def probe(basis, pos, sup):
        return _edge_basis_static(segments, sup) == basis

    tiles = _scan_tiles(data, probe)
    logicals = (
        Logical("Z", tuple((0, 2 * j) for j in range(d))),          # patch A
        Logical("Z", tuple((mx, 2 * j) for j in range(d))),         # patch B
        # arch over the bottom cap; pairs with the channel X logical
        Logical("Z", ((dd - 4, 0), (dd - 2, 2), (dd, 2), (dd + 2, 0))),
        Logical("X", tuple((dd, 2 * j) for j in range(d))),         # vertical
        Logical("X", tuple((2 * i, my) for i in range(d))),         # A, horiz
        Logical("X", tuple((2 * i, 0) for i in range(d + 1, w))),   # B, horiz
    )
    layout = Layout(
        name=f"xx_merged_d{d}",
        data_qubits=data,
        tiles=tuple(sorted(tiles)),
        boundary_segments=segments,
        logicals=logicals,
        distance=d,
    )
    layout.validate()
    return layout


def css_min_distance(layout: Layout, basis: str,
                     max_nodes: int = 50_000_000) -> tuple[int, list[tuple[Coord, ...]]]:
    """Exact minimum weight of an undetected basis-type logical operator.

    Exhaustive search over data-qubit supports: the operator must commute
    with every opposite-basis tile and anticommute with at least one declared
    opposite-basis logical.  Raises IntractableSearch when the node budget
    would be exceeded rather than returning an approximation.
    """
    if basis not in ("Z", "X"):
        raise ValueError(f"bad basis {basis!r}")
    other = "X" if basis == "Z" else "Z"
    qubits = sorted(layout.data_qubits)
    n = len(qubits)
    index = {q: i for i, q in enumerate(qubits)}
    checks = []
    for t in layout.tiles_of(other):
        mask = 0
        for s in t.supports:
            mask |= 1 << index[s]
        checks.append(mask)
    targets = []
    for log in layout.logicals:
        if log.basis == other:
            mask = 0
            for s in log.chain:
                mask |= 1 << index[s]
            targets.append(mask)
    if not targets:
        raise LayoutError(f"layout has no {other} logicals to test against")
    qubit_checks = [0] * n  # bitmask over check indices per qubit
    for ci, mask in enumerate(checks):
        for i in range(n):
            if mask >> i & 1:
                qubit_checks[i] |= 1 << ci
    qubit_targets = [0] * n
    for ti, mask in enumerate(targets):
        for i in range(n):
            if mask >> i & 1:
                qubit_targets[i] |= 1 << ti

    budget = [max_nodes]
    found: list[tuple[Coord, ...]] = []

    def dfs(start: int, left: int, synd: int, tmask: int, picked: list[int]):
        budget[0] -= 1
        if budget[0] < 0:
            raise IntractableSearch(
                f"css_min_distance exceeded {max_nodes} search nodes")
        if left == 0:
            if synd == 0 and tmask and len(found) < 64:
                found.append(tuple(qubits[i] for i in picked))
            return
        if synd.bit_count() > 2 * left:
            return
        for i in range(start, n - left + 1):
            picked.append(i)
            dfs(i + 1, left - 1, synd ^ qubit_checks[i],
                tmask ^ qubit_targets[i], picked)
            picked.pop()

    for w in range(1, n + 1):
        found.clear()
        dfs(0, w, 0, 0, [])
        if found:
            return w, found
    raise LayoutError("no logical operator found at any weight")
