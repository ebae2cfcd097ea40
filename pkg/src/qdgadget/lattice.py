"""Directed lattices: signed vertices, oriented edges, clockwise plaquettes
and the corner-to-corner bonds between neighbouring code gadgets.

Each edge carries a 4-qudit gadget. Drawing the edge running up the page
(tail at the bottom, head at the top) with p+ on its right, the corner slots are

    q1 = TL   q2 = TR        head end
    q4 = BL   q3 = BR        tail end

so slot ``q`` of edge ``e`` is global qudit ``4*e + q`` (slots 0..3 for q1..q4).
A vertex of sign +1 has all edges pointing in (it is their head), sign -1 all out.
A plaquette is a clockwise list of (edge, forward) pairs; ``forward`` means the
traversal runs tail -> head, which puts the plaquette on the edge's p+ side.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

TL, TR, BR, BL = 0, 1, 2, 3
CORNER_NAMES = ("TL", "TR", "BR", "BL")
# (head end?, right side?) -> slot
_SLOT = {(True, False): TL, (True, True): TR, (False, True): BR, (False, False): BL}
L_SIGN = (+1, +1, -1, -1)  # + at the head end
Z_SIGN = (-1, +1, +1, -1)  # + on the p+ side


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int


@dataclass(frozen=True)
class Plaquette:
    cycle: tuple[tuple[int, bool], ...]

    @property
    def edges(self) -> list[int]:
        return [e for e, _ in self.cycle]

    def rotated(self, k: int) -> "Plaquette":
        k %= len(self.cycle)
        return Plaquette(self.cycle[k:] + self.cycle[:k])


@dataclass(frozen=True)
class Corner:
    edge: int
    slot: int

    @property
    def qudit(self) -> int:
        return 4 * self.edge + self.slot

    @property
    def l_sign(self) -> int:
        return L_SIGN[self.slot]

    @property
    def z_sign(self) -> int:
        return Z_SIGN[self.slot]


@dataclass(frozen=True)
class Bond:
    a: Corner
    b: Corner
    vertex: int | None = None
    face: int | None = None


def corner_slot(edge: Edge, vertex: int, forward: bool) -> int:
    """Slot of the corner of ``edge`` at ``vertex`` on the side of a face
    whose clockwise traversal runs ``forward`` along the edge."""
    if vertex not in (edge.head, edge.tail):
        raise LatticeError(f"vertex {vertex} not on edge {edge}")
    return _SLOT[(vertex == edge.head, forward)]


@dataclass
class DirectedLattice:
    vertex_signs: list[int]
    edges: list[Edge]
    plaquettes: list[Plaquette]
    bonds: list[Bond]
    closed: bool = False
    linear_size: float = float("inf")
    name: str = "lattice"
    vertex_ids: list = field(default_factory=list)
    edge_ids: list = field(default_factory=list)
    plaquette_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.vertex_ids = self.vertex_ids or list(range(len(self.vertex_signs)))
        self.edge_ids = self.edge_ids or list(range(len(self.edges)))
        self.plaquette_ids = self.plaquette_ids or list(range(len(self.plaquettes)))

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_signs)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_qudits(self) -> int:
        return 4 * self.n_edges

    def star(self, v: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if v in (e.head, e.tail)]

    def full_vertices(self) -> list[int]:
        """Vertices whose star is closed by bonds (each star edge bonded on both sides)."""
        out = []
        for v in range(self.n_vertices):
            st = self.star(v)
            if len(st) < 2:
                continue
            around = [b for b in self.bonds if b.vertex == v]
            if len(around) == len(st):
                out.append(v)
        return out

    def traversal_vertices(self, p: Plaquette) -> list[int]:
        """v_i = vertex reached after traversing the i-th edge."""
        return [self.edges[e].head if f else self.edges[e].tail for e, f in p.cycle]

    def validate(self) -> None:
        for v, s in enumerate(self.vertex_signs):
            if s not in (1, -1):
                raise LatticeError(f"vertex {self.vertex_ids[v]}: sign must be +1 or -1")
        for i, e in enumerate(self.edges):
            if e.head == e.tail:
                raise LatticeError(f"edge {self.edge_ids[i]} is a self-loop")
            if self.vertex_signs[e.head] != 1 or self.vertex_signs[e.tail] != -1:
                raise LatticeError(
                    f"edge {self.edge_ids[i]}: mixed edge directions; edges must run from a "
                    f"-1 vertex to a +1 vertex")
        sides: dict[int, list[bool]] = {}
        for k, p in enumerate(self.plaquettes):
            if not p.cycle:
                raise LatticeError(f"plaquette {self.plaquette_ids[k]} is empty")
            ends = self.traversal_vertices(p)
            for i, (e, f) in enumerate(p.cycle):
                if not 0 <= e < self.n_edges:
                    raise LatticeError(f"plaquette {self.plaquette_ids[k]}: dangling edge {e}")
                start = self.edges[e].tail if f else self.edges[e].head
                if start != ends[i - 1]:
                    raise LatticeError(f"plaquette {self.plaquette_ids[k]}: boundary is not a closed cycle")
                sides.setdefault(e, []).append(f)
        for e, fs in sides.items():
            if len(fs) > 2 or (len(fs) == 2 and fs[0] == fs[1]):
                raise LatticeError(
                    f"edge {self.edge_ids[e]} borders plaquettes without opposite side signs")
        used: dict[Corner, int] = {}
        for b in self.bonds:
            if b.a.edge == b.b.edge:
                raise LatticeError("bond endpoints must lie on distinct edges")
            for c in (b.a, b.b):
                if not (0 <= c.edge < self.n_edges and 0 <= c.slot < 4):
                    raise LatticeError(f"bond corner {c} out of range")
                used[c] = used.get(c, 0) + 1
        if self.closed:
            for e in range(self.n_edges):
                for q in range(4):
                    n = used.get(Corner(e, q), 0)
                    if n != 1:
                        raise LatticeError(
                            f"corner {CORNER_NAMES[q]} of edge {self.edge_ids[e]} has {n} bonds (closed surface needs 1)")
        for b in self.bonds:
            if b.a.l_sign != b.b.l_sign or b.a.z_sign == b.b.z_sign:
                raise LatticeError(f"bond {b} joins corners that are not geometrically adjacent")

    # ---- serialization

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "closed": self.closed,
            "linear_size": None if not np.isfinite(self.linear_size) else self.linear_size,
            "vertices": [{"id": i, "sign": s} for i, s in zip(self.vertex_ids, self.vertex_signs)],
            "edges": [{"id": i, "from": self.vertex_ids[e.tail], "to": self.vertex_ids[e.head]}
                      for i, e in zip(self.edge_ids, self.edges)],
            "plaquettes": [
                {"id": i, "edge_cycle": [self.edge_ids[e] for e, _ in p.cycle],
                 "side_signs": [1 if f else -1 for _, f in p.cycle]}
                for i, p in zip(self.plaquette_ids, self.plaquettes)],
            "bonds": [
                {"a": {"edge": self.edge_ids[b.a.edge], "corner": CORNER_NAMES[b.a.slot]},
                 "b": {"edge": self.edge_ids[b.b.edge], "corner": CORNER_NAMES[b.b.slot]},
                 "vertex": None if b.vertex is None else self.vertex_ids[b.vertex],
                 "face": b.face}
                for b in self.bonds],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


def bonds_from_faces(edges: list[Edge], faces: Iterable[Plaquette], keep=None,
                     face_ids: Iterable | None = None) -> list[Bond]:
    """One bond per face corner whose two edges are both kept."""
    keep = set(range(len(edges))) if keep is None else set(keep)
    faces = list(faces)
    face_ids = list(face_ids) if face_ids is not None else list(range(len(faces)))
    out = []
    for fid, p in zip(face_ids, faces):
        k = len(p.cycle)
        for i in range(k):
            e1, f1 = p.cycle[i]
            e2, f2 = p.cycle[(i + 1) % k]
            if e1 not in keep or e2 not in keep:
                continue
            v = edges[e1].head if f1 else edges[e1].tail
            out.append(Bond(Corner(e1, corner_slot(edges[e1], v, f1)),
                            Corner(e2, corner_slot(edges[e2], v, f2)), v, fid))
    return out


# ---------------------------------------------------------------- square lattices


class _Square:
    """Square lattice on Z^2 modulo an optional period lattice."""

    def __init__(self, periods=None, center_sign: int = 1):
        self.P = None if periods is None else np.array(periods, dtype=np.int64).T
        self.center_sign = center_sign
        if self.P is not None:
            self.det = int(round(abs(np.linalg.det(self.P))))
            if self.det == 0:
                raise LatticeError("degenerate period vectors")
            if any((int(c[0]) + int(c[1])) % 2 for c in self.P.T):
                raise LatticeError("period vectors must preserve vertex parity (even periods)")
            self.Pinv = np.linalg.inv(self.P)
        self.vkeys: dict = {}
        self.vsigns: list[int] = []
        self.ekeys: dict = {}
        self.edges: list[Edge] = []

    def canon(self, x, y):
        if self.P is None:
            return (x, y)
        f = self.Pinv @ np.array([x, y], dtype=float)
        f = f - np.floor(f + 1e-9)
        r = self.P @ f
        return (int(round(r[0])), int(round(r[1])))

    def vertex(self, x, y) -> int:
        k = self.canon(x, y)
        if k not in self.vkeys:
            self.vkeys[k] = len(self.vsigns)
            even = (x + y) % 2 == 0
            self.vsigns.append(self.center_sign if even else -self.center_sign)
        return self.vkeys[k]

    def edge(self, kind, x, y) -> int:
        """'h' joins (x,y)-(x+1,y); 'v' joins (x,y)-(x,y+1)."""
        k = (kind,) + self.canon(x, y)
        if k not in self.ekeys:
            a = self.vertex(x, y)
            b = self.vertex(x + 1, y) if kind == "h" else self.vertex(x, y + 1)
            head, tail = (a, b) if self.vsigns[a] == 1 else (b, a)
            self.ekeys[k] = len(self.edges)
            self.edges.append(Edge(tail, head))
        return self.ekeys[k]

    def face(self, x, y) -> Plaquette:
        """Clockwise around the unit square with lower-left corner (x, y)."""
        steps = [("v", x, y, (x, y)), ("h", x, y + 1, (x, y + 1)),
                 ("v", x + 1, y, (x + 1, y + 1)), ("h", x, y, (x + 1, y))]
        cyc = []
        for kind, ex, ey, start in steps:
            e = self.edge(kind, ex, ey)
            cyc.append((e, self.vertex(*start) == self.edges[e].tail))
        return Plaquette(tuple(cyc))


def periodic_square(periods, name: str = "torus") -> DirectedLattice:
    sq = _Square(periods)
    faces, seen = [], set()
    R = 2 * int(np.abs(np.array(periods)).sum()) + 2
    for x in range(-R, R + 1):
        for y in range(-R, R + 1):
            k = sq.canon(x, y)
            if k in seen:
                continue
            seen.add(k)
            faces.append(sq.face(x, y))
    if len(faces) != sq.det:
        raise LatticeError("period enumeration failed")
    P = np.array(periods)
    L = min(abs(a * P[0] + b * P[1]).sum() for a in range(-3, 4) for b in range(-3, 4) if (a, b) != (0, 0))
    lat = DirectedLattice(sq.vsigns, sq.edges, faces, bonds_from_faces(sq.edges, faces),
                          closed=True, linear_size=float(L), name=name)
    lat.validate()
    return lat


def square_torus(Lx: int, Ly: int) -> DirectedLattice:
    if Lx < 2 or Ly < 2 or Lx % 2 or Ly % 2:
        raise LatticeError("square_torus needs even periods Lx, Ly >= 2 for a bipartite orientation")
    return periodic_square([(Lx, 0), (0, Ly)], name=f"torus{Lx}x{Ly}")


def four_qudit_torus() -> DirectedLattice:
    """Square lattice modulo (1,1) and (1,-1): 2 vertices, 4 edges, 2 plaquettes."""
    return periodic_square([(1, 1), (1, -1)], name="four_qudit_torus")


def two_qudit_sphere() -> DirectedLattice:
    """Two edges from v2 (sign -1) to v1 (sign +1), two plaquettes."""
    edges = [Edge(1, 0), Edge(1, 0)]
    p1 = Plaquette(((0, True), (1, False)))
    p2 = Plaquette(((1, True), (0, False)))
    lat = DirectedLattice([1, -1], edges, [p1, p2], [], closed=False, linear_size=float("inf"),
                          name="two_qudit_sphere")
    lat.validate()
    return lat


def open_patch(kind: str, center_sign: int = 1) -> DirectedLattice:
    """Minimal open clusters; boundary corners stay bond-free."""
    sq = _Square(None, center_sign=center_sign)
    if kind == "single_plaquette":
        faces = [sq.face(0, 0)]
        keep = set(range(len(sq.edges)))
        plaqs = faces
    elif kind in ("single_vertex", "two_edge"):
        faces = [sq.face(0, 0), sq.face(0, -1), sq.face(-1, -1), sq.face(-1, 0)]
        spokes = [sq.edge("v", 0, 0), sq.edge("h", 0, 0), sq.edge("v", 0, -1), sq.edge("h", -1, 0)]
        keep = set(spokes) if kind == "single_vertex" else set(spokes[:2])
        plaqs = []
        faces = faces if kind == "single_vertex" else faces[:1]
    else:
        raise LatticeError(f"unknown open patch {kind!r}")
    # renumber kept edges and their vertices
    emap = {e: i for i, e in enumerate(sorted(keep))}
    vs = sorted({v for e in keep for v in (sq.edges[e].tail, sq.edges[e].head)})
    vmap = {v: i for i, v in enumerate(vs)}
    edges = [Edge(vmap[sq.edges[e].tail], vmap[sq.edges[e].head]) for e in sorted(keep)]
    bonds = []
    for b in bonds_from_faces(sq.edges, faces, keep):
        bonds.append(Bond(Corner(emap[b.a.edge], b.a.slot), Corner(emap[b.b.edge], b.b.slot),
                          vmap[b.vertex], b.face))
    plq = [Plaquette(tuple((emap[e], f) for e, f in p.cycle)) for p in plaqs]
    lat = DirectedLattice([sq.vsigns[v] for v in vs], edges, plq, bonds, closed=False, name=kind)
    lat.validate()
    return lat


# ---------------------------------------------------------------- graph files

_CORNER_CODES = {"TL": 0, "TR": 1, "BR": 2, "BL": 3, "q1": 0, "q2": 1, "q3": 2, "q4": 3,
                 1: 0, 2: 1, 3: 2, 4: 3}


def load_graph(path: str | Path) -> DirectedLattice:
    data = json.loads(Path(path).read_text()) if not isinstance(path, dict) else path
    try:
        vids = [v["id"] for v in data["vertices"]]
        signs = [int(v["sign"]) for v in data["vertices"]]
        vix = {v: i for i, v in enumerate(vids)}
        eids = [e["id"] for e in data["edges"]]
        eix = {e: i for i, e in enumerate(eids)}
        edges = [Edge(vix[e["from"]], vix[e["to"]]) for e in data["edges"]]
    except KeyError as exc:
        raise LatticeError(f"graph file missing or unknown key {exc}") from None
    for v, s in enumerate(signs):
        if s not in (1, -1):
            raise LatticeError(f"vertex {vids[v]}: sign must be +1 or -1")
    for i, e in enumerate(edges):
        if signs[e.head] != 1 or signs[e.tail] != -1:
            raise LatticeError(f"vertex directions mixed at edge {eids[i]}: edges must run from -1 to +1 vertices")
    plaqs, pids = [], []
    for p in data.get("plaquettes", []):
        cyc = p["edge_cycle"]
        for e in cyc:
            if e not in eix:
                raise LatticeError(f"plaquette {p['id']}: dangling edge {e}")
        if "side_signs" in p:
            fw = [int(s) == 1 for s in p["side_signs"]]
        else:
            fw = _infer_directions([edges[eix[e]] for e in cyc], p["id"])
        plaqs.append(Plaquette(tuple((eix[e], f) for e, f in zip(cyc, fw))))
        pids.append(p["id"])
    raw = data.get("bonds", data.get("corner_adjacency"))
    if raw is None:
        bonds = bonds_from_faces(edges, plaqs, face_ids=range(len(plaqs)))
    else:
        bonds = []
        for b in raw:
            a, c = (b["a"], b["b"]) if isinstance(b, dict) else b
            bonds.append(Bond(Corner(eix[a["edge"]], _CORNER_CODES[a["corner"]]),
                              Corner(eix[c["edge"]], _CORNER_CODES[c["corner"]]),
                              vix.get(b.get("vertex")) if isinstance(b, dict) else None,
                              b.get("face") if isinstance(b, dict) else None))
    closed = bool(data.get("closed", False))
    ls = data.get("linear_size")
    lat = DirectedLattice(signs, edges, plaqs, bonds, closed=closed,
                          linear_size=float("inf") if ls is None else float(ls),
                          name=data.get("name", Path(str(path)).stem if not isinstance(path, dict) else "graph"),
                          vertex_ids=vids, edge_ids=eids, plaquette_ids=pids)
    lat.validate()
    return lat


def _infer_directions(cyc: list[Edge], pid) -> list[bool]:
    k = len(cyc)
    if k < 3:
        raise LatticeError(f"plaquette {pid}: side_signs required for boundaries shorter than 3")
    out = []
    for i, e in enumerate(cyc):
        nxt = cyc[(i + 1) % k]
        shared = {e.head, e.tail} & {nxt.head, nxt.tail}
        if len(shared) != 1:
            raise LatticeError(f"plaquette {pid}: boundary is not a simple closed cycle")
        out.append(e.head in shared)
    return out


def parse_patch(spec: str) -> DirectedLattice:
    """``single_vertex[:out]``, ``single_plaquette``, ``two_edge``, ``torus:LxxLy``,
    ``four_qudit_torus``, ``two_qudit_sphere`` or ``file:path``."""
    s = spec.strip()
    if s.startswith("file:"):
        return load_graph(s[5:])
    if s.endswith(".json"):
        return load_graph(s)
    if s.startswith("torus:"):
        lx, ly = s[6:].lower().split("x")
        return square_torus(int(lx), int(ly))
    if s == "four_qudit_torus":
        return four_qudit_torus()
    if s == "two_qudit_sphere":
        return two_qudit_sphere()
    kind, _, opt = s.partition(":")
    return open_patch(kind, center_sign=-1 if opt in ("out", "-") else 1)
