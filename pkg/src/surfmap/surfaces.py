"""Closed-surface arithmetic and validated triangulations of the target.

A triangulation is stored combinatorially: edges as vertex pairs (loops
forbidden, parallel edges allowed), triangles as closed walks of three
directed edges, and an explicit dart rotation (cyclic order of edge ends)
at every vertex.  The rotation is data, not derived, so nonorientable
targets need no embedding computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InvalidChi, InvalidSurface, UnknownName


@dataclass(frozen=True)
class SurfaceKind:
    """Topological type of a compact surface.

    Exactly one of handles/crosscaps is meaningful: handles when
    orientable, crosscaps (>= 1) when not.  boundary counts boundary
    circles; 0 means closed.
    """

    orientable: bool
    handles: int = 0
    crosscaps: int = 0
    boundary: int = 0

    def __post_init__(self):
        if self.orientable:
            if self.handles < 0 or self.crosscaps != 0:
                raise InvalidSurface(f"bad orientable kind {self}")
        else:
            if self.crosscaps < 1 or self.handles != 0:
                raise InvalidSurface(f"bad nonorientable kind {self}")
        if self.boundary < 0:
            raise InvalidSurface(f"negative boundary count in {self}")

    @property
    def euler(self) -> int:
        if self.orientable:
            return 2 - 2 * self.handles - self.boundary
        return 2 - self.crosscaps - self.boundary

    def is_closed(self) -> bool:
        return self.boundary == 0

    def name(self) -> str:
        base = {
            (True, 0): "sphere",
            (True, 1): "torus",
            (False, 1): "projective plane",
            (False, 2): "Klein bottle",
        }.get((self.orientable, self.handles if self.orientable else self.crosscaps))
        if base is None:
            base = (f"genus-{self.handles} surface" if self.orientable
                    else f"{self.crosscaps}-crosscap surface")
        if self.boundary:
            return f"{base} with {self.boundary} boundary circle(s)"
        return base

    def to_json(self) -> dict:
        return {"orientable": self.orientable, "handles": self.handles,
                "crosscaps": self.crosscaps, "boundary": self.boundary}

    @staticmethod
    def from_json(obj: dict) -> "SurfaceKind":
        return SurfaceKind(bool(obj["orientable"]), int(obj.get("handles", 0)),
                           int(obj.get("crosscaps", 0)), int(obj.get("boundary", 0)))


SPHERE = SurfaceKind(True, 0)
TORUS = SurfaceKind(True, 1)
PROJECTIVE_PLANE = SurfaceKind(False, crosscaps=1)
KLEIN_BOTTLE = SurfaceKind(False, crosscaps=2)


def euler_char(kind: SurfaceKind) -> int:
    return kind.euler


def classify_surface(chi: int, orientable: bool) -> SurfaceKind:
    """The unique closed surface with the given Euler characteristic."""
    if chi > 2:
        raise InvalidChi(f"chi={chi} exceeds 2")
    if orientable:
        if chi % 2 != 0:
            raise InvalidChi(f"orientable surfaces have even chi, got {chi}")
        return SurfaceKind(True, handles=(2 - chi) // 2)
    if chi == 2:
        raise InvalidChi("chi=2 forces the sphere, which is orientable")
    return SurfaceKind(False, crosscaps=2 - chi)


def classify_with_boundary(chi: int, boundary: int, orientable: bool) -> SurfaceKind:
    """Compact-surface classification; raises InvalidChi on impossible data."""
    if boundary < 0:
        raise InvalidChi("negative boundary count")
    if orientable:
        g2 = 2 - chi - boundary
        if g2 < 0 or g2 % 2 != 0:
            raise InvalidChi(f"no orientable surface with chi={chi}, b={boundary}")
        return SurfaceKind(True, handles=g2 // 2, boundary=boundary)
    c = 2 - chi - boundary
    if c < 1:
        raise InvalidChi(f"no nonorientable surface with chi={chi}, b={boundary}")
    return SurfaceKind(False, crosscaps=c, boundary=boundary)


def connected_sum_kind(kind: SurfaceKind, other: SurfaceKind) -> SurfaceKind:
    """Kind of the connected sum; `other` must be closed."""
    if not other.is_closed():
        raise InvalidSurface("can only sum with a closed surface")
    chi = kind.euler + other.euler - 2
    orientable = kind.orientable and other.orientable
    return classify_with_boundary(chi, kind.boundary, orientable)


# --------------------------------------------------------------------------
# Triangulations


@dataclass
class Triangulation:
    """Closed triangulated surface.

    edges[i] = (a, b) with a != b.  triangles[t] = three directed edges
    (edge index, sign) forming a closed walk; sign +1 traverses a -> b.
    rotations[v] = cyclic list of the edge indices incident to v, in the
    order the edge ends occur around v.
    """

    vertices: list
    edges: list
    triangles: list
    rotations: dict = field(default_factory=dict)

    # -- basic incidence ----------------------------------------------------

    def edge_ends(self, e: int) -> tuple:
        return self.edges[e]

    def half_edge_at(self, e: int, v) -> tuple:
        a, b = self.edges[e]
        if v == a:
            return (e, 0)
        if v == b:
            return (e, 1)
        raise InvalidSurface(f"edge {e} not incident to vertex {v}")

    def half_edge_vertex(self, he: tuple):
        e, end = he
        return self.edges[e][end]

    def directed_ends(self, d: tuple) -> tuple:
        """(tail, head) of the directed edge d = (edge, sign)."""
        e, s = d
        a, b = self.edges[e]
        return (a, b) if s > 0 else (b, a)

    def walk_vertices(self, t: int) -> list:
        return [self.directed_ends(d)[0] for d in self.triangles[t]]

    def triangle_edges(self, t: int) -> list:
        return [d[0] for d in self.triangles[t]]

    def triangle_corners(self, t: int):
        """Corners of triangle t as (vertex, incoming edge, outgoing edge)."""
        walk = self.triangles[t]
        out = []
        for i, d in enumerate(walk):
            nxt = walk[(i + 1) % 3]
            out.append((self.directed_ends(nxt)[0], d[0], nxt[0]))
        return out

    def corners_at(self, v):
        """All triangle corners at v as (triangle, incoming, outgoing)."""
        cache = self.__dict__.get("_corners_at")
        if cache is None:
            cache = {w: [] for w in self.vertices}
            for t in range(len(self.triangles)):
                for (w, e_in, e_out) in self.triangle_corners(t):
                    cache[w].append((t, e_in, e_out))
            self.__dict__["_corners_at"] = cache
        return cache[v]

    def edge_sides(self, e: int) -> list:
        """The (triangle, position) pairs whose walk uses edge e."""
        cache = self.__dict__.get("_edge_sides")
        if cache is None:
            cache = [[] for _ in self.edges]
            for t, walk in enumerate(self.triangles):
                for k, (ei, _s) in enumerate(walk):
                    cache[ei].append((t, k))
            self.__dict__["_edge_sides"] = cache
        return cache[e]

    def sector_triangles(self, v) -> list:
        """Triangle occupying each rotation sector (rot[i] -> rot[i+1]) at v."""
        cache = self.__dict__.get("_sectors")
        if cache is None:
            cache = {}
            self.__dict__["_sectors"] = cache
        if v not in cache:
            rot = self.rotations[v]
            m = len(rot)
            corners = self.corners_at(v)
            sectors = []
            used = [False] * len(corners)
            for i in range(m):
                pair = {rot[i], rot[(i + 1) % m]}
                pick = None
                for j, (t, e_in, e_out) in enumerate(corners):
                    if not used[j] and {e_in, e_out} == pair:
                        pick = j
                        break
                if pick is None:
                    raise InvalidSurface(f"rotation sector at {v} matches no corner")
                used[pick] = True
                sectors.append(corners[pick][0])
            cache[v] = sectors
        return cache[v]

    def vertex_degree(self, v) -> int:
        return len(self.rotations[v])

    def rotation_succ(self, v, e: int) -> int:
        rot = self.rotations[v]
        return rot[(rot.index(e) + 1) % len(rot)]

    def rotation_pred(self, v, e: int) -> int:
        rot = self.rotations[v]
        return rot[(rot.index(e) - 1) % len(rot)]

    @property
    def euler(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.triangles)

    # -- validation ---------------------------------------------------------

    def validate(self) -> list:
        """Every violated invariant, as strings; empty means valid."""
        problems = []
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            problems.append("duplicate vertex ids")
        for e, (a, b) in enumerate(self.edges):
            if a == b:
                problems.append(f"loop edge {e} at vertex {a}")
            if a not in vset or b not in vset:
                problems.append(f"edge {e} references unknown vertex")
        if problems:
            return problems

        for t, walk in enumerate(self.triangles):
            if len(walk) != 3:
                problems.append(f"triangle {t} does not have 3 sides")
                continue
            for i in range(3):
                head = self.directed_ends(walk[i])[1]
                tail = self.directed_ends(walk[(i + 1) % 3])[0]
                if head != tail:
                    problems.append(f"triangle {t} boundary walk does not close")
                    break
            if len({d[0] for d in walk}) != 3:
                problems.append(f"triangle {t} repeats an edge")

        side_count = [0] * len(self.edges)
        for walk in self.triangles:
            for (e, _s) in walk:
                if 0 <= e < len(self.edges):
                    side_count[e] += 1
        for e, n in enumerate(side_count):
            if n != 2:
                problems.append(f"edge {e} lies on {n} triangle sides, expected 2")
        if problems:
            return problems

        # rotations realize the corner structure at every vertex
        for v in self.vertices:
            rot = self.rotations.get(v)
            incident = sorted(e for e, (a, b) in enumerate(self.edges) if v in (a, b))
            if rot is None:
                problems.append(f"missing rotation at vertex {v}")
                continue
            if sorted(rot) != incident:
                problems.append(f"rotation at {v} is not a cyclic order of its edge ends")
                continue
            corners = sorted(tuple(sorted((e_in, e_out)))
                             for (_t, e_in, e_out) in self.corners_at(v))
            m = len(rot)
            adjacent = sorted(tuple(sorted((rot[i], rot[(i + 1) % m])))
                              for i in range(m))
            if corners != adjacent:
                problems.append(f"rotation at {v} disagrees with the triangle fan")

        if not self.is_connected():
            problems.append("complex is not connected")
        if problems:
            return problems

        try:
            kind = classify_surface(self.euler, self.orientability())
        except InvalidChi:
            problems.append("V-E+F matches no closed surface")
            return problems
        if kind.euler != self.euler:
            problems.append("euler characteristic mismatch")
        return problems

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        seen = {self.vertices[0]}
        frontier = [self.vertices[0]]
        adj = {v: [] for v in self.vertices}
        for (a, b) in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        while frontier:
            v = frontier.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return len(seen) == len(self.vertices)

    # -- orientation machinery ----------------------------------------------

    def triangle_signs(self):
        """Consistent orientation signs per triangle, or None if impossible.

        Sign +1 keeps the stored walk, -1 reverses it.  Two triangles are
        compatible across a shared edge iff they traverse it oppositely.
        """
        signs = {}
        for seed in range(len(self.triangles)):
            if seed in signs:
                continue
            signs[seed] = 1
            stack = [seed]
            while stack:
                t = stack.pop()
                for e in self.triangle_edges(t):
                    sides = self.edge_sides(e)
                    (t1, k1), (t2, k2) = sides
                    d1 = self.triangles[t1][k1][1]
                    d2 = self.triangles[t2][k2][1]
                    # opposite traversal <-> same sign
                    rel = 1 if d1 != d2 else -1
                    for (ta, tb) in ((t1, t2), (t2, t1)):
                        if ta in signs:
                            want = signs[ta] * rel
                            if tb in signs:
                                if signs[tb] != want:
                                    return None
                            else:
                                signs[tb] = want
                                stack.append(tb)
        return signs

    def orientability(self) -> bool:
        return self.triangle_signs() is not None

    def classify(self) -> SurfaceKind:
        return classify_surface(self.euler, self.orientability())

    def edge_compatible(self, e: int) -> bool:
        """Whether the stored rotations at the two ends of e induce the
        same local orientation on the two-triangle band around e.

        Evaluated through one flanking triangle's own walk, so it is
        well defined even at degree-2 vertices.
        """
        (t1, k1) = self.edge_sides(e)[0]
        walk = self.triangles[t1]
        d = walk[k1]
        tail, head = self.directed_ends(d)
        e_prev = walk[(k1 - 1) % 3][0]   # t1's edge arriving at tail
        e_next = walk[(k1 + 1) % 3][0]   # t1's edge leaving head
        at_tail = self.rotation_succ(tail, e) == e_prev
        at_head = self.rotation_succ(head, e_next) == e
        return at_tail == at_head

    def rotation_ccw_bits(self, signs=None):
        """Per-vertex bit: 0 if the stored rotation is counterclockwise for
        the orientation given by triangle signs, 1 if clockwise.

        Raises InvalidSurface when corners at one vertex disagree (data
        does not describe a surface) or when nonorientable.
        """
        if signs is None:
            signs = self.triangle_signs()
        if signs is None:
            raise InvalidSurface("nonorientable triangulation has no global rotation sense")
        bits = {}
        for t, walk in enumerate(self.triangles):
            dirs = walk if signs[t] > 0 else [(e, -s) for (e, s) in reversed(walk)]
            for i in range(3):
                e_in = dirs[i]
                e_out = dirs[(i + 1) % 3]
                v = self.directed_ends(e_in)[1]
                # ccw rotation crosses the corner from the outgoing side
                # to the incoming side
                bit = 0 if self.rotation_succ(v, e_out[0]) == e_in[0] else 1
                if self.rotation_pred(v, e_out[0]) != e_in[0] and bit == 1:
                    raise InvalidSurface(f"corner of triangle {t} at {v} not adjacent in rotation")
                if v in bits and bits[v] != bit:
                    raise InvalidSurface(f"inconsistent rotation sense at vertex {v}")
                bits[v] = bit
        return bits

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "type": "triangulation",
            "vertices": list(self.vertices),
            "edges": [list(e) for e in self.edges],
            "triangles": [[[e, s] for (e, s) in walk] for walk in self.triangles],
            "rotations": {str(v): list(rot) for v, rot in self.rotations.items()},
        }

    @staticmethod
    def from_json(obj: dict) -> "Triangulation":
        if obj.get("type") != "triangulation":
            raise InvalidSurface("not a triangulation document")
        vertices = list(obj["vertices"])
        by_name = {str(v): v for v in vertices}
        rotations = {by_name[k]: [int(e) for e in rot]
                     for k, rot in obj["rotations"].items()}
        return Triangulation(
            vertices=vertices,
            edges=[tuple(e) for e in obj["edges"]],
            triangles=[[(int(e), int(s)) for (e, s) in walk] for walk in obj["triangles"]],
            rotations=rotations,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def validate_triangulation(tri: Triangulation) -> list:
    return tri.validate()


def orientability(tri: Triangulation) -> bool:
    return tri.orientability()


# --------------------------------------------------------------------------
# Construction helpers and built-in complexes


def derive_rotations(vertices, edges, triangles) -> dict:
    """Recover a rotation at each vertex from the triangle corner fans.

    The corners at v form a 2-regular multigraph on the edge ends at v;
    a valid closed surface makes it a single cycle, which becomes the
    rotation (direction chosen arbitrarily).
    """
    tri = Triangulation(vertices, edges, triangles, rotations={})
    rotations = {}
    for v in vertices:
        corners = [(e_in, e_out) for (_t, e_in, e_out) in tri.corners_at(v)]
        incident = [e for e, (a, b) in enumerate(edges) if v in (a, b)]
        if not corners:
            raise InvalidSurface(f"vertex {v} has no incident triangle corners")
        slots = {e: [] for e in incident}
        for i, (x, y) in enumerate(corners):
            slots[x].append(i)
            slots[y].append(i)
        if any(len(s) != 2 for s in slots.values()):
            raise InvalidSurface(f"vertex link at {v} is not a cycle")
        cycle = [corners[0][0], corners[0][1]]
        used = {0}
        while len(cycle) < len(incident):
            cur = cycle[-1]
            step = [i for i in slots[cur] if i not in used]
            if not step:
                raise InvalidSurface(f"vertex link at {v} is not a single cycle")
            i = step[0]
            used.add(i)
            x, y = corners[i]
            cycle.append(y if x == cur else x)
        # closing corner must exist and be the one unused
        rest = set(range(len(corners))) - used
        if len(rest) != 1:
            raise InvalidSurface(f"vertex link at {v} is not a single cycle")
        i = rest.pop()
        if set(corners[i]) != {cycle[-1], cycle[0]} and len(incident) > 1:
            raise InvalidSurface(f"vertex link at {v} does not close")
        rotations[v] = cycle
    return rotations


def complex_from_faces(face_lists) -> Triangulation:
    """Build a triangulation from vertex triples, deriving edges, walks
    and rotations.  Each unordered vertex pair may carry several edges
    only if faces reference them via explicit edge indices; plain vertex
    triples assume simple edges."""
    vertices = sorted({v for f in face_lists for v in f})
    edge_idx = {}
    edges = []
    for f in face_lists:
        for i in range(3):
            a, b = f[i], f[(i + 1) % 3]
            key = tuple(sorted((a, b)))
            if key not in edge_idx:
                edge_idx[key] = len(edges)
                edges.append(key)
    triangles = []
    for f in face_lists:
        walk = []
        for i in range(3):
            a, b = f[i], f[(i + 1) % 3]
            e = edge_idx[tuple(sorted((a, b)))]
            walk.append((e, 1 if edges[e] == (a, b) else -1))
        triangles.append(walk)
    rotations = derive_rotations(vertices, edges, triangles)
    return Triangulation(vertices, edges, triangles, rotations)


def glued_complex(vertices, edges, triangles) -> Triangulation:
    """Triangulation from explicit edge/walk data (parallel edges allowed)."""
    rotations = derive_rotations(vertices, edges, triangles)
    return Triangulation(vertices, edges, triangles, rotations)


def _sphere_tetra() -> Triangulation:
    return complex_from_faces([(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)])


def _rp2_6() -> Triangulation:
    caps = [(0, i, i % 5 + 1) for i in range(1, 6)]
    middles = [(1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3)]
    return complex_from_faces(caps + middles)


def _torus_7() -> Triangulation:
    faces = []
    for i in range(7):
        faces.append((i, (i + 1) % 7, (i + 3) % 7))
        faces.append((i, (i + 2) % 7, (i + 3) % 7))
    return complex_from_faces(faces)


def _klein_8() -> Triangulation:
    """A minimal (8-vertex) Klein bottle triangulation."""
    faces = [(0, 1, 2), (0, 1, 3), (0, 2, 4), (0, 3, 4),
             (1, 2, 5), (1, 3, 6), (1, 5, 4), (1, 4, 6),
             (2, 4, 6), (2, 5, 3), (2, 3, 7), (2, 6, 7),
             (3, 4, 7), (3, 5, 6), (4, 5, 7), (5, 6, 7)]
    return complex_from_faces(faces)


def _genus2() -> Triangulation:
    """Connected sum of two 7-vertex tori along a removed triangle."""
    t = _torus_7()
    shift = 7

    def build(identify):
        faces = []
        removed = (0, (0 + 1) % 7, (0 + 3) % 7)  # face (0,1,3)
        for fi in range(len(t.triangles)):
            vs = tuple(t.walk_vertices(fi))
            if set(vs) == set(removed):
                continue
            faces.append(vs)
        faces_b = []
        for vs in faces:
            faces_b.append(tuple(identify.get(v + shift, v + shift) for v in vs))
        all_faces = [tuple(vs) for vs in faces] + faces_b
        return complex_from_faces(all_faces)

    # try both boundary identifications; keep the orientable one
    for perm in ((0, 1, 3), (0, 3, 1), (1, 0, 3), (1, 3, 0), (3, 0, 1), (3, 1, 0)):
        identify = {0 + shift: perm[0], 1 + shift: perm[1], 3 + shift: perm[2]}
        tri = build(identify)
        if not tri.validate() and tri.orientability() and tri.euler == -2:
            return tri
    raise InvalidSurface("no orientable genus-2 gluing found")


_BUILTIN_CACHE = {}


def builtin_triangulation(name: str) -> Triangulation:
    builders = {
        "sphere_tetra": _sphere_tetra,
        "rp2_6": _rp2_6,
        "torus_7": _torus_7,
        "klein_8": _klein_8,
        "genus2": _genus2,
    }
    if name not in builders:
        raise UnknownName(f"unknown triangulation {name!r}; "
                          f"choose from {sorted(builders)}")
    if name not in _BUILTIN_CACHE:
        tri = builders[name]()
        problems = tri.validate()
        if problems:
            raise InvalidSurface(f"builtin {name} failed validation: {problems}")
        _BUILTIN_CACHE[name] = tri
    return _BUILTIN_CACHE[name]


BUILTIN_NAMES = ("sphere_tetra", "rp2_6", "torus_7", "klein_8", "genus2")
