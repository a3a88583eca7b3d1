"""Combinatorial model of a surface map transversal to the target skeleton.

The preimage graph sits in the domain as a signed ribbon graph: darts with
an edge pairing, a rotation (cyclic dart order per vertex), and a sign per
edge saying whether the edge's band preserves the local sheet orientation.
Every dart is labeled by a half-edge of the target; the complement of the
graph is a list of regions, each an abstract compact surface attached
along boundary circuits of the ribbon structure (or along sides of
isolated circles, which carry no vertices).

Boundary circuits are traced on side-end tokens (dart, side).  A region
stores each of its circuits as a token sequence whose direction is the
one induced by the region's reference orientation (of its planar part,
for nonorientable kinds); this direction data is what makes orientability
of the domain, surgery compatibility and factorization directions
computable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (BadKind, Disconnected, DisconnectedCover,
                     InconsistentParity, InputError, InternalInconsistency,
                     InvalidSurface, NotOrientable, UnknownName)
from .surfaces import (SurfaceKind, Triangulation, classify_surface,
                       connected_sum_kind, builtin_triangulation)
from . import covers as covers_mod


# --------------------------------------------------------------------------
# Small helpers


class ParityUF:
    """Union-find over arbitrary keys with a parity bit per edge;
    detects contradictions in xor-constraint systems."""

    def __init__(self):
        self.parent = {}
        self.parity = {}
        self.ok = True

    def find(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.parity[x] = 0
        # full path compression with parity accumulation
        root = x
        acc = 0
        while self.parent[root] != root:
            acc ^= self.parity[root]
            root = self.parent[root]
        # second pass
        cur = x
        p = acc
        while self.parent[cur] != cur:
            nxt = self.parent[cur]
            np = p ^ self.parity[cur]
            self.parent[cur] = root
            self.parity[cur] = p
            p = np
            cur = nxt
        return root, acc

    def union(self, x, y, rel: int):
        """Impose value(x) xor value(y) == rel."""
        rx, px = self.find(x)
        ry, py = self.find(y)
        if rx == ry:
            if px ^ py != rel:
                self.ok = False
            return
        self.parent[rx] = ry
        self.parity[rx] = px ^ py ^ rel

    def value(self, x, seed_root_values=None):
        root, p = self.find(x)
        return p

    def same(self, x, y):
        return self.find(x)[0] == self.find(y)[0]


# --------------------------------------------------------------------------
# Data model


@dataclass(frozen=True)
class IsolatedCircle:
    edge: int   # target edge whose interior the circle maps into


@dataclass(frozen=True)
class RibbonCircuit:
    """Alternating token sequence (band step, corner step, ...); tokens are
    (dart, side) pairs, side 0/1 being the two ends of a dart's band side."""
    seq: tuple

    def tokens(self):
        return self.seq

    def token_set(self):
        return frozenset(self.seq)

    def reversed(self):
        return RibbonCircuit(tuple(reversed(self.seq)))


@dataclass(frozen=True)
class IsoSide:
    index: int        # isolated circle index
    side: int         # 0 or 1
    direction: int    # +1: the region-induced direction equals the circle's own


@dataclass
class Region:
    label: int                 # target triangle
    kind: SurfaceKind          # boundary == len(circuits)
    circuits: list = field(default_factory=list)

    def copy(self):
        return Region(self.label, self.kind, list(self.circuits))


@dataclass
class TransverseMap:
    target: Triangulation
    pairing: dict              # dart -> dart (fixed-point-free involution)
    rotation: dict             # dart -> next dart at the same vertex
    edge_sign: dict            # edge key (min dart of the pair) -> +1/-1
    vertex_label: dict         # dart -> target vertex (constant on rotation orbits)
    dart_label: dict           # dart -> (target edge, end)
    isolated: list = field(default_factory=list)   # list[IsolatedCircle]
    regions: list = field(default_factory=list)    # list[Region]

    # -- elementary structure -------------------------------------------------

    def darts(self):
        return sorted(self.pairing)

    def edge_key(self, d: int) -> int:
        return min(d, self.pairing[d])

    def edge_keys(self):
        return sorted({self.edge_key(d) for d in self.pairing})

    def sign(self, d: int) -> int:
        return self.edge_sign[self.edge_key(d)]

    def rot_inv(self):
        cache = self.__dict__.get("_rot_inv")
        if cache is None:
            cache = {v: k for k, v in self.rotation.items()}
            self.__dict__["_rot_inv"] = cache
        return cache

    def vertex_of(self, d: int) -> int:
        """Canonical vertex id: minimal dart of the rotation orbit."""
        cache = self.__dict__.get("_vertex_of")
        if cache is None:
            cache = {}
            for d0 in self.pairing:
                if d0 in cache:
                    continue
                orbit = [d0]
                cur = self.rotation[d0]
                while cur != d0:
                    orbit.append(cur)
                    cur = self.rotation[cur]
                rep = min(orbit)
                for x in orbit:
                    cache[x] = rep
            self.__dict__["_vertex_of"] = cache
        return cache[d]

    def vertex_darts(self, d: int) -> list:
        """Darts at d's vertex in rotation order, starting at the rep."""
        rep = self.vertex_of(d)
        orbit = [rep]
        cur = self.rotation[rep]
        while cur != rep:
            orbit.append(cur)
            cur = self.rotation[cur]
        return orbit

    def vertex_reps(self) -> list:
        return sorted({self.vertex_of(d) for d in self.pairing})

    def invalidate_caches(self):
        for k in ("_vertex_of", "_rot_inv", "_traced", "_local_signs"):
            self.__dict__.pop(k, None)

    # -- token walking ----------------------------------------------------------

    def band_step(self, token):
        d, x = token
        d2 = self.pairing[d]
        return (d2, 1 - x) if self.sign(d) > 0 else (d2, x)

    def corner_step(self, token):
        d, x = token
        if x == 1:
            return (self.rotation[d], 0)
        return (self.rot_inv()[d], 1)

    def trace_circuits(self):
        """All boundary circuits of the ribbon graph, each an alternating
        token tuple starting with a band step from its minimal token."""
        cached = self.__dict__.get("_traced")
        if cached is not None:
            return cached
        tokens = [(d, x) for d in sorted(self.pairing) for x in (0, 1)]
        seen = set()
        out = []
        for t0 in tokens:
            if t0 in seen:
                continue
            seq = []
            cur = t0
            while True:
                nxt = self.band_step(cur)
                seq.append(cur)
                seq.append(nxt)
                cur = self.corner_step(nxt)
                if cur == t0:
                    break
            start = seq.index(min(seq))
            if start % 2 == 1:
                # keep the band-step phase: walk the same direction but
                # begin at the minimal even-position token
                evens = [seq[i] for i in range(0, len(seq), 2)]
                start = seq.index(min(evens))
            seq = seq[start:] + seq[:start]
            out.append(RibbonCircuit(tuple(seq)))
            seen.update(seq)
        out.sort(key=lambda c: c.seq[0] if c.seq else (-1, -1))
        self.__dict__["_traced"] = out
        return out

    # -- derived labels -----------------------------------------------------------

    def label_edge(self, d: int) -> int:
        return self.dart_label[d][0]

    def local_signs(self):
        """Per vertex rep: +1 if the dart labels in rotation order read the
        target rotation forward, -1 if backward, None if neither."""
        cached = self.__dict__.get("_local_signs")
        if cached is not None:
            return cached
        out = {}
        for rep in self.vertex_reps():
            darts = self.vertex_darts(rep)
            labels = [self.label_edge(d) for d in darts]
            P = self.vertex_label[rep]
            rot = self.target.rotations.get(P)
            out[rep] = None
            if rot is None or len(rot) != len(labels):
                continue
            m = len(rot)
            for shift in range(m):
                if all(labels[(shift + i) % m] == rot[i] for i in range(m)):
                    out[rep] = 1
                    break
            if out[rep] is None:
                rrot = list(reversed(rot))
                for shift in range(m):
                    if all(labels[(shift + i) % m] == rrot[i] for i in range(m)):
                        out[rep] = -1
                        break
        self.__dict__["_local_signs"] = out
        return out

    # -- region-side structure ------------------------------------------------------

    def region_of_token(self):
        """token -> region index, from the stored circuits."""
        out = {}
        for ri, reg in enumerate(self.regions):
            for c in reg.circuits:
                if isinstance(c, RibbonCircuit):
                    for tok in c.seq:
                        out[tok] = ri
        return out

    def region_of_iso_side(self):
        out = {}
        for ri, reg in enumerate(self.regions):
            for c in reg.circuits:
                if isinstance(c, IsoSide):
                    out[(c.index, c.side)] = (ri, c.direction)
        return out

    def stored_direction_bits(self):
        """(token -> successor token) along each stored circuit."""
        succ = {}
        for reg in self.regions:
            for c in reg.circuits:
                if isinstance(c, RibbonCircuit):
                    n = len(c.seq)
                    for i in range(n):
                        succ[c.seq[i]] = c.seq[(i + 1) % n]
        return succ

    def copy(self) -> "TransverseMap":
        return TransverseMap(
            target=self.target,
            pairing=dict(self.pairing),
            rotation=dict(self.rotation),
            edge_sign=dict(self.edge_sign),
            vertex_label=dict(self.vertex_label),
            dart_label=dict(self.dart_label),
            isolated=list(self.isolated),
            regions=[r.copy() for r in self.regions],
        )

    # -- serialization ----------------------------------------------------------------

    def to_json(self) -> dict:
        def circ(c):
            if isinstance(c, RibbonCircuit):
                return {"kind": "ribbon", "seq": [list(t) for t in c.seq]}
            return {"kind": "iso", "index": c.index, "side": c.side,
                    "direction": c.direction}
        return {
            "type": "transverse_map",
            "target": self.target.to_json(),
            "pairing": {str(d): p for d, p in sorted(self.pairing.items())},
            "rotation": {str(d): r for d, r in sorted(self.rotation.items())},
            "edge_sign": {str(k): s for k, s in sorted(self.edge_sign.items())},
            "vertex_label": {str(d): v for d, v in sorted(self.vertex_label.items())},
            "dart_label": {str(d): list(l) for d, l in sorted(self.dart_label.items())},
            "isolated": [{"edge": c.edge} for c in self.isolated],
            "regions": [{"label": r.label, "kind": r.kind.to_json(),
                         "circuits": [circ(c) for c in r.circuits]}
                        for r in self.regions],
        }

    @staticmethod
    def from_json(obj: dict) -> "TransverseMap":
        if obj.get("type") != "transverse_map":
            raise InputError("not a transverse_map document")
        target = Triangulation.from_json(obj["target"])
        vmap = {str(v): v for v in target.vertices}

        def circ(c):
            if c["kind"] == "ribbon":
                return RibbonCircuit(tuple(tuple(t) for t in c["seq"]))
            return IsoSide(int(c["index"]), int(c["side"]), int(c["direction"]))
        return TransverseMap(
            target=target,
            pairing={int(d): int(p) for d, p in obj["pairing"].items()},
            rotation={int(d): int(r) for d, r in obj["rotation"].items()},
            edge_sign={int(k): int(s) for k, s in obj["edge_sign"].items()},
            vertex_label={int(d): vmap.get(str(v), v)
                          for d, v in obj["vertex_label"].items()},
            dart_label={int(d): (int(l[0]), int(l[1]))
                        for d, l in obj["dart_label"].items()},
            isolated=[IsolatedCircle(int(c["edge"])) for c in obj["isolated"]],
            regions=[Region(int(r["label"]), SurfaceKind.from_json(r["kind"]),
                            [circ(c) for c in r["circuits"]])
                     for r in obj["regions"]],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# --------------------------------------------------------------------------
# Circuit classification


@dataclass(frozen=True)
class CircuitClass:
    variant: str               # "essential" | "isolated_side" | "irregular"
    index: int = 0
    direction: int = 0


def circuit_word(tm: TransverseMap, circuit: RibbonCircuit) -> list:
    """Target edges crossed by the circuit, in stored order."""
    return [tm.label_edge(circuit.seq[i][0]) for i in range(0, len(circuit.seq), 2)]


def classify_circuit(tm: TransverseMap, region: Region, circuit) -> CircuitClass:
    if isinstance(circuit, IsoSide):
        return CircuitClass("isolated_side")
    word = circuit_word(tm, circuit)
    tri_word = tm.target.triangle_edges(region.label)
    n = len(word)
    if n % 3 == 0 and n > 0:
        k = n // 3
        for direction, base in ((1, tri_word), (-1, list(reversed(tri_word)))):
            pattern = base * k
            for shift in range(3):
                if all(word[i] == pattern[(i + shift) % n] for i in range(n)):
                    return CircuitClass("essential", k, direction)
    return CircuitClass("irregular")


# --------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    problems: list = field(default_factory=list)
    circuit_classes: dict = field(default_factory=dict)   # (region idx, pos) -> CircuitClass

    @property
    def ok(self) -> bool:
        return not self.problems

    def add(self, msg: str):
        self.problems.append(msg)


def validate_map(tm: TransverseMap) -> ValidationReport:
    rep = ValidationReport()
    T = tm.target

    darts = set(tm.pairing)
    if set(tm.rotation) != darts or set(tm.dart_label) != darts \
            or set(tm.vertex_label) != darts:
        rep.add("dart tables disagree on the dart set")
        return rep
    for d, p in tm.pairing.items():
        if p == d or tm.pairing.get(p) != d:
            rep.add(f"pairing is not a fixed-point-free involution at dart {d}")
            return rep
    if sorted(tm.rotation.values()) != sorted(darts):
        rep.add("rotation is not a permutation of the darts")
        return rep
    for d in darts:
        k = tm.edge_key(d)
        if tm.edge_sign.get(k) not in (1, -1):
            rep.add(f"missing or bad sign for edge {k}")
            return rep
    for c in tm.isolated:
        if not (0 <= c.edge < len(T.edges)):
            rep.add(f"isolated circle labeled by unknown edge {c.edge}")
            return rep

    # vertex labels constant on rotation orbits; half-edge bijection; fan order
    local = tm.local_signs()
    for vrep in tm.vertex_reps():
        vd = tm.vertex_darts(vrep)
        P = tm.vertex_label[vrep]
        if any(tm.vertex_label[d] != P for d in vd):
            rep.add(f"vertex labels differ around vertex {vrep}")
            continue
        if P not in T.rotations:
            rep.add(f"vertex {vrep} labeled by unknown target vertex {P}")
            continue
        half_at_P = sorted((e, end) for e, (a, b) in enumerate(T.edges)
                           for end in (0, 1) if (a, b)[end] == P)
        labels = sorted(tm.dart_label[d] for d in vd)
        if labels != half_at_P:
            rep.add(f"darts at vertex {vrep} do not biject onto the half-edges at {P}")
            continue
        if local[vrep] is None:
            rep.add(f"dart labels around vertex {vrep} do not read the target rotation")

    # edge coherence and band sign coherence
    for k in tm.edge_keys():
        d1, d2 = k, tm.pairing[k]
        e1, end1 = tm.dart_label[d1]
        e2, end2 = tm.dart_label[d2]
        if e1 != e2:
            rep.add(f"edge {k} carries two different target edges")
            continue
        s = tm.edge_sign[k]
        l1 = local.get(tm.vertex_of(d1))
        l2 = local.get(tm.vertex_of(d2))
        if l1 is None or l2 is None:
            continue
        if tm.vertex_of(d1) == tm.vertex_of(d2):
            rep.add(f"edge {k} is a loop")
            continue
        if (e1, end1) == (e2, end2):
            want = -l1 * l2
        else:
            want = l1 * l2 * (1 if T.edge_compatible(e1) else -1)
        if s != want:
            rep.add(f"edge {k} has sign {s}, band geometry forces {want}")

    if rep.problems:
        return rep

    # stored circuits must tile the traced circuits and isolated sides
    traced = tm.trace_circuits()
    traced_sets = {c.token_set(): c for c in traced}
    stored_sets = {}
    iso_seen = {}
    for ri, region in enumerate(tm.regions):
        if region.kind.boundary != len(region.circuits):
            rep.add(f"region {ri} kind boundary count disagrees with its circuits")
        if not (0 <= region.label < len(T.triangles)):
            rep.add(f"region {ri} labeled by unknown triangle")
            continue
        for pos, c in enumerate(region.circuits):
            if isinstance(c, IsoSide):
                if not (0 <= c.index < len(tm.isolated)) or c.side not in (0, 1):
                    rep.add(f"region {ri} references a bad isolated side")
                    continue
                if (c.index, c.side) in iso_seen:
                    rep.add(f"isolated side ({c.index},{c.side}) used twice")
                iso_seen[(c.index, c.side)] = ri
                continue
            if not _walk_ok(tm, c):
                rep.add(f"region {ri} circuit {pos} is not an alternating boundary walk")
                continue
            key = c.token_set()
            if key in stored_sets:
                rep.add(f"circuit stored twice (regions {stored_sets[key]} and {ri})")
            stored_sets[key] = ri
            if key not in traced_sets:
                rep.add(f"region {ri} circuit {pos} does not match any traced circuit")
    for key in traced_sets:
        if key not in stored_sets:
            rep.add("a traced boundary circuit belongs to no region")
    for i in range(len(tm.isolated)):
        for side in (0, 1):
            if (i, side) not in iso_seen:
                rep.add(f"isolated circle {i} side {side} belongs to no region")
    if rep.problems:
        return rep

    # corner condition and classification
    for ri, region in enumerate(tm.regions):
        B = region.label
        tri_edges = set(T.triangle_edges(B))
        for pos, c in enumerate(region.circuits):
            rep.circuit_classes[(ri, pos)] = classify_circuit(tm, region, c)
            if isinstance(c, IsoSide):
                continue
            n = len(c.seq)
            for i in range(1, n + 1, 2):
                a = c.seq[i % n]
                b = c.seq[(i + 1) % n]
                # corner step between a and b at a's vertex
                ea = tm.label_edge(a[0])
                eb = tm.label_edge(b[0])
                P = tm.vertex_label[a[0]]
                if ea not in tri_edges or eb not in tri_edges:
                    rep.add(f"region {ri} circuit {pos} corner labels not on its triangle")
                    break
                if P not in (T.edges[ea][0], T.edges[ea][1]) or \
                        P not in (T.edges[eb][0], T.edges[eb][1]):
                    rep.add(f"region {ri} circuit {pos} corner not at its vertex label")
                    break

    # side coherence: regions flanking an edge are labeled by its two triangles
    tok2reg = tm.region_of_token()
    for k in tm.edge_keys():
        e = tm.label_edge(k)
        t1, t2 = (s[0] for s in T.edge_sides(e))
        sides = set()
        for tok in ((k, 0), (k, 1)):
            ri = tok2reg.get(tok)
            if ri is not None:
                sides.add(tm.regions[ri].label)
        if sides != {t1, t2}:
            rep.add(f"edge {k} flanked by regions labeled {sorted(sides)}, "
                    f"expected {sorted({t1, t2})}")
    iso2reg = tm.region_of_iso_side()
    for i, circle in enumerate(tm.isolated):
        t1, t2 = (s[0] for s in T.edge_sides(circle.edge))
        got = {tm.regions[iso2reg[(i, s)][0]].label for s in (0, 1)
               if (i, s) in iso2reg}
        if got != {t1, t2}:
            rep.add(f"isolated circle {i} flanked by regions labeled {sorted(got)}, "
                    f"expected {sorted({t1, t2})}")

    # mod-2 preimage parity agreement across target vertices
    counts = {P: 0 for P in T.vertices}
    for vrep in tm.vertex_reps():
        counts[tm.vertex_label[vrep]] += 1
    parities = {c % 2 for c in counts.values()}
    if len(parities) > 1:
        rep.add("preimage counts of target vertices have mixed parity")
    return rep


def _walk_ok(tm: TransverseMap, c: RibbonCircuit) -> bool:
    n = len(c.seq)
    if n == 0 or n % 2 != 0:
        return False
    for i in range(0, n, 2):
        if tm.band_step(c.seq[i]) != c.seq[i + 1]:
            return False
        nxt = c.seq[(i + 2) % n]
        if tm.corner_step(c.seq[i + 1]) != nxt:
            return False
    return True


def require_valid(tm: TransverseMap, context: str = ""):
    rep = validate_map(tm)
    if not rep.ok:
        raise InternalInconsistency(f"{context}: {rep.problems[:4]}")
    return rep


# --------------------------------------------------------------------------
# Counts and invariants


def edge_count(tm: TransverseMap) -> int:
    """Edges of the preimage graph, isolated circles counting as one each."""
    return len(tm.edge_keys()) + len(tm.isolated)


def graph_euler(tm: TransverseMap) -> int:
    return len(tm.vertex_reps()) - len(tm.edge_keys())


def chi_domain(tm: TransverseMap) -> int:
    _require_connected(tm)
    return graph_euler(tm) + sum(r.kind.euler for r in tm.regions)


def _require_connected(tm: TransverseMap):
    uf = ParityUF()
    nodes = set()
    for d in tm.pairing:
        nodes.add(("v", tm.vertex_of(d)))
    for k in tm.edge_keys():
        uf.union(("v", tm.vertex_of(k)), ("v", tm.vertex_of(tm.pairing[k])), 0)
    for ri, region in enumerate(tm.regions):
        nodes.add(("r", ri))
        for c in region.circuits:
            if isinstance(c, RibbonCircuit):
                uf.union(("r", ri), ("v", tm.vertex_of(c.seq[0][0])), 0)
            else:
                uf.union(("r", ri), ("i", c.index), 0)
    for i in range(len(tm.isolated)):
        nodes.add(("i", i))
    roots = {uf.find(n)[0] for n in nodes}
    if len(roots) > 1:
        raise Disconnected(f"domain has {len(roots)} components")


def _orientation_system(tm: TransverseMap, *, ignore_kinds: bool = False):
    """Parity union-find of the orientation constraints.

    Variables: ('v', vertex) chart flips and ('r', region) reference flips.
    Returns (uf, plain_orientable) where plain_orientable means the system
    is consistent; the domain additionally needs orientable region kinds.
    """
    uf = ParityUF()
    for k in tm.edge_keys():
        sbit = 0 if tm.edge_sign[k] > 0 else 1
        uf.union(("v", tm.vertex_of(k)), ("v", tm.vertex_of(tm.pairing[k])), sbit)
    for ri, region in enumerate(tm.regions):
        for c in region.circuits:
            if not isinstance(c, RibbonCircuit):
                continue
            n = len(c.seq)
            for i in range(1, n + 1, 2):
                a = c.seq[i % n]
                # corner step from a: type bit 0 when leaving side 1 (ccw)
                tbit = 0 if a[1] == 1 else 1
                v = tm.vertex_of(a[0])
                uf.union(("v", v), ("r", ri), 1 ^ tbit)
    iso_sides = tm.region_of_iso_side()
    for i in range(len(tm.isolated)):
        a = iso_sides.get((i, 0))
        b = iso_sides.get((i, 1))
        if a is None or b is None:
            continue
        (ra, da), (rb, db) = a, b
        bit_a = 0 if da > 0 else 1
        bit_b = 0 if db > 0 else 1
        uf.union(("r", ra), ("r", rb), 1 ^ bit_a ^ bit_b)
    return uf, uf.ok


def domain_orientable(tm: TransverseMap) -> bool:
    if any(not r.kind.orientable for r in tm.regions):
        return False
    _uf, ok = _orientation_system(tm)
    return ok


def domain_kind(tm: TransverseMap) -> SurfaceKind:
    chi = chi_domain(tm)
    return classify_surface(chi, domain_orientable(tm))


def mod2_degree(tm: TransverseMap) -> int:
    counts = {P: 0 for P in tm.target.vertices}
    for vrep in tm.vertex_reps():
        counts[tm.vertex_label[vrep]] += 1
    parities = {c % 2 for c in counts.values()}
    if len(parities) > 1:
        raise InconsistentParity(f"preimage parities differ: {counts}")
    return parities.pop() if parities else 0


def signed_degree(tm: TransverseMap, orient_m: int = 1, orient_n: int = 1) -> int:
    """Signed preimage count over a target vertex, for chosen orientations
    given as +1/-1 flips of the canonical ones.  The canonical domain
    orientation is normalized so the identity-like vertex of least id
    counts +1."""
    if not tm.target.orientability():
        raise NotOrientable("target is not orientable")
    if not domain_orientable(tm):
        raise NotOrientable("domain is not orientable")
    signs = tm.target.triangle_signs()
    rot_bits = tm.target.rotation_ccw_bits(signs)
    uf, ok = _orientation_system(tm)
    if not ok:
        raise NotOrientable("domain is not orientable")
    local = tm.local_signs()

    vreps = tm.vertex_reps()
    if not vreps:
        return 0
    base = {}
    for vrep in vreps:
        _root, p = uf.find(("v", vrep))
        P = tm.vertex_label[vrep]
        base[vrep] = (-1) ** p * local[vrep] * (-1) ** rot_bits[P]
    # canonical: least vertex counts +1
    norm = base[min(vreps)]
    sums = {P: 0 for P in tm.target.vertices}
    for vrep in vreps:
        sums[tm.vertex_label[vrep]] += base[vrep] * norm
    values = set(sums.values())
    if len(values) > 1:
        raise InternalInconsistency(f"signed counts differ across vertices: {sums}")
    return values.pop() * orient_m * orient_n


# --------------------------------------------------------------------------
# Constructors


def _assign_region_labels(tm: TransverseMap, circuits) -> list:
    """Pick the target triangle whose corner fan matches each circuit."""
    T = tm.target
    labels = []
    for c in circuits:
        n = len(c.seq)
        cands = None
        for i in range(1, n + 1, 2):
            a = c.seq[i % n]
            b = c.seq[(i + 1) % n]
            ea, eb = tm.label_edge(a[0]), tm.label_edge(b[0])
            P = tm.vertex_label[a[0]]
            here = set()
            for (t, e_in, e_out) in T.corners_at(P):
                if {e_in, e_out} == {ea, eb}:
                    here.add(t)
            cands = here if cands is None else (cands & here)
        if not cands:
            raise InternalInconsistency("circuit corners match no triangle")
        labels.append(min(cands))
    return labels


def identity_map(tri: Triangulation) -> TransverseMap:
    """Preimage graph equal to the skeleton, one disk region per triangle."""
    problems = tri.validate()
    if problems:
        raise InvalidSurface(f"invalid target: {problems}")
    pairing = {}
    rotation = {}
    edge_sign = {}
    vertex_label = {}
    dart_label = {}

    def dart(e, end):
        return 2 * e + end

    for e, (a, b) in enumerate(tri.edges):
        pairing[dart(e, 0)] = dart(e, 1)
        pairing[dart(e, 1)] = dart(e, 0)
        dart_label[dart(e, 0)] = (e, 0)
        dart_label[dart(e, 1)] = (e, 1)
        vertex_label[dart(e, 0)] = a
        vertex_label[dart(e, 1)] = b
        edge_sign[dart(e, 0)] = 1 if tri.edge_compatible(e) else -1
    for P in tri.vertices:
        rot = tri.rotations[P]
        ds = [dart(e, 0 if tri.edges[e][0] == P else 1) for e in rot]
        for i, d in enumerate(ds):
            rotation[d] = ds[(i + 1) % len(ds)]

    tm = TransverseMap(tri, pairing, rotation, edge_sign,
                       vertex_label, dart_label, [], [])
    circuits = tm.trace_circuits()
    regions = []
    remaining = set(range(len(tri.triangles)))
    for c in circuits:
        n = len(c.seq)
        cands = None
        for i in range(1, n + 1, 2):
            a, b = c.seq[i % n], c.seq[(i + 1) % n]
            ea, eb = tm.label_edge(a[0]), tm.label_edge(b[0])
            P = tm.vertex_label[a[0]]
            here = {t for (t, x, y) in tri.corners_at(P) if {x, y} == {ea, eb}}
            cands = here if cands is None else cands & here
        pick = min(cands & remaining)
        remaining.discard(pick)
        regions.append(Region(pick, SurfaceKind(True, 0, 0, 1), [c]))
    tm.regions = regions
    require_valid(tm, "identity_map")
    return tm


def map_from_cover(cover) -> TransverseMap:
    """Pull the skeleton back through a branched covering: the lifted
    skeleton with one disk region per preimage piece of a triangle (a
    branch cycle of length i gives a single disk with an index-i circuit)."""
    cover.require_valid()
    if not covers_mod.cover_connected(cover):
        raise DisconnectedCover("total space is not connected")
    total, labels = covers_mod.assemble_total_space(cover, with_labels=True)
    vlab = labels["vertices"]
    elab = labels["edges"]

    keep_edges = sorted(e for e, lab in elab.items() if lab is not None)
    eidx = {e: i for i, e in enumerate(keep_edges)}

    pairing = {}
    rotation = {}
    edge_sign = {}
    vertex_label = {}
    dart_label = {}

    def dart(e_q, end):
        return 2 * eidx[e_q] + end

    for e_q in keep_edges:
        a, b = total.edges[e_q]
        e0 = elab[e_q]
        pairing[dart(e_q, 0)] = dart(e_q, 1)
        pairing[dart(e_q, 1)] = dart(e_q, 0)
        dart_label[dart(e_q, 0)] = (e0, 0)
        dart_label[dart(e_q, 1)] = (e0, 1)
        vertex_label[dart(e_q, 0)] = vlab[a]
        vertex_label[dart(e_q, 1)] = vlab[b]
        edge_sign[dart(e_q, 0)] = 1 if total.edge_compatible(e_q) else -1
    for v_q in total.vertices:
        if vlab.get(v_q) is None:
            continue   # cone center: interior branch point
        ds = []
        for e_q in total.rotations[v_q]:
            if elab[e_q] is None:
                continue
            end = 0 if total.edges[e_q][0] == v_q else 1
            ds.append(dart(e_q, end))
        for i, d in enumerate(ds):
            rotation[d] = ds[(i + 1) % len(ds)]

    tm = TransverseMap(cover.base, pairing, rotation, edge_sign,
                       vertex_label, dart_label, [], [])
    circuits = tm.trace_circuits()
    labels_r = _assign_region_labels(tm, circuits)
    regions = [Region(lab, SurfaceKind(True, 0, 0, 1), [c])
               for c, lab in zip(circuits, labels_r)]
    tm.regions = regions
    require_valid(tm, "map_from_cover")

    chi = chi_domain(tm)
    if chi != covers_mod.cover_chi(cover):
        raise InternalInconsistency("domain Euler characteristic disagrees with the cover")
    if domain_orientable(tm) != total.orientability():
        raise InternalInconsistency("domain orientability disagrees with the total space")
    return tm


def add_pinch(tm: TransverseMap, region_index: int, closed_kind: SurfaceKind) -> TransverseMap:
    """Connected-sum a closed surface into one region (models precomposing
    with a map that collapses that summand minus a disk)."""
    if not closed_kind.is_closed() or closed_kind.euler >= 2:
        raise BadKind("pinch summand must be closed and not a sphere")
    if not (0 <= region_index < len(tm.regions)):
        raise BadKind(f"no region {region_index}")
    out = tm.copy()
    reg = out.regions[region_index]
    reg.kind = connected_sum_kind(reg.kind, closed_kind)
    require_valid(out, "add_pinch")
    return out


def _fold_degree_zero() -> TransverseMap:
    """Sphere-to-sphere fold of vanishing degree: the target cut along one
    edge gives a disk; the domain is its double, two mirror copies glued
    along the cut, and the preimage graph is the doubled truncated skeleton."""
    tri = builtin_triangulation("sphere_tetra")
    e_cut = 0
    u, w = tri.edges[e_cut]

    pairing = {}
    rotation = {}
    edge_sign = {}
    vertex_label = {}
    dart_label = {}
    next_dart = [0]
    dart_ids = {}

    def dart(e, end, copy):
        key = (e, end, copy)
        if key not in dart_ids:
            dart_ids[key] = next_dart[0]
            next_dart[0] += 1
        return dart_ids[key]

    survivors = [z for z in tri.vertices if z not in (u, w)]
    for e, (a, b) in enumerate(tri.edges):
        if e == e_cut:
            continue
        ends_in = [x for x in (a, b) if x in (u, w)]
        if len(ends_in) == 0:
            for copy in (0, 1):
                d0, d1 = dart(e, 0, copy), dart(e, 1, copy)
                pairing[d0], pairing[d1] = d1, d0
                dart_label[d0], dart_label[d1] = (e, 0), (e, 1)
                vertex_label[d0], vertex_label[d1] = a, b
                edge_sign[min(d0, d1)] = 1 if tri.edge_compatible(e) else -1
        elif len(ends_in) == 1:
            y = b if a in (u, w) else a
            y_end = 0 if tri.edges[e][0] == y else 1
            d0, d1 = dart(e, y_end, 0), dart(e, y_end, 1)
            pairing[d0], pairing[d1] = d1, d0
            dart_label[d0] = dart_label[d1] = (e, y_end)
            vertex_label[d0] = vertex_label[d1] = y
            edge_sign[min(d0, d1)] = 1
        # both ends removed: would double to an isolated circle; the
        # tetrahedron has no parallel edges, so nothing to do

    for z in survivors:
        rot = tri.rotations[z]
        for copy in (0, 1):
            seq = rot if copy == 0 else list(reversed(rot))
            ds = []
            for e in seq:
                if e == e_cut:
                    continue
                z_end = 0 if tri.edges[e][0] == z else 1
                ds.append(dart(e, z_end, copy))
            for i, d in enumerate(ds):
                rotation[d] = ds[(i + 1) % len(ds)]

    tm = TransverseMap(tri, pairing, rotation, edge_sign,
                       vertex_label, dart_label, [], [])
    circuits = tm.trace_circuits()
    labels = _assign_region_labels(tm, circuits)
    tm.regions = [Region(lab, SurfaceKind(True, 0, 0, 1), [c])
                  for c, lab in zip(circuits, labels)]
    require_valid(tm, "fold_degree_zero")
    if chi_domain(tm) != 2 or mod2_degree(tm) != 0:
        raise InternalInconsistency("fold model is not a degree-zero sphere map")
    return tm


def builtin_example(name: str) -> TransverseMap:
    if name == "rp2_pinch":
        tm = identity_map(builtin_triangulation("sphere_tetra"))
        return add_pinch(tm, 0, SurfaceKind(False, crosscaps=1))
    if name == "fold_degree_zero":
        return _fold_degree_zero()
    raise UnknownName(f"unknown example {name!r}; "
                      "choose from ['fold_degree_zero', 'rp2_pinch']")
