"""Factor a normal-form map into a pinch followed by a branched covering.

Every region of a normal form is read off as branched-covering data: each
essential boundary circuit of index i becomes an i-sheeted disk (one
interior branch point when i >= 2), the handles or crosscaps of a region
become a pinched piece, and consecutive disks of a multi-circuit region
are joined by tubes, each carrying two extra index-2 branch points.  Edge
permutations come from strand adjacency of the preimage graph, so the
emitted monodromy data can be validated and assembled independently of
the arithmetic that predicted its Euler characteristic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .covers import (MonodromyCover, cover_chi, cover_connected,
                     perm_from_cycles, perm_inv, perm_mul)
from .errors import (Branched, GraphLike, ImpossibleError, InputError,
                     InconsistentSheets, InternalInconsistency, NotNormal,
                     ZeroDegree)
from .surfaces import SurfaceKind
from .transverse import (TransverseMap, chi_domain, classify_circuit,
                         domain_orientable, mod2_degree, signed_degree)
from .moves import is_normal, normalize
from . import covers as covers_mod


@dataclass(frozen=True)
class PinchPiece:
    region_label: int
    kind: SurfaceKind          # the closed surface collapsed (minus a disk)

    @property
    def collapsed_chi(self) -> int:
        """Euler characteristic of the collapsed piece (closed kind minus
        a disk); never 1, since a collapsed disk would be no pinch."""
        return self.kind.euler - 1

    def to_json(self) -> dict:
        return {"region_label": self.region_label, "kind": self.kind.to_json()}


@dataclass
class Decomposition:
    variant: str               # "graph_like" | "pinched_cover"
    cover: MonodromyCover = None
    pinches: list = field(default_factory=list)
    d: int = 0
    branch_indices: list = field(default_factory=list)
    kneser_deficit: int = 0
    image: dict = field(default_factory=dict)    # graph_like payload

    def to_json(self) -> dict:
        if self.variant == "graph_like":
            return {"type": "decomposition", "variant": "graph_like",
                    "image": self.image}
        return {
            "type": "decomposition",
            "variant": "pinched_cover",
            "d": self.d,
            "branch_indices": list(self.branch_indices),
            "pinches": [p.to_json() for p in self.pinches],
            "kneser_deficit": self.kneser_deficit,
            "cover": self.cover.to_json(),
        }


# --------------------------------------------------------------------------
# Sheet bookkeeping of a normal form


class _SheetTable:
    """Sheet numbering over each triangle: one sheet per winding of each
    essential circuit of each region labeled by that triangle."""

    def __init__(self, tm: TransverseMap):
        self.tm = tm
        self.by_triangle = {t: [] for t in range(len(tm.target.triangles))}
        self.sheet_no = {}          # (region, circuit pos, winding) -> sheet
        self.indices = {}           # (region, circuit pos) -> (index, direction)
        for ri, region in enumerate(tm.regions):
            for pos, c in enumerate(region.circuits):
                cls = classify_circuit(tm, region, c)
                if cls.variant != "essential":
                    raise NotNormal("non-essential circuit in a normal form")
                self.indices[(ri, pos)] = (cls.index, cls.direction)
                for w in range(1, cls.index + 1):
                    sheets = self.by_triangle[region.label]
                    self.sheet_no[(ri, pos, w)] = len(sheets) + 1
                    sheets.append((ri, pos, w))
        counts = {len(v) for v in self.by_triangle.values()}
        if len(counts) != 1:
            raise InconsistentSheets(
                f"sheet counts differ across triangles: "
                f"{sorted((t, len(v)) for t, v in self.by_triangle.items())}")
        self.d = counts.pop()

    def crossing_windings(self, ri: int, pos: int):
        """token -> winding for the band-side tokens of this circuit,
        with windings advancing at the triangle's seam corner."""
        tm = self.tm
        region = tm.regions[ri]
        circuit = region.circuits[pos]
        index, direction = self.indices[(ri, pos)]
        walk = tm.target.triangles[region.label]
        seam_from, seam_to = walk[2][0], walk[0][0]
        seq = circuit.seq
        n = len(seq)
        word = [tm.label_edge(seq[i][0]) for i in range(0, n, 2)]
        k = len(word)
        w = 1
        out = {}
        for j in range(k):
            prev_e = word[(j - 1) % k]
            cur_e = word[j]
            if (prev_e, cur_e) == (seam_from, seam_to):
                w = w % index + 1
            elif (prev_e, cur_e) == (seam_to, seam_from):
                w = (w - 2) % index + 1
            out[seq[2 * j]] = w
            out[seq[2 * j + 1]] = w
        # each target edge must see every winding exactly once
        check = {}
        for j in range(k):
            check.setdefault(word[j], []).append(out[seq[2 * j]])
        for e, ws in check.items():
            if sorted(ws) != list(range(1, index + 1)):
                raise InternalInconsistency("winding enumeration is not seam-coherent")
        return out


def _assemble_cover(tm: TransverseMap, table: _SheetTable) -> tuple:
    """Edge permutations from strand adjacency plus disk branch cycles."""
    T = tm.target
    d = table.d
    tok2reg = tm.region_of_token()
    tok2pos = {}
    for ri, region in enumerate(tm.regions):
        for pos, c in enumerate(region.circuits):
            for tok in c.seq:
                tok2pos[tok] = (ri, pos)

    winding_of = {}
    for (ri, pos), _ in table.indices.items():
        winding_of.update({tok: (ri, pos, w) for tok, w
                           in table.crossing_windings(ri, pos).items()})

    sigma = {}
    for e in range(len(T.edges)):
        t1, _t2 = (s[0] for s in T.edge_sides(e))
        perm = [None] * d
        for k in tm.edge_keys():
            if tm.label_edge(k) != e:
                continue
            sides = {}
            for x in (0, 1):
                tok = (k, x)
                ri, pos, w = winding_of[tok]
                sides[tm.regions[ri].label] = table.sheet_no[(ri, pos, w)]
            if set(sides) != {t1, _t2}:
                raise InternalInconsistency("strand sides mislabeled")
            perm[sides[t1] - 1] = sides[_t2]
        if None in perm:
            raise InconsistentSheets(f"edge {e} crossed by too few strands")
        sigma[e] = tuple(perm)

    branch = {}
    for (ri, pos), (index, _direction) in table.indices.items():
        if index < 2:
            continue
        label = tm.regions[ri].label
        # the seam advances the winding layer by one, regardless of the
        # direction in which the circuit traverses the triangle boundary
        cyc = tuple(table.sheet_no[(ri, pos, w)] for w in range(1, index + 1))
        branch.setdefault(label, []).append(cyc)
    return sigma, branch


def _cycle_disjoint(cover: MonodromyCover, t: int, cyc: tuple) -> bool:
    support = set(cyc)
    return all(not (support & set(other)) for other in cover.branch.get(t, ()))


def _rotate_cycle(cyc: tuple) -> tuple:
    k = cyc.index(min(cyc))
    return tuple(cyc[k:] + cyc[:k])


def _try_place(cover: MonodromyCover, t: int, cyc: tuple) -> bool:
    """Tentatively add the cycle in triangle t; keep it only when the whole
    cover still validates (all vertex fans close)."""
    if not _cycle_disjoint(cover, t, cyc):
        return False
    cover.branch.setdefault(t, []).append(cyc)
    if not cover.validate():
        return True
    cover.branch[t].remove(cyc)
    if not cover.branch[t]:
        del cover.branch[t]
    return False


def _crossing_variants(cover: MonodromyCover, t: int, e: int, cyc: tuple):
    """Candidate (new sigma_e, transported cycle) pairs for carrying a
    branch point with the given cycle out of triangle t across edge e."""
    m = perm_from_cycles([cyc], cover.d)
    t1, _t2 = cover.side_triangles(e)
    sig_old = cover.edge_perm[e]
    if t == t1:
        sig_candidates = (perm_mul(sig_old, m), perm_mul(sig_old, perm_inv(m)))
    else:
        sig_candidates = (perm_mul(m, sig_old), perm_mul(perm_inv(m), sig_old))
    out = []
    for sig_new in sig_candidates:
        for carrier in (sig_old, sig_new):
            phi = carrier if t == t1 else perm_inv(carrier)
            cyc2 = _rotate_cycle(tuple(phi[s - 1] for s in cyc))
            out.append((sig_new, cyc2))
    return out


def _place_tube_pair(cover: MonodromyCover, home: int, cycle: tuple) -> bool:
    """Place the two index-2 branch points a tube contributes.

    Vertex fans only close once both points are present, so the first
    point is parked tentatively (at home or one crossing away) and the
    second is walked until the whole cover validates.  Any surviving
    configuration is a genuine cover with the required branch indices;
    the later deficit and assembly checks pin everything else down.
    """
    cyc = _rotate_cycle(tuple(cycle))

    def second_point(t, cyc2, depth, seen):
        if _try_place(cover, t, cyc2):
            return True
        if depth == 0:
            return False
        for (e, _s) in cover.base.triangles[t]:
            t1, t2 = cover.side_triangles(e)
            other = t2 if t == t1 else t1
            if other in seen:
                continue
            sig_old = cover.edge_perm[e]
            for sig_new, cyc3 in _crossing_variants(cover, t, e, cyc2):
                cover.edge_perm[e] = sig_new
                if second_point(other, cyc3, depth - 1, seen | {other}):
                    return True
                cover.edge_perm[e] = sig_old
        return False

    # candidate parking spots for the first point: home, then one crossing away
    first_candidates = []
    if _cycle_disjoint(cover, home, cyc):
        first_candidates.append((home, cyc, None))
    for (e, _s) in cover.base.triangles[home]:
        t1, t2 = cover.side_triangles(e)
        other = t2 if home == t1 else t1
        for sig_new, cyc2 in _crossing_variants(cover, home, e, cyc):
            first_candidates.append((other, cyc2, (e, sig_new)))

    for (t_first, cyc_first, sig_change) in first_candidates:
        if not _cycle_disjoint(cover, t_first, cyc_first):
            continue
        saved = None
        if sig_change is not None:
            e, sig_new = sig_change
            saved = (e, cover.edge_perm[e])
            cover.edge_perm[e] = sig_new
        cover.branch.setdefault(t_first, []).append(cyc_first)
        if second_point(home, cyc, 2, {t_first}):
            return True
        cover.branch[t_first].remove(cyc_first)
        if not cover.branch[t_first]:
            del cover.branch[t_first]
        if saved is not None:
            cover.edge_perm[saved[0]] = saved[1]
    return False


def factorize(tm: TransverseMap) -> Decomposition:
    """Read the pinch-plus-branched-covering decomposition off a normal
    form; graph-like forms yield the degree-zero variant."""
    state = is_normal(tm)
    if not state["normal"]:
        raise NotNormal(f"map is not in normal form: {state}")

    if state["graph_like"]:
        edges_hit = sorted({c.edge for c in tm.isolated})
        triangles_hit = sorted({r.label for r in tm.regions})
        return Decomposition(variant="graph_like",
                             image={"dual_edges_hit": edges_hit,
                                    "triangles_hit": triangles_hit})

    table = _SheetTable(tm)
    sigma, branch = _assemble_cover(tm, table)
    cover = MonodromyCover(tm.target, table.d, sigma,
                           {t: list(cs) for t, cs in branch.items()})

    pinches = []
    tubes = []
    for ri, region in enumerate(tm.regions):
        kind = region.kind
        k = len(region.circuits)
        if kind.orientable and kind.handles > 0:
            pinches.append(PinchPiece(region.label,
                                      SurfaceKind(True, handles=kind.handles)))
        elif not kind.orientable:
            pinches.append(PinchPiece(region.label,
                                      SurfaceKind(False, crosscaps=kind.crosscaps)))
        for j in range(k - 1):
            a = table.sheet_no[(ri, j, 1)]
            b = table.sheet_no[(ri, j + 1, 1)]
            tubes.append((region.label, (a, b) if a < b else (b, a)))

    for (home, cyc) in tubes:
        if not _place_tube_pair(cover, home, cyc):
            raise InternalInconsistency(
                "could not place a tube's branch points disjointly")

    problems = cover.validate()
    if problems:
        raise InternalInconsistency(f"factorized cover invalid: {problems}")
    if not cover_connected(cover):
        raise InternalInconsistency("factorized cover is disconnected")

    branch_indices = cover.branch_indices()
    chi_m = chi_domain(tm)
    chi_n = tm.target.euler
    d = cover.d
    deficit = d * chi_n - chi_m
    defect_sum = sum(i - 1 for i in branch_indices) + \
        sum(1 - p.collapsed_chi for p in pinches)
    if deficit != defect_sum:
        raise InternalInconsistency(
            f"deficit identity fails: {deficit} != {defect_sum}")
    if deficit < 0:
        raise ImpossibleError(f"negative deficit {deficit}")
    if cover_chi(cover) != chi_m + sum(1 - p.collapsed_chi for p in pinches):
        raise InternalInconsistency("cover Euler characteristic mismatch")
    if any(not p.kind.orientable for p in pinches) and branch_indices:
        raise ImpossibleError("nonorientable pinch coexists with branch points")

    return Decomposition(variant="pinched_cover", cover=cover, pinches=pinches,
                         d=d, branch_indices=branch_indices,
                         kneser_deficit=deficit)


# --------------------------------------------------------------------------
# Degree and the inequality


def orientation_true(decomp: Decomposition) -> bool:
    """Whether the factored map preserves the orientation behaviour of
    loops: true exactly when every pinched piece is orientable."""
    if decomp.variant != "pinched_cover":
        raise GraphLike("degree-zero maps have no pinched-cover data")
    return all(p.kind.orientable for p in decomp.pinches)


def geometric_degree(tm: TransverseMap, *, with_decomposition: bool = False):
    """Minimal preimage count of a regular value over the homotopy class:
    normalize, factor, and return the sheet count (0 for graph-like)."""
    m2 = mod2_degree(tm)
    norm, _trace = normalize(tm)
    decomp = factorize(norm)
    d = 0 if decomp.variant == "graph_like" else decomp.d
    if d % 2 != m2:
        raise ImpossibleError(f"degree {d} contradicts mod-2 degree {m2}")
    if decomp.variant == "pinched_cover" and tm.target.orientability() \
            and domain_orientable(tm) and orientation_true(decomp):
        s = signed_degree(tm)
        if abs(s) != d:
            raise ImpossibleError(
                f"degree {d} contradicts signed degree {s}")
    if with_decomposition:
        return d, decomp
    return d


def verify_kneser(tm: TransverseMap) -> dict:
    """Check chi(M) <= d * chi(N) through the factorization, reporting the
    exact deficit breakdown."""
    chi_m = chi_domain(tm)
    chi_n = tm.target.euler
    d, decomp = geometric_degree(tm, with_decomposition=True)
    if d == 0:
        raise ZeroDegree("the inequality concerns positive-degree maps")
    report = {
        "chi_M": chi_m,
        "chi_N": chi_n,
        "d": d,
        "deficit": decomp.kneser_deficit,
        "holds": chi_m <= d * chi_n,
        "branch_defect": sum(i - 1 for i in decomp.branch_indices),
        "pinch_defect": sum(1 - p.collapsed_chi for p in decomp.pinches),
    }
    if not report["holds"]:
        raise ImpossibleError(f"degree inequality failed: {report}")
    if decomp.kneser_deficit != d * chi_n - chi_m:
        raise ImpossibleError(f"deficit identity failed: {report}")
    return report


# --------------------------------------------------------------------------
# Composition with an unbranched covering of the target


def compose_with_covering(tm: TransverseMap, cover: MonodromyCover) -> TransverseMap:
    """Push a map over the total space of an unbranched covering down to
    the base: relabel every target reference through the projection."""
    if any(cover.branch.get(t) for t in cover.branch):
        raise Branched("composition target cover must be unbranched")
    total, labels = covers_mod.induced_triangulation(cover)
    if tm.target.to_json() != total.to_json():
        raise InputError("map does not live over the induced triangulation")
    vlab = labels["vertices"]
    elab = labels["edges"]
    tlab = labels["triangles"]

    out = tm.copy()
    out.target = cover.base
    out.vertex_label = {d: vlab[v] for d, v in tm.vertex_label.items()}
    out.dart_label = {d: (elab[e], end) for d, (e, end) in tm.dart_label.items()}
    from .transverse import IsolatedCircle
    out.isolated = [IsolatedCircle(elab[c.edge]) for c in tm.isolated]
    for reg in out.regions:
        reg.label = tlab[reg.label]
    out.invalidate_caches()
    from .transverse import require_valid
    require_valid(out, "compose_with_covering")
    return out
