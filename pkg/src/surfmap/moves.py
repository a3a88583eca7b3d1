"""The rewrite system on transverse maps.

Three reduction moves (edge collapse, absorbing an isolated circle into
an essential circuit, boundary surgery), crosscap relocation, the
inverse scramblers, and the normalizer that drives them to a fixed
point.  Every move re-derives the region bookkeeping so that the domain
surface (Euler characteristic, orientability, mod-2 degree) is exactly
preserved; each move post-validates and raises InternalInconsistency on
any drift, so convention bugs cannot pass silently.
"""

from __future__ import annotations

from .errors import (BadEdge, BadTarget, InternalInconsistency, InvalidChi,
                     NoCrosscap, NotAdjacent, NotCollapsible, NotCompatible,
                     NotEssential, Stuck, SurfmapError)
from .surfaces import SurfaceKind, classify_with_boundary
from .transverse import (IsolatedCircle, IsoSide, ParityUF, Region,
                         RibbonCircuit, TransverseMap, chi_domain,
                         classify_circuit, domain_orientable, edge_count,
                         mod2_degree, validate_map)


class OneSidedCircle(SurfmapError):
    """A move produced an isolated circle with a Moebius collar; the data
    model deliberately excludes these."""


# --------------------------------------------------------------------------
# Gauge utility


def flip_vertex(tm: TransverseMap, dart_at_vertex: int) -> TransverseMap:
    """Reverse the chart at one vertex: rotation reversed, incident edge
    signs flipped, stored tokens at the vertex mirrored.  A pure
    re-coordinatization; every observable is unchanged."""
    out = tm.copy()
    orbit = tm.vertex_darts(tm.vertex_of(dart_at_vertex))
    oset = set(orbit)
    n = len(orbit)
    for i, d in enumerate(orbit):
        out.rotation[d] = orbit[(i - 1) % n]
    for d in orbit:
        k = out.edge_key(d)
        out.edge_sign[k] = -out.edge_sign[k]

    def fix(tok):
        d, x = tok
        return (d, 1 - x) if d in oset else tok

    for reg in out.regions:
        reg.circuits = [RibbonCircuit(tuple(fix(t) for t in c.seq))
                        if isinstance(c, RibbonCircuit) else c
                        for c in reg.circuits]
    out.invalidate_caches()
    return out


# --------------------------------------------------------------------------
# Shared bookkeeping helpers


def _post_move_check(before: TransverseMap, after: TransverseMap, *,
                     edge_delta=None, context: str = "") -> TransverseMap:
    rep = validate_map(after)
    if not rep.ok:
        raise InternalInconsistency(f"{context}: invalid result: {rep.problems[:4]}")
    if chi_domain(after) != chi_domain(before):
        raise InternalInconsistency(f"{context}: Euler characteristic drifted")
    if domain_orientable(after) != domain_orientable(before):
        raise InternalInconsistency(f"{context}: orientability drifted")
    if mod2_degree(after) != mod2_degree(before):
        raise InternalInconsistency(f"{context}: mod-2 degree drifted")
    if edge_delta is not None:
        got = edge_count(after) - edge_count(before)
        lo, hi = edge_delta
        if not (lo <= got <= hi):
            raise InternalInconsistency(
                f"{context}: edge count changed by {got}, expected in [{lo},{hi}]")
    return after


class _GroupTracker:
    """Union-find over region indices with a relative-flip parity and
    strip-gluing accounting; yields merged-region kind data."""

    def __init__(self, tm: TransverseMap):
        self.tm = tm
        self.uf = ParityUF()
        self.strips = {}
        self.twisted = set()   # roots made nonorientable by a twisted self-strip

    def glue(self, r1: int, r2: int, flip_bit: int):
        root1 = self.uf.find(("r", r1))
        root2 = self.uf.find(("r", r2))
        if root1[0] == root2[0]:
            if root1[1] ^ root2[1] != flip_bit:
                self.twisted.add(root1[0])
        self.uf.union(("r", r1), ("r", r2), flip_bit)
        root = self.uf.find(("r", r1))[0]
        # re-key strip counts and twist marks onto the new root
        for old in (root1[0], root2[0]):
            if old != root:
                self.strips[root] = self.strips.get(root, 0) + self.strips.pop(old, 0)
                if old in self.twisted:
                    self.twisted.discard(old)
                    self.twisted.add(root)
        self.strips[root] = self.strips.get(root, 0) + 1

    def root(self, ri: int):
        return self.uf.find(("r", ri))[0]

    def parity(self, ri: int) -> int:
        return self.uf.find(("r", ri))[1]

    def groups(self):
        """root -> list of member region indices."""
        out = {}
        for ri in range(len(self.tm.regions)):
            out.setdefault(self.root(ri), []).append(ri)
        return out


def _flip_circuit_entry(c, flip: bool):
    if not flip:
        return c
    if isinstance(c, RibbonCircuit):
        return c.reversed()
    return IsoSide(c.index, c.side, -c.direction)


def _reindex_iso(circuits, removed_index: int):
    out = []
    for c in circuits:
        if isinstance(c, IsoSide):
            if c.index == removed_index:
                continue
            idx = c.index - 1 if c.index > removed_index else c.index
            out.append(IsoSide(idx, c.side, c.direction))
        else:
            out.append(c)
    return out


def _direction_votes(new_circuit: RibbonCircuit, old_succ: dict):
    """Compare the traced direction of a rewritten circuit against stored
    direction data of its constituents: +1 votes forward, -1 backward."""
    votes = []
    n = len(new_circuit.seq)
    for i in range(1, n + 1, 2):
        a = new_circuit.seq[i % n]
        b = new_circuit.seq[(i + 1) % n]
        if old_succ.get(a) == b:
            votes.append(1)
        elif old_succ.get(b) == a:
            votes.append(-1)
    return votes


def _kind_from(chi: int, boundary: int, orientable: bool, context: str) -> SurfaceKind:
    try:
        return classify_with_boundary(chi, boundary, orientable)
    except InvalidChi as ex:
        raise InternalInconsistency(f"{context}: no surface fits ({ex})")


# --------------------------------------------------------------------------
# Edge collapse (the move behind the no-fold-edges property)


def collapsible_edges(tm: TransverseMap) -> list:
    return [k for k in tm.edge_keys()
            if tm.dart_label[k] == tm.dart_label[tm.pairing[k]]]


def collapse_edge(tm: TransverseMap, edge_key: int) -> TransverseMap:
    """Remove an edge whose two darts carry the same target half-edge,
    rejoining the remaining strands around the collapsed band."""
    if edge_key not in tm.pairing or tm.edge_key(edge_key) != edge_key:
        raise NotCollapsible(f"no edge with key {edge_key}")
    d = edge_key
    dp = tm.pairing[d]
    if tm.dart_label[d] != tm.dart_label[dp]:
        raise NotCollapsible(f"edge {edge_key} maps onto its target edge; "
                             "endpoint images differ")
    before = tm

    work = tm.copy()
    work.invalidate_caches()
    if work.edge_sign[edge_key] < 0:
        work = flip_vertex(work, dp)
    assert work.edge_sign[edge_key] > 0

    v = work.vertex_of(d)
    w = work.vertex_of(dp)
    if v == w:
        raise InternalInconsistency("collapse found a loop edge")
    xs = work.vertex_darts(v)
    xs = xs[xs.index(d):] + xs[:xs.index(d)]          # starts with d
    ys = work.vertex_darts(w)
    ys = ys[ys.index(dp):] + ys[:ys.index(dp)]        # starts with dp
    m = len(xs)
    if len(ys) != m:
        raise InternalInconsistency("collapse endpoints have different degrees")

    # nested matching x_i <-> y_{m-i} (labels must agree)
    for i in range(1, m):
        if work.dart_label[xs[i]] != work.dart_label[ys[m - i]]:
            raise InternalInconsistency("collapse strands do not match by label")

    tok2reg = work.region_of_token()
    succ = work.stored_direction_bits()

    def corner_pass_bit(da, db):
        """0 if some stored circuit passes the corner (da -> db) forward."""
        if succ.get((da, 1)) == (db, 0):
            return 0, tok2reg[(da, 1)]
        if succ.get((db, 0)) == (da, 1):
            return 1, tok2reg[(db, 0)]
        raise InternalInconsistency("corner not on any stored circuit")

    groups = _GroupTracker(work)
    for i in range(1, m - 1):
        pv, rv = corner_pass_bit(xs[i], xs[i + 1])
        pw, rw = corner_pass_bit(ys[m - i - 1], ys[m - i])
        groups.glue(rv, rw, pv ^ pw)

    # rewire the ribbon structure
    dead = set(xs) | set(ys)
    new_pairing = {a: b for a, b in work.pairing.items() if a not in dead}
    new_rotation = {a: b for a, b in work.rotation.items() if a not in dead}
    new_vlabel = {a: b for a, b in work.vertex_label.items() if a not in dead}
    new_dlabel = {a: b for a, b in work.dart_label.items() if a not in dead}
    new_sign = {}
    for k in work.edge_keys():
        if k in dead or work.pairing[k] in dead:
            continue
        new_sign[k] = work.edge_sign[k]

    new_isolated = list(work.isolated)
    new_circle_info = []      # (iso index, strand dart x_i)
    for i in range(1, m):
        a_i = work.pairing[xs[i]]
        b_i = work.pairing[ys[m - i]]
        if a_i == ys[m - i]:
            # parallel strand closes into an isolated circle
            s_total = work.edge_sign[work.edge_key(xs[i])]
            if s_total < 0:
                raise OneSidedCircle(
                    "collapse would close a strand into a one-sided circle")
            e0 = work.label_edge(xs[i])
            new_circle_info.append((len(new_isolated), xs[i]))
            new_isolated.append(IsolatedCircle(e0))
            continue
        new_pairing[a_i] = b_i
        new_pairing[b_i] = a_i
        s_new = (work.edge_sign[work.edge_key(xs[i])]
                 * work.edge_sign[work.edge_key(ys[m - i])])
        new_sign[min(a_i, b_i)] = s_new

    out = TransverseMap(work.target, new_pairing, new_rotation, new_sign,
                        new_vlabel, new_dlabel, new_isolated, [])

    _rebuild_regions(work, out, groups, tok2reg, dead,
                     circle_info=new_circle_info, context="collapse_edge")
    return _post_move_check(before, out, edge_delta=(-m, -1),
                            context="collapse_edge")


def _rebuild_regions(work: TransverseMap, out: TransverseMap,
                     groups: _GroupTracker, tok2reg: dict, dead_darts: set,
                     *, circle_info=(), context: str = ""):
    """Shared region reconstruction after a ribbon rewrite.

    work: pre-move map (post gauge normalization) whose regions feed the
    group tracker; out: post-move map with empty regions, possibly with
    freshly appended isolated circles described by circle_info."""
    dead_tokens = {(d, x) for d in dead_darts for x in (0, 1)}
    member_flip = {ri: groups.parity(ri) for ri in range(len(work.regions))}

    # old direction data in group-aligned form
    old_succ = {}
    old_iso_entries = {}      # group root -> list[IsoSide] (aligned)
    old_kept = {}             # group root -> list of (token_set -> aligned circuit)
    for ri, reg in enumerate(work.regions):
        root = groups.root(ri)
        flip = bool(member_flip[ri])
        for c in reg.circuits:
            c2 = _flip_circuit_entry(c, flip)
            if isinstance(c2, RibbonCircuit):
                n = len(c2.seq)
                for i in range(n):
                    old_succ[c2.seq[i]] = c2.seq[(i + 1) % n]
                if not (set(c2.seq) & dead_tokens):
                    old_kept.setdefault(root, {})[c2.token_set()] = c2
            else:
                old_iso_entries.setdefault(root, []).append(c2)

    out.invalidate_caches()
    traced = out.trace_circuits()
    group_members = groups.groups()

    new_circuits = {root: [] for root in group_members}
    for c in traced:
        key = c.token_set()
        roots = set()
        for tok in c.seq:
            ri = tok2reg.get(tok)
            if ri is not None:
                roots.add(groups.root(ri))
        if len(roots) != 1:
            raise InternalInconsistency(f"{context}: rewritten circuit spans "
                                        f"{len(roots)} region groups")
        root = roots.pop()
        kept = old_kept.get(root, {})
        if key in kept:
            new_circuits[root].append(kept[key])
            continue
        votes = _direction_votes(c, old_succ)
        if not votes:
            raise InternalInconsistency(f"{context}: no direction evidence "
                                        "for a rewritten circuit")
        fwd = votes.count(1)
        bwd = votes.count(-1)
        group_orientable = (root not in groups.twisted and
                            all(work.regions[ri].kind.orientable
                                for ri in group_members[root]))
        if group_orientable and fwd and bwd:
            raise InternalInconsistency(f"{context}: direction votes conflict "
                                        "in an orientable region")
        new_circuits[root].append(c if fwd >= bwd else c.reversed())

    # new isolated circles created by the rewrite
    new_iso_entries = {}
    for iso_index, strand in circle_info:
        for side in (0, 1):
            ri = tok2reg[(strand, side)]
            root = groups.root(ri)
            tok = (strand, side)
            # direction +1: the aligned stored walk leaves the vertex
            away = work.band_step(tok)
            nxt = old_succ.get(tok)
            direction = 1 if nxt == away else -1
            new_iso_entries.setdefault(root, []).append(
                IsoSide(iso_index, side, direction))

    regions = []
    for root, members in sorted(group_members.items()):
        base = work.regions[members[0]]
        labels = {work.regions[ri].label for ri in members}
        if len(labels) != 1:
            raise InternalInconsistency(f"{context}: merged regions with "
                                        f"different labels {labels}")
        chi = sum(work.regions[ri].kind.euler for ri in members) \
            - groups.strips.get(root, 0)
        orientable = (root not in groups.twisted and
                      all(work.regions[ri].kind.orientable for ri in members))
        circuits = (new_circuits.get(root, [])
                    + old_iso_entries.get(root, [])
                    + new_iso_entries.get(root, []))
        kind = _kind_from(chi, len(circuits), orientable, context)
        regions.append(Region(base.label, kind, circuits))
    out.regions = regions


# --------------------------------------------------------------------------
# Absorbing an isolated circle


def join_isolated_circle(tm: TransverseMap, iso_index: int,
                         region_index: int, circuit_pos: int) -> TransverseMap:
    """Merge an isolated circle into an essential circuit of a region it
    bounds, through a tube inside that region."""
    if not (0 <= iso_index < len(tm.isolated)):
        raise NotAdjacent(f"no isolated circle {iso_index}")
    if not (0 <= region_index < len(tm.regions)):
        raise NotAdjacent(f"no region {region_index}")
    A = tm.regions[region_index]
    side_entry = None
    for c in A.circuits:
        if isinstance(c, IsoSide) and c.index == iso_index:
            side_entry = c
            break
    if side_entry is None:
        raise NotAdjacent("the circle is not a boundary circuit of that region")
    if not (0 <= circuit_pos < len(A.circuits)):
        raise NotEssential("no such circuit")
    alpha1 = A.circuits[circuit_pos]
    cls = classify_circuit(tm, A, alpha1)
    if cls.variant != "essential":
        raise NotEssential("target circuit is not essential")
    e0 = tm.isolated[iso_index].edge
    if e0 not in tm.target.triangle_edges(A.label):
        raise NotAdjacent("circle label is not an edge of the region's triangle")

    before = tm
    work = tm.copy()
    A = work.regions[region_index]
    alpha1 = A.circuits[circuit_pos]

    # canonical strand of alpha1 over e0
    strand_pos = None
    for i in range(0, len(alpha1.seq), 2):
        if work.label_edge(alpha1.seq[i][0]) == e0:
            strand_pos = i
            break
    if strand_pos is None:
        raise NotEssential("essential circuit misses the circle's edge")
    dep, arr = alpha1.seq[strand_pos], alpha1.seq[strand_pos + 1]
    d_S = work.dart_label[dep[0]][1]          # 0 iff departing the end-0 dart

    # far side of the strand
    far_tokens = {(dep[0], 1 - dep[1]), (arr[0], 1 - arr[1])}
    tok2reg = work.region_of_token()
    far_regions = {tok2reg[t] for t in far_tokens}
    if len(far_regions) != 1:
        raise InternalInconsistency("strand sides are inconsistent")
    r2 = far_regions.pop()
    succ = work.stored_direction_bits()
    far_dep = next(t for t in far_tokens if succ.get(t) in far_tokens)
    d_R = work.dart_label[far_dep[0]][1]

    iso_sides = work.region_of_iso_side()
    rb, delta_b = iso_sides[(iso_index, 1 - side_entry.side)]
    delta_a = side_entry.direction
    if rb == region_index:
        raise InternalInconsistency("circle has the same region on both sides")

    mu = 1 if d_R == d_S else 0
    flip_needed = mu ^ (1 if delta_a == delta_b else 0)

    # region A: drop the circle slot, boundary count down by one
    A.circuits = [c for c in A.circuits
                  if not (isinstance(c, IsoSide) and c.index == iso_index)]
    A.kind = _kind_from(A.kind.euler + 1, A.kind.boundary - 1,
                        A.kind.orientable, "join_isolated_circle")

    if rb != r2:
        RB, R2 = work.regions[rb], work.regions[r2]
        if RB.label != R2.label:
            raise InternalInconsistency("far-side merge across labels")
        circuits = list(R2.circuits)
        for c in RB.circuits:
            if isinstance(c, IsoSide) and c.index == iso_index:
                continue
            circuits.append(_flip_circuit_entry(c, bool(flip_needed)))
        kind = _kind_from(RB.kind.euler + R2.kind.euler - 1,
                          len(circuits),
                          RB.kind.orientable and R2.kind.orientable,
                          "join_isolated_circle")
        merged = Region(R2.label, kind, circuits)
        work.regions = [merged if ri == r2 else reg
                        for ri, reg in enumerate(work.regions) if ri != rb]
    else:
        R2 = work.regions[r2]
        circuits = [c for c in R2.circuits
                    if not (isinstance(c, IsoSide) and c.index == iso_index)]
        orientable = R2.kind.orientable and flip_needed == 0
        R2.kind = _kind_from(R2.kind.euler - 1, len(circuits), orientable,
                             "join_isolated_circle")
        R2.circuits = circuits

    del work.isolated[iso_index]
    for reg in work.regions:
        reg.circuits = _reindex_iso(reg.circuits, iso_index)
    work.invalidate_caches()
    return _post_move_check(before, work, edge_delta=(-1, -1),
                            context="join_isolated_circle")


# --------------------------------------------------------------------------
# Scramblers


def insert_trivial_circle(tm: TransverseMap, region_index: int,
                          t_edge: int) -> TransverseMap:
    """Add a nullhomotopic circle inside a region, with a fresh disk
    region on its far side labeled by the opposite triangle."""
    if not (0 <= region_index < len(tm.regions)):
        raise BadEdge(f"no region {region_index}")
    before = tm
    work = tm.copy()
    A = work.regions[region_index]
    if t_edge not in work.target.triangle_edges(A.label):
        raise BadEdge("edge is not on the region's triangle")
    t1, t2 = (s[0] for s in work.target.edge_sides(t_edge))
    other = t2 if A.label == t1 else t1
    idx = len(work.isolated)
    work.isolated.append(IsolatedCircle(t_edge))
    A.circuits = list(A.circuits) + [IsoSide(idx, 0, 1)]
    A.kind = _kind_from(A.kind.euler - 1, A.kind.boundary + 1,
                        A.kind.orientable, "insert_trivial_circle")
    work.regions.append(Region(other, SurfaceKind(True, 0, 0, 1),
                               [IsoSide(idx, 1, -1)]))
    work.invalidate_caches()
    return _post_move_check(before, work, edge_delta=(1, 1),
                            context="insert_trivial_circle")


def split_circle(tm: TransverseMap, region_index: int, circuit_pos: int,
                 t_edge: int) -> TransverseMap:
    """Exact inverse of absorbing a trivially-bounding circle: pinch a
    circle off next to an essential circuit."""
    if not (0 <= region_index < len(tm.regions)):
        raise BadEdge(f"no region {region_index}")
    A = tm.regions[region_index]
    if not (0 <= circuit_pos < len(A.circuits)):
        raise NotEssential("no such circuit")
    if classify_circuit(tm, A, A.circuits[circuit_pos]).variant != "essential":
        raise NotEssential("can only split next to an essential circuit")
    return insert_trivial_circle(tm, region_index, t_edge)


# --------------------------------------------------------------------------
# Boundary surgery


def _strand_info(tm: TransverseMap, region_index: int, dart: int):
    """A-side data for the strand through `dart`: tokens, side bit at the
    end-0 dart, stored direction bit."""
    if dart not in tm.pairing:
        raise NotCompatible(f"no dart {dart}")
    d1, d2 = dart, tm.pairing[dart]
    l1, l2 = tm.dart_label[d1], tm.dart_label[d2]
    if l1 == l2:
        raise NotCompatible("strand folds back; collapse it instead")
    u = d1 if l1[1] == 0 else d2        # the end-0 dart
    w = tm.pairing[u]
    tok2reg = tm.region_of_token()
    side_tokens = None
    for x in (0, 1):
        if tok2reg.get((u, x)) == region_index:
            side_tokens = {(u, x), tm.band_step((u, x))}
            xi = x
            break
    if side_tokens is None:
        raise NotCompatible("strand does not bound the given region")
    succ = tm.stored_direction_bits()
    dep = next(t for t in side_tokens if succ.get(t) in side_tokens)
    sigma = tm.dart_label[dep[0]][1]    # 0: stored departs the end-0 dart
    far = {(u, 1 - xi)} | {tm.band_step((u, 1 - xi))}
    return {
        "u": u, "w": w,
        "edge": l1[0],
        "xi": xi,
        "sigma": sigma,
        "tokens": side_tokens,
        "far_tokens": far,
    }


def boundary_surgery(tm: TransverseMap, region_index: int,
                     dart1: int, dart2: int) -> TransverseMap:
    """Cut two strands of a region mapping over the same target edge and
    reconnect them crosswise through the region, matching half-edge
    labels (so a collapsible edge appears).  Requires a coorientation:
    opposite stored directions, or a crosscap to route through."""
    if not (0 <= region_index < len(tm.regions)):
        raise NotCompatible(f"no region {region_index}")
    before = tm
    work = tm.copy()
    A = work.regions[region_index]

    s1 = _strand_info(work, region_index, dart1)
    s2 = _strand_info(work, region_index, dart2)
    if s1["u"] == s2["u"]:
        raise NotCompatible("the two positions lie on one strand")
    if s1["edge"] != s2["edge"]:
        raise NotCompatible("strands map over different target edges")

    if s1["sigma"] != s2["sigma"]:
        route_crosscap = False
    elif not A.kind.orientable:
        route_crosscap = True
    else:
        raise NotCompatible("same-direction strands of an orientable region "
                            "admit no compatible coorientation")

    tok2reg = work.region_of_token()
    succ = work.stored_direction_bits()
    u1, w1, u2, w2 = s1["u"], s1["w"], s2["u"], s2["w"]

    # far-side owners and direction bits before rewiring
    def far_data(s):
        toks = s["far_tokens"]
        owners = {tok2reg[t] for t in toks}
        if len(owners) != 1:
            raise InternalInconsistency("far side owned by several regions")
        owner = owners.pop()
        dep = next(t for t in toks if succ.get(t) in toks)
        return owner, work.dart_label[dep[0]][1], toks

    rfar1, fsig1, ftok1 = far_data(s1)
    rfar2, fsig2, ftok2 = far_data(s2)
    if rfar1 == region_index or rfar2 == region_index:
        raise InternalInconsistency("far side equals the cut region")

    # the two A-side circuits at the positions
    cpos = {}
    for pos, c in enumerate(A.circuits):
        if isinstance(c, RibbonCircuit):
            toks = set(c.seq)
            if s1["tokens"] & toks:
                cpos[1] = pos
            if s2["tokens"] & toks:
                cpos[2] = pos
    gamma_same = cpos.get(1) == cpos.get(2)

    sb1 = 0 if work.edge_sign[work.edge_key(u1)] > 0 else 1
    sb2 = 0 if work.edge_sign[work.edge_key(u2)] > 0 else 1
    sbF0 = 1 ^ s1["xi"] ^ s2["xi"]
    sbF1 = sb1 ^ sb2 ^ sbF0

    # rewire: delete the old edge keys before installing the new ones
    for k in (min(u1, w1), min(u2, w2)):
        del work.edge_sign[k]
    work.pairing[u1], work.pairing[u2] = u2, u1
    work.pairing[w1], work.pairing[w2] = w2, w1
    work.edge_sign[min(u1, u2)] = 1 if sbF0 == 0 else -1
    work.edge_sign[min(w1, w2)] = 1 if sbF1 == 0 else -1
    work.invalidate_caches()

    traced = work.trace_circuits()
    affected = s1["tokens"] | s2["tokens"] | ftok1 | ftok2

    # --- region A restructuring ------------------------------------------------
    new_A_side = [c for c in traced
                  if set(c.seq) & (s1["tokens"] | s2["tokens"])]
    old_succ_A = {}
    for c in A.circuits:
        if isinstance(c, RibbonCircuit):
            n = len(c.seq)
            for i in range(n):
                old_succ_A[c.seq[i]] = c.seq[(i + 1) % n]

    def orient_new(c: RibbonCircuit, orientable_ctx: bool,
                   twisted: bool = False) -> RibbonCircuit:
        votes = _direction_votes(c, old_succ_A)
        if not votes:
            raise InternalInconsistency("surgery: no direction evidence")
        fwd, bwd = votes.count(1), votes.count(-1)
        if orientable_ctx and not twisted and fwd and bwd:
            raise InternalInconsistency("surgery: direction votes conflict")
        return c if fwd >= bwd else c.reversed()

    keep = [c for pos, c in enumerate(A.circuits) if pos not in cpos.values()]
    extra_region = None
    if not gamma_same:
        if len(new_A_side) != 1:
            raise InternalInconsistency("surgery: expected circuit merge")
        kind = _kind_from(A.kind.euler + 1, A.kind.boundary - 1,
                          A.kind.orientable, "boundary_surgery")
        A.kind = kind
        A.circuits = keep + [orient_new(new_A_side[0], A.kind.orientable,
                                        twisted=route_crosscap)]
    elif not route_crosscap:
        if len(new_A_side) != 2:
            raise InternalInconsistency("surgery: expected circuit split")
        # canonical planar cut: all genus and other circuits stay on piece 1,
        # piece 2 is a fresh disk bounded by the circuit through position 2
        tok_pref = next(iter(s2["tokens"]))
        c_disk = next(c for c in new_A_side if tok_pref in set(c.seq))
        c_keep = next(c for c in new_A_side if c is not c_disk)
        A.circuits = keep + [orient_new(c_keep, A.kind.orientable)]
        A.kind = _kind_from(A.kind.euler, len(A.circuits),
                            A.kind.orientable, "boundary_surgery")
        extra_region = Region(A.label, SurfaceKind(True, 0, 0, 1),
                              [orient_new(c_disk, True)])
    else:
        if len(new_A_side) != 1:
            raise InternalInconsistency("surgery: twisted rejoin should keep "
                                        "one circuit")
        orientable = A.kind.crosscaps == 1
        A.circuits = keep + [orient_new(new_A_side[0], orientable, twisted=True)]
        A.kind = _kind_from(A.kind.euler + 1, len(A.circuits), orientable,
                            "boundary_surgery")

    # --- far-side corridor gluing ------------------------------------------------
    # reference alignment of each far region in its strand frame is
    # fsig ^ sigma ^ 1; the frames differ by the route twist, which itself
    # is [sigma1 == sigma2], so the twist cancels and only the fsig bits
    # decide whether the second far region must flip
    new_far = [c for c in traced if set(c.seq) & (ftok1 | ftok2)]
    flip_far = 1 if fsig1 == fsig2 else 0
    old_succ_far = {}
    for ri in {rfar1, rfar2}:
        for c in work.regions[ri].circuits:
            if isinstance(c, RibbonCircuit):
                cc = _flip_circuit_entry(c, ri == rfar2 and rfar1 != rfar2
                                         and bool(flip_far))
                n = len(cc.seq)
                for i in range(n):
                    old_succ_far[cc.seq[i]] = cc.seq[(i + 1) % n]

    def orient_far(c: RibbonCircuit, orientable_ctx: bool) -> RibbonCircuit:
        votes = _direction_votes(c, old_succ_far)
        if not votes:
            raise InternalInconsistency("surgery: no far direction evidence")
        fwd, bwd = votes.count(1), votes.count(-1)
        if orientable_ctx and flip_far == 0 and fwd and bwd:
            raise InternalInconsistency("surgery: far direction votes conflict")
        return c if fwd >= bwd else c.reversed()

    R1 = work.regions[rfar1]
    if rfar1 != rfar2:
        R2 = work.regions[rfar2]
        if R1.label != R2.label:
            raise InternalInconsistency("surgery: far labels differ")
        if len(new_far) != 1:
            raise InternalInconsistency("surgery: far sides should merge")
        orientable = R1.kind.orientable and R2.kind.orientable
        far_affected = set()
        circuits = []
        for src, flip in ((R1, False), (R2, bool(flip_far))):
            for c in src.circuits:
                if isinstance(c, RibbonCircuit) and set(c.seq) & (ftok1 | ftok2):
                    continue
                circuits.append(_flip_circuit_entry(c, flip))
        circuits.append(orient_far(new_far[0], orientable))
        kind = _kind_from(R1.kind.euler + R2.kind.euler - 1, len(circuits),
                          orientable, "boundary_surgery far")
        merged = Region(R1.label, kind, circuits)
        work.regions = [merged if ri == rfar1 else reg
                        for ri, reg in enumerate(work.regions) if ri != rfar2]
    else:
        old_far_circuits = [c for c in R1.circuits
                            if isinstance(c, RibbonCircuit)
                            and set(c.seq) & (ftok1 | ftok2)]
        beta_same = len(old_far_circuits) == 1
        expect = 2 if (beta_same and flip_far == 0) else 1
        if len(new_far) != expect:
            raise InternalInconsistency(
                f"surgery: far side traced {len(new_far)} circuits, "
                f"expected {expect}")
        orientable = R1.kind.orientable and flip_far == 0
        circuits = [c for c in R1.circuits
                    if not (isinstance(c, RibbonCircuit)
                            and set(c.seq) & (ftok1 | ftok2))]
        circuits += [orient_far(c, orientable) for c in new_far]
        R1.kind = _kind_from(R1.kind.euler - 1, len(circuits), orientable,
                             "boundary_surgery far")
        R1.circuits = circuits

    if extra_region is not None:
        work.regions.append(extra_region)
    work.invalidate_caches()
    return _post_move_check(before, work, edge_delta=(0, 0),
                            context="boundary_surgery")


# --------------------------------------------------------------------------
# Crosscap relocation


def _qualifies_as_target(tm: TransverseMap, region: Region) -> bool:
    if len(region.circuits) >= 2:
        return True
    for c in region.circuits:
        cls = classify_circuit(tm, region, c)
        if cls.variant == "essential" and cls.index > 1:
            return True
    return False


def relocate_crosscap(tm: TransverseMap, source_index: int,
                      target_index: int) -> TransverseMap:
    """Move one crosscap between regions; legal when the target has a
    disconnected boundary or a boundary of winding index above one."""
    if not (0 <= source_index < len(tm.regions)):
        raise NoCrosscap(f"no region {source_index}")
    if not (0 <= target_index < len(tm.regions)):
        raise BadTarget(f"no region {target_index}")
    src = tm.regions[source_index]
    if src.kind.orientable or src.kind.crosscaps < 1:
        raise NoCrosscap("source region carries no crosscap")
    if not _qualifies_as_target(tm, tm.regions[target_index]):
        raise BadTarget("target needs several boundary circuits or an "
                        "index above one")
    before = tm
    work = tm.copy()
    if source_index == target_index:
        return _post_move_check(before, work, edge_delta=(0, 0),
                                context="relocate_crosscap")
    src = work.regions[source_index]
    tgt = work.regions[target_index]
    src.kind = _kind_from(src.kind.euler + 1, src.kind.boundary,
                          src.kind.crosscaps == 1, "relocate_crosscap")
    tgt.kind = _kind_from(tgt.kind.euler - 1, tgt.kind.boundary, False,
                          "relocate_crosscap")
    work.invalidate_caches()
    return _post_move_check(before, work, edge_delta=(0, 0),
                            context="relocate_crosscap")


# --------------------------------------------------------------------------
# Normal form


def is_normal(tm: TransverseMap) -> dict:
    """Per-property report of the reduced-form conditions."""
    rep = validate_map(tm)
    out = {"valid": rep.ok}
    if not rep.ok:
        out.update({"no_collapsible_edge": False, "no_mixed_circles": False,
                    "regions_reduced": False, "crosscap_separation": False,
                    "graph_like": False, "normal": False})
        return out
    has_vertices = bool(tm.pairing)
    out["graph_like"] = not has_vertices
    out["no_collapsible_edge"] = not collapsible_edges(tm)
    out["no_mixed_circles"] = not (tm.isolated and has_vertices)

    regions_ok = True
    any_nonorientable = False
    any_branchy = False
    if has_vertices:
        for ri, region in enumerate(tm.regions):
            classes = [classify_circuit(tm, region, c) for c in region.circuits]
            if not region.kind.orientable:
                any_nonorientable = True
            if len(region.circuits) >= 2 or any(
                    c.variant == "essential" and c.index > 1 for c in classes):
                any_branchy = True
            single_ok = (len(classes) == 1 and classes[0].variant == "essential"
                         and classes[0].index == 1)
            same_dir = (region.kind.orientable
                        and all(c.variant == "essential" for c in classes)
                        and len({c.direction for c in classes}) <= 1)
            if not (single_ok or same_dir):
                regions_ok = False
    out["regions_reduced"] = regions_ok
    out["crosscap_separation"] = not (any_nonorientable and any_branchy)
    out["normal"] = (out["no_collapsible_edge"] and out["no_mixed_circles"]
                     and (out["graph_like"]
                          or (out["regions_reduced"] and out["crosscap_separation"])))
    return out


def _find_join(tm: TransverseMap):
    for ri, region in enumerate(tm.regions):
        iso_pos = [c.index for c in region.circuits if isinstance(c, IsoSide)]
        if not iso_pos:
            continue
        for pos, c in enumerate(region.circuits):
            if isinstance(c, RibbonCircuit) and \
                    classify_circuit(tm, region, c).variant == "essential":
                return min(iso_pos), ri, pos
    return None


def _find_surgery(tm: TransverseMap):
    """A region violating the reduced-region condition plus a canonical
    pair of strand darts over one target edge."""
    for ri, region in enumerate(tm.regions):
        classes = [classify_circuit(tm, region, c) for c in region.circuits]
        single_ok = (len(classes) == 1 and classes[0].variant == "essential"
                     and classes[0].index == 1)
        same_dir = (region.kind.orientable and
                    all(c.variant == "essential" for c in classes)
                    and len({c.direction for c in classes}) <= 1)
        if single_ok or same_dir:
            continue
        ribbons = [(pos, c) for pos, c in enumerate(region.circuits)
                   if isinstance(c, RibbonCircuit)]
        if not ribbons:
            continue
        e0 = min(tm.target.triangle_edges(region.label))

        def strands_on(c):
            return [c.seq[i][0] for i in range(0, len(c.seq), 2)
                    if tm.label_edge(c.seq[i][0]) == e0]

        if not region.kind.orientable and len(ribbons) == 1:
            ss = strands_on(ribbons[0][1])
            if len(ss) >= 2:
                return ri, ss[0], ss[1]
            continue
        if not region.kind.orientable:
            s1 = strands_on(ribbons[0][1])
            s2 = strands_on(ribbons[1][1])
            if s1 and s2:
                return ri, s1[0], s2[0]
            continue
        # orientable with mixed directions: find an opposite pair
        dirs = {}
        for pos, c in ribbons:
            cls = classes[pos]
            if cls.variant == "essential":
                dirs.setdefault(cls.direction, (pos, c))
        if len(dirs) == 2:
            (p1, c1), (p2, c2) = dirs[1], dirs[-1]
            s1, s2 = strands_on(c1), strands_on(c2)
            if s1 and s2:
                return ri, s1[0], s2[0]
    return None


def _find_relocation(tm: TransverseMap):
    src = None
    for ri, region in enumerate(tm.regions):
        if not region.kind.orientable:
            src = ri
            break
    if src is None:
        return None
    for ri, region in enumerate(tm.regions):
        if ri != src and _qualifies_as_target(tm, region):
            return src, ri
    return None


def normalize(tm: TransverseMap, max_steps: int = None, observer=None):
    """Apply moves until none fits: collapses first, then circle joins,
    then surgeries (which enable a collapse), then crosscap relocations
    (which enable a surgery).  Strictly decreasing edge count between
    compound steps forces termination.

    observer, when given, is called as observer(before, after, move_name)
    after every single move."""
    work = tm
    trace = []
    budget = max_steps if max_steps is not None else 12 * edge_count(tm) + 64

    def log(move, params, e_before, e_after):
        trace.append({"move": move, "params": params,
                      "E_before": e_before, "E_after": e_after})

    steps = 0
    while True:
        steps += 1
        if steps > budget:
            raise Stuck({"reason": "step budget exhausted",
                         "state": is_normal(work)})
        e0 = edge_count(work)
        cands = collapsible_edges(work)
        if cands:
            work2 = collapse_edge(work, cands[0])
            log("collapse_edge", {"edge": cands[0]}, e0, edge_count(work2))
            if observer:
                observer(work, work2, "collapse_edge")
            work = work2
            continue
        if work.isolated and work.pairing:
            found = _find_join(work)
            if found is None:
                raise Stuck({"reason": "isolated circles but no join target",
                             "state": is_normal(work)})
            iso, ri, pos = found
            work2 = join_isolated_circle(work, iso, ri, pos)
            log("join_isolated_circle", {"iso": iso, "region": ri, "circuit": pos},
                e0, edge_count(work2))
            if observer:
                observer(work, work2, "join_isolated_circle")
            work = work2
            continue
        if not work.pairing:
            break
        found = _find_surgery(work)
        if found is not None:
            ri, d1, d2 = found
            work2 = boundary_surgery(work, ri, d1, d2)
            log("boundary_surgery", {"region": ri, "darts": [d1, d2]},
                e0, edge_count(work2))
            if observer:
                observer(work, work2, "boundary_surgery")
            work = work2
            continue
        found = _find_relocation(work)
        if found is not None:
            src, tgt = found
            work2 = relocate_crosscap(work, src, tgt)
            log("relocate_crosscap", {"source": src, "target": tgt},
                e0, edge_count(work2))
            if observer:
                observer(work, work2, "relocate_crosscap")
            work = work2
            continue
        break

    state = is_normal(work)
    if not state["normal"]:
        raise Stuck(state)
    return work, trace
