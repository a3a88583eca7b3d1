"""Branched coverings of a triangulated surface as monodromy data.

A cover stores one permutation per base edge (matching sheets across the
two incident triangle sides) plus branch data per triangle: a set of
disjoint cycles, each cycle of length i being one interior branch point
of index i.  Sheet labels are read just inside a triangle's boundary
walk; completing the walk crosses the triangle's seam, which applies the
product of its branch cycles.  Vertex links must close after one loop,
so branch points never sit on the skeleton.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import Branched, InvalidSurface, NotClosed, Unsatisfiable
from .surfaces import Triangulation, derive_rotations


# -- permutation helpers (sheets are 1..d, perms stored as tuples) -----------

def perm_id(d: int) -> tuple:
    return tuple(range(1, d + 1))


def perm_apply(p: tuple, s: int) -> int:
    return p[s - 1]


def perm_mul(p: tuple, q: tuple) -> tuple:
    """Composition acting right to left: (p*q)(s) = p(q(s))."""
    return tuple(p[q[s - 1] - 1] for s in range(1, len(p) + 1))


def perm_inv(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v - 1] = i + 1
    return tuple(out)


def perm_from_cycles(cycles, d: int) -> tuple:
    out = list(range(1, d + 1))
    for cyc in cycles:
        for i, s in enumerate(cyc):
            out[s - 1] = cyc[(i + 1) % len(cyc)]
    return tuple(out)


def perms_transitive(perms, d: int) -> bool:
    if d <= 1:
        return True
    seen = {1}
    frontier = [1]
    invs = [perm_inv(p) for p in perms]
    while frontier:
        s = frontier.pop()
        for p in list(perms) + invs:
            t = perm_apply(p, s)
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return len(seen) == d


@dataclass
class MonodromyCover:
    base: Triangulation
    d: int
    edge_perm: dict = field(default_factory=dict)   # edge -> sheet perm, side0 -> side1
    branch: dict = field(default_factory=dict)      # triangle -> list of cycles (tuples)

    # -- bookkeeping ----------------------------------------------------------

    def seam_perm(self, t: int) -> tuple:
        return perm_from_cycles(self.branch.get(t, ()), self.d)

    def seam_vertex(self, t: int):
        return self.base.directed_ends(self.base.triangles[t][0])[0]

    def branch_cycles(self):
        for t in sorted(self.branch):
            for cyc in self.branch[t]:
                yield t, tuple(cyc)

    def branch_indices(self) -> list:
        return sorted(len(c) for _t, c in self.branch_cycles())

    def side_triangles(self, e: int) -> tuple:
        (t1, _k1), (t2, _k2) = self.base.edge_sides(e)
        return t1, t2

    # -- fan walks -------------------------------------------------------------

    def _seam_step(self, v, t: int, e_enter: int, e_leave: int) -> tuple:
        """Sheet action of passing t's sector at v from e_enter to e_leave."""
        if v != self.seam_vertex(t) or not self.branch.get(t):
            return perm_id(self.d)
        walk = self.base.triangles[t]
        e_from, e_to = walk[2][0], walk[0][0]
        beta = self.seam_perm(t)
        if (e_enter, e_leave) == (e_from, e_to):
            return beta
        if (e_enter, e_leave) == (e_to, e_from):
            return perm_inv(beta)
        raise InvalidSurface(f"seam sector of triangle {t} at {v} mismatches fan")

    def _fan_steps(self, v):
        """The fan walk at v as (kind, payload) steps: ('edge', e, from_t)
        then ('seam', t, enter, leave), repeated around the rotation."""
        cache = self.base.__dict__.setdefault("_fan_steps", {})
        if v not in cache:
            rot = self.base.rotations[v]
            sectors = self.base.sector_triangles(v)
            m = len(rot)
            steps = []
            for i in range(m):
                e = rot[i]
                from_t = sectors[i - 1]   # sector between rot[i-1] and rot[i]
                steps.append(("edge", e, from_t))
                steps.append(("seam", sectors[i], rot[i], rot[(i + 1) % m]))
            cache[v] = steps
        return cache[v]

    def fan_product(self, v) -> tuple:
        """Sheet monodromy of a small loop around vertex v."""
        acc = perm_id(self.d)
        for step in self._fan_steps(v):
            if step[0] == "edge":
                _kind, e, from_t = step
                sigma = self.edge_perm[e]
                p = sigma if from_t == self.side_triangles(e)[0] else perm_inv(sigma)
            else:
                _kind, t, enter, leave = step
                p = self._seam_step(v, t, enter, leave)
            acc = perm_mul(p, acc)
        return acc

    # -- validation -------------------------------------------------------------

    def validate(self) -> list:
        problems = []
        if self.d < 1:
            return ["sheet count must be positive"]
        ident = perm_id(self.d)
        for e in range(len(self.base.edges)):
            p = self.edge_perm.get(e)
            if p is None or len(p) != self.d or sorted(p) != list(ident):
                problems.append(f"edge {e} has no valid sheet permutation")
        for t, cycles in self.branch.items():
            seen = set()
            for cyc in cycles:
                if len(cyc) < 2:
                    problems.append(f"branch cycle of length < 2 in triangle {t}")
                if any(s < 1 or s > self.d for s in cyc) or len(set(cyc)) != len(cyc):
                    problems.append(f"bad branch cycle {cyc} in triangle {t}")
                if seen & set(cyc):
                    problems.append(f"overlapping branch cycles in triangle {t}")
                seen |= set(cyc)
        if problems:
            return problems
        for v in self.base.vertices:
            if self.fan_product(v) != ident:
                problems.append(f"vertex fan at {v} does not close")
        return problems

    def require_valid(self):
        problems = self.validate()
        if problems:
            raise NotClosed("; ".join(problems))

    # -- serialization ------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "type": "cover",
            "base": self.base.to_json(),
            "d": self.d,
            "edge_perm": {str(e): list(p) for e, p in sorted(self.edge_perm.items())},
            "branch": {str(t): sorted([list(c) for c in cycles])
                       for t, cycles in sorted(self.branch.items()) if cycles},
        }

    @staticmethod
    def from_json(obj: dict) -> "MonodromyCover":
        if obj.get("type") != "cover":
            raise InvalidSurface("not a cover document")
        base = Triangulation.from_json(obj["base"])
        return MonodromyCover(
            base=base,
            d=int(obj["d"]),
            edge_perm={int(e): tuple(p) for e, p in obj["edge_perm"].items()},
            branch={int(t): [tuple(c) for c in cycles]
                    for t, cycles in obj.get("branch", {}).items()},
        )


def cover_chi(cover: MonodromyCover) -> int:
    """Euler characteristic of the total space by sheet counting:
    d * chi(base) minus the branching defect."""
    defect = sum(len(c) - 1 for _t, c in cover.branch_cycles())
    return cover.d * cover.base.euler - defect


def cover_connected(cover: MonodromyCover) -> bool:
    """Connectivity of the total space: one orbit of (triangle, sheet)
    states under edge crossings and branch-cycle merges.

    Note this is stronger than transitivity of the group generated by all
    edge permutations; crossing permutations compose along paths, so only
    closed-path products act on a single fiber.
    """
    F = len(cover.base.triangles)
    if F == 0 or cover.d < 1:
        return False
    start = (0, 1)
    seen = {start}
    frontier = [start]
    cycle_mates = {}
    for t, cyc in cover.branch_cycles():
        for s in cyc:
            cycle_mates.setdefault((t, s), set()).update(cyc)
    while frontier:
        t, s = frontier.pop()
        for e in cover.base.triangle_edges(t):
            t1, t2 = cover.side_triangles(e)
            other = t2 if t == t1 else t1
            s2 = (perm_apply(cover.edge_perm[e], s) if t == t1
                  else perm_apply(perm_inv(cover.edge_perm[e]), s))
            if (other, s2) not in seen:
                seen.add((other, s2))
                frontier.append((other, s2))
        for s2 in cycle_mates.get((t, s), ()):
            if (t, s2) not in seen:
                seen.add((t, s2))
                frontier.append((t, s2))
    return len(seen) == F * cover.d


def sheets_over(cover: MonodromyCover, triangle: int) -> int:
    if not (0 <= triangle < len(cover.base.triangles)):
        raise InvalidSurface(f"no triangle {triangle}")
    return cover.d


# --------------------------------------------------------------------------
# Explicit assembly of the total space (the independent oracle)


def disk_pieces(cover: MonodromyCover):
    """Disk pieces of the preimage of each closed triangle: (triangle,
    sheet loop).  A loop of length 1 is an unbranched lift; length i is a
    branched disk whose boundary winds i times around the triangle."""
    out = []
    for t in range(len(cover.base.triangles)):
        cycles = [tuple(c) for c in cover.branch.get(t, ())]
        in_cycle = {s for c in cycles for s in c}
        for s in range(1, cover.d + 1):
            if s not in in_cycle:
                out.append((t, [s]))
        beta = cover.seam_perm(t)
        for c in cycles:
            s0 = min(c)
            loop = [s0]
            while perm_apply(beta, loop[-1]) != s0:
                loop.append(perm_apply(beta, loop[-1]))
            out.append((t, loop))
    return out


def assemble_total_space(cover: MonodromyCover, *, with_labels: bool = False):
    """Build the total space explicitly: d copies of every triangle glued
    by the edge permutations, each branch cycle realized by coning the
    merged disk.  Comparing V-E+F of the result against cover_chi is the
    caller's oracle; the two are computed by unrelated routes.

    Raises NotClosed when the data does not give d vertices over every
    base vertex.
    """
    cover.require_valid()
    base = cover.base

    def copy_id(e, t_from, s):
        t1, _t2 = cover.side_triangles(e)
        return (e, s if t_from == t1 else perm_apply(perm_inv(cover.edge_perm[e]), s))

    pieces = disk_pieces(cover)
    # polygon walks: per piece, a list of (edge_copy, sign, base_tail_vertex)
    polygons = []
    for (t, loop) in pieces:
        walk = base.triangles[t]
        gon = []
        for s in loop:
            for (e, sg) in walk:
                tail = base.directed_ends((e, sg))[0]
                gon.append((copy_id(e, t, s), sg, tail))
        polygons.append(gon)

    # glue polygon corners into vertex lifts
    corner_ids = {}
    for pi, gon in enumerate(polygons):
        for ci in range(len(gon)):
            corner_ids[(pi, ci)] = len(corner_ids)
    parent = list(range(len(corner_ids)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    occurrences = {}
    for pi, gon in enumerate(polygons):
        for ci, (copy, sg, _tail) in enumerate(gon):
            occurrences.setdefault(copy, []).append((pi, ci, sg))
    for copy, occ in occurrences.items():
        if len(occ) != 2:
            raise NotClosed(f"edge copy {copy} glued {len(occ)} times")
        (p1, c1, s1), (p2, c2, s2) = occ
        n1, n2 = len(polygons[p1]), len(polygons[p2])
        tail1, head1 = corner_ids[(p1, c1)], corner_ids[(p1, (c1 + 1) % n1)]
        tail2, head2 = corner_ids[(p2, c2)], corner_ids[(p2, (c2 + 1) % n2)]
        if s1 == s2:
            union(tail1, tail2)
            union(head1, head2)
        else:
            union(tail1, head2)
            union(head1, tail2)

    lift_of_corner = {}
    reps = {}
    for (pi, ci), cid in corner_ids.items():
        r = find(cid)
        if r not in reps:
            reps[r] = len(reps)
        lift_of_corner[(pi, ci)] = reps[r]
    n_lifts = len(reps)

    # d lifts over every base vertex, each projecting to one base vertex
    base_vertex_of_lift = {}
    for pi, gon in enumerate(polygons):
        for ci, (_copy, _sg, tail) in enumerate(gon):
            lv = lift_of_corner[(pi, ci)]
            prev = base_vertex_of_lift.setdefault(lv, tail)
            if prev != tail:
                raise NotClosed("a vertex lift projects to two base vertices")
    per_base = {}
    for lv, bv in base_vertex_of_lift.items():
        per_base[bv] = per_base.get(bv, 0) + 1
    for v in base.vertices:
        if per_base.get(v, 0) != cover.d:
            raise NotClosed(
                f"{per_base.get(v, 0)} lifts over vertex {v}, expected {cover.d}")

    # build the triangulated total space
    vertex_names = list(range(n_lifts))
    edges = []
    edge_index = {}
    for pi, gon in enumerate(polygons):
        for ci, (copy, sg, _tail) in enumerate(gon):
            if copy not in edge_index:
                a = lift_of_corner[(pi, ci)]
                b = lift_of_corner[(pi, (ci + 1) % len(gon))]
                edge_index[copy] = len(edges)
                # keep the base edge's own end order
                edges.append((a, b) if sg > 0 else (b, a))

    triangles = []
    tri_labels = []
    edge_labels = {idx: copy[0] for copy, idx in edge_index.items()}
    vert_labels = dict(base_vertex_of_lift)

    for pi, gon in enumerate(polygons):
        t, loop = pieces[pi]
        if len(gon) == 3:
            triangles.append([(edge_index[copy], sg) for (copy, sg, _tail) in gon])
            tri_labels.append(t)
        else:
            center = len(vertex_names)
            vertex_names.append(center)
            vert_labels[center] = None
            n = len(gon)
            spokes = []
            for ci in range(n):
                spokes.append(len(edges))
                edges.append((center, lift_of_corner[(pi, ci)]))
                edge_labels[len(edges) - 1] = None
            for ci in range(n):
                copy, sg, _tail = gon[ci]
                e_side = edge_index[copy]
                lifted_tail = lift_of_corner[(pi, ci)]
                s_here = 1 if edges[e_side][0] == lifted_tail else -1
                nxt = (ci + 1) % n
                triangles.append([(e_side, s_here), (spokes[nxt], -1), (spokes[ci], 1)])
                tri_labels.append(t)

    rotations = derive_rotations(vertex_names, edges, triangles)
    total = Triangulation(vertex_names, edges, triangles, rotations)
    if with_labels:
        labels = {
            "vertices": vert_labels,
            "edges": edge_labels,
            "triangles": {i: tl for i, tl in enumerate(tri_labels)},
        }
        return total, labels
    return total


def induced_triangulation(cover: MonodromyCover):
    """Total space of an unbranched connected cover plus projection labels."""
    if any(cover.branch.get(t) for t in cover.branch):
        raise Branched("cover has branch points")
    total, labels = assemble_total_space(cover, with_labels=True)
    return total, labels


# --------------------------------------------------------------------------
# Seeded random generation


def _random_branch(rng: random.Random, tri: Triangulation, d: int, spec):
    """Distribute requested cycle lengths over triangles, keeping cycles
    support-disjoint within each triangle."""
    if spec is None:
        return {}
    if isinstance(spec, dict):
        lengths_by_t = {int(t): list(ls) for t, ls in spec.items()}
    else:
        lengths_by_t = {}
        used = {t: 0 for t in range(len(tri.triangles))}
        for ln in spec:
            fits = [t for t, u in used.items() if u + int(ln) <= d]
            if not fits:
                raise Unsatisfiable(f"cycle lengths {list(spec)} do not fit on {d} sheets")
            t = rng.choice(fits)
            used[t] += int(ln)
            lengths_by_t.setdefault(t, []).append(int(ln))
    branch = {}
    for t, lengths in lengths_by_t.items():
        if sum(lengths) > d:
            raise Unsatisfiable(
                f"cycle lengths {lengths} in one triangle exceed {d} sheets")
        avail = list(range(1, d + 1))
        rng.shuffle(avail)
        cycles = []
        pos = 0
        for ln in lengths:
            if ln < 2 or ln > d:
                raise Unsatisfiable(f"cycle length {ln} out of range for d={d}")
            cyc = avail[pos:pos + ln]
            pos += ln
            cycles.append(tuple(cyc))
        branch[t] = cycles
    return branch


def random_cover(tri: Triangulation, d: int, branch_spec=None, seed: int = 0,
                 *, require_transitive: bool = True,
                 max_tries: int = 50000) -> MonodromyCover:
    """Deterministic-in-seed random branched cover.

    Edge permutations are solved vertex by vertex, leaves of a skeleton
    spanning tree first: every non-root vertex closes its fan through its
    still-free parent edge (loop edges are forbidden, so each edge crosses
    a fan exactly once and the solve is exact).  The root's fan is the one
    genuine constraint; fresh randomness retries it.
    """
    if d < 1:
        raise Unsatisfiable("d must be >= 1")
    rng = random.Random(seed)

    lengths = []
    if isinstance(branch_spec, dict):
        lengths = [int(x) for ls in branch_spec.values() for x in ls]
    elif branch_spec is not None:
        lengths = [int(x) for x in branch_spec]
    if any(ln < 2 or ln > d for ln in lengths):
        raise Unsatisfiable(f"cycle lengths {lengths} out of range for d={d}")
    if sum(ln - 1 for ln in lengths) % 2 != 0:
        # puncture monodromies multiply to a square times commutators,
        # an even permutation, so the total defect must be even
        raise Unsatisfiable(f"odd total branching defect {lengths} is unrealizable")
    chi_total = d * tri.euler - sum(ln - 1 for ln in lengths)
    if chi_total % 2 != 0:
        raise Unsatisfiable(
            f"total-space Euler characteristic {chi_total} is odd; no surface exists")
    if require_transitive and chi_total > 2:
        raise Unsatisfiable(
            f"connected total space cannot have Euler characteristic {chi_total} > 2")

    root = tri.vertices[0]
    parent_edge = {root: None}
    order = [root]
    seen = {root}
    adj = {v: [] for v in tri.vertices}
    for e, (a, b) in enumerate(tri.edges):
        adj[a].append((e, b))
        adj[b].append((e, a))
    qi = 0
    while qi < len(order):
        v = order[qi]
        qi += 1
        for (e, w) in adj[v]:
            if w not in seen:
                seen.add(w)
                parent_edge[w] = e
                order.append(w)
    process = list(reversed(order))
    ident = perm_id(d)

    def rand_perm():
        p = list(range(1, d + 1))
        rng.shuffle(p)
        return tuple(p)

    def solve_vertex(cover, v, e_solve):
        """Assign sigma_{e_solve} so the fan at v closes: split the fan
        product around its single crossing of e_solve."""
        pre = ident
        post = ident
        crossed = False
        eps = 1
        for step in cover._fan_steps(v):
            if step[0] == "edge":
                _k, e, from_t = step
                if e == e_solve:
                    crossed = True
                    eps = 1 if from_t == cover.side_triangles(e)[0] else -1
                    continue
                sigma = cover.edge_perm[e]
                p = sigma if from_t == cover.side_triangles(e)[0] else perm_inv(sigma)
            else:
                _k, t, enter, leave = step
                p = cover._seam_step(v, t, enter, leave)
            if crossed:
                post = perm_mul(p, post)
            else:
                pre = perm_mul(p, pre)
        # id = post * X^eps * pre
        need = perm_mul(perm_inv(post), perm_inv(pre))
        return need if eps == 1 else perm_inv(need)

    for _ in range(max_tries):
        branch = _random_branch(rng, tri, d, branch_spec)
        cover = MonodromyCover(tri, d, {}, branch)
        ok = True
        for v in process:
            rot = tri.rotations[v]
            e_solve = parent_edge[v]
            for e in rot:
                if e not in cover.edge_perm and e != e_solve:
                    cover.edge_perm[e] = rand_perm()
            if e_solve is None:
                if cover.fan_product(v) != ident:
                    ok = False
                    break
            else:
                cover.edge_perm[e_solve] = solve_vertex(cover, v, e_solve)
        if not ok:
            continue
        if cover.validate():
            continue
        if require_transitive and not cover_connected(cover):
            continue
        return cover
    raise Unsatisfiable(
        f"no valid cover found for d={d}, branch={branch_spec!r}, seed={seed}")
