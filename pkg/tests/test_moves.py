import pytest

from surfmap.covers import random_cover
from surfmap.errors import (BadEdge, BadTarget, NoCrosscap, NotAdjacent,
                            NotCollapsible, NotCompatible, NotEssential)
from surfmap.surfaces import SurfaceKind, builtin_triangulation
from surfmap.transverse import (add_pinch, builtin_example, chi_domain,
                                classify_circuit, domain_kind, edge_count,
                                identity_map, map_from_cover, mod2_degree,
                                validate_map)
from surfmap.moves import (boundary_surgery, collapse_edge, collapsible_edges,
                           insert_trivial_circle, is_normal,
                           join_isolated_circle, normalize, relocate_crosscap,
                           split_circle)
import surfmap.moves as moves_mod

from helpers import scrambled, tube_double


def check_invariants(before, after):
    assert validate_map(after).ok
    assert chi_domain(after) == chi_domain(before)
    assert domain_kind(after) == domain_kind(before)
    assert mod2_degree(after) == mod2_degree(before)


def test_identity_not_collapsible():
    tm = identity_map(builtin_triangulation("sphere_tetra"))
    assert collapsible_edges(tm) == []
    with pytest.raises(NotCollapsible):
        collapse_edge(tm, tm.edge_keys()[0])


def test_insert_then_join_round_trip():
    tm = identity_map(builtin_triangulation("sphere_tetra"))
    e0 = tm.target.triangle_edges(tm.regions[0].label)[0]
    ins = insert_trivial_circle(tm, 0, e0)
    assert edge_count(ins) == 7
    check_invariants(tm, ins)
    back = join_isolated_circle(ins, 0, 0, 0)
    assert edge_count(back) == 6
    check_invariants(tm, back)
    assert len(back.regions) == len(tm.regions)
    assert sorted(r.label for r in back.regions) == sorted(r.label for r in tm.regions)
    assert all(r.kind == SurfaceKind(True, 0, 0, 1) for r in back.regions)


def test_insert_bad_edge():
    tm = identity_map(builtin_triangulation("sphere_tetra"))
    off_edges = [e for e in range(len(tm.target.edges))
                 if e not in tm.target.triangle_edges(tm.regions[0].label)]
    with pytest.raises(BadEdge):
        insert_trivial_circle(tm, 0, off_edges[0])


def test_split_circle_requires_essential():
    tm = identity_map(builtin_triangulation("sphere_tetra"))
    e0 = tm.target.triangle_edges(tm.regions[0].label)[0]
    out = split_circle(tm, 0, 0, e0)
    assert edge_count(out) == 7
    check_invariants(tm, out)
    # a region bounded only by the new circle has no essential circuit
    disk_idx = len(out.regions) - 1
    with pytest.raises(NotEssential):
        split_circle(out, disk_idx, 0, out.isolated[0].edge)


def test_join_requires_adjacency_and_essential():
    tm = identity_map(builtin_triangulation("sphere_tetra"))
    e0 = tm.target.triangle_edges(tm.regions[0].label)[0]
    ins = insert_trivial_circle(tm, 0, e0)
    with pytest.raises(NotAdjacent):
        join_isolated_circle(ins, 0, 1, 0)
    disk_idx = len(ins.regions) - 1
    with pytest.raises(NotEssential):
        join_isolated_circle(ins, 0, disk_idx, 0)


def test_join_on_circle_only_map_impossible():
    fold, _ = normalize(builtin_example("fold_degree_zero"))
    assert is_normal(fold)["graph_like"]
    assert not fold.pairing and fold.isolated
    for ri, region in enumerate(fold.regions):
        for pos, _c in enumerate(region.circuits):
            with pytest.raises((NotEssential, NotAdjacent)):
                join_isolated_circle(fold, 0, ri, pos)


def test_scramble_preserves_everything():
    tet = builtin_triangulation("sphere_tetra")
    cover = random_cover(tet, 2, {0: [2], 1: [2]}, seed=3)
    tm = map_from_cover(cover)
    work = tm
    for step in range(20):
        nxt = scrambled(work, 1, seed=step)
        check_invariants(work, nxt)
        assert edge_count(nxt) == edge_count(work) + 1
        work = nxt


def test_normalize_identity_is_trivial():
    tm = identity_map(builtin_triangulation("torus_7"))
    norm, trace = normalize(tm)
    assert trace == []
    assert edge_count(norm) == edge_count(tm)
    assert is_normal(norm)["normal"]


def test_normalize_restores_scrambled_cover_edge_count():
    tor = builtin_triangulation("torus_7")
    tm = map_from_cover(random_cover(tor, 2, None, seed=1))
    e0 = edge_count(tm)
    sc = scrambled(tm, 15, seed=4)
    assert edge_count(sc) == e0 + 15
    norm, trace = normalize(sc)
    assert edge_count(norm) == e0
    assert len(trace) == 15
    assert all(t["move"] == "join_isolated_circle" for t in trace)
    check_invariants(tm, norm)


def test_normalize_observer_sees_monotone_edges():
    tet = builtin_triangulation("sphere_tetra")
    sc = scrambled(builtin_example("fold_degree_zero"), 6, seed=9)
    log = []

    def obs(before, after, move):
        check_invariants(before, after)
        if move in ("collapse_edge", "join_isolated_circle"):
            assert edge_count(after) < edge_count(before)
        else:
            assert edge_count(after) == edge_count(before)
        log.append(move)

    norm, trace = normalize(sc, observer=obs)
    assert len(log) == len(trace)
    assert is_normal(norm)["normal"]


def test_fold_normalizes_to_circles():
    fold = builtin_example("fold_degree_zero")
    norm, trace = normalize(fold)
    state = is_normal(norm)
    assert state["graph_like"] and state["normal"]
    assert not norm.pairing and norm.isolated
    assert chi_domain(norm) == 2 and mod2_degree(norm) == 0
    check_invariants(fold, norm)


def test_collapse_produces_isolated_circles():
    fold = builtin_example("fold_degree_zero")
    k = collapsible_edges(fold)[0]
    out = collapse_edge(fold, k)
    check_invariants(fold, out)
    assert edge_count(out) < edge_count(fold)
    assert out.isolated    # a parallel strand closed into a circle


def test_surgery_requires_opposite_directions():
    tet = builtin_triangulation("sphere_tetra")
    same = tube_double(tet, 0, same_direction=True)
    annulus = next(ri for ri, r in enumerate(same.regions)
                   if len(r.circuits) == 2)
    region = same.regions[annulus]
    e0 = min(same.target.triangle_edges(region.label))
    darts = []
    for c in region.circuits:
        for i in range(0, len(c.seq), 2):
            if same.label_edge(c.seq[i][0]) == e0:
                darts.append(c.seq[i][0])
                break
    with pytest.raises(NotCompatible):
        boundary_surgery(same, annulus, darts[0], darts[1])


def test_surgery_enables_collapse():
    tet = builtin_triangulation("sphere_tetra")
    opp = tube_double(tet, 0, same_direction=False)
    found = moves_mod._find_surgery(opp)
    assert found is not None
    ri, d1, d2 = found
    out = boundary_surgery(opp, ri, d1, d2)
    check_invariants(opp, out)
    assert edge_count(out) == edge_count(opp)
    assert collapsible_edges(out)


def test_relocate_crosscap_errors():
    rp = builtin_example("rp2_pinch")
    src = next(ri for ri, r in enumerate(rp.regions) if not r.kind.orientable)
    for tgt in range(len(rp.regions)):
        with pytest.raises(BadTarget):
            relocate_crosscap(rp, src, tgt)
    ok_src = next(ri for ri, r in enumerate(rp.regions) if r.kind.orientable)
    with pytest.raises(NoCrosscap):
        relocate_crosscap(rp, ok_src, src)


def test_relocate_crosscap_and_followup():
    tet = builtin_triangulation("sphere_tetra")
    cover = random_cover(tet, 2, {0: [2], 1: [2]}, seed=3)
    tm = map_from_cover(cover)
    idx1 = next(ri for ri, reg in enumerate(tm.regions)
                if classify_circuit(tm, reg, reg.circuits[0]).index == 1)
    pinched = add_pinch(tm, idx1, SurfaceKind(False, crosscaps=1))
    tgt = next(ri for ri, reg in enumerate(pinched.regions)
               if classify_circuit(pinched, reg, reg.circuits[0]).index == 2)
    moved = relocate_crosscap(pinched, idx1, tgt)
    check_invariants(pinched, moved)
    assert moved.regions[idx1].kind.orientable
    assert not moved.regions[tgt].kind.orientable
    norm, trace = normalize(pinched)
    moves = [t["move"] for t in trace]
    assert "relocate_crosscap" in moves and "boundary_surgery" in moves
    assert is_normal(norm)["graph_like"]
    check_invariants(pinched, norm)


def test_is_normal_flags():
    tm = identity_map(builtin_triangulation("sphere_tetra"))
    state = is_normal(tm)
    assert state["normal"] and not state["graph_like"]
    sc = scrambled(tm, 1, seed=0)
    state2 = is_normal(sc)
    assert not state2["normal"] and not state2["no_mixed_circles"]
    fold = builtin_example("fold_degree_zero")
    assert not is_normal(fold)["no_collapsible_edge"]
