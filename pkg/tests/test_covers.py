import pytest
from hypothesis import given, strategies as st

from surfmap.covers import (MonodromyCover, assemble_total_space, cover_chi,
                            cover_connected, disk_pieces, induced_triangulation,
                            perm_from_cycles, perm_id, perm_inv, perm_mul,
                            random_cover, sheets_over)
from surfmap.errors import Branched, NotClosed, Unsatisfiable
from surfmap.surfaces import builtin_triangulation


@st.composite
def perms(draw, d=5):
    vals = draw(st.permutations(range(1, d + 1)))
    return tuple(vals)


@given(perms(), perms())
def test_perm_algebra(p, q):
    d = len(p)
    assert perm_mul(p, perm_inv(p)) == perm_id(d)
    assert perm_inv(perm_inv(p)) == p
    assert perm_mul(perm_inv(q), perm_mul(perm_inv(p), perm_mul(p, q))) == perm_id(d)


def test_perm_from_cycles():
    assert perm_from_cycles([(1, 2)], 3) == (2, 1, 3)
    assert perm_from_cycles([(1, 2, 3)], 4) == (2, 3, 1, 4)


def trivial_cover(name="sphere_tetra"):
    tri = builtin_triangulation(name)
    return MonodromyCover(tri, 1, {e: (1,) for e in range(len(tri.edges))}, {})


def test_trivial_cover():
    c = trivial_cover()
    assert c.validate() == []
    assert cover_chi(c) == 2
    assert cover_connected(c)
    assert sheets_over(c, 0) == 1
    total = assemble_total_space(c)
    assert total.euler == 2 and total.validate() == []


def test_identity_perm_double_cover_is_disconnected():
    tri = builtin_triangulation("sphere_tetra")
    c = MonodromyCover(tri, 2, {e: (1, 2) for e in range(6)}, {})
    assert c.validate() == []
    assert not cover_connected(c)


def test_bad_branch_data_reported():
    tri = builtin_triangulation("sphere_tetra")
    c = MonodromyCover(tri, 2, {e: (1, 2) for e in range(6)}, {0: [(1,)]})
    assert any("length < 2" in p for p in c.validate())
    c2 = MonodromyCover(tri, 2, {e: (1, 2) for e in range(6)}, {0: [(1, 2), (2, 1)]})
    assert any("overlapping" in p for p in c2.validate())


def test_open_fan_reported():
    tri = builtin_triangulation("sphere_tetra")
    # a single-transposition edge assignment cannot close every fan
    perms = {e: (1, 2) for e in range(6)}
    perms[0] = (2, 1)
    c = MonodromyCover(tri, 2, perms, {})
    assert any("does not close" in p for p in c.validate())
    with pytest.raises(NotClosed):
        assemble_total_space(c)


SPECS = [
    ("sphere_tetra", 2, [2, 2]),
    ("sphere_tetra", 3, [3, 3]),
    ("sphere_tetra", 3, [2, 2, 2, 2]),
    ("sphere_tetra", 4, [4, 4]),
    ("rp2_6", 2, None),
    ("rp2_6", 4, [2, 2]),
    ("torus_7", 2, None),
    ("torus_7", 3, None),
    ("torus_7", 4, [2, 2]),
    ("klein_8", 2, None),
    ("klein_8", 3, [2, 2]),
    ("genus2", 2, None),
    ("genus2", 3, [2, 2]),
]


@pytest.mark.parametrize("name,d,branch", SPECS)
def test_random_cover_oracle(name, d, branch):
    tri = builtin_triangulation(name)
    for seed in (0, 1):
        cover = random_cover(tri, d, branch, seed=seed)
        assert cover.validate() == []
        assert cover_connected(cover)
        total = assemble_total_space(cover)
        assert total.validate() == []
        assert total.euler == cover_chi(cover)
        assert total.is_connected()


def test_random_cover_deterministic():
    tri = builtin_triangulation("torus_7")
    a = random_cover(tri, 3, [2, 2], seed=11)
    b = random_cover(tri, 3, [2, 2], seed=11)
    assert a.to_json() == b.to_json()


def test_unsatisfiable_specs():
    tri = builtin_triangulation("sphere_tetra")
    with pytest.raises(Unsatisfiable):
        random_cover(tri, 2, [3], seed=0)          # cycle longer than d
    with pytest.raises(Unsatisfiable):
        random_cover(tri, 3, [2], seed=0)          # odd total defect
    with pytest.raises(Unsatisfiable):
        random_cover(tri, 2, None, seed=0)         # chi(Q) = 4 > 2 connected
    rp2 = builtin_triangulation("rp2_6")
    with pytest.raises(Unsatisfiable):
        # even defect and chi fine, but cyclic monodromy cannot realize it
        random_cover(rp2, 4, [3], seed=0, max_tries=400)


def test_branched_disk_pieces():
    tri = builtin_triangulation("sphere_tetra")
    cover = random_cover(tri, 3, [3, 3], seed=7)
    pieces = disk_pieces(cover)
    branched = [t for (t, loop) in pieces if len(loop) == 3]
    plain = [(t, loop) for (t, loop) in pieces if len(loop) == 1]
    # two fully-branched triangles with one disk each; the other two
    # triangles keep one plain lift per sheet
    assert len(branched) == 2
    assert len(plain) == 3 * (len(tri.triangles) - 2)
    assert len(pieces) == len(plain) + len(branched)


def test_induced_triangulation_labels():
    tri = builtin_triangulation("torus_7")
    cover = random_cover(tri, 2, None, seed=1)
    total, labels = induced_triangulation(cover)
    assert total.euler == 0 and total.validate() == []
    assert sorted(labels["triangles"].values()) == sorted(
        list(range(len(tri.triangles))) * 2)
    with pytest.raises(Branched):
        induced_triangulation(random_cover(
            builtin_triangulation("sphere_tetra"), 2, [2, 2], seed=0))


def test_cover_json_round_trip():
    tri = builtin_triangulation("sphere_tetra")
    cover = random_cover(tri, 3, [3, 3], seed=7)
    again = MonodromyCover.from_json(cover.to_json())
    assert again.to_json() == cover.to_json()
    assert again.validate() == []
