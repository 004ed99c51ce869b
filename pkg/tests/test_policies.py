import numpy as np
import pytest

from smoothcb.policies import (PolicyClass, VersionSpace, exact_max_packing,
                               packing_number, projected_actions,
                               union_ball_volume)
from smoothcb.spaces import ActionSpace


class TestPolicyClass:
    def test_constant_lookup(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.1, 0.2, 0.3])
        assert pc.act(1) == 0.2
        assert pc.size == 3

    def test_tabular_lookup(self):
        table = np.arange(18).reshape(3, 6) / 20.0
        pc = PolicyClass.tabular(ActionSpace.cube(1), table)
        assert pc.act(5, 2) == table[2][5]

    def test_linear_sphere_raw_range(self):
        pc = PolicyClass.linear_sphere(ActionSpace.cube(1),
                                       [[1.0, 0.0]])
        assert pc.act(0, np.array([0.3, 0.9])) == pytest.approx(0.3)

    def test_linear_sphere_rescaled_to_unit_interval(self):
        pc = PolicyClass.linear_sphere(ActionSpace.cube(1), [[1.0, 0.0]],
                                       rescale=True)
        assert pc.act(0, np.array([-1.0, 0.0])) == pytest.approx(0.0)
        assert pc.act(0, np.array([0.3, 0.9])) == pytest.approx(0.65)

    def test_linear_sphere_requires_unit_norm(self):
        with pytest.raises(ValueError):
            PolicyClass.linear_sphere(ActionSpace.cube(1), [[2.0, 0.0]])

    def test_from_csv(self, tmp_path):
        p = tmp_path / "pc.csv"
        p.write_text("0.1,0.2\n0.3,0.4\n")
        pc = PolicyClass.from_csv(ActionSpace.cube(1), str(p))
        assert pc.size == 2
        assert pc.act(1, 0) == 0.2


class TestProjection:
    def test_full_class(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.1, 0.2, 0.3])
        got = projected_actions(VersionSpace(pc))
        assert np.allclose(np.sort(got), [0.1, 0.2, 0.3])

    def test_singleton(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.1, 0.2])
        vs = VersionSpace(pc, mask=np.array([False, True]))
        assert np.allclose(projected_actions(vs), [0.2])

    def test_duplicates_collapse(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.4, 0.4])
        assert len(projected_actions(VersionSpace(pc))) == 1


class TestPacking:
    def test_two_separated_points(self):
        assert packing_number(ActionSpace.ring(), [0.0, 0.5], 0.4) == 2

    def test_near_pair_collapses(self):
        got = packing_number(ActionSpace.cube(1), [0.0, 0.05, 0.5], 0.1)
        assert got == exact_max_packing(ActionSpace.cube(1),
                                        [0.0, 0.05, 0.5], 0.1) == 2

    def test_singleton(self):
        assert packing_number(ActionSpace.ring(), [0.77], 0.3) == 1

    def test_greedy_is_valid_and_maximal(self):
        rng = np.random.default_rng(0)
        space = ActionSpace.cube(1)
        for _ in range(100):
            pts = rng.random(12)
            delta = float(rng.uniform(0.02, 0.3))
            k = packing_number(space, pts, delta)
            assert 1 <= k <= len(pts)
            # maximality surrogate: greedy never under-reports a
            # brute-force maximal packing by more than validity allows
            assert k <= exact_max_packing(space, pts, delta)


class TestUnionBallVolume:
    def test_overlapping_ring_balls(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.2, 0.25])
        got = union_ball_volume(VersionSpace(pc), h=0.1)
        assert got == pytest.approx(0.25, abs=1e-12)

    def test_single_interior_ball(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.5])
        assert union_ball_volume(VersionSpace(pc), h=0.15) \
            == pytest.approx(0.3, abs=1e-12)

    def test_covering_everything(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.0, 0.25, 0.5, 0.75])
        assert union_ball_volume(VersionSpace(pc), h=0.2) \
            == pytest.approx(1.0, abs=1e-12)

    def test_monotone_in_subset_and_h(self):
        rng = np.random.default_rng(1)
        space = ActionSpace.cube(1)
        for _ in range(50):
            acts = rng.random(8)
            pc = PolicyClass.constant(space, acts)
            mask_small = np.zeros(8, dtype=bool)
            mask_small[:4] = True
            small = VersionSpace(pc, mask_small)
            big = VersionSpace(pc)
            h1, h2 = sorted(rng.uniform(0.02, 0.4, size=2))
            assert (union_ball_volume(small, h=h1)
                    <= union_ball_volume(big, h=h1) + 1e-12)
            assert (union_ball_volume(big, h=h1)
                    <= union_ball_volume(big, h=h2) + 1e-12)


class TestVersionSpace:
    def test_nonempty_required(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.1, 0.2])
        with pytest.raises(ValueError):
            VersionSpace(pc, mask=np.array([False, False]))

    def test_indices(self):
        pc = PolicyClass.constant(ActionSpace.ring(), [0.1, 0.2, 0.3])
        vs = VersionSpace(pc, mask=np.array([True, False, True]))
        assert list(vs.indices) == [0, 2]
        assert len(vs) == 2
