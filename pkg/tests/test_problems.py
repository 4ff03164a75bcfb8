import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctp_akkt.core import Trajectory, feasibility, make_uniform_grid, objective
from ctp_akkt.problems import BuiltinProblemId, build, paper_sequence, reference_pair
from oracles import central_difference


class TestBuild:
    @pytest.mark.parametrize("pid", list(BuiltinProblemId))
    def test_dimensions(self, pid):
        prob = build(pid)
        dims = {"example1": (2, 1, 1), "example2": (2, 0, 2), "tracking": (1, 0, 1)}
        assert (prob.n, prob.p, prob.m) == dims[pid.value]
        assert prob.name == pid.value

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            build("nosuch")

    def test_tracking_reference_attached(self):
        prob = build("tracking", n_nodes=40)
        x, mult = prob.reference_solution
        assert x.grid.n_nodes == 40
        np.testing.assert_allclose(mult.v[:, 0], np.maximum(x.grid.nodes - 0.5, 0.0))

    @pytest.mark.parametrize("pid", list(BuiltinProblemId))
    def test_callback_derivatives(self, pid):
        prob = build(pid)
        rng = np.random.default_rng(5)
        for _ in range(10):
            t = rng.uniform(0, 1)
            x = rng.uniform(-2, 2, prob.n)
            np.testing.assert_allclose(
                prob.eval_grad_phi(x, t), central_difference(lambda z: prob.eval_phi(z, t), x), atol=1e-8
            )
            for j in range(prob.m):
                fd = central_difference(lambda z: prob.eval_g(z, t)[j], x)
                np.testing.assert_allclose(prob.eval_jac_g(x, t)[j], fd, atol=1e-8)
            for j in range(prob.p):
                fd = central_difference(lambda z: prob.eval_h(z, t)[j], x)
                np.testing.assert_allclose(prob.eval_jac_h(x, t)[j], fd, atol=1e-8)


class TestReferencePoints:
    @pytest.mark.parametrize("pid", list(BuiltinProblemId))
    def test_feasible(self, pid):
        prob = build(pid)
        x, _ = reference_pair(pid, prob.grid(100))
        assert feasibility(prob, x) == (0.0, 0.0)

    def test_example1_objective(self):
        prob = build("example1")
        x, mult = reference_pair("example1", prob.grid(100))
        assert objective(prob, x) == pytest.approx(1.0)
        assert mult is None

    def test_example1_not_optimal(self):
        # (0, 0) is feasible with smaller objective
        prob = build("example1")
        assert objective(prob, Trajectory.constant(prob.grid(10), [0.0, 0.0])) == 0.0

    @settings(max_examples=50)
    @given(st.integers(0, 2**31 - 1))
    def test_example2_reference_is_optimal(self, seed):
        # feasibility forces 0 <= x2 <= (t-1/2) x1^3, hence (t-1/2) x1 >= 0 pointwise
        prob = build("example2")
        grid = prob.grid(20)
        rng = np.random.default_rng(seed)
        s = grid.nodes - 0.5
        x1 = np.sign(s) * np.abs(rng.normal(size=20))
        x2 = rng.uniform(0, 1, 20) * s * x1**3
        x = Trajectory(grid, np.column_stack([x1, x2]))
        assert feasibility(prob, x) == (0.0, 0.0)
        ref, _ = reference_pair("example2", grid)
        assert objective(prob, x) >= objective(prob, ref) == 0.0


class TestExplicitSequence:
    def test_example1_values(self):
        grid = make_uniform_grid(1.0, 4)
        x, mult = paper_sequence("example1", 5, grid)
        np.testing.assert_allclose(x.values, np.tile([-0.2, 1.0], (4, 1)))
        assert np.all(mult.u == 5.0) and np.all(mult.v == 5.0)

    def test_example2_largest_multiplier(self):
        n, k = 200, 3
        _, mult = paper_sequence("example2", k, make_uniform_grid(1.0, n))
        assert mult.sup_norm() == pytest.approx(4 * k**2 * n**2 / 3, rel=1e-12)

    def test_example2_odd_grid_rejected(self):
        with pytest.raises(ValueError, match="even"):
            paper_sequence("example2", 1, make_uniform_grid(1.0, 201))

    def test_tracking_has_no_sequence(self):
        with pytest.raises(ValueError):
            paper_sequence("tracking", 1)

    @pytest.mark.parametrize("k", [0, -1, 1.5])
    def test_bad_k(self, k):
        with pytest.raises(ValueError):
            paper_sequence("example1", k)
