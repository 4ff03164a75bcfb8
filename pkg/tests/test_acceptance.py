"""Acceptance criteria, one test each.

A PASS/FAIL line per criterion is printed in the terminal summary (see
``conftest.py``). Run on its own with ``pytest tests/test_acceptance.py``.
"""

import numpy as np
import pytest

from ctp_akkt.alm import AlmStatus, augmented_lagrangian
from ctp_akkt.cli import main
from ctp_akkt.cq import BoundVerdict, diagnose, jacobian_stack
from ctp_akkt.problems import build, paper_sequence, reference_pair
from ctp_akkt.residuals import (
    akkt_sequence_report,
    lagrangian_gradient,
    lagrangian_value,
    min_kkt_stationarity,
    node_min_stationarity,
)
from oracles import central_difference, oracle_node_distance, sample_state

PROBLEMS = ["example1", "example2", "tracking"]
N = 200


@pytest.mark.criterion(1, "example 1: exact AKKT sequence, min stationarity 1 at the reference point")
def test_example1_reproduction():
    prob = build("example1")
    grid = prob.grid(N)
    reports = akkt_sequence_report(prob, [paper_sequence("example1", k, grid) for k in range(1, 21)])
    assert max(r.stationarity_l1 for r in reports) <= 1e-12
    assert max(r.comp_sup for r in reports) <= 1e-12
    xbar, _ = reference_pair("example1", grid)
    assert abs(min_kkt_stationarity(prob, xbar).value - 1.0) <= 1e-9


@pytest.mark.criterion(2, "example 2: AKKT sequence with comp <= 1/(12k), min stationarity 0.25")
def test_example2_reproduction():
    prob = build("example2")
    grid = prob.grid(N)
    reports = akkt_sequence_report(prob, [paper_sequence("example2", k, grid) for k in range(1, 21)])
    for k, r in enumerate(reports, start=1):
        assert r.stationarity_l1 <= 1e-12
        assert r.comp_sup <= 1.0 / (12 * k) + 1e-12
    for n in (2, 50, N, 1000):
        xbar, _ = reference_pair("example2", prob.grid(n))
        assert abs(min_kkt_stationarity(prob, xbar).value - 0.25) <= 1e-6


@pytest.mark.criterion(3, "CQ verdicts: examples not certified, tracking certified")
def test_cq_verdicts(tracking_trace):
    for pid in ("example1", "example2"):
        prob = build(pid)
        grid = prob.grid(N)
        seq = [paper_sequence(pid, k, grid) for k in range(1, 21)]
        xbar, _ = reference_pair(pid, grid)
        rep = diagnose(prob, seq, limit=xbar)
        assert rep.promotion_certified is False
        assert rep.mult_bound_verdict is BoundVerdict.GROWING
        assert abs(rep.full_rank.min_det) <= 1e-12
    rep = diagnose(build("tracking"), tracking_trace)
    assert rep.promotion_certified is True
    assert rep.full_rank.min_det == 1.0
    assert rep.mult_bound_verdict is BoundVerdict.BOUNDED


@pytest.mark.criterion(4, "ALM converges on the tracking problem with bounded multipliers")
def test_alm_tracking(tracking_trace):
    assert tracking_trace.status is AlmStatus.CONVERGED_KKT
    assert len(tracking_trace) <= 50
    final = tracking_trace.final
    xbar, _ = reference_pair("tracking", final.x.grid)
    assert np.max(np.abs(final.x.values - xbar.values)) <= 1e-4
    assert final.report.max_residual() <= 1e-6
    for rec in tracking_trace.iterates:
        assert rec.mult.sup_norm() <= 0.5 + 1e-3
        assert rec.mult_sup_unprojected <= 0.5 + 1e-3


@pytest.mark.criterion(5, "ALM on example 2 diagnoses multiplier divergence")
def test_alm_example2(example2_trace):
    assert example2_trace.status in (AlmStatus.AKKT_NO_KKT_PROGRESS, AlmStatus.PENALTY_CAP_REACHED)
    assert example2_trace.status is not AlmStatus.CONVERGED_KKT
    sups = [rec.mult_sup_unprojected for rec in example2_trace.iterates]
    assert sups[-1] >= 10 * sups[0]


@pytest.mark.criterion(6, "Lagrangian and augmented Lagrangian gradients match central differences")
def test_gradient_oracle():
    rng = np.random.default_rng(20240601)
    for pid in PROBLEMS:
        prob = build(pid)
        for _ in range(100):
            t = rng.uniform(0, 1)
            x = rng.uniform(-2, 2, prob.n)
            u = rng.normal(size=prob.p)
            v = rng.exponential(size=prob.m)
            rho = 10 ** rng.uniform(0, 2)
            an = lagrangian_gradient(prob, x, u, v, t)
            fd = central_difference(lambda z: lagrangian_value(prob, z, u, v, t), x, step=1e-5)
            assert np.max(np.abs(an - fd)) <= 1e-6 * max(1.0, np.max(np.abs(an)))
            _, an = augmented_lagrangian(prob, x, u, v, rho, t)
            fd = central_difference(lambda z: augmented_lagrangian(prob, z, u, v, rho, t)[0], x, step=1e-5)
            assert np.max(np.abs(an - fd)) <= 1e-6 * max(1.0, np.max(np.abs(an)))


@pytest.mark.criterion(7, "distance to the multiplier set agrees with brute-force grid search")
def test_distance_oracle():
    rng = np.random.default_rng(7)
    for pid in PROBLEMS:
        prob = build(pid)
        grid = prob.grid(N)
        for i in rng.choice(N, size=5, replace=False):
            t = grid.nodes[i]
            x = sample_state(pid, rng)
            _, _, dist = node_min_stationarity(prob, x, t)
            assert abs(dist - oracle_node_distance(prob, x, t)) <= 1e-6


@pytest.mark.criterion(8, "||Y^T (u, v)|| >= sigma_min ||(u, v)|| on random samples")
def test_singular_value_inequality():
    rng = np.random.default_rng(8)
    for pid in PROBLEMS:
        prob = build(pid)
        grid = prob.grid(N)
        for _ in range(1000):
            t = grid.nodes[rng.integers(N)]
            stack = jacobian_stack(prob, sample_state(pid, rng), t)
            z = rng.normal(size=prob.p + prob.m) * 10 ** rng.uniform(-2, 2)
            lhs = np.linalg.norm(stack.psi(z[: prob.p], z[prob.p :]))
            assert lhs >= stack.sigma_min() * np.linalg.norm(z) - 1e-10


@pytest.mark.criterion(9, "identical solve invocations write byte-identical reports")
def test_determinism(tmp_path, capsys):
    out = tmp_path / "report.json"
    argv = ["solve", "--problem", "tracking", "--out", str(out)]
    assert main(argv) == 0
    first = out.read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == first
    capsys.readouterr()
