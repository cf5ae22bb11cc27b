import numpy as np
import pytest
import scipy.linalg as sla

from packbound import sdp
from packbound.sdp import SdpBuilder, SolverOptions, certify, solve


def order_one():
    b = SdpBuilder()
    b.add_block(1, [[1.0]])
    b.add_constraint(1.0, [(0, 0, 0, 1.0)])
    return b.build()


def trace_one(n, zero_pairs=()):
    """max sum M  s.t.  tr M = 1 and M_ij = 0 on zero_pairs, as a minimisation."""
    b = SdpBuilder()
    b.add_block(n, -np.ones((n, n)))
    b.add_constraint(1.0, [(0, i, i, 1.0) for i in range(n)])
    for i, j in zero_pairs:
        b.add_constraint(0.0, [(0, i, j, 1.0)])
    return b.build()


def order_two(C, A):
    b = SdpBuilder()
    b.add_block(2, C)
    b.add_constraint(1.0, [(0, 0, 0, A[0, 0]), (0, 0, 1, A[0, 1]), (0, 1, 1, A[1, 1])])
    return b.build()


def grid_oracle(C, A, steps=200_001):
    # every extreme ray of the 2x2 PSD cone is v v^T with v = (cos p, sin p)
    phi = np.linspace(0, np.pi, steps)
    v = np.stack([np.cos(phi), np.sin(phi)])
    num = np.einsum("ik,ij,jk->k", v, C, v)
    den = np.einsum("ik,ij,jk->k", v, A, v)
    return float(np.min(num / den))


def test_order_one():
    p = order_one()
    sol = solve(p)
    assert sol.status == sdp.OPTIMAL
    assert abs(sol.primal_obj - 1) < 1e-8
    assert certify(sol, p).passed


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_empty_graph_theta(n):
    sol = solve(trace_one(n))
    assert sol.status == sdp.OPTIMAL
    assert abs(-sol.primal_obj - n) < 1e-6
    assert np.allclose(sol.X[0], np.full((n, n), 1 / n), atol=1e-5)


@pytest.mark.parametrize("n", [2, 4, 7])
def test_complete_graph_theta(n):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    p = trace_one(n, pairs)
    sol = solve(p)
    assert abs(-sol.primal_obj - 1) < 1e-6
    assert certify(sol, p).passed


def test_certify_detects_bad_X():
    p = order_one()
    sol = solve(p)
    sol.X = [np.array([[-1e-3]])]
    rep = certify(sol, p)
    assert not rep.checks["X_psd"] and not rep.passed


def test_certify_detects_perturbed_b():
    p = order_one()
    sol = solve(p)
    q = sdp.SdpProblem(p.blocks, p.lp_size, p.C, p.c_lp, p.b + 1e-3, p.psd_entries, p.lp_entries)
    rep = certify(sol, q)
    assert not rep.checks["residual"]


def test_random_order_two_against_oracles():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        G = rng.normal(size=(2, 2))
        A = G @ G.T + 0.2 * np.eye(2)
        C = rng.normal(size=(2, 2))
        C = (C + C.T) / 2
        p = order_two(C, A)
        sol = solve(p)
        assert sol.status == sdp.OPTIMAL
        assert certify(sol, p).passed
        exact = float(sla.eigh(C, A, eigvals_only=True)[0])
        grid = grid_oracle(C, A)
        assert abs(exact - grid) < 1e-6
        worst = max(worst, abs(sol.primal_obj - exact), abs(sol.dual_obj - grid))
    assert worst < 1e-6


def test_lp_block_bound():
    # min x00 - 2 s  s.t.  x00 + s = 3,  x11 = 1 ; optimum puts everything into s
    b = SdpBuilder()
    b.add_block(2, np.diag([1.0, 0.0]))
    b.add_lp(1, -2.0)
    b.add_constraint(3.0, [(0, 0, 0, 1.0)], [(0, 1.0)])
    b.add_constraint(1.0, [(0, 1, 1, 1.0)])
    p = b.build()
    sol = solve(p)
    assert abs(sol.primal_obj + 6) < 1e-7
    assert certify(sol, p).passed


def test_weak_duality_on_feasible_iterates():
    rng = np.random.default_rng(9)
    for _ in range(10):
        n = 6
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
        sol = solve(trace_one(n, pairs))
        for pobj, dobj, pinf, dinf, mu in sol.history:
            if pinf <= 1e-7 and dinf <= 1e-7:
                assert pobj >= dobj - 1e-6
        assert sol.primal_obj >= sol.dual_obj - 1e-6


def test_determinism():
    p = trace_one(7, [(0, 1), (2, 5), (3, 4), (1, 6)])
    a, b = solve(p), solve(p)
    assert a.iterations == b.iterations
    assert abs(a.primal_obj - b.primal_obj) <= 1e-12
    assert abs(a.dual_obj - b.dual_obj) <= 1e-12


def test_presolve_drops_dependent_rows():
    b = SdpBuilder()
    b.add_block(2, np.eye(2))
    b.add_constraint(1.0, [(0, 0, 0, 1.0)])
    b.add_constraint(2.0, [(0, 0, 0, 2.0)])
    b.add_constraint(1.0, [(0, 1, 1, 1.0)])
    p = b.build()
    sol = solve(p)
    assert sol.dropped == (1,)
    assert abs(sol.primal_obj - 2) < 1e-7
    assert certify(sol, p).passed


def test_inconsistent_rows_are_infeasible():
    b = SdpBuilder()
    b.add_block(1, [[1.0]])
    b.add_constraint(1.0, [(0, 0, 0, 1.0)])
    b.add_constraint(3.0, [(0, 0, 0, 1.0)])
    assert solve(b.build()).status == sdp.INFEASIBLE


def test_negative_trace_is_infeasible():
    b = SdpBuilder()
    b.add_block(2, np.eye(2))
    b.add_constraint(-1.0, [(0, 0, 0, 1.0), (0, 1, 1, 1.0)])
    assert solve(b.build(), SolverOptions(dual_bound=1e6)).status != sdp.OPTIMAL


def test_builder_rejects_out_of_block_entries():
    b = SdpBuilder()
    b.add_block(2)
    b.add_constraint(1.0, [(0, 2, 0, 1.0)])
    with pytest.raises(ValueError):
        b.build()


def test_audit_records_each_optimal_solve():
    with sdp.audit() as au:
        solve(order_one())
        solve(trace_one(3))
    assert au.solves == 2 and len(au.reports) == 2 and not au.failures
    solve(order_one())
    assert au.solves == 2


def test_write_sdpa(tmp_path):
    b = SdpBuilder()
    b.add_block(2, [[1.0, 0.5], [0.5, 0.0]])
    b.add_lp(1, 1.0)
    b.add_constraint(1.0, [(0, 0, 1, 1.0)], [(0, 1.0)])
    path = tmp_path / "p.dat-s"
    sdp.write_sdpa(b.build(), path)
    lines = path.read_text().splitlines()
    assert lines[:4] == ["1", "2", "2 -1", "1"]
    assert "0 1 1 1 -1" in lines and "0 1 1 2 -0.5" in lines
    assert "1 1 1 2 1" in lines and "1 2 1 1 1" in lines
    assert "0 2 1 1 -1" in lines
