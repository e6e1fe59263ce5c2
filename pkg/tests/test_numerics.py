"""Simplex and max-flow against independent enumeration oracles."""

import itertools

import numpy as np
import pytest

from seqsub.errors import ValidationError
from seqsub.numerics import FlowNetwork, LpProblem, max_flow, simplex_solve


def lp_vertex_oracle(p: LpProblem):
    """Enumerate basic feasible points of {A x <= b variants, x >= 0}.

    Returns (status, value): every generated problem is bounded (box rows),
    so the optimum sits at a vertex and 'infeasible' means no vertex passes
    the feasibility check.
    """
    n = len(p.c)
    rows, rhs = [], []
    for a, b, s in zip(p.A, p.b, p.senses):
        if s in ("<=", "="):
            rows.append(np.asarray(a, dtype=float))
            rhs.append(float(b))
        if s in (">=", "="):
            rows.append(-np.asarray(a, dtype=float))
            rhs.append(-float(b))
    for j in range(n):
        e = np.zeros(n)
        e[j] = -1.0
        rows.append(e)
        rhs.append(0.0)
    G, h = np.array(rows), np.array(rhs)
    best = None
    for combo in itertools.combinations(range(len(G)), n):
        M = G[list(combo)]
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, h[list(combo)])
        if np.all(G @ x <= h + 1e-7):
            val = float(p.c @ x)
            if best is None or val > best:
                best = val
    return ("infeasible", None) if best is None else ("optimal", best)


def random_lp(rng) -> LpProblem:
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 5))
    A = rng.uniform(-1, 1, size=(m, n))
    b = rng.uniform(-0.5, 1.5, size=m)
    senses = [rng.choice(["<=", "<=", ">=", "="]) for _ in range(m)]
    # box rows keep every instance bounded
    A = np.vstack([A, np.eye(n)])
    b = np.concatenate([b, rng.uniform(0.5, 3.0, size=n)])
    senses += ["<="] * n
    c = rng.uniform(-1, 1, size=n)
    return LpProblem(c, A, b, tuple(senses))


def test_simplex_single_bound():
    p = LpProblem([1.0], [[1.0]], [3.0], ("<=",))
    res = simplex_solve(p)
    assert res.status == "optimal"
    assert res.value == pytest.approx(3.0, abs=1e-9)
    assert res.x[0] == pytest.approx(3.0, abs=1e-9)
    assert res.duals[0] == pytest.approx(1.0, abs=1e-9)


def test_simplex_two_variable_face():
    p = LpProblem([1.0, 1.0], [[1.0, 1.0], [1.0, 0.0]], [1.0, 0.4], ("<=", "<="))
    res = simplex_solve(p)
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0, abs=1e-9)


def test_simplex_infeasible_and_unbounded():
    infeasible = LpProblem([1.0], [[1.0], [1.0]], [1.0, 2.0], ("<=", ">="))
    # x <= 1 and x >= 2 cannot both hold
    assert simplex_solve(infeasible).status == "infeasible"
    unbounded = LpProblem([1.0, 0.0], [[0.0, 1.0]], [1.0], ("<=",))
    assert simplex_solve(unbounded).status == "unbounded"


def test_simplex_equality_and_negative_rhs():
    # maximize x + y with x + y = 2, -x <= -0.5 (i.e. x >= 0.5)
    p = LpProblem([1.0, 1.0], [[1.0, 1.0], [-1.0, 0.0]], [2.0, -0.5], ("=", "<="))
    res = simplex_solve(p)
    assert res.status == "optimal"
    assert res.value == pytest.approx(2.0, abs=1e-9)


def test_simplex_degenerate_bland_terminates():
    # classic degenerate vertex: several redundant rows through the origin
    p = LpProblem(
        [1.0, 1.0],
        [[1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        [0.0, 0.0, 1.0, 1.0],
        ("<=", "<=", "<=", "<="),
    )
    res = simplex_solve(p)
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0, abs=1e-9)


def test_simplex_matches_vertex_oracle_quick():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(60):
        p = random_lp(rng)
        res = simplex_solve(p)
        status, value = lp_vertex_oracle(p)
        assert res.status == status
        if status == "optimal":
            assert res.value == pytest.approx(value, abs=1e-7)
            checked += 1
    assert checked >= 20


def test_simplex_duals_satisfy_strong_duality():
    rng = np.random.default_rng(11)
    for _ in range(40):
        p = random_lp(rng)
        res = simplex_solve(p)
        if res.status == "optimal":
            assert float(res.duals @ p.b) == pytest.approx(res.value, abs=1e-7)


def test_simplex_deterministic():
    rng = np.random.default_rng(3)
    p = random_lp(rng)
    r1, r2 = simplex_solve(p), simplex_solve(p)
    assert r1.status == r2.status
    assert r1.iterations == r2.iterations
    if r1.status == "optimal":
        assert np.array_equal(r1.x, r2.x)


def test_simplex_rejects_bad_shapes():
    with pytest.raises(ValidationError):
        LpProblem([1.0, 2.0], [[1.0]], [1.0], ("<=",))
    with pytest.raises(ValidationError):
        LpProblem([1.0], [[1.0]], [1.0], ("<",))
    with pytest.raises(ValidationError):
        LpProblem([np.inf], [[1.0]], [1.0], ("<=",))


def min_cut_oracle(net: FlowNetwork) -> float:
    nodes = sorted({u for u, _, _ in net.edges} | {v for _, v, _ in net.edges}
                   | {net.source, net.sink}, key=str)
    others = [v for v in nodes if v not in (net.source, net.sink)]
    best = np.inf
    for r in range(len(others) + 1):
        for combo in itertools.combinations(others, r):
            side = set(combo) | {net.source}
            cap = sum(c for u, v, c in net.edges if u in side and v not in side)
            best = min(best, cap)
    return best


def random_network(rng) -> FlowNetwork:
    n = int(rng.integers(3, 8))
    nodes = list(range(n))
    edges = []
    for u in nodes:
        for v in nodes:
            if u != v and rng.random() < 0.45:
                edges.append((u, v, float(rng.uniform(0.0, 2.0))))
    edges.append((0, int(rng.integers(1, n)), float(rng.uniform(0.5, 2.0))))
    edges.append((int(rng.integers(0, n - 1)), n - 1, float(rng.uniform(0.5, 2.0))))
    return FlowNetwork(0, n - 1, tuple(edges))


def test_max_flow_single_edge():
    res = max_flow(FlowNetwork("s", "t", (("s", "t", 0.7),)))
    assert res.value == pytest.approx(0.7, abs=1e-12)
    assert res.cut_capacity == pytest.approx(0.7, abs=1e-12)
    assert res.edge_flows[("s", "t")] == pytest.approx(0.7)


def test_max_flow_diamond():
    edges = (
        ("s", "a", 1.0),
        ("s", "b", 0.25),
        ("a", "t", 0.5),
        ("b", "t", 1.0),
        ("a", "b", 0.25),
    )
    res = max_flow(FlowNetwork("s", "t", edges))
    assert res.value == pytest.approx(1.0, abs=1e-9)


def test_max_flow_matches_cut_enumeration_quick():
    rng = np.random.default_rng(5)
    for _ in range(60):
        net = random_network(rng)
        res = max_flow(net)
        assert res.value == pytest.approx(min_cut_oracle(net), abs=1e-9)


def test_max_flow_deterministic():
    rng = np.random.default_rng(9)
    net = random_network(rng)
    r1, r2 = max_flow(net), max_flow(net)
    assert r1.value == r2.value
    assert r1.edge_flows == r2.edge_flows
    assert r1.cut_nodes == r2.cut_nodes


def test_max_flow_rejects_bad_input():
    with pytest.raises(ValidationError):
        FlowNetwork("s", "s", ())
    with pytest.raises(ValidationError):
        FlowNetwork("s", "t", (("s", "t", -1.0),))
