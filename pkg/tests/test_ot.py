import math

import numpy as np
import pytest
from scipy.optimize import linprog

from otvocab.bpe import CandidateList
from otvocab.corpus import CharTable
from otvocab.errors import InconsistentInputsError, InfeasibleTransportError
from otvocab.ot import (SinkhornConfig, TransportPlan, build_distance_matrix,
                        extract_vocabulary, sinkhorn, transport_cost)


def chars_of(**counts):
    return CharTable(entries=dict(counts), total=sum(counts.values()))


def cand_of(*tokens):
    return CandidateList(tokens=tuple((t, 1) for t in tokens), merge_rules=())


def random_instance(rng, n_chars, n_extra_tokens, max_len=4):
    """Feasible instance: marginals are read off a random plan supported on
    exactly the finite cells, so a balanced solution always exists."""
    alphabet = [chr(ord("a") + i) for i in range(n_chars)]
    tokens = list(alphabet)
    for _ in range(n_extra_tokens):
        ln = rng.integers(2, max_len + 1)
        tokens.append("".join(rng.choice(alphabet, size=ln)))
    tokens = list(dict.fromkeys(tokens))
    chars = chars_of(**{ch: int(rng.integers(1, 50)) for ch in alphabet})
    dist = build_distance_matrix(chars, cand_of(*tokens))
    support = np.isfinite(dist.matrix)
    witness = np.where(support, rng.uniform(0.1, 1.0, size=dist.matrix.shape), 0.0)
    witness /= witness.sum()
    return dist, witness.sum(axis=1), witness.sum(axis=0)


def lp_optimum(dist, a, b):
    """Exact linear program over the finite cells of the transport polytope."""
    D = dist.matrix
    finite = np.argwhere(np.isfinite(D))
    n_var = len(finite)
    c = np.array([D[i, j] for i, j in finite])
    n, m = D.shape
    A_eq = np.zeros((n + m, n_var))
    b_eq = np.concatenate([a, b])
    for k, (i, j) in enumerate(finite):
        A_eq[i, k] = 1.0
        A_eq[n + j, k] = 1.0
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.success
    return res.fun


def test_distance_entries_are_log_length():
    dist = build_distance_matrix(chars_of(a=1, b=1, c=1), cand_of("a", "b", "c", "ab"))
    col = dist.tokens.index("ab")
    ra, rb, rc = (dist.chars.index(x) for x in "abc")
    assert dist.matrix[ra, col] == pytest.approx(math.log(2))
    assert dist.matrix[rb, col] == pytest.approx(math.log(2))
    assert dist.matrix[rc, col] == math.inf


def test_length_one_token_has_zero_distance():
    dist = build_distance_matrix(chars_of(a=1), cand_of("a"))
    assert dist.matrix[0, 0] == 0.0


def test_char_multiplicity_does_not_change_entry():
    dist = build_distance_matrix(chars_of(a=2, b=1), cand_of("a", "b", "aab"))
    col = dist.tokens.index("aab")
    assert dist.matrix[dist.chars.index("a"), col] == pytest.approx(math.log(3))


def test_unknown_char_in_candidate_rejected():
    with pytest.raises(InconsistentInputsError):
        build_distance_matrix(chars_of(a=1), cand_of("a", "ax"))


def test_single_cell_plan():
    dist = build_distance_matrix(chars_of(a=1), cand_of("a"))
    plan = sinkhorn(dist, np.array([1.0]), np.array([1.0]), SinkhornConfig())
    assert plan.matrix == pytest.approx(np.array([[1.0]]))
    assert plan.converged
    assert plan.iterations_used == 1


def test_infinite_distance_forces_diagonal():
    dist = build_distance_matrix(chars_of(a=1, b=1), cand_of("a", "b"))
    plan = sinkhorn(dist, np.array([0.5, 0.5]), np.array([0.5, 0.5]),
                    SinkhornConfig())
    expect = np.zeros((2, 2))
    expect[dist.chars.index("a"), dist.tokens.index("a")] = 0.5
    expect[dist.chars.index("b"), dist.tokens.index("b")] = 0.5
    assert plan.matrix == pytest.approx(expect)


def test_plan_zero_on_forbidden_cells():
    rng = np.random.default_rng(0)
    dist, a, b = random_instance(rng, 4, 5)
    plan = sinkhorn(dist, a, b, SinkhornConfig())
    assert (plan.matrix[~np.isfinite(dist.matrix) == False] >= 0).all()
    assert (plan.matrix[np.isinf(dist.matrix)] == 0).all()


def test_marginals_within_tolerance():
    rng = np.random.default_rng(1)
    for _ in range(10):
        dist, a, b = random_instance(rng, 5, 8)
        cfg = SinkhornConfig(tolerance=1e-8, epsilon_relax=1e-8, max_iters=20_000)
        plan = sinkhorn(dist, a, b, cfg)
        assert plan.converged
        assert np.abs(plan.matrix.sum(axis=1) - a).max() <= 1e-8
        assert np.abs(plan.matrix.sum(axis=0) - b).max() <= 1e-8


def test_near_lp_optimal_at_small_gamma():
    rng = np.random.default_rng(2)
    dist, a, b = random_instance(rng, 3, 4)
    cfg = SinkhornConfig(gamma=0.01, tolerance=1e-10, epsilon_relax=1e-10,
                         max_iters=200_000)
    plan = sinkhorn(dist, a, b, cfg)
    opt = lp_optimum(dist, a, b)
    assert transport_cost(plan, dist) <= opt * 1.02 + 1e-9


def test_smaller_gamma_moves_toward_lp_optimum():
    rng = np.random.default_rng(3)
    dist, a, b = random_instance(rng, 4, 6)
    cfg_small = SinkhornConfig(gamma=0.01, tolerance=1e-10, epsilon_relax=1e-10,
                               max_iters=200_000)
    cfg_big = SinkhornConfig(gamma=1.0, tolerance=1e-10, epsilon_relax=1e-10,
                             max_iters=200_000)
    cost_small = transport_cost(sinkhorn(dist, a, b, cfg_small), dist)
    cost_big = transport_cost(sinkhorn(dist, a, b, cfg_big), dist)
    assert cost_small <= cost_big + 1e-9


def test_permutation_invariance():
    rng = np.random.default_rng(4)
    dist, a, b = random_instance(rng, 4, 5)
    cfg = SinkhornConfig(tolerance=1e-10, epsilon_relax=1e-10, max_iters=50_000)
    plan = sinkhorn(dist, a, b, cfg)
    pr = rng.permutation(len(dist.chars))
    pc = rng.permutation(len(dist.tokens))
    from otvocab.ot import DistanceMatrix

    dist_p = DistanceMatrix(chars=tuple(dist.chars[i] for i in pr),
                            tokens=tuple(dist.tokens[j] for j in pc),
                            matrix=dist.matrix[np.ix_(pr, pc)])
    plan_p = sinkhorn(dist_p, a[pr], b[pc], cfg)
    assert plan_p.matrix == pytest.approx(plan.matrix[np.ix_(pr, pc)], abs=1e-9)


def test_bitwise_determinism():
    rng = np.random.default_rng(5)
    dist, a, b = random_instance(rng, 6, 10)
    cfg = SinkhornConfig()
    p1 = sinkhorn(dist, a, b, cfg)
    p2 = sinkhorn(dist, a, b, cfg)
    assert (p1.matrix == p2.matrix).all()


def test_log_domain_small_gamma_matches_standard():
    rng = np.random.default_rng(6)
    dist, a, b = random_instance(rng, 3, 4, max_len=3)
    cfg_std = SinkhornConfig(gamma=0.05, tolerance=1e-12, epsilon_relax=1e-12,
                             max_iters=100_000)
    plan_std = sinkhorn(dist, a, b, cfg_std)
    from otvocab import ot as ot_mod

    rows = np.arange(len(a))
    plan_log, conv, _, _ = ot_mod._sinkhorn_log(dist.matrix, a, b, cfg_std)
    assert conv
    assert plan_log == pytest.approx(plan_std.matrix, abs=1e-9)


def test_tiny_gamma_triggers_log_domain_without_overflow():
    rng = np.random.default_rng(7)
    dist, a, b = random_instance(rng, 4, 6)
    cfg = SinkhornConfig(gamma=0.002, tolerance=1e-9, epsilon_relax=1e-9,
                         max_iters=300_000)
    plan = sinkhorn(dist, a, b, cfg)
    assert np.isfinite(plan.matrix).all()
    assert plan.converged


def test_exhaustion_returns_unconverged_not_error():
    rng = np.random.default_rng(8)
    dist, a, b = random_instance(rng, 5, 8)
    plan = sinkhorn(dist, a, b,
                    SinkhornConfig(max_iters=1, tolerance=1e-14,
                                   epsilon_relax=1e-14))
    assert isinstance(plan, TransportPlan)
    assert not plan.converged


def test_isolated_char_is_infeasible():
    # char "c" appears in no token with positive probability
    dist = build_distance_matrix(chars_of(a=1, b=1, c=1), cand_of("a", "b"))
    with pytest.raises(InfeasibleTransportError):
        sinkhorn(dist, np.array([1 / 3] * 3), np.array([0.5, 0.5]),
                 SinkhornConfig())


def test_extract_excludes_zero_mass_token():
    cl = cand_of("a", "ab")
    plan = TransportPlan(matrix=np.array([[1.0, 0.0]]), converged=True,
                         iterations_used=1, marginal_violation=0.0)
    vocab = extract_vocabulary(plan, cl, np.array([0.9, 0.1]))
    assert vocab.tokens == ("a",)


def test_extract_threshold_boundary():
    cl = cand_of("a", "ab")
    below = TransportPlan(matrix=np.array([[1.0, 5e-5]]), converged=True,
                          iterations_used=1, marginal_violation=0.0)
    above = TransportPlan(matrix=np.array([[1.0, 2e-4]]), converged=True,
                          iterations_used=1, marginal_violation=0.0)
    token_dist = np.array([0.9, 0.1])
    assert extract_vocabulary(below, cl, token_dist).tokens == ("a",)
    assert extract_vocabulary(above, cl, token_dist).tokens == ("a", "ab")


def test_extract_char_only_fallback_flagged():
    cl = cand_of("a", "ab")
    plan = TransportPlan(matrix=np.array([[1.0, 0.0]]), converged=True,
                         iterations_used=1, marginal_violation=0.0)
    vocab = extract_vocabulary(plan, cl, np.array([1.0, 0.0]))
    assert vocab.tokens == ("a",)
    assert vocab.provenance.get("char_only_fallback") is True
