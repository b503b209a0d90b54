"""Entropy-regularized optimal transport of character mass onto tokens.

For a fixed candidate set the solver builds the char-by-token distance
matrix, runs Sinkhorn scaling on the Gibbs kernel exp(-D/gamma), and reads a
vocabulary off the resulting plan by dropping tokens whose received mass
falls below a fraction of their corpus frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .bpe import CandidateList
from .corpus import CharTable
from .errors import InconsistentInputsError, InfeasibleTransportError
from .vocab import Vocabulary

# Threshold under which a token is considered to have received no real mass,
# as a fraction of its own corpus frequency.
MASS_FILTER_RATIO = 1e-3


@dataclass(frozen=True)
class DistanceMatrix:
    """Rows are characters, columns are candidate tokens.

    entry(i, j) = ln(len(token_j)) when char i occurs in token j, +inf
    otherwise; the finite value is the negative log of the uniform in-token
    char probability 1/len(j).
    """

    chars: tuple[str, ...]
    tokens: tuple[str, ...]
    matrix: np.ndarray  # float64, shape (|chars|, |tokens|)


@dataclass(frozen=True)
class SinkhornConfig:
    gamma: float = 0.1
    max_iters: int = 5000
    tolerance: float = 1e-8
    epsilon_relax: float = 1e-3
    unbalanced_tau: float | None = None  # KL relaxation on the token marginal

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")


@dataclass(frozen=True)
class TransportPlan:
    matrix: np.ndarray  # shape (|chars|, |tokens|), non-negative
    converged: bool
    iterations_used: int
    marginal_violation: float


def build_distance_matrix(chars: CharTable, candidates: CandidateList) -> DistanceMatrix:
    """Containment-based transport costs; columns are constant ln(len)."""
    char_order = tuple(sorted(chars.entries, key=lambda ch: (-chars.entries[ch], ch)))
    row_of = {ch: i for i, ch in enumerate(char_order)}
    tokens = candidates.token_strings
    D = np.full((len(char_order), len(tokens)), np.inf)
    for j, tok in enumerate(tokens):
        cost = np.log(len(tok))
        for ch in set(tok):
            if ch not in row_of:
                raise InconsistentInputsError(
                    f"candidate token {tok!r} contains char {ch!r} absent from the char table")
            D[row_of[ch], j] = cost
    return DistanceMatrix(chars=char_order, tokens=tokens, matrix=D)


def _check_feasible(D, a, b, chars, tokens):
    finite = np.isfinite(D)
    active_cols = b > 0
    active_rows = a > 0
    sub = finite[np.ix_(active_rows, active_cols)]
    row_ok = sub.any(axis=1)
    if not row_ok.all():
        i = int(np.flatnonzero(active_rows)[np.argmin(row_ok)])
        raise InfeasibleTransportError(
            f"char {chars[i]!r} is contained in no candidate token", row=i)
    col_ok = sub.any(axis=0)
    if not col_ok.all():
        j = int(np.flatnonzero(active_cols)[np.argmin(col_ok)])
        raise InfeasibleTransportError(
            f"token {tokens[j]!r} shares no character with the corpus support", col=j)


# Stop once the marginal violation has not improved for this many checks;
# an infeasible token marginal otherwise burns the whole iteration budget.
_STALL_PATIENCE = 25


def _sinkhorn_standard(K, a, b, config):
    u = np.ones_like(a)
    v = np.ones_like(b)
    col_tol = max(config.tolerance, config.epsilon_relax)
    violation = np.inf
    best = np.inf
    stalled = 0
    it = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, config.max_iters + 1):
            v = b / (K.T @ u)
            u = a / (K @ v)
            if not (np.isfinite(u).all() and np.isfinite(v).all()):
                return None  # scaling overflow; caller retries in the log domain
            col = v * (K.T @ u)
            violation = float(np.max(np.abs(col - b)))
            if violation <= col_tol:
                break
            if violation >= best * (1 - 1e-9):
                stalled += 1
                if stalled >= _STALL_PATIENCE:
                    break
            else:
                stalled = 0
            best = min(best, violation)
        plan = u[:, None] * K * v[None, :]
    row_violation = float(np.max(np.abs(plan.sum(axis=1) - a)))
    converged = violation <= col_tol and row_violation <= config.tolerance
    return plan, converged, it, max(violation, row_violation)


def _sinkhorn_log(D, a, b, config):
    M = -D / config.gamma  # -inf where transport is forbidden
    log_a = np.log(a)
    log_b = np.log(b)
    log_u = np.zeros_like(a)
    log_v = np.zeros_like(b)
    col_tol = max(config.tolerance, config.epsilon_relax)
    violation = np.inf
    it = 0
    best = np.inf
    stalled = 0
    with np.errstate(invalid="ignore"):
        for it in range(1, config.max_iters + 1):
            log_v = log_b - logsumexp(M + log_u[:, None], axis=0)
            log_u = log_a - logsumexp(M + log_v[None, :], axis=1)
            col = np.exp(logsumexp(M + log_u[:, None], axis=0) + log_v)
            violation = float(np.max(np.abs(col - b)))
            if violation <= col_tol:
                break
            if violation >= best * (1 - 1e-9):
                stalled += 1
                if stalled >= _STALL_PATIENCE:
                    break
            else:
                stalled = 0
            best = min(best, violation)
        plan = np.exp(M + log_u[:, None] + log_v[None, :])
    row_violation = float(np.max(np.abs(plan.sum(axis=1) - a)))
    converged = violation <= col_tol and row_violation <= config.tolerance
    return plan, converged, it, max(violation, row_violation)


def _sinkhorn_unbalanced(K, a, b, config):
    """KL-relaxed updates on the token side, exact scaling on the char side."""
    tau = config.unbalanced_tau
    fi = tau / (tau + config.gamma)
    u = np.ones_like(a)
    v = np.ones_like(b)
    it = 0
    for it in range(1, config.max_iters + 1):
        v_new = (b / (K.T @ u)) ** fi
        u_new = a / (K @ v_new)
        drift = max(float(np.max(np.abs(u_new - u))), float(np.max(np.abs(v_new - v))))
        u, v = u_new, v_new
        if drift <= config.tolerance:
            break
    plan = u[:, None] * K * v[None, :]
    row_violation = float(np.max(np.abs(plan.sum(axis=1) - a)))
    col_violation = float(np.max(np.abs(plan.sum(axis=0) - b)))
    converged = it < config.max_iters
    return plan, converged, it, max(row_violation, col_violation)


def sinkhorn(dist: DistanceMatrix, char_dist: np.ndarray, token_dist: np.ndarray,
             config: SinkhornConfig) -> TransportPlan:
    """Alternating diagonal scaling of the Gibbs kernel.

    The char marginal is held exact (mass is physically conserved); the token
    marginal is accepted within max(tolerance, epsilon_relax).  Computation
    switches to the log domain automatically when the kernel would underflow.
    Iteration exhaustion returns converged=False rather than raising.
    """
    a = np.asarray(char_dist, dtype=np.float64)
    b = np.asarray(token_dist, dtype=np.float64)
    if a.shape[0] != dist.matrix.shape[0] or b.shape[0] != dist.matrix.shape[1]:
        raise InconsistentInputsError("distribution sizes do not match the distance matrix")
    for name, p in (("char", a), ("token", b)):
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise InconsistentInputsError(f"{name} distribution does not sum to 1")
    _check_feasible(dist.matrix, a, b, dist.chars, dist.tokens)

    # Zero-probability rows/columns carry no mass; solve the active subproblem.
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    D = dist.matrix[np.ix_(rows, cols)]
    a_act, b_act = a[rows], b[cols]

    finite = D[np.isfinite(D)]
    use_log = finite.size and float(finite.max()) / config.gamma > 300.0
    if config.unbalanced_tau is not None:
        K = np.exp(-D / config.gamma)
        sub_plan, converged, iters, violation = _sinkhorn_unbalanced(K, a_act, b_act, config)
    elif use_log:
        sub_plan, converged, iters, violation = _sinkhorn_log(D, a_act, b_act, config)
    else:
        K = np.exp(-D / config.gamma)
        result = None
        if not ((K.sum(axis=1) == 0).any() or (K.sum(axis=0) == 0).any()):
            result = _sinkhorn_standard(K, a_act, b_act, config)
        if result is None:
            result = _sinkhorn_log(D, a_act, b_act, config)
        sub_plan, converged, iters, violation = result

    plan = np.zeros_like(dist.matrix)
    plan[np.ix_(rows, cols)] = sub_plan
    return TransportPlan(matrix=plan, converged=converged,
                         iterations_used=iters, marginal_violation=violation)


def transport_cost(plan: TransportPlan, dist: DistanceMatrix) -> float:
    """<P, D> with the 0 * inf = 0 convention on forbidden cells."""
    finite = np.isfinite(dist.matrix)
    return float(np.sum(plan.matrix[finite] * dist.matrix[finite]))


def extract_vocabulary(plan: TransportPlan, candidates: CandidateList,
                       token_dist: np.ndarray) -> Vocabulary:
    """Keep tokens whose received char mass clears the frequency filter.

    Single-character tokens are always kept so that segmentation stays total.
    If every multi-character token is filtered out, the character-only
    vocabulary is returned with a warning flag in its provenance.
    """
    tokens = candidates.token_strings
    if plan.matrix.shape[1] != len(tokens):
        raise InconsistentInputsError("plan dimensions do not match the candidate list")
    col_mass = plan.matrix.sum(axis=0)
    counts = dict(candidates.tokens)
    kept = []
    any_multi = False
    for j, tok in enumerate(tokens):
        if len(tok) == 1:
            kept.append(tok)
        elif col_mass[j] >= MASS_FILTER_RATIO * token_dist[j] and token_dist[j] > 0:
            kept.append(tok)
            any_multi = True
    provenance = {"strategy": "volt"}
    if not any_multi:
        provenance["char_only_fallback"] = True
    return Vocabulary(
        tokens=tuple(kept),
        frequencies={t: counts.get(t, 0) for t in kept},
        provenance=provenance,
    )
