"""KL-constrained trust-region policy update for categorical policies.

The policy network maps states to action logits. One update maximizes the
importance-weighted surrogate

    L(theta) = mean_i  pi_theta(a_i|s_i) / pi_behavior(a_i|s_i) * A_i

subject to mean KL(pi_old || pi_theta) <= max_kl, realized as conjugate
gradient on the Fisher (exact for categorical outputs via the Gauss-Newton
form J^T (diag(p) - p p^T) J) followed by a backtracking line search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import DenseNet, backward, forward, jvp, log_softmax, softmax


@dataclass
class TrustRegionConfig:
    max_kl: float = 0.01
    cg_iters: int = 10
    cg_tol: float = 1e-10
    damping: float = 0.1
    backtrack_ratio: float = 0.8
    max_backtracks: int = 10

    def __post_init__(self):
        if self.max_kl <= 0:
            raise ValueError("max_kl must be positive")
        if self.cg_iters < 1 or self.max_backtracks < 1:
            raise ValueError("iteration caps must be >= 1")
        if not 0.0 < self.backtrack_ratio < 1.0:
            raise ValueError("backtrack_ratio must lie in (0, 1)")


@dataclass
class StepInfo:
    accepted: bool
    surrogate_improvement: float
    kl: float
    backtracks: int = 0
    error: str | None = None


def conjugate_gradient(matvec, b: np.ndarray, iters: int, tol: float) -> np.ndarray:
    """Solve A x = b for symmetric positive-definite A given only matvec."""
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = r @ r
    for _ in range(iters):
        if rs < tol:
            break
        ap = matvec(p)
        alpha = rs / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        rs_new = r @ r
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def categorical_kl(logp_old: np.ndarray, logp_new: np.ndarray) -> float:
    """Mean KL(old || new) over batch rows of log-probability tables."""
    p_old = np.exp(logp_old)
    return float((p_old * (logp_old - logp_new)).sum(axis=-1).mean())


def _surrogate(logp: np.ndarray, actions: np.ndarray, behavior_probs: np.ndarray,
               advantages: np.ndarray) -> float:
    chosen = logp[np.arange(len(actions)), actions]
    ratio = np.exp(chosen) / behavior_probs
    return float((ratio * advantages).mean())


def trust_region_step(net: DenseNet, states: np.ndarray, actions: np.ndarray,
                      behavior_probs: np.ndarray, advantages: np.ndarray,
                      config: TrustRegionConfig) -> tuple[DenseNet, StepInfo]:
    """One trust-region update. Returns (new net, info).

    On any failure (zero gradient, non-finite curvature, exhausted line
    search) the original net is returned unchanged and info says why.
    """
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.int64)
    behavior_probs = np.asarray(behavior_probs, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    n = len(states)
    if not (len(actions) == len(behavior_probs) == len(advantages) == n):
        raise ValueError("batch arrays must share their first dimension")

    logits_old = forward(net, states)
    logp_old = log_softmax(logits_old)
    p_old = np.exp(logp_old)
    surr_old = _surrogate(logp_old, actions, behavior_probs, advantages)

    # d surrogate / d logits, assembled per batch row.
    chosen_p = p_old[np.arange(n), actions]
    coeff = chosen_p / behavior_probs * advantages / n
    glogits = -coeff[:, None] * p_old
    glogits[np.arange(n), actions] += coeff
    grad = backward(net, states, glogits)
    if not np.all(np.isfinite(grad)):
        return net, StepInfo(False, 0.0, 0.0, error="non-finite surrogate gradient")
    if np.linalg.norm(grad) < 1e-12:
        return net, StepInfo(False, 0.0, 0.0)

    def fisher_vec(v: np.ndarray) -> np.ndarray:
        t = jvp(net, states, v)                       # (n, actions) logit tangents
        mt = p_old * t - p_old * (p_old * t).sum(axis=1, keepdims=True)
        out = backward(net, states, mt) / n + config.damping * v
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite Fisher-vector product")
        return out

    try:
        step_dir = conjugate_gradient(fisher_vec, grad, config.cg_iters, config.cg_tol)
        shs = step_dir @ fisher_vec(step_dir)
    except FloatingPointError as exc:
        return net, StepInfo(False, 0.0, 0.0, error=str(exc))
    if shs <= 0 or not np.isfinite(shs):
        return net, StepInfo(False, 0.0, 0.0, error="non-positive step curvature")

    full_step = np.sqrt(2.0 * config.max_kl / shs) * step_dir
    theta = net.get_flat()
    scale = 1.0
    for k in range(config.max_backtracks):
        candidate = net.with_flat(theta + scale * full_step)
        logp_new = log_softmax(forward(candidate, states))
        kl = categorical_kl(logp_old, logp_new)
        surr_new = _surrogate(logp_new, actions, behavior_probs, advantages)
        improvement = surr_new - surr_old
        if np.isfinite(kl) and kl <= 1.5 * config.max_kl and improvement > 0.0:
            return candidate, StepInfo(True, improvement, kl, backtracks=k)
        scale *= config.backtrack_ratio
    return net, StepInfo(False, 0.0, 0.0, backtracks=config.max_backtracks,
                         error="line search failed")
