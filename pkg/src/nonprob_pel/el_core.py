"""Weighted empirical-likelihood maximization under linear constraints.

The primal problem is: maximize n * sum_i dtilde_i log(p_i) over probability
vectors p subject to sum_i p_i g_ij = 0 for each constraint column j. The
solution has the closed form p_i = dtilde_i / (1 + lam'g_i) with lam the root
of the dual estimating equation, solved in _kernels by safeguarded Newton
(bisection fallback in the scalar case).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K


class ELConvergenceError(RuntimeError):
    """The dual solver failed to converge (distinct from infeasibility)."""


@dataclass(frozen=True)
class ELSolution:
    p: np.ndarray        # probabilities, empty when infeasible
    lam: np.ndarray      # Lagrange multipliers for the non-normalization constraints
    log_pel: float       # n * sum dtilde_i log p_i at the solution
    feasible: bool


def _check_dtilde(dtilde):
    dtilde = np.ascontiguousarray(dtilde, dtype=float)
    if (dtilde <= 0).any():
        raise ValueError("dtilde entries must be positive")
    if abs(dtilde.sum() - 1.0) > 1e-8:
        raise ValueError("dtilde must sum to 1")
    return dtilde


def pel_value(p, dtilde) -> float:
    """n * sum_i dtilde_i log(p_i)."""
    p = np.asarray(p, dtype=float)
    dtilde = _check_dtilde(dtilde)
    if (p <= 0).any():
        raise ValueError("probabilities must be positive")
    return float(p.size * np.sum(dtilde * np.log(p)))


def solve_el(dtilde, g) -> ELSolution:
    """Maximize the weighted EL subject to the constraint columns of g.

    Returns an infeasible ELSolution (log_pel = -inf) when 0 is not interior
    to the convex hull of the rows of g; raises ELConvergenceError if the
    dual Newton iteration fails on a feasible problem.
    """
    dtilde = _check_dtilde(dtilde)
    g = np.ascontiguousarray(g, dtype=float)
    if g.ndim == 1:
        g = g.reshape(-1, 1)
    if g.shape[0] != dtilde.size:
        raise ValueError("g and dtilde must have the same number of rows")
    if not np.isfinite(g).all():
        raise ValueError("NaN or inf in constraint matrix")
    lam, status = K.el_lambda(dtilde, g)
    if status == K.INFEASIBLE:
        return ELSolution(p=np.empty(0), lam=np.asarray(lam),
                          log_pel=-np.inf, feasible=False)
    if status != K.OK:
        raise ELConvergenceError(
            f"EL dual solver did not converge (status {status})")
    w = 1.0 + g @ lam
    p = dtilde / w
    log_pel = pel_value(p, dtilde)
    return ELSolution(p=p, lam=np.asarray(lam), log_pel=log_pel, feasible=True)


def el_log_ratio(dtilde, g_base, g_extra) -> float:
    """log-PEL of the restricted problem minus the base problem (always <= 0).

    g_base holds constraints shared by both problems (may be None or empty);
    g_extra adds the parameter constraint. Returns -inf when the restricted
    problem is infeasible.
    """
    dtilde = _check_dtilde(dtilde)
    n = dtilde.size
    g_extra = np.ascontiguousarray(g_extra, dtype=float)
    if g_extra.ndim == 1:
        g_extra = g_extra.reshape(-1, 1)
    if g_base is None or np.size(g_base) == 0:
        base_log = 0.0  # global maximizer is p = dtilde
        g_full = g_extra
    else:
        g_base = np.ascontiguousarray(g_base, dtype=float)
        if g_base.ndim == 1:
            g_base = g_base.reshape(-1, 1)
        base = solve_el(dtilde, g_base)
        if not base.feasible:
            raise ValueError("base constraints are infeasible")
        base_log = base.log_pel - pel_value(dtilde, dtilde)
        g_full = np.hstack([g_base, g_extra])
    restricted = solve_el(dtilde, g_full)
    if not restricted.feasible:
        return -np.inf
    restr_log = restricted.log_pel - pel_value(dtilde, dtilde)
    return float(restr_log - base_log)
