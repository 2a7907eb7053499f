"""Propensity-score and outcome-regression model fitting.

Two routes for the participation model: pseudo maximum likelihood, which
replaces the population term of the full likelihood by its design-weighted
estimate from the reference sample, and a calibration route that solves the
inverse-probability-weighted covariate-total equations. The outcome model is
fit on the non-probability sample alone (ignorable participation given x).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .data_model import ModelSpec, NonProbSample, ProbSample, validate_pair


class FitError(RuntimeError):
    """Model fitting failed (rank deficiency, separation or no convergence)."""


_STATUS_MSG = {
    K.NO_CONVERGENCE: "no convergence",
    K.SINGULAR: "rank-deficient design matrix",
    K.SEPARATION: "separation (no finite maximizer)",
}


@dataclass(frozen=True)
class PropensityFit:
    alpha: np.ndarray    # coefficients incl. intercept
    scores: np.ndarray   # fitted participation probabilities on S_A
    dtilde: np.ndarray   # normalized inverse-score weights, sums to 1
    N_hat_A: float
    method: str          # "pseudo_ml" or "calibration"
    spec: ModelSpec


@dataclass(frozen=True)
class OutcomeFit:
    beta: np.ndarray
    fitted_A: np.ndarray
    fitted_B: np.ndarray
    mbar_B: float        # design-weighted mean of fitted values over S_B
    spec: ModelSpec


def design_matrix(x: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """Select covariate columns and prepend the intercept column."""
    cols = spec.resolve_columns(x.shape[1])
    X = x[:, cols]
    if spec.include_intercept:
        X = np.hstack([np.ones((X.shape[0], 1)), X])
    return np.ascontiguousarray(X)


def _check_rank(X, what):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise FitError(f"{what}: rank-deficient design matrix")


def _finish_propensity(alpha, scores, status, method, spec, what):
    if status != K.OK:
        raise FitError(f"{what}: {_STATUS_MSG.get(status, status)}")
    if not ((scores > 0) & (scores < 1)).all():
        raise FitError(f"{what}: fitted score outside (0, 1)")
    inv = 1.0 / scores
    N_hat = float(inv.sum())
    return PropensityFit(alpha=np.asarray(alpha), scores=np.asarray(scores),
                         dtilde=inv / N_hat, N_hat_A=N_hat,
                         method=method, spec=spec)


def fit_propensity_pml(a: NonProbSample, b: ProbSample,
                       spec: ModelSpec = None) -> PropensityFit:
    """Maximum pseudo-likelihood fit of the logistic participation model."""
    validate_pair(a, b)
    if spec is None:
        spec = ModelSpec(link="logit")
    XA = design_matrix(a.x, spec)
    XB = design_matrix(b.x, spec)
    _check_rank(np.vstack([XA, XB]), "propensity (pseudo-ML)")
    alpha, piA, status = K.fit_pml(XA, XB, b.d)
    return _finish_propensity(alpha, piA, status, "pseudo_ml", spec,
                              "propensity (pseudo-ML)")


def fit_propensity_calibration(a: NonProbSample, totals=None,
                               b: ProbSample = None,
                               spec: ModelSpec = None) -> PropensityFit:
    """Calibration fit: solve sum_A x_i / pi_i = population totals.

    totals is (q_used + 1,) with the population size first, matching the
    intercept column; when absent it is estimated from the reference sample
    as (sum d, sum d * x).
    """
    if spec is None:
        spec = ModelSpec(link="logit")
    XA = design_matrix(a.x, spec)
    _check_rank(XA, "propensity (calibration)")
    if totals is None:
        if b is None:
            raise ValueError("provide either totals or a reference sample")
        validate_pair(a, b)
        XB = design_matrix(b.x, spec)
        totals = XB.T @ b.d
    totals = np.ascontiguousarray(totals, dtype=float)
    if totals.size != XA.shape[1]:
        raise ValueError(
            f"totals has length {totals.size}, expected {XA.shape[1]} "
            "(population size first, then covariate totals)")
    alpha, piA, status = K.fit_calibration(XA, totals)
    pf = _finish_propensity(alpha, piA, status, "calibration", spec,
                            "propensity (calibration)")
    resid = XA.T @ (1.0 / pf.scores) - totals
    if np.linalg.norm(resid) > 1e-6 * max(np.linalg.norm(totals), 1.0):
        raise FitError("propensity (calibration): residual tolerance not met")
    return pf


def fit_outcome(a: NonProbSample, spec: ModelSpec,
                b: ProbSample) -> OutcomeFit:
    """Fit the outcome regression on S_A and predict on both samples."""
    validate_pair(a, b)
    XA = design_matrix(a.x, spec)
    XB = design_matrix(b.x, spec)
    _check_rank(XA, "outcome regression")
    if spec.link == "logit":
        uniq = np.unique(a.y)
        if not np.isin(uniq, (0.0, 1.0)).all():
            raise FitError("outcome regression: logit link requires y in {0, 1}")
        beta, status = K.fit_logit(XA, a.y)
    else:
        beta, status = K.fit_ols(XA, a.y)
    if status != K.OK:
        raise FitError(f"outcome regression: {_STATUS_MSG.get(status, status)}")
    eta_A = XA @ beta
    eta_B = XB @ beta
    if spec.link == "logit":
        fitted_A = 1.0 / (1.0 + np.exp(-eta_A))
        fitted_B = 1.0 / (1.0 + np.exp(-eta_B))
    else:
        fitted_A = eta_A
        fitted_B = eta_B
    mbar_B = float((b.d * fitted_B).sum() / b.d.sum())
    return OutcomeFit(beta=np.asarray(beta), fitted_A=fitted_A,
                      fitted_B=fitted_B, mbar_B=mbar_B, spec=spec)


def propensity_scores_on(pf: PropensityFit, x: np.ndarray) -> np.ndarray:
    """Evaluate the fitted participation model at new covariate rows."""
    X = design_matrix(x, pf.spec)
    return 1.0 / (1.0 + np.exp(-(X @ pf.alpha)))


# Diagnostics used by the finite-difference gradient checks in the tests.

def pml_loglik(alpha, a: NonProbSample, b: ProbSample,
               spec: ModelSpec = None) -> float:
    """Pseudo log-likelihood sum_A log(pi/(1-pi)) + sum_B d log(1-pi)."""
    if spec is None:
        spec = ModelSpec(link="logit")
    alpha = np.asarray(alpha, dtype=float)
    eta_A = design_matrix(a.x, spec) @ alpha
    eta_B = design_matrix(b.x, spec) @ alpha
    return float(eta_A.sum() - (b.d * np.logaddexp(0.0, eta_B)).sum())


def pml_score(alpha, a: NonProbSample, b: ProbSample,
              spec: ModelSpec = None) -> np.ndarray:
    if spec is None:
        spec = ModelSpec(link="logit")
    alpha = np.asarray(alpha, dtype=float)
    XA = design_matrix(a.x, spec)
    XB = design_matrix(b.x, spec)
    pi_B = 1.0 / (1.0 + np.exp(-(XB @ alpha)))
    return XA.sum(axis=0) - XB.T @ (b.d * pi_B)


def logit_loglik(beta, a: NonProbSample, spec: ModelSpec = None) -> float:
    """Bernoulli log-likelihood of the outcome model on S_A."""
    if spec is None:
        spec = ModelSpec(link="logit")
    beta = np.asarray(beta, dtype=float)
    eta = design_matrix(a.x, spec) @ beta
    return float((a.y * eta - np.logaddexp(0.0, eta)).sum())


def logit_score(beta, a: NonProbSample, spec: ModelSpec = None) -> np.ndarray:
    if spec is None:
        spec = ModelSpec(link="logit")
    beta = np.asarray(beta, dtype=float)
    X = design_matrix(a.x, spec)
    pi = 1.0 / (1.0 + np.exp(-(X @ beta)))
    return X.T @ (a.y - pi)
