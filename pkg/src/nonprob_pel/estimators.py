"""Point estimators of the population mean: IPW, doubly robust, and PEL."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data_model import NonProbSample, ProbSample
from .el_core import ELSolution, solve_el
from .models import OutcomeFit, PropensityFit

# Below this, the calibration constraint is degenerate and B_m is defined as 0.
_BM_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class PointEstimate:
    value: float
    method: str                    # ipw1 / ipw2 / dr1 / dr2 / pel
    B_m_hat: Optional[float] = None
    el: Optional[ELSolution] = None


def estimate_ipw(a: NonProbSample, pf: PropensityFit,
                 N: Optional[int] = None):
    """Horvitz-Thompson style (ipw1, needs N) and Hajek (ipw2) estimators."""
    if N is None:
        raise ValueError("population size N is required for the IPW1 estimator")
    wy = (a.y / pf.scores).sum()
    mu1 = float(wy / N)
    mu2 = float(wy / pf.N_hat_A)
    return (PointEstimate(value=mu1, method="ipw1"),
            PointEstimate(value=mu2, method="ipw2"))


def ipw2_value(a: NonProbSample, pf: PropensityFit) -> float:
    return float((pf.dtilde * a.y).sum())


def estimate_dr(a: NonProbSample, b: ProbSample, pf: PropensityFit,
                of: OutcomeFit, N: Optional[int] = None):
    """The two doubly robust estimators (dr1 needs the true N)."""
    if N is None:
        raise ValueError("population size N is required for the DR1 estimator")
    resid = ((a.y - of.fitted_A) / pf.scores).sum()
    tot_B = (b.d * of.fitted_B).sum()
    mu1 = float(resid / N + tot_B / N)
    mu2 = float(resid / pf.N_hat_A + tot_B / b.N_hat)
    return (PointEstimate(value=mu1, method="dr1"),
            PointEstimate(value=mu2, method="dr2"))


def dr2_value(a: NonProbSample, b: ProbSample, pf: PropensityFit,
              of: OutcomeFit) -> float:
    return float((pf.dtilde * (a.y - of.fitted_A)).sum() + of.mbar_B)


def B_m_hat(a: NonProbSample, pf: PropensityFit, of: OutcomeFit) -> float:
    """Slope of y on the centered fitted values under the dtilde weights."""
    mc = of.fitted_A - of.mbar_B
    denom = float((pf.dtilde * mc * mc).sum())
    if denom < _BM_DENOM_FLOOR:
        return 0.0
    return float((pf.dtilde * mc * a.y).sum() / denom)


def estimate_pel(a: NonProbSample, pf: PropensityFit,
                 of: Optional[OutcomeFit] = None) -> PointEstimate:
    """Maximum PEL estimator, model-calibrated when an outcome fit is given.

    Without the calibration constraint the maximizer is p = dtilde and the
    estimate equals the Hajek IPW estimator exactly.
    """
    if of is None:
        p = pf.dtilde
        el = ELSolution(p=p, lam=np.zeros(0),
                        log_pel=float(a.n * (pf.dtilde * np.log(p)).sum()),
                        feasible=True)
        return PointEstimate(value=float((p * a.y).sum()), method="pel",
                             B_m_hat=None, el=el)
    mc = of.fitted_A - of.mbar_B
    el = solve_el(pf.dtilde, mc.reshape(-1, 1))
    if not el.feasible:
        raise ValueError(
            "model-calibration constraint infeasible: the weighted mean of "
            "fitted values over the probability sample lies outside the hull "
            "of the fitted values on the non-probability sample")
    return PointEstimate(value=float((el.p * a.y).sum()), method="pel",
                         B_m_hat=B_m_hat(a, pf, of), el=el)


def linearization_check(a: NonProbSample, pf: PropensityFit,
                        of: OutcomeFit) -> float:
    """Residual of the first-order expansion of the PEL estimator.

    Returns mu_pel - [mu_ipw2 + (mbar_B - mbar_ipw2) * B_m]; small (of
    stochastic order 1/sqrt(n)) when the participation model holds.
    """
    mu_pel = estimate_pel(a, pf, of).value
    mu_ipw2 = ipw2_value(a, pf)
    mbar_ipw2 = float((pf.dtilde * of.fitted_A).sum())
    return float(mu_pel - (mu_ipw2 + (of.mbar_B - mbar_ipw2) * B_m_hat(a, pf, of)))
