"""Numerical kernels shared by the estimation and simulation code paths.

Every function here is written in plain loop-oriented NumPy so that it can be
JIT-compiled by numba. When numba is installed the module compiles the kernels
at import time; setting ``NONPROB_PEL_NO_NUMBA=1`` (or running without numba)
keeps the pure-Python/NumPy fallback, which is slow but bit-identical in
results. ``benchmarks/bench_kernels.py`` times the two paths against each
other.
"""

import math
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("NONPROB_PEL_NO_NUMBA", "").lower() in ("1", "true", "yes")

try:
    if NUMBA_DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True

    def jit(func):
        return njit(cache=True)(func)

except ImportError:
    HAVE_NUMBA = False

    def jit(func):
        return func


# Solver status codes.
OK = 0
NO_CONVERGENCE = 1
INFEASIBLE = 2
SINGULAR = 3
SEPARATION = 4

# Step-halving floor for the EL weights 1 + lam'g_i is 1/n^2 (see el_core).
_EL_GRAD_TOL = 1e-10
_EL_MAX_ITER = 50


@jit
def _solve_small(A, b):
    """Gaussian elimination with partial pivoting for small symmetric systems.

    Returns (x, ok). Avoids LAPACK exceptions inside jitted loops.
    """
    p = A.shape[0]
    M = np.empty((p, p + 1))
    for i in range(p):
        for j in range(p):
            M[i, j] = A[i, j]
        M[i, p] = b[i]
    for c in range(p):
        piv = c
        big = abs(M[c, c])
        for r in range(c + 1, p):
            if abs(M[r, c]) > big:
                big = abs(M[r, c])
                piv = r
        if big < 1e-250:
            return np.zeros(p), False
        if piv != c:
            for j in range(c, p + 1):
                tmp = M[c, j]
                M[c, j] = M[piv, j]
                M[piv, j] = tmp
        inv = 1.0 / M[c, c]
        for r in range(c + 1, p):
            f = M[r, c] * inv
            if f != 0.0:
                for j in range(c, p + 1):
                    M[r, j] -= f * M[c, j]
    x = np.zeros(p)
    for i in range(p - 1, -1, -1):
        s = M[i, p]
        for j in range(i + 1, p):
            s -= M[i, j] * x[j]
        x[i] = s / M[i, i]
    return x, True


@jit
def el_lambda(dtilde, g):
    """Solve sum_i dtilde_i g_i / (1 + lam'g_i) = 0 for the EL multipliers.

    dtilde: positive weights summing to one; g: (n, r) centered constraint
    columns, r <= 2 in practice. Returns (lam, status). Degenerate (all-zero)
    columns get a zero multiplier. Feasibility means 0 lies strictly inside
    the convex hull of the rows of g.
    """
    n, r = g.shape
    lam_full = np.zeros(r)

    colmax = np.zeros(r)
    for j in range(r):
        m = 0.0
        for i in range(n):
            a = abs(g[i, j])
            if a > m:
                m = a
        colmax[j] = m
    idx = np.empty(r, np.int64)
    ra = 0
    for j in range(r):
        if colmax[j] > 1e-12:
            idx[ra] = j
            ra += 1
    if ra == 0:
        return lam_full, OK

    g2 = np.empty((n, ra))
    for i in range(n):
        for jj in range(ra):
            g2[i, jj] = g[i, idx[jj]]

    gmin = g2[0, 0]
    gmax = g2[0, 0]
    if ra == 1:
        for i in range(1, n):
            v = g2[i, 0]
            if v < gmin:
                gmin = v
            if v > gmax:
                gmax = v
        if not (gmin < 0.0 < gmax):
            return lam_full, INFEASIBLE
    else:
        # 0 interior to the hull of 2-D points iff the largest angular gap
        # between the point directions is below pi.
        eps_u = 1e-12 * colmax[idx[0]]
        eps_v = 1e-12 * colmax[idx[1]]
        th = np.empty(n)
        m = 0
        for i in range(n):
            u = g2[i, 0]
            v = g2[i, 1]
            if abs(u) > eps_u or abs(v) > eps_v:
                th[m] = math.atan2(v, u)
                m += 1
        if m < 3:
            return lam_full, INFEASIBLE
        ths = np.sort(th[:m])
        maxgap = ths[0] + 2.0 * math.pi - ths[m - 1]
        for i in range(1, m):
            gp = ths[i] - ths[i - 1]
            if gp > maxgap:
                maxgap = gp
        if maxgap >= math.pi - 1e-12:
            return lam_full, INFEASIBLE

    floor = 1.0 / (n * n)
    lam = np.zeros(ra)
    w = np.ones(n)
    wt = np.empty(n)
    phi = 0.0
    status = NO_CONVERGENCE
    F = np.zeros(ra)
    H = np.zeros((ra, ra))
    for _it in range(_EL_MAX_ITER):
        for j in range(ra):
            F[j] = 0.0
            for k in range(ra):
                H[j, k] = 0.0
        for i in range(n):
            c1 = dtilde[i] / w[i]
            c2 = c1 / w[i]
            for j in range(ra):
                F[j] += c1 * g2[i, j]
                for k in range(j, ra):
                    H[j, k] += c2 * g2[i, j] * g2[i, k]
        for j in range(ra):
            for k in range(j):
                H[j, k] = H[k, j]
        nrm = 0.0
        for j in range(ra):
            nrm += F[j] * F[j]
        if math.sqrt(nrm) < _EL_GRAD_TOL:
            status = OK
            break
        step, ok = _solve_small(H, F)
        if not ok:
            break
        s = 1.0
        accepted = False
        for _h in range(60):
            good = True
            phi_t = 0.0
            for i in range(n):
                wi = 1.0
                for j in range(ra):
                    wi += (lam[j] + s * step[j]) * g2[i, j]
                if wi <= floor:
                    good = False
                    break
                wt[i] = wi
                phi_t -= dtilde[i] * math.log(wi)
            if good and phi_t <= phi + 1e-11 * (1.0 + abs(phi)):
                for j in range(ra):
                    lam[j] += s * step[j]
                for i in range(n):
                    w[i] = wt[i]
                phi = phi_t
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break

    if status != OK and ra == 1:
        # Safeguarded bisection on the open interval where all weights stay
        # positive; the dual gradient is monotone there.
        span = -1.0 / gmin + 1.0 / gmax
        lo = -1.0 / gmax + 1e-13 * span
        hi = -1.0 / gmin - 1e-13 * span
        flo = 0.0
        fhi = 0.0
        for i in range(n):
            flo += dtilde[i] * g2[i, 0] / (1.0 + lo * g2[i, 0])
            fhi += dtilde[i] * g2[i, 0] / (1.0 + hi * g2[i, 0])
        if flo > 0.0 > fhi:
            for _b in range(200):
                mid = 0.5 * (lo + hi)
                fm = 0.0
                for i in range(n):
                    fm += dtilde[i] * g2[i, 0] / (1.0 + mid * g2[i, 0])
                if abs(fm) < _EL_GRAD_TOL:
                    lam[0] = mid
                    status = OK
                    break
                if fm > 0.0:
                    lo = mid
                else:
                    hi = mid

    for jj in range(ra):
        lam_full[idx[jj]] = lam[jj]
    return lam_full, status


@jit
def dlog_weights(dtilde, g, lam):
    """sum_i dtilde_i log(1 + lam'g_i); nan when a weight is non-positive."""
    n, r = g.shape
    s = 0.0
    for i in range(n):
        wi = 1.0
        for j in range(r):
            wi += lam[j] * g[i, j]
        if wi <= 0.0:
            return np.nan
        s += dtilde[i] * math.log(wi)
    return s


@jit
def minus2_r1(dtilde, y, mu):
    """-2 times the profile log-ratio with the single mean constraint.

    Returns (value, status); value is +inf when mu is infeasible and nan on
    solver failure.
    """
    n = y.size
    g = np.empty((n, 1))
    for i in range(n):
        g[i, 0] = y[i] - mu
    lam, st = el_lambda(dtilde, g)
    if st == INFEASIBLE:
        return np.inf, st
    if st != OK:
        return np.nan, st
    return 2.0 * n * dlog_weights(dtilde, g, lam), OK


@jit
def mc_global_dlogw(dtilde, mc):
    """Solve the model-calibration-only problem; return (dlogw, lam, status)."""
    n = mc.size
    g = np.empty((n, 1))
    for i in range(n):
        g[i, 0] = mc[i]
    lam, st = el_lambda(dtilde, g)
    if st != OK:
        return np.nan, lam, st
    return dlog_weights(dtilde, g, lam), lam, OK


@jit
def minus2_r2(dtilde, y, mc, mu, dlogw_global):
    """-2 times the profile log-ratio under calibration + mean constraints."""
    n = y.size
    g = np.empty((n, 2))
    for i in range(n):
        g[i, 0] = mc[i]
        g[i, 1] = y[i] - mu
    lam, st = el_lambda(dtilde, g)
    if st == INFEASIBLE:
        return np.inf, st
    if st != OK:
        return np.nan, st
    return 2.0 * n * (dlog_weights(dtilde, g, lam) - dlogw_global), OK


@jit
def _expit(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@jit
def _softplus(x):
    if x > 30.0:
        return x
    return math.log1p(math.exp(x))


@jit
def _standardize_cols(X, mu, sd):
    n, p = X.shape
    out = np.empty((n, p))
    for i in range(n):
        out[i, 0] = X[i, 0]
        for j in range(1, p):
            out[i, j] = (X[i, j] - mu[j]) / sd[j]
    return out


@jit
def _destandardize_coef(a, mu, sd):
    p = a.size
    out = np.empty(p)
    out[0] = a[0]
    for j in range(1, p):
        out[j] = a[j] / sd[j]
        out[0] -= a[j] * mu[j] / sd[j]
    return out


@jit
def _pml_loglik(XAs, XBs, dB, a):
    nA, p = XAs.shape
    nB = XBs.shape[0]
    ell = 0.0
    for i in range(nA):
        eta = 0.0
        for j in range(p):
            eta += XAs[i, j] * a[j]
        ell += eta
    for i in range(nB):
        eta = 0.0
        for j in range(p):
            eta += XBs[i, j] * a[j]
        ell -= dB[i] * _softplus(eta)
    return ell


@jit
def fit_pml(XA, XB, dB):
    """Maximize the propensity pseudo log-likelihood by damped Newton.

    Design matrices carry the intercept in column 0. Covariates are
    standardized internally; coefficients are returned on the original scale.
    Returns (alpha, piA, status).
    """
    nA, p = XA.shape
    nB = XB.shape[0]
    mu = np.zeros(p)
    sd = np.ones(p)
    for j in range(1, p):
        s = 0.0
        for i in range(nA):
            s += XA[i, j]
        for i in range(nB):
            s += XB[i, j]
        m = s / (nA + nB)
        ss = 0.0
        for i in range(nA):
            ss += (XA[i, j] - m) ** 2
        for i in range(nB):
            ss += (XB[i, j] - m) ** 2
        v = math.sqrt(ss / (nA + nB))
        mu[j] = m
        sd[j] = v if v > 1e-12 else 1.0
    XAs = _standardize_cols(XA, mu, sd)
    XBs = _standardize_cols(XB, mu, sd)

    NB = 0.0
    for i in range(nB):
        NB += dB[i]
    a = np.zeros(p)
    if 0.0 < nA < NB:
        a[0] = math.log(nA / (NB - nA))
    sA = np.zeros(p)
    for i in range(nA):
        for j in range(p):
            sA[j] += XAs[i, j]

    ell = _pml_loglik(XAs, XBs, dB, a)
    U = np.zeros(p)
    H = np.zeros((p, p))
    piA = np.empty(nA)
    status = NO_CONVERGENCE
    for _it in range(100):
        for j in range(p):
            U[j] = sA[j]
            for k in range(p):
                H[j, k] = 0.0
        for i in range(nB):
            eta = 0.0
            for j in range(p):
                eta += XBs[i, j] * a[j]
            pi = _expit(eta)
            w1 = dB[i] * pi
            w2 = w1 * (1.0 - pi)
            for j in range(p):
                U[j] -= w1 * XBs[i, j]
                for k in range(j, p):
                    H[j, k] += w2 * XBs[i, j] * XBs[i, k]
        for j in range(p):
            for k in range(j):
                H[j, k] = H[k, j]
        nrm = 0.0
        for j in range(p):
            nrm += U[j] * U[j]
        if math.sqrt(nrm) < 1e-8:
            status = OK
            break
        step, ok = _solve_small(H, U)
        if not ok:
            status = SINGULAR
            break
        s = 1.0
        accepted = False
        for _h in range(60):
            ell_t = _pml_loglik(XAs, XBs, dB, a + s * step)
            if ell_t >= ell - 1e-11 * (1.0 + abs(ell)):
                for j in range(p):
                    a[j] += s * step[j]
                ell = ell_t
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        anorm = 0.0
        for j in range(p):
            anorm += a[j] * a[j]
        if math.sqrt(anorm) > 50.0:
            status = SEPARATION
            break

    for i in range(nA):
        eta = 0.0
        for j in range(p):
            eta += XAs[i, j] * a[j]
        piA[i] = _expit(eta)
    alpha = _destandardize_coef(a, mu, sd)
    return alpha, piA, status


@jit
def fit_calibration(XA, totals):
    """Solve sum_A x_i / pi(x_i, a) = totals (intercept column included).

    totals[0] is the population-size total. Returns (alpha, piA, status).
    """
    nA, p = XA.shape
    mu = np.zeros(p)
    sd = np.ones(p)
    for j in range(1, p):
        s = 0.0
        for i in range(nA):
            s += XA[i, j]
        m = s / nA
        ss = 0.0
        for i in range(nA):
            ss += (XA[i, j] - m) ** 2
        v = math.sqrt(ss / nA)
        mu[j] = m
        sd[j] = v if v > 1e-12 else 1.0
    XAs = _standardize_cols(XA, mu, sd)
    T0 = totals[0]
    Ts = np.empty(p)
    Ts[0] = T0
    for j in range(1, p):
        Ts[j] = (totals[j] - mu[j] * T0) / sd[j]
    tnorm = 0.0
    for j in range(p):
        tnorm += Ts[j] * Ts[j]
    tnorm = math.sqrt(tnorm)
    tol = 1e-8 * (tnorm if tnorm > 1.0 else 1.0)

    a = np.zeros(p)
    if 0.0 < nA < T0:
        a[0] = math.log(nA / (T0 - nA))
    R = np.empty(p)
    M = np.zeros((p, p))
    piA = np.empty(nA)
    status = NO_CONVERGENCE
    for _it in range(100):
        for j in range(p):
            R[j] = -Ts[j]
            for k in range(p):
                M[j, k] = 0.0
        for i in range(nA):
            eta = 0.0
            for j in range(p):
                eta += XAs[i, j] * a[j]
            pi = _expit(eta)
            inv = 1.0 / pi
            w2 = (1.0 - pi) * inv
            for j in range(p):
                R[j] += XAs[i, j] * inv
                for k in range(j, p):
                    M[j, k] += w2 * XAs[i, j] * XAs[i, k]
        for j in range(p):
            for k in range(j):
                M[j, k] = M[k, j]
        rnorm = 0.0
        for j in range(p):
            rnorm += R[j] * R[j]
        rnorm = math.sqrt(rnorm)
        if rnorm < tol:
            status = OK
            break
        step, ok = _solve_small(M, R)
        if not ok:
            status = SINGULAR
            break
        s = 1.0
        accepted = False
        for _h in range(60):
            rn_t = 0.0
            rt = np.empty(p)
            for j in range(p):
                rt[j] = -Ts[j]
            for i in range(nA):
                eta = 0.0
                for j in range(p):
                    eta += XAs[i, j] * (a[j] + s * step[j])
                inv = 1.0 / _expit(eta)
                for j in range(p):
                    rt[j] += XAs[i, j] * inv
            for j in range(p):
                rn_t += rt[j] * rt[j]
            rn_t = math.sqrt(rn_t)
            if rn_t < rnorm:
                for j in range(p):
                    a[j] += s * step[j]
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        anorm = 0.0
        for j in range(p):
            anorm += a[j] * a[j]
        if math.sqrt(anorm) > 50.0:
            status = SEPARATION
            break

    for i in range(nA):
        eta = 0.0
        for j in range(p):
            eta += XAs[i, j] * a[j]
        piA[i] = _expit(eta)
    alpha = _destandardize_coef(a, mu, sd)
    return alpha, piA, status


@jit
def _logit_loglik(X, y, b):
    n, p = X.shape
    ell = 0.0
    for i in range(n):
        eta = 0.0
        for j in range(p):
            eta += X[i, j] * b[j]
        ell += y[i] * eta - _softplus(eta)
    return ell


@jit
def fit_logit(X, y):
    """Unweighted Bernoulli MLE by damped Newton. Returns (beta, status)."""
    n, p = X.shape
    mu = np.zeros(p)
    sd = np.ones(p)
    for j in range(1, p):
        s = 0.0
        for i in range(n):
            s += X[i, j]
        m = s / n
        ss = 0.0
        for i in range(n):
            ss += (X[i, j] - m) ** 2
        v = math.sqrt(ss / n)
        mu[j] = m
        sd[j] = v if v > 1e-12 else 1.0
    Xs = _standardize_cols(X, mu, sd)

    ybar = 0.0
    for i in range(n):
        ybar += y[i]
    ybar /= n
    b = np.zeros(p)
    if 0.0 < ybar < 1.0:
        b[0] = math.log(ybar / (1.0 - ybar))

    ell = _logit_loglik(Xs, y, b)
    U = np.zeros(p)
    H = np.zeros((p, p))
    status = NO_CONVERGENCE
    for _it in range(100):
        for j in range(p):
            U[j] = 0.0
            for k in range(p):
                H[j, k] = 0.0
        for i in range(n):
            eta = 0.0
            for j in range(p):
                eta += Xs[i, j] * b[j]
            pi = _expit(eta)
            r = y[i] - pi
            w = pi * (1.0 - pi)
            for j in range(p):
                U[j] += r * Xs[i, j]
                for k in range(j, p):
                    H[j, k] += w * Xs[i, j] * Xs[i, k]
        for j in range(p):
            for k in range(j):
                H[j, k] = H[k, j]
        nrm = 0.0
        for j in range(p):
            nrm += U[j] * U[j]
        if math.sqrt(nrm) < 1e-8:
            status = OK
            break
        step, ok = _solve_small(H, U)
        if not ok:
            status = SINGULAR
            break
        s = 1.0
        accepted = False
        for _h in range(60):
            ell_t = _logit_loglik(Xs, y, b + s * step)
            if ell_t >= ell - 1e-11 * (1.0 + abs(ell)):
                for j in range(p):
                    b[j] += s * step[j]
                ell = ell_t
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        bnorm = 0.0
        for j in range(p):
            bnorm += b[j] * b[j]
        if math.sqrt(bnorm) > 50.0:
            status = SEPARATION
            break
    beta = _destandardize_coef(b, mu, sd)
    return beta, status


@jit
def fit_ols(X, y):
    """Least squares via the normal equations. Returns (beta, status)."""
    n, p = X.shape
    XtX = np.zeros((p, p))
    Xty = np.zeros(p)
    for i in range(n):
        for j in range(p):
            Xty[j] += X[i, j] * y[i]
            for k in range(j, p):
                XtX[j, k] += X[i, j] * X[i, k]
    for j in range(p):
        for k in range(j):
            XtX[j, k] = XtX[k, j]
    beta, ok = _solve_small(XtX, Xty)
    if not ok:
        return beta, SINGULAR
    return beta, OK


@jit
def linear_predictor(X, beta):
    n, p = X.shape
    out = np.empty(n)
    for i in range(n):
        eta = 0.0
        for j in range(p):
            eta += X[i, j] * beta[j]
        out[i] = eta
    return out


@jit
def expit_vec(eta):
    n = eta.size
    out = np.empty(n)
    for i in range(n):
        out[i] = _expit(eta[i])
    return out


@jit
def boot_replicates(XA_ps, XB_ps, dB, XA_or, XB_or, yA, link, idxA, idxB, mu1, mu2):
    """Fused with-replacement bootstrap loop.

    For each replicate k (rows of idxA/idxB): refit the propensity model by
    pseudo maximum likelihood and the outcome model on the resampled data,
    then evaluate -2 r^(1) at mu1, -2 r^(2) at mu2 and the DR2 point estimate.
    link: 1 = logit outcome, 0 = identity. Failed or infeasible replicates
    yield nan in the corresponding output slot.
    """
    K, nA = idxA.shape
    nB = idxB.shape[1]
    p1 = XA_ps.shape[1]
    p2 = XA_or.shape[1]
    b1 = np.full(K, np.nan)
    b2 = np.full(K, np.nan)
    dr2 = np.full(K, np.nan)
    XAk = np.empty((nA, p1))
    XBk = np.empty((nB, p1))
    dBk = np.empty(nB)
    XAok = np.empty((nA, p2))
    XBok = np.empty((nB, p2))
    yk = np.empty(nA)
    for k in range(K):
        for i in range(nA):
            r = idxA[k, i]
            for j in range(p1):
                XAk[i, j] = XA_ps[r, j]
            for j in range(p2):
                XAok[i, j] = XA_or[r, j]
            yk[i] = yA[r]
        for i in range(nB):
            r = idxB[k, i]
            for j in range(p1):
                XBk[i, j] = XB_ps[r, j]
            for j in range(p2):
                XBok[i, j] = XB_or[r, j]
            dBk[i] = dB[r]

        alpha, piA, st = fit_pml(XAk, XBk, dBk)
        if st != OK:
            continue
        NA = 0.0
        for i in range(nA):
            NA += 1.0 / piA[i]
        dt = np.empty(nA)
        for i in range(nA):
            dt[i] = (1.0 / piA[i]) / NA

        v1, st1 = minus2_r1(dt, yk, mu1)
        if st1 == OK and np.isfinite(v1):
            b1[k] = v1

        if link == 1:
            beta, st2 = fit_logit(XAok, yk)
        else:
            beta, st2 = fit_ols(XAok, yk)
        if st2 != OK:
            continue
        etaA = linear_predictor(XAok, beta)
        etaB = linear_predictor(XBok, beta)
        if link == 1:
            mA = expit_vec(etaA)
            mB = expit_vec(etaB)
        else:
            mA = etaA
            mB = etaB
        NBk = 0.0
        mbar = 0.0
        for i in range(nB):
            NBk += dBk[i]
            mbar += dBk[i] * mB[i]
        mbar /= NBk
        val = mbar
        for i in range(nA):
            val += dt[i] * (yk[i] - mA[i])
        dr2[k] = val

        mc = np.empty(nA)
        for i in range(nA):
            mc[i] = mA[i] - mbar
        dlogw_g, _lamg, stg = mc_global_dlogw(dt, mc)
        if stg != OK:
            continue
        v2, st3 = minus2_r2(dt, yk, mc, mu2, dlogw_g)
        if st3 == OK and np.isfinite(v2):
            b2[k] = v2
    return b1, b2, dr2


@jit
def boot_point_estimates(XA_ps, XB_ps, dB, XA_or, XB_or, yA, link, use_outcome,
                         use_pel, idxA, idxB):
    """Bootstrap replicate point estimates (ipw2 / dr2 / pel in one pass).

    Returns (ipw2, dr2, pel) arrays of length K with nan for failed
    replicates; outcome-model work is skipped when use_outcome is 0.
    """
    K, nA = idxA.shape
    nB = idxB.shape[1]
    p1 = XA_ps.shape[1]
    p2 = XA_or.shape[1]
    ipw2 = np.full(K, np.nan)
    dr2 = np.full(K, np.nan)
    pel = np.full(K, np.nan)
    XAk = np.empty((nA, p1))
    XBk = np.empty((nB, p1))
    dBk = np.empty(nB)
    XAok = np.empty((nA, p2))
    XBok = np.empty((nB, p2))
    yk = np.empty(nA)
    for k in range(K):
        for i in range(nA):
            r = idxA[k, i]
            for j in range(p1):
                XAk[i, j] = XA_ps[r, j]
            for j in range(p2):
                XAok[i, j] = XA_or[r, j]
            yk[i] = yA[r]
        for i in range(nB):
            r = idxB[k, i]
            for j in range(p1):
                XBk[i, j] = XB_ps[r, j]
            for j in range(p2):
                XBok[i, j] = XB_or[r, j]
            dBk[i] = dB[r]
        alpha, piA, st = fit_pml(XAk, XBk, dBk)
        if st != OK:
            continue
        NA = 0.0
        for i in range(nA):
            NA += 1.0 / piA[i]
        dt = np.empty(nA)
        mu2v = 0.0
        for i in range(nA):
            dt[i] = (1.0 / piA[i]) / NA
            mu2v += dt[i] * yk[i]
        ipw2[k] = mu2v
        if use_outcome == 0:
            continue
        if link == 1:
            beta, st2 = fit_logit(XAok, yk)
        else:
            beta, st2 = fit_ols(XAok, yk)
        if st2 != OK:
            continue
        etaA = linear_predictor(XAok, beta)
        etaB = linear_predictor(XBok, beta)
        if link == 1:
            mA = expit_vec(etaA)
            mB = expit_vec(etaB)
        else:
            mA = etaA
            mB = etaB
        NBk = 0.0
        mbar = 0.0
        for i in range(nB):
            NBk += dBk[i]
            mbar += dBk[i] * mB[i]
        mbar /= NBk
        val = mbar
        for i in range(nA):
            val += dt[i] * (yk[i] - mA[i])
        dr2[k] = val
        if use_pel == 0:
            continue
        mc = np.empty(nA)
        for i in range(nA):
            mc[i] = mA[i] - mbar
        lam, stl = el_lambda(dt, mc.reshape(nA, 1))
        if stl != OK:
            continue
        mv = 0.0
        for i in range(nA):
            mv += dt[i] / (1.0 + lam[0] * mc[i]) * yk[i]
        pel[k] = mv
    return ipw2, dr2, pel
