"""Cyclic coordinate descent for l1-penalized quadratics.

Shared kernel behind the regression and covariance solvers: minimizes

    0.5 * b'Qb - c'b + lam * ||b||_1        (Q symmetric PSD)

along a decreasing penalty sequence with warm starts and active-set sweeps.
Convergence requires both a small maximum coefficient move per sweep and a
small stationarity gap, so every returned solution carries its KKT
certificate by construction.

Near-saturated fits (active set at or beyond the rank of Q) make plain
coordinate descent crawl along flat directions, so once moves are small the
kernel polishes the active set by solving its stationarity system exactly
(minimum-norm least squares) and only accepts the result after re-checking
the full gradient; on sign disagreement it falls back to more sweeps.  The
maintained gradient is refreshed at each grid point to stop floating-point
drift from accumulating along the path.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _sweep(Q, beta, grad, lam, active_only):
    """One pass over the coordinates; returns the largest coefficient move.

    ``grad`` is maintained as ``c - Q @ beta`` and updated in place (row
    access: Q is symmetric).
    """
    p = beta.size
    max_move = 0.0
    for k in range(p):
        bk = beta[k]
        if active_only and bk == 0.0:
            continue
        qkk = Q[k, k]
        if qkk <= 0.0:
            continue
        z = grad[k] + qkk * bk
        if z > lam:
            nb = (z - lam) / qkk
        elif z < -lam:
            nb = (z + lam) / qkk
        else:
            nb = 0.0
        d = nb - bk
        if d != 0.0:
            beta[k] = nb
            row = Q[k]
            for j in range(p):
                grad[j] -= row[j] * d
            move = d if d > 0.0 else -d
            if move > max_move:
                max_move = move
    return max_move


@njit(cache=True, nogil=True)
def _stationarity_gap(grad, beta, lam):
    """Max violation of the subgradient conditions: grad_k = lam*sign on the
    active set, |grad_k| <= lam off it."""
    gap = 0.0
    for k in range(beta.size):
        if beta[k] > 0.0:
            v = abs(grad[k] - lam)
        elif beta[k] < 0.0:
            v = abs(grad[k] + lam)
        else:
            v = abs(grad[k]) - lam
            if v < 0.0:
                v = 0.0
        if v > gap:
            gap = v
    return gap


@njit(cache=True, nogil=True)
def _polish(Q, c, beta, lam, res_tol):
    """Drive the active set to an exact stationary point (feature-sign step).

    Repeatedly solves the sign-fixed face system
    ``Q_AA b_A = c_A - lam * sign(beta_A)`` by minimum-norm least squares.
    Three cases per iteration:

    * the system is inconsistent (possible when the face is larger than the
      rank of Q, since the sign vector need not lie in the range): the
      least-squares residual is a null-space descent direction of the face
      objective, so slide along it until the first coordinate crosses zero;
    * a sign-consistent solution: exact optimum on the face, accept;
    * sign-inconsistent solution: line-search to the first crossing.

    The two crossing cases each remove at least one coordinate, so the loop
    terminates.  Violators outside the active set are the caller's problem
    (picked up by the next full sweep).
    """
    for _ in range(2 * beta.size + 2):
        active = np.nonzero(beta)[0]
        m = active.size
        if m == 0:
            return
        QAA = np.empty((m, m))
        rhs = np.empty(m)
        for i in range(m):
            ki = active[i]
            row = Q[ki]
            for j in range(m):
                QAA[i, j] = row[active[j]]
            rhs[i] = c[ki] - lam if beta[ki] > 0.0 else c[ki] + lam
        # rcond keeps flat directions from amplifying into huge solutions
        sol = np.linalg.lstsq(QAA, rhs, rcond=1e-10)[0]
        resid = rhs - QAA @ sol
        rmax = 0.0
        for i in range(m):
            v = abs(resid[i])
            if v > rmax:
                rmax = v
        if rmax > res_tol:
            # slide from beta along the residual (a null direction) to the
            # first zero crossing; one must exist because sign'resid < 0
            t = np.inf
            for i in range(m):
                bi = beta[active[i]]
                if resid[i] * bi < 0.0:
                    ti = -bi / resid[i]
                    if ti < t:
                        t = ti
            if not np.isfinite(t):
                return  # numerically ambiguous; let sweeps take over
            for i in range(m):
                ki = active[i]
                bi = beta[ki]
                nb = bi + t * resid[i]
                if bi * nb <= 0.0:
                    nb = 0.0
                beta[ki] = nb
            continue
        consistent = True
        for i in range(m):
            if sol[i] * beta[active[i]] < 0.0:
                consistent = False
                break
        if consistent:
            for i in range(m):
                beta[active[i]] = sol[i]
            return
        # first sign crossing along the segment from beta to sol
        t = 1.0
        for i in range(m):
            bi = beta[active[i]]
            if sol[i] * bi < 0.0:
                ti = bi / (bi - sol[i])
                if ti < t:
                    t = ti
        for i in range(m):
            ki = active[i]
            bi = beta[ki]
            nb = bi + t * (sol[i] - bi)
            # the crossing coordinate lands exactly on zero
            if bi * nb <= 0.0:
                nb = 0.0
            beta[ki] = nb


@njit(cache=True, nogil=True)
def quad_l1_path(Q, c, lams, move_tol, gap_tol, max_sweeps, beta0):
    """Solve the penalized quadratic for each lam in ``lams`` (decreasing).

    Acceptance is driven by the stationarity gap alone; the coefficient-move
    threshold only decides when a round of sweeps has stopped making
    progress and the active set is worth polishing.  Returns
    (coefs, converged, fail_index, fail_gap) where ``coefs`` has one row per
    grid point; on failure the rows from ``fail_index`` on are unspecified.
    """
    p = Q.shape[0]
    G = lams.size
    coefs = np.zeros((G, p))
    beta = beta0.copy()
    for g in range(G):
        lam = lams[g]
        grad = c - Q @ beta
        sweeps = 0
        rounds = 0
        converged = False
        while sweeps < max_sweeps:
            rounds += 1
            # identification: a full sweep picks up violators, short bursts
            # of active-set sweeps settle their values
            move = _sweep(Q, beta, grad, lam, False)
            sweeps += 1
            burst = 0
            burst_cap = 30 * rounds
            while move >= move_tol and sweeps < max_sweeps and burst < burst_cap:
                move = _sweep(Q, beta, grad, lam, True)
                sweeps += 1
                burst += 1
            # exactness: refresh the gradient (kills incremental-update
            # drift), then try the exact active-set solve if needed
            grad = c - Q @ beta
            gap_before = _stationarity_gap(grad, beta, lam)
            if gap_before <= gap_tol:
                converged = True
                break
            snapshot = beta.copy()
            _polish(Q, c, beta, lam, 0.25 * gap_tol)
            grad = c - Q @ beta
            gap_after = _stationarity_gap(grad, beta, lam)
            if gap_after <= gap_tol:
                converged = True
                break
            if gap_after >= gap_before:
                # polish made things no better (flat or ill-conditioned
                # active system); fall back to plain sweeping
                beta = snapshot
                grad = c - Q @ beta
        if not converged:
            return coefs, False, g, _stationarity_gap(grad, beta, lam)
        coefs[g] = beta
    return coefs, True, -1, 0.0
