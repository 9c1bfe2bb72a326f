"""Pure-numpy reference implementations of the hot kernels.

The compiled extension (``_fastcore``) mirrors these routines exactly;
``test_kernels.py`` checks agreement.  Generator math is inlined per
integer code (see ``generators.KERNEL_CODES``) so both backends stay
self-contained inside the solve loops.

Conventions shared by both backends:
  * channels are (n_s, n_a) row-stochastic float64 arrays;
  * likelihood ratios are clipped below at ``R_CLIP`` when evaluating
    f' so off-support entries produce large finite re-entry pressure
    instead of -inf;
  * an action column whose induced marginal is exactly zero is "dead":
    it is excluded from the objective, the residual, and gradient-based
    re-entry (the caller escapes wrong faces by restarting from a
    slightly mixed channel).
"""

from __future__ import annotations

import math

import numpy as np

R_CLIP = 1e-16
STEP_FLOOR = 1e-18
DEAD_EPS = 1e-14

# status codes for pgd_run
OK = 0
MAX_ITERS = 1
STEP_FLOORED = 2

_LN2 = math.log(2.0)


# ---------------------------------------------------------------- generator math

def _fval(code, r):
    """f(r) for smooth generator `code`; r >= 0 arrays."""
    if code == 0:  # kl
        rs = np.where(r > 0, r, 1.0)
        return rs * np.log(rs) - r + 1.0
    if code == 1:  # pearson_chi2
        return (r - 1.0) ** 2
    if code == 2:  # sq_hellinger
        return (np.sqrt(r) - 1.0) ** 2
    if code == 3:  # reverse_kl
        rs = np.where(r > 0, r, 1.0)
        return np.where(r > 0, -np.log(rs) + r - 1.0, np.inf)
    if code == 4:  # neyman_chi2
        rs = np.where(r > 0, r, 1.0)
        return np.where(r > 0, (r - 1.0) ** 2 / rs, np.inf)
    if code == 5:  # jensen_shannon
        rs = np.where(r > 0, r, 1.0)
        val = 0.5 * rs * np.log(2.0 * rs / (1.0 + rs)) + 0.5 * np.log(2.0 / (1.0 + rs))
        return np.where(r > 0, val, 0.5 * _LN2)
    if code == 6:  # triangular
        return (r - 1.0) ** 2 / (2.0 * (r + 1.0))
    raise ValueError(code)


def _fprime(code, r):
    """f'(max(r, R_CLIP)); finite everywhere."""
    r = np.maximum(r, R_CLIP)
    if code == 0:
        return np.log(r)
    if code == 1:
        return 2.0 * (r - 1.0)
    if code == 2:
        return 1.0 - 1.0 / np.sqrt(r)
    if code == 3:
        return 1.0 - 1.0 / r
    if code == 4:
        return 1.0 - 1.0 / (r * r)
    if code == 5:
        return 0.5 * np.log(2.0 * r / (1.0 + r))
    if code == 6:
        return (r - 1.0) * (r + 3.0) / (2.0 * (r + 1.0) ** 2)
    raise ValueError(code)


def _bracket(code, r):
    """f(r) - r f'(r); the G integrand, exact at r = 0."""
    if code == 0:
        return 1.0 - r
    if code == 1:
        return 1.0 - r * r
    if code == 2:
        return 1.0 - np.sqrt(r)
    if code == 3:
        rs = np.where(r > 0, r, 1.0)
        return np.where(r > 0, -np.log(rs), np.inf)
    if code == 4:
        rs = np.where(r > 0, r, 1.0)
        return np.where(r > 0, 2.0 / rs - 2.0, np.inf)
    if code == 5:
        return 0.5 * np.log(2.0 / (1.0 + r))
    if code == 6:
        return -(r - 1.0) * (3.0 * r + 1.0) / (2.0 * (r + 1.0) ** 2)
    raise ValueError(code)


_FPRIME_ZERO_FINITE = {1: -2.0, 6: -1.5}  # pearson, triangular

# sup of f' over (0, inf); +inf targets never saturate
_FPRIME_HI = {0: math.inf, 1: math.inf, 2: 1.0, 3: 1.0, 4: 1.0,
              5: 0.5 * _LN2, 6: 0.5}


def _fpinv(code, y):
    """Inverse of f': clamps to 0 below the range, +inf at/above it."""
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if code == 0:
            return np.exp(y)
        if code == 1:
            return np.maximum(1.0 + 0.5 * y, 0.0)
        if code == 2:
            return np.where(y < 1.0, (1.0 - np.minimum(y, 1.0 - 1e-300)) ** -2, np.inf)
        if code == 3:
            return np.where(y < 1.0, 1.0 / (1.0 - np.minimum(y, 1.0 - 1e-300)), np.inf)
        if code == 4:
            return np.where(y < 1.0, (1.0 - np.minimum(y, 1.0 - 1e-300)) ** -0.5, np.inf)
        if code == 5:
            hi = 0.5 * _LN2
            e2y = np.exp(2.0 * np.minimum(y, hi))
            return np.where(y < hi, e2y / (2.0 - np.minimum(e2y, 2.0 - 1e-300)), np.inf)
        if code == 6:
            yc = np.clip(y, -1.5, 0.5)
            x = 2.0 / np.sqrt(np.maximum(1.0 - 2.0 * yc, 1e-300)) - 1.0
            return np.where(y >= 0.5, np.inf, np.maximum(x, 0.0))
    raise ValueError(code)


# ---------------------------------------------------------------- shared pieces

def _induced(prior, rows):
    m = prior @ rows
    s = m.sum()
    if abs(s - 1.0) > 1e-12 and s > 0:
        m = m / s
    return m


def _ratios(rows, m, alive):
    r = np.zeros_like(rows)
    r[:, alive] = rows[:, alive] / m[alive]
    return r


def free_energy(code, prior, loss, beta, rows, m):
    """Expected loss plus information cost at exchange rate 1/beta."""
    alive = m > 0.0
    L = float(np.einsum("s,sa,sa->", prior, rows, loss))
    r = _ratios(rows, m, alive)
    fv = _fval(code, r[:, alive])
    if np.any(np.isinf(fv) & (prior[:, None] > 0)):
        return math.inf
    info = float(prior @ (fv @ m[alive]))
    return L + info / beta


def residual(code, prior, loss, beta, rows, m, support_eps):
    """Max indifference violation over live actions.

    On support (rows > support_eps): deviation of effective loss from
    the per-stimulus support mean.  Off support: shortfall below that
    mean, skipping exact zeros for generators with f'(0) = -inf and
    skipping dead action columns entirely.
    """
    alive = m > 0.0
    if not np.any(alive):
        return math.inf
    r = _ratios(rows, m, alive)
    G = prior @ _bracket(code, r[:, alive])
    if np.any(np.isinf(G)):
        return math.inf
    eff = loss[:, alive] + (_fprime(code, r[:, alive]) + G) / beta
    rows_a = rows[:, alive]
    weighted = prior > 0.0
    sup = rows_a > support_eps
    nsup = sup.sum(axis=1)
    if np.any(weighted & (nsup == 0)):
        return math.inf
    nsup = np.maximum(nsup, 1)
    lam = np.sum(np.where(sup, eff, 0.0), axis=1) / nsup
    dev = np.where(sup & weighted[:, None], np.abs(eff - lam[:, None]), 0.0)
    if code in _FPRIME_ZERO_FINITE:
        off_check = ~sup
    else:
        off_check = ~sup & (rows_a > 0.0)
    viol = np.where(off_check & weighted[:, None], lam[:, None] - eff, 0.0)
    return float(max(dev.max(), viol.max(), 0.0))


# ---------------------------------------------------------------- KL fixed point

def kl_ba_run(prior, loss, beta, rows0, max_iters, tol, support_eps):
    """Alternating Gibbs-row / marginal updates until the indifference
    residual (with the induced marginal) is within tol."""
    lmin = loss.min(axis=1, keepdims=True)
    E = np.exp(-beta * (loss - lmin))
    rows = rows0.copy()
    m = _induced(prior, rows)
    resid = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        rows = m[None, :] * E
        rows /= rows.sum(axis=1, keepdims=True)
        m = _induced(prior, rows)
        resid = residual(0, prior, loss, beta, rows, m, support_eps)
        if resid <= tol:
            return rows, m, it, resid, OK
    return rows, m, it, resid, MAX_ITERS


# ---------------------------------------------------------------- general-f PGD

def _fp_pass(code, prior, loss, beta, rows, m):
    """One stationarity pass: rows_s = m * (f')^{-1}(beta(lam_s - eff))
    with eff the G-corrected effective loss and lam_s bisected so each
    row sums to one.  Dead columns stay dead.  Returns None when a
    bracket cannot be established."""
    alive = m > 0.0
    if not np.any(alive):
        return None
    ma = m[alive]
    r = _ratios(rows, m, alive)[:, alive]
    G = prior @ _bracket(code, r)
    if not np.all(np.isfinite(G)):
        return None
    eff = loss[:, alive] + G[None, :] / beta

    def mass(lam):
        return (ma[None, :] * _fpinv(code, beta * (lam[:, None] - eff))).sum(axis=1)

    lo = eff.min(axis=1) - 1.0 / beta
    for _ in range(200):
        bad = mass(lo) >= 1.0
        if not bad.any():
            break
        lo[bad] -= np.maximum(1.0, np.abs(lo[bad]))
    else:
        return None
    hi_bound = _FPRIME_HI[code]
    if math.isfinite(hi_bound):
        hi = eff.min(axis=1) + hi_bound / beta
    else:
        hi = eff.max(axis=1) + 1.0 / beta
        for _ in range(200):
            bad = mass(hi) <= 1.0
            if not bad.any():
                break
            hi[bad] += np.maximum(1.0, np.abs(hi[bad]))
        else:
            return None
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        low = mass(mid) < 1.0
        lo = np.where(low, mid, lo)
        hi = np.where(low, hi, mid)
    q = ma[None, :] * _fpinv(code, beta * (lo[:, None] - eff))
    tot = q.sum(axis=1, keepdims=True)
    if not np.all(np.isfinite(q)) or np.any(tot <= 0):
        return None
    q /= tot
    out = np.zeros_like(rows)
    out[:, alive] = q
    return out


def _project_rows(v):
    """Euclidean projection of each row onto the probability simplex."""
    n = v.shape[1]
    u = np.sort(v, axis=1)[:, ::-1]
    css = (np.cumsum(u, axis=1) - 1.0) / np.arange(1, n + 1)
    k = np.sum(u > css, axis=1) - 1
    tau = css[np.arange(v.shape[0]), k]
    return np.maximum(v - tau[:, None], 0.0)


def pgd_run(code, prior, loss, beta, rows0, max_iters, tol, support_eps, step0, grow=1.3):
    """Projected descent on the channel with backtracking line search.

    Per-row steps use the prior-preconditioned gradient
    ell + (f'(r) + G)/beta; accepted steps never increase the free
    energy.  ``grow`` > 1 re-inflates the step after a success (set to
    1.0 for the fixed step rule).  Returns
    (rows, m, iters, resid, F, step, status).
    """
    rows = np.maximum(rows0, 1e-10)  # interior start
    rows /= rows.sum(axis=1, keepdims=True)
    m = _induced(prior, rows)
    F = free_energy(code, prior, loss, beta, rows, m)
    step = step0
    resid = math.inf
    live = prior > 0.0
    it = 0
    next_fp_at = 0
    for it in range(1, max_iters + 1):
        # an action column whose marginal has decayed to dust is numerically
        # dead: below this scale the first-order model is meaningless, so
        # retire it exactly (the caller's restart pass guards wrong faces)
        dust = (m > 0.0) & (m < DEAD_EPS)
        if np.any(dust):
            rows[:, dust] = 0.0
            rows /= rows.sum(axis=1, keepdims=True)
            m = _induced(prior, rows)
            F = free_energy(code, prior, loss, beta, rows, m)
        resid = residual(code, prior, loss, beta, rows, m, support_eps)
        if resid <= tol:
            return rows, m, it, resid, F, step, OK
        if it >= next_fp_at or resid <= 1e-2:
            # iterate the guarded stationarity map: it contracts much
            # faster than line-searched descent once the support has
            # settled, and it restores interior rows after the projection
            # has zeroed entries that belong inside (it may need a few
            # passes to settle into its own basin, hence the block)
            b_rows, b_m, b_resid = None, None, resid
            c_rows, c_m = rows, m
            for _ in range(50):
                cand = _fp_pass(code, prior, loss, beta, c_rows, c_m)
                if cand is None:
                    break
                cand[~live] = rows[~live]
                m_c = _induced(prior, cand)
                resid_c = residual(code, prior, loss, beta, cand, m_c, support_eps)
                c_rows, c_m = cand, m_c
                if resid_c < b_resid:
                    b_rows, b_m, b_resid = cand, m_c, resid_c
                    if b_resid <= tol:
                        break
            adopted = False
            if b_rows is not None and b_resid <= 0.7 * resid:
                F_c = free_energy(code, prior, loss, beta, b_rows, b_m)
                if F_c <= F + 1e-12 * (1.0 + abs(F)):
                    rows, m, F = b_rows, b_m, F_c
                    next_fp_at = it + 1
                    adopted = True
            if adopted:
                continue
            next_fp_at = it + 20
        alive = m > 0.0
        r = _ratios(rows, m, alive)
        G = prior @ _bracket(code, r[:, alive])
        g = np.full_like(rows, 1e30)  # dead columns never re-enter here
        g[:, alive] = loss[:, alive] + (_fprime(code, r[:, alive]) + G) / beta
        accepted = False
        # when float noise has beaten the warm step down into the dead zone
        # (per-step gains below the resolution of F), one reset back to the
        # top of the ladder recovers; only a full ladder of rejections from
        # step0 counts as a genuine stall
        can_reset = step < step0
        while True:
            if step < STEP_FLOOR:
                if not can_reset:
                    break
                can_reset = False
                step = step0
            cand = _project_rows(rows - step * g)
            cand[~live] = rows[~live]
            m_c = _induced(prior, cand)
            F_c = free_energy(code, prior, loss, beta, cand, m_c)
            delta = cand - rows
            wsq = float(prior @ np.sum(delta * delta, axis=1))
            if wsq == 0.0 and not can_reset:
                # prox fixed point at this step size: numerically stationary
                return rows, m, it, resid, F, step, STEP_FLOORED
            if wsq > 0.0 and F_c <= F - 1e-4 * wsq / step:
                accepted = True
                break
            if wsq > 0.0 and F_c - F <= 4e-16 * (1.0 + abs(F)):
                # endgame: gains are below the float resolution of F, so
                # sufficient decrease is unverifiable; accept steps that
                # strictly shrink the residual instead
                resid_c = residual(code, prior, loss, beta, cand, m_c, support_eps)
                if resid_c < 0.9 * resid:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            return rows, m, it, resid, F, step, STEP_FLOORED
        rows, m, F = cand, m_c, F_c
        step = min(step * grow, 1e6)
    resid = residual(code, prior, loss, beta, rows, m, support_eps)
    return rows, m, it, resid, F, step, MAX_ITERS


# ---------------------------------------------------------------- MLP trainer

def mlp_train(x, y, w1, b1, w2, b2, lr, loss_scale, checkpoints):
    """Full-batch Adam on a 1-hidden-layer ReLU net with tanh output.

    Parameters are updated in place; returns (preds, nan_step) where
    preds[k] is the design prediction vector after checkpoints[k]
    gradient steps (checkpoints ascending, may start at 0) and
    nan_step is the first step whose loss went non-finite (-1 if none).
    """
    n = x.shape[0]
    hidden = w1.shape[0]
    b1v, b2v = b1, b2
    m_w1 = np.zeros(hidden); v_w1 = np.zeros(hidden)
    m_b1 = np.zeros(hidden); v_b1 = np.zeros(hidden)
    m_w2 = np.zeros(hidden); v_w2 = np.zeros(hidden)
    m_b2 = 0.0; v_b2 = 0.0
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    preds = np.empty((len(checkpoints), n))
    ck = 0

    def predict():
        z = np.outer(x, w1) + b1v[None, :]
        a = np.maximum(z, 0.0)
        return np.tanh(a @ w2 + b2v), z, a

    p, _, _ = predict()
    while ck < len(checkpoints) and checkpoints[ck] == 0:
        preds[ck] = p
        ck += 1
    total = checkpoints[-1] if len(checkpoints) else 0
    for t in range(1, total + 1):
        p, z, a = predict()
        err = p - y
        lossval = loss_scale * float(err @ err) / n
        if not math.isfinite(lossval):
            return preds, t
        du = (2.0 * loss_scale / n) * err * (1.0 - p * p)
        g_w2 = a.T @ du
        g_b2 = float(du.sum())
        dz = np.outer(du, w2) * (z > 0.0)
        g_w1 = x @ dz
        g_b1 = dz.sum(axis=0)

        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for (g, mm, vv, theta) in (
            (g_w1, m_w1, v_w1, w1),
            (g_b1, m_b1, v_b1, b1v),
            (g_w2, m_w2, v_w2, w2),
        ):
            mm *= beta1; mm += (1.0 - beta1) * g
            vv *= beta2; vv += (1.0 - beta2) * g * g
            theta -= lr * (mm / c1) / (np.sqrt(vv / c2) + eps)
        m_b2 = beta1 * m_b2 + (1.0 - beta1) * g_b2
        v_b2 = beta2 * v_b2 + (1.0 - beta2) * g_b2 * g_b2
        b2v = b2v - lr * (m_b2 / c1) / (math.sqrt(v_b2 / c2) + eps)

        while ck < len(checkpoints) and checkpoints[ck] == t:
            p_out, _, _ = predict()
            preds[ck] = p_out
            ck += 1
    return preds, -1
