"""Numba kernels for Gaussian-mixture message algebra.

Everything in here works on parallel flat arrays ``(means, variances,
weights)`` so the hot decoding loops never touch Python objects.  The
public modules wrap these in :class:`ldlc.gmix.GaussianMixture`.

All kernels are compiled without fastmath so results are reproducible
bit-for-bit across runs and match straightforward pure-Python
re-implementations of the same formulas (the tests rely on this for
exact tie-breaking in the greedy reduction).
"""

import math

import numpy as np
from numba import njit

# Fraction of total mass below which a component is dropped before reduction.
WEIGHT_FLOOR = 1e-12
# Floor applied inside square roots / divisions to avoid div-by-zero on
# denormal variances.  Ordinary variances are many orders of magnitude larger.
VAR_FLOOR = 1e-300


@njit(cache=True)
def _moment_match(m1, v1, c1, m2, v2, c2):
    """Collapse a two-component mixture to the Gaussian with the same
    zeroth/first/second moments.  Weights may be unnormalized; they are
    normalized over the pair.  Returns (mean, variance)."""
    w = c1 + c2
    a1 = c1 / w
    a2 = c2 / w
    m = a1 * m1 + a2 * m2
    v = a1 * v1 + a2 * v2 + a1 * a2 * (m1 - m2) * (m1 - m2)
    return m, v


@njit(cache=True)
def _gql(m1, v1, c1, m2, v2, c2):
    """Gaussian quadratic loss of merging one pair: the squared-L2 distance
    between the two-component mixture (weights normalized over the pair) and
    its single-Gaussian moment match.  Clamped to >= 0 against round-off.

    Arguments are put in a canonical order first so the result is exactly
    symmetric under swapping (the accumulation order would otherwise differ
    by rounding)."""
    if (m1 > m2) or (m1 == m2 and ((v1 > v2) or (v1 == v2 and c1 > c2))):
        m1, m2 = m2, m1
        v1, v2 = v2, v1
        c1, c2 = c2, c1
    w = c1 + c2
    a1 = c1 / w
    a2 = c2 / w
    dm = m1 - m2
    m = a1 * m1 + a2 * m2
    v = a1 * v1 + a2 * v2 + a1 * a2 * dm * dm
    if v < VAR_FLOOR:
        v = VAR_FLOOR
    s = 0.5 / math.sqrt(math.pi * v)
    s += a1 * a1 * 0.5 / math.sqrt(math.pi * max(v1, VAR_FLOOR))
    s += a2 * a2 * 0.5 / math.sqrt(math.pi * max(v2, VAR_FLOOR))
    # cross terms; (m - m1) = a2*dm and (m - m2) = -a1*dm
    t = v + v1
    s -= 2.0 * a1 / math.sqrt(2.0 * math.pi * t) * math.exp(-(a2 * dm) * (a2 * dm) / (2.0 * t))
    t = v + v2
    s -= 2.0 * a2 / math.sqrt(2.0 * math.pi * t) * math.exp(-(a1 * dm) * (a1 * dm) / (2.0 * t))
    t = v1 + v2
    s += 2.0 * a1 * a2 / math.sqrt(2.0 * math.pi * t) * math.exp(-dm * dm / (2.0 * t))
    if s < 0.0:
        s = 0.0
    return s


@njit(cache=True)
def _eval_density(m, v, c, z):
    """Mixture density at scalar z."""
    acc = 0.0
    for i in range(m.shape[0]):
        vi = v[i]
        if vi < VAR_FLOOR:
            vi = VAR_FLOOR
        d = z - m[i]
        acc += c[i] / math.sqrt(2.0 * math.pi * vi) * math.exp(-d * d / (2.0 * vi))
    return acc


@njit(cache=True)
def _argmax_mode_mean(m, v, c):
    """Mean of the component whose center has the highest mixture density.
    First index wins ties."""
    best = -1.0
    best_m = m[0]
    for i in range(m.shape[0]):
        f = _eval_density(m, v, c, m[i])
        if f > best:
            best = f
            best_m = m[i]
    return best_m


@njit(cache=True)
def _floor_normalize(m, v, c):
    """Drop components below WEIGHT_FLOOR of total mass, renormalize.

    If everything would be dropped (or total mass underflows), fall back to
    the single heaviest component with weight one."""
    total = 0.0
    for i in range(c.shape[0]):
        total += c[i]
    cut = WEIGHT_FLOOR * total
    n = 0
    kept = 0.0
    for i in range(c.shape[0]):
        if c[i] > cut:
            n += 1
            kept += c[i]
    if n == 0 or kept <= 0.0:
        k = 0
        ck = c[0]
        for i in range(1, c.shape[0]):
            if c[i] > ck:
                ck = c[i]
                k = i
        mo = np.empty(1, np.float64)
        vo = np.empty(1, np.float64)
        co = np.empty(1, np.float64)
        mo[0] = m[k]
        vo[0] = v[k]
        co[0] = 1.0
        return mo, vo, co
    mo = np.empty(n, np.float64)
    vo = np.empty(n, np.float64)
    co = np.empty(n, np.float64)
    j = 0
    for i in range(c.shape[0]):
        if c[i] > cut:
            mo[j] = m[i]
            vo[j] = v[i]
            co[j] = c[i] / kept
            j += 1
    return mo, vo, co


@njit(cache=True)
def _reduce(m, v, c, theta, m_max):
    """Greedy pairwise reduction.

    Repeatedly merges the minimum-GQL pair (moment matching, merged weight =
    sum of the pair) while the minimum GQL is < theta or more than m_max
    components remain.  The merged component is appended after the existing
    ones, matching a list implementation that deletes the pair and appends
    the merge; ties on the minimum take the lexicographically smallest pair
    in that order.  Only the merged component's pair losses are recomputed;
    cached losses of untouched pairs are reused.

    Input weights must be normalized.  Output is in surviving creation order
    and renormalized.
    """
    n0 = m.shape[0]
    if n0 <= 1 or (theta <= 0.0 and n0 <= m_max):
        return m.copy(), v.copy(), c.copy()
    cap = 2 * n0 - 1
    M = np.empty(cap, np.float64)
    V = np.empty(cap, np.float64)
    C = np.empty(cap, np.float64)
    M[:n0] = m
    V[:n0] = v
    C[:n0] = c
    active = np.zeros(cap, np.bool_)
    active[:n0] = True
    # Pairwise loss cache plus, per row i, the minimum over active j > i.
    G = np.empty((cap, cap), np.float64)
    row_val = np.full(cap, np.inf)
    row_idx = np.full(cap, -1, np.int64)
    for i in range(n0):
        bv = np.inf
        bj = -1
        for j in range(i + 1, n0):
            g = _gql(M[i], V[i], C[i], M[j], V[j], C[j])
            G[i, j] = g
            if g < bv:
                bv = g
                bj = j
        row_val[i] = bv
        row_idx[i] = bj
    alive = n0
    total = n0
    while alive > 1:
        gi = -1
        gv = np.inf
        for i in range(total):
            if active[i] and row_val[i] < gv:
                gv = row_val[i]
                gi = i
        if not (gv < theta or alive > m_max):
            break
        i = gi
        j = row_idx[gi]
        mm, vv = _moment_match(M[i], V[i], C[i], M[j], V[j], C[j])
        cw = C[i] + C[j]
        active[i] = False
        active[j] = False
        k = total
        total += 1
        M[k] = mm
        V[k] = vv
        C[k] = cw
        active[k] = True
        alive -= 1
        # New column: losses against the merged component.
        for p in range(k):
            if active[p]:
                G[p, k] = _gql(M[p], V[p], C[p], M[k], V[k], C[k])
        row_val[k] = np.inf
        row_idx[k] = -1
        # Refresh row minima.  Rows whose cached partner was just merged away
        # rescan in full; others only compare against the new column.
        for p in range(k):
            if not active[p]:
                continue
            if row_idx[p] == i or row_idx[p] == j:
                bv = np.inf
                bj = -1
                for q in range(p + 1, total):
                    if active[q]:
                        g = G[p, q]
                        if g < bv:
                            bv = g
                            bj = q
                row_val[p] = bv
                row_idx[p] = bj
            else:
                g = G[p, k]
                if g < row_val[p]:
                    row_val[p] = g
                    row_idx[p] = k
    n_out = 0
    for i in range(total):
        if active[i]:
            n_out += 1
    mo = np.empty(n_out, np.float64)
    vo = np.empty(n_out, np.float64)
    co = np.empty(n_out, np.float64)
    t = 0.0
    p = 0
    for i in range(total):
        if active[i]:
            mo[p] = M[i]
            vo[p] = V[i]
            co[p] = C[i]
            t += C[i]
            p += 1
    for i in range(n_out):
        co[i] /= t
    return mo, vo, co


@njit(cache=True)
def _convolve_raw(ma, va, ca, mb, vb, cb, h):
    """All-pairs convolution of a(z) with b(z/h): means m_a + h*m_b,
    variances v_a + h^2*v_b, weights c_a*c_b.  Unnormalized raw output."""
    na = ma.shape[0]
    nb = mb.shape[0]
    mo = np.empty(na * nb, np.float64)
    vo = np.empty(na * nb, np.float64)
    co = np.empty(na * nb, np.float64)
    h2 = h * h
    p = 0
    for i in range(na):
        for j in range(nb):
            mo[p] = ma[i] + h * mb[j]
            vo[p] = va[i] + h2 * vb[j]
            co[p] = ca[i] * cb[j]
            p += 1
    return mo, vo, co


@njit(cache=True)
def _product_norm(ma, va, ca, mb, vb, cb):
    """All-pairs pointwise product, normalized.

    Pair (i, j) gives precision 1/v = 1/v_i + 1/v_j, mean v*(m_i/v_i +
    m_j/v_j), and weight c_i*c_j*N(m_i - m_j; 0, v_i + v_j).  Weights are
    accumulated in log domain with max-subtraction.  If every log-weight
    underflows to -inf, the single pair with the largest log-weight —
    resolved by the smallest Mahalanobis exponent — survives with weight 1.
    """
    na = ma.shape[0]
    nb = mb.shape[0]
    n = na * nb
    mo = np.empty(n, np.float64)
    vo = np.empty(n, np.float64)
    lw = np.empty(n, np.float64)
    ex = np.empty(n, np.float64)
    p = 0
    for i in range(na):
        for j in range(nb):
            vi = va[i]
            vj = vb[j]
            vs = vi + vj
            d = ma[i] - mb[j]
            e = d * d / (2.0 * vs)
            v = vi * vj / vs
            mo[p] = (ma[i] * vj + mb[j] * vi) / vs
            vo[p] = v
            ex[p] = e
            if ca[i] > 0.0 and cb[j] > 0.0:
                lw[p] = math.log(ca[i]) + math.log(cb[j]) - 0.5 * math.log(2.0 * math.pi * vs) - e
            else:
                lw[p] = -np.inf
            p += 1
    shift = lw[0]
    for p in range(1, n):
        if lw[p] > shift:
            shift = lw[p]
    if shift == -np.inf:
        # Underflow fallback: keep the least-suppressed pair among those
        # whose factor weights are both positive.
        k = -1
        be = np.inf
        for p in range(n):
            if ca[p // nb] > 0.0 and cb[p % nb] > 0.0:
                if k == -1 or ex[p] < be:
                    be = ex[p]
                    k = p
        if k == -1:
            k = 0
        return mo[k:k + 1].copy(), vo[k:k + 1].copy(), np.ones(1, np.float64)
    co = np.empty(n, np.float64)
    t = 0.0
    for p in range(n):
        w = math.exp(lw[p] - shift)
        co[p] = w
        t += w
    for p in range(n):
        co[p] /= t
    return mo, vo, co


@njit(cache=True)
def _shift_repeat_norm(m, v, c, h, bvals):
    """Map each component through z -> (b - m)/h for every b, i.e. evaluate
    sum_b f(b - h*z) as a mixture in z.  Variances scale by 1/h^2, weights by
    1/|h|; output normalized.  Component order: input-major, b-minor."""
    n = m.shape[0]
    nb = bvals.shape[0]
    mo = np.empty(n * nb, np.float64)
    vo = np.empty(n * nb, np.float64)
    co = np.empty(n * nb, np.float64)
    h2 = h * h
    ah = abs(h)
    p = 0
    t = 0.0
    for i in range(n):
        for q in range(nb):
            mo[p] = (bvals[q] - m[i]) / h
            vo[p] = v[i] / h2
            co[p] = c[i] / ah
            t += co[p]
            p += 1
    for p in range(n * nb):
        co[p] /= t
    return mo, vo, co


@njit(cache=True)
def _conv_reduce(ma, va, ca, mb, vb, cb, h, theta, m_max):
    """Convolution step fused with floor + greedy reduction."""
    m, v, c = _convolve_raw(ma, va, ca, mb, vb, cb, h)
    m, v, c = _floor_normalize(m, v, c)
    return _reduce(m, v, c, theta, m_max)


@njit(cache=True)
def _prod_reduce(ma, va, ca, mb, vb, cb, theta, m_max):
    """Product step fused with floor + greedy reduction."""
    m, v, c = _product_norm(ma, va, ca, mb, vb, cb)
    m, v, c = _floor_normalize(m, v, c)
    return _reduce(m, v, c, theta, m_max)


@njit(cache=True)
def _clamp_variances(v, gamma):
    out = v.copy()
    for i in range(out.shape[0]):
        if out[i] < gamma:
            out[i] = gamma
    return out


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs."""
    m = np.array([0.0, 1.0])
    v = np.array([1.0, 2.0])
    c = np.array([0.5, 0.5])
    _moment_match(0.0, 1.0, 0.5, 2.0, 1.0, 0.5)
    _gql(0.0, 1.0, 0.5, 2.0, 1.0, 0.5)
    _eval_density(m, v, c, 0.3)
    _argmax_mode_mean(m, v, c)
    _floor_normalize(m, v, c)
    _reduce(m, v, c, 0.5, 1)
    _convolve_raw(m, v, c, m, v, c, -0.7)
    _product_norm(m, v, c, m, v, c)
    _shift_repeat_norm(m, v, c, 1.0, np.array([-1.0, 0.0, 1.0]))
    _conv_reduce(m, v, c, m, v, c, 1.0, 0.01, 100)
    _prod_reduce(m, v, c, m, v, c, 0.01, 100)
    _clamp_variances(v, 1e-4)
