"""Independent oracles shared by the test modules.

Everything here deliberately avoids the package's own fast paths: transfers
are dense matrices, coarse operators come from explicit triple products,
series powers from binomial expansion with naive convolution.
"""

import numpy as np


def restriction_matrix(m_fine: int) -> np.ndarray:
    """Dense full-weighting matrix, (m_fine - 1) // 2 rows."""
    m_coarse = (m_fine - 1) // 2
    r = np.zeros((m_coarse, m_fine))
    for i in range(m_coarse):
        r[i, 2 * i : 2 * i + 3] = (0.25, 0.5, 0.25)
    return r


def prolongation_matrix(m_fine: int) -> np.ndarray:
    return 2.0 * restriction_matrix(m_fine).T


def cutting_matrix(m_fine: int) -> np.ndarray:
    m_coarse = (m_fine - 1) // 2
    t = np.zeros((m_coarse, m_fine))
    for i in range(m_coarse):
        t[i, 2 * i + 1] = 1.0
    return t


def dense_galerkin(a_dense: np.ndarray) -> np.ndarray:
    """Triple product restriction * A * prolongation."""
    m = a_dense.shape[0]
    return restriction_matrix(m) @ a_dense @ prolongation_matrix(m)


def toeplitz_dense(bands, m: int) -> np.ndarray:
    a = np.zeros((m, m))
    for j, val in enumerate(bands):
        if j >= m:
            break
        a += val * np.eye(m, k=j)
        if j:
            a += val * np.eye(m, k=-j)
    return a


def unscaled_recursion(bands, steps: int):
    """Band recurrence of the unnormalised coarsening, applied ``steps`` times.

    Works on plain Python numbers, so integer input stays exact.
    """
    cur = list(bands)

    def at(seq, m):
        return seq[m] if m < len(seq) else 0

    for _ in range(steps):
        nxt = [6 * at(cur, 0) + 8 * at(cur, 1) + 2 * at(cur, 2)]
        j = 1
        while 2 * j - 2 < len(cur):
            nxt.append(
                at(cur, 2 * j - 2)
                + 4 * at(cur, 2 * j - 1)
                + 6 * at(cur, 2 * j)
                + 4 * at(cur, 2 * j + 1)
                + at(cur, 2 * j + 2)
            )
            j += 1
        cur = nxt
    return cur


def binomial_weights(alpha: float, count: int) -> np.ndarray:
    """(-1)**k * C(alpha, k) via the ratio recurrence."""
    g = np.zeros(count + 1)
    g[0] = 1.0
    for k in range(1, count + 1):
        g[k] = g[k - 1] * (k - 1.0 - alpha) / k
    return g


def naive_series_power(w, alpha: float, count: int) -> np.ndarray:
    """Taylor coefficients of (sum w_j z**j)**alpha by binomial expansion.

    Writes w = w0 * (1 + u) with u of valuation >= 1 and sums
    C(alpha, n) * u**n with plain convolution; terms beyond n = count cannot
    touch the kept degrees, so the truncated sum is exact as a formal series.
    The expansion cancels catastrophically in double precision, so the
    arithmetic runs at 50 decimal digits and is rounded at the end.
    """
    from mpmath import mp, mpf

    with mp.workdps(50):
        a = mpf(alpha)
        u = [mpf(0)] * (count + 1)
        for j in range(1, len(w)):
            if j <= count:
                u[j] = mpf(w[j]) / mpf(w[0])
        out = [mpf(0)] * (count + 1)
        out[0] = mpf(1)
        term = [mpf(0)] * (count + 1)
        term[0] = mpf(1)
        coeff = mpf(1)
        for n in range(1, count + 1):
            coeff *= (a - (n - 1)) / n
            nxt = [mpf(0)] * (count + 1)
            for i in range(count + 1):
                if term[i] == 0:
                    continue
                for j in range(1, min(len(w) - 1, count - i) + 1):
                    nxt[i + j] += term[i] * u[j]
            term = nxt
            for i in range(count + 1):
                out[i] += coeff * term[i]
        scale = mpf(w[0]) ** a
        return np.array([float(scale * v) for v in out])


def random_eligible_tridiag(rng, strict: bool = False):
    """Random (a0, a1) passing the eligibility test, away from the rejected
    a0 == 2*a1 > 0 boundary."""
    a0 = rng.uniform(0.5, 10.0)
    frac = rng.uniform(-1.0, 0.9 if strict else 1.0)
    if strict:
        frac *= 0.95
    a1 = 0.5 * a0 * frac
    if a1 > 0 and a0 - 2 * a1 < 1e-6 * a0:
        a1 = 0.45 * a0
    return a0, a1
