"""Pure numpy kernels; reference semantics for the compiled backend."""

import numpy as np

VALID = 0
DEGENERATE = 1
INSUFFICIENT_DOF = 2
NOISE_DOMINATES = 3

_LN2 = np.log(2.0)


def _taps(n, length):
    return (2 * np.arange(n // 2)[:, None] + np.arange(length)[None, :]) % n


def dwt_step(x, h, g):
    """One periodic analysis step: returns (approx, detail), each len(x) // 2."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    idx = _taps(x.shape[0], h.shape[0])
    block = x[idx]
    return block @ h, block @ g


def idwt_step(a, d, h, g):
    a = np.ascontiguousarray(a, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    n = 2 * a.shape[0]
    idx = _taps(n, h.shape[0])
    out = np.zeros(n)
    # indices within one tap column are distinct, so fancy += is safe
    for i in range(h.shape[0]):
        out[idx[:, i]] += h[i] * a + g[i] * d
    return out


def _two_prod(a, b):
    """Dekker's exact product: a * b == p + e with p = fl(a * b)."""
    split = 134217729.0  # 2**27 + 1
    ca, cb = split * a, split * b
    ah, bh = ca - (ca - a), cb - (cb - b)
    al, bl = a - ah, b - bh
    p = a * b
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def pair_table(levels, mean_sq, psi, trig, sigma2, noise_corrected):
    """Candidate estimates for every level pair (j1 < j2), lexicographic.

    Returns arrays (h_hat, variance, code); entries with code != VALID hold NaN.
    """
    levels = np.asarray(levels, dtype=np.int64)
    mean_sq = np.asarray(mean_sq, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    trig = np.asarray(trig, dtype=np.float64)
    n = np.ldexp(1.0, levels)
    i1, i2 = np.triu_indices(levels.shape[0], k=1)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if noise_corrected:
            e_psi = np.exp(psi)
            # n * mean_sq is exact (n is a power of two); carrying the rounding
            # error of sigma2 * e_psi keeps near-cancelling levels accurate
            prod, err = _two_prod(sigma2, e_psi)
            big = (n * mean_sq - 2.0 * prod) - 2.0 * err
            lev_code = np.where(big > 0, VALID, NOISE_DOMINATES)
            lev_code = np.where(n <= 4, INSUFFICIENT_DOF, lev_code)
            lev_code = np.where(mean_sq > 0, lev_code, DEGENERATE)
            log_term = np.log(big)
            lev_var = (
                trig
                + 8.0 * sigma2 * sigma2 * e_psi * e_psi
                / (mean_sq * mean_sq * (n - 2.0) * (n - 2.0) * (n - 4.0))
                + 8.0 * sigma2 * e_psi / (mean_sq * (n - 2.0) * n)
            )
            offset = 0.5
        else:
            lev_code = np.where(mean_sq > 0, VALID, DEGENERATE)
            log_term = np.log(mean_sq)
            lev_var = trig
            offset = 1.0

        # precedence: degenerate < insufficient dof < noise dominates
        c1, c2 = lev_code[i1], lev_code[i2]
        code = np.where(c1 == VALID, c2, np.where(c2 == VALID, c1, np.minimum(c1, c2)))
        code = code.astype(np.int8)

        dj = (levels[i1] - levels[i2]).astype(np.float64)
        h_hat = ((psi[i1] - psi[i2]) - (log_term[i1] - log_term[i2])) / (_LN2 * 2.0 * dj) - offset
        var = (lev_var[i1] + lev_var[i2]) / (2.0 * dj * _LN2) ** 2

    bad = code != VALID
    h_hat[bad] = np.nan
    var[bad] = np.nan
    return h_hat, var, code
