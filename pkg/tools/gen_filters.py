"""Regenerate the embedded Daubechies/Symmlet scaling filters.

Spectral factorization of the Daubechies half-band polynomial at 50 digits.
``db`` keeps the minimum-phase root set; ``sym`` picks the root set whose
phase is closest to linear.  A filter and its time reverse are equally close,
so the choice between them is numerical noise; ``REVERSED`` flips the ones
whose orientation differs from the published tables.  Output is pasted into
``filters.py``.
"""
import itertools

import mpmath as mp
import numpy as np

mp.mp.dps = 50

REVERSED = {"sym6"}


def _root_groups(m):
    # P(y) = sum_k C(m-1+k, k) y^k, y = (2 - z - 1/z) / 4
    coeffs = [mp.binomial(m - 1 + k, k) for k in range(m)]
    yroots = mp.polyroots(coeffs[::-1], maxsteps=200, extraprec=200) if m > 1 else []
    groups, seen = [], []
    for y in yroots:
        if any(abs(y - s) < mp.mpf(10) ** -30 for s in seen):
            continue
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        inside = z1 if abs(z1) < 1 else z2
        if abs(mp.im(y)) < mp.mpf(10) ** -30:
            seen.append(y)
            groups.append([mp.re(inside)])
        else:
            seen.extend([y, mp.conj(y)])
            groups.append([inside, mp.conj(inside)])
    return groups


def _filter(roots, m):
    poly = [mp.mpf(1)]
    for r in [-1] * m + list(roots):
        poly = [a - r * b for a, b in zip(poly + [0], [0] + poly)]
    h = [mp.re(c) for c in poly]
    s = sum(h)
    return [c * mp.sqrt(2) / s for c in h]


def _phase_nonlinearity(h):
    w = np.linspace(0.05, np.pi - 0.05, 400)
    hf = np.array([float(c) for c in h])
    resp = np.array([np.sum(hf * np.exp(-1j * k * np.arange(len(hf)))) for k in w])
    ph = np.unwrap(np.angle(resp))
    slope = np.polyfit(w, ph, 1)
    return float(np.sum((ph - np.polyval(slope, w)) ** 2))


def daubechies(m, symmlet=False):
    groups = _root_groups(m)
    if not symmlet:
        return _filter([r for g in groups for r in g], m)
    best = None
    for flips in itertools.product([False, True], repeat=len(groups)):
        roots = []
        for g, flip in zip(groups, flips):
            roots.extend([1 / r for r in g] if flip else g)
        h = _filter(roots, m)
        score = _phase_nonlinearity(h)
        if best is None or score < best[0] - 1e-12:
            best = (score, h)
    return best[1]


if __name__ == "__main__":
    for fam in ("db", "sym"):
        for m in (2, 3, 4, 5):
            h = daubechies(m, symmlet=fam == "sym")
            if f"{fam}{2 * m}" in REVERSED:
                h = h[::-1]
            body = ", ".join(mp.nstr(c, 17, strip_zeros=False) for c in h)
            print(f'    "{fam}{2 * m}": ({body}),')
