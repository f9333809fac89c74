"""Orthonormal scaling filters and the quadrature-mirror wavelet filters.

Names follow filter length: ``db4`` and ``sym6`` have 4 and 6 taps with
2 and 3 vanishing moments.  Coefficients come from a 50-digit spectral
factorization (``tools/gen_filters.py``) and agree with the published
Daubechies/Symmlet tables; every table is checked against the orthonormality,
QMF and moment conditions when this module is imported.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

_SQRT_HALF = 0.70710678118654752

_SCALING = {
    "haar": (_SQRT_HALF, _SQRT_HALF),
    "db4": (0.48296291314453414, 0.83651630373780791, 0.22414386804201338, -0.12940952255126038),
    "db6": (0.33267055295008262, 0.80689150931109258, 0.45987750211849157, -0.13501102001025459, -0.085441273882026662, 0.035226291885709537),
    "db8": (0.23037781330889650, 0.71484657055291565, 0.63088076792985891, -0.027983769416859854, -0.18703481171909308, 0.030841381835560764, 0.032883011666885200, -0.010597401785069032),
    "db10": (0.16010239797419291, 0.60382926979718967, 0.72430852843777293, 0.13842814590132073, -0.24229488706638203, -0.032244869584638375, 0.077571493840045714, -0.0062414902127982743, -0.012580751999081999, 0.0033357252854737713),
    "sym4": (0.48296291314453414, 0.83651630373780791, 0.22414386804201338, -0.12940952255126038),
    "sym6": (0.33267055295008262, 0.80689150931109258, 0.45987750211849157, -0.13501102001025459, -0.085441273882026662, 0.035226291885709537),
    "sym8": (0.032223100604051468, -0.012603967262031304, -0.099219543576633533, 0.29785779560530605, 0.80373875180513208, 0.49761866763277499, -0.029635527646002492, -0.075765714789502213),
    "sym10": (0.019538882735249827, -0.021101834024689041, -0.17532808990805622, 0.016602105764510848, 0.63397896345679206, 0.72340769040404079, 0.19939753397685560, -0.039134249302313844, 0.029519490925706261, 0.027333068344998769),
}
_ALIASES = {"db2": "haar", "sym2": "haar"}


@dataclass(frozen=True, eq=False)
class WaveletFilter:
    name: str
    lowpass: np.ndarray
    highpass: np.ndarray
    vanishing_moments: int

    @property
    def length(self):
        return self.lowpass.shape[0]


def _qmf(h):
    n = h.shape[0]
    return np.array([(-1) ** i * h[n - 1 - i] for i in range(n)])


def _validate(f):
    h, g = f.lowpass, f.highpass
    if h.shape[0] % 2:
        raise ValueError(f"{f.name}: odd filter length")
    if abs(h.sum() - math.sqrt(2.0)) > 1e-12 or abs(np.dot(h, h) - 1.0) > 1e-12:
        raise ValueError(f"{f.name}: lowpass is not normalized")
    for shift in range(2, h.shape[0], 2):
        if abs(np.dot(h[shift:], h[:-shift])) > 1e-12:
            raise ValueError(f"{f.name}: lowpass not orthogonal to its shift by {shift}")
    i = np.arange(g.shape[0], dtype=np.float64)
    for m in range(f.vanishing_moments):
        if abs(np.dot(i ** m, g)) > 1e-8 * max(1.0, np.abs(i ** m).sum()):
            raise ValueError(f"{f.name}: moment {m} of the highpass does not vanish")


def _build(name):
    h = np.array(_SCALING[name], dtype=np.float64)
    g = _qmf(h)
    h.flags.writeable = False
    g.flags.writeable = False
    return WaveletFilter(name, h, g, h.shape[0] // 2)


_FILTERS = {name: _build(name) for name in _SCALING}
for _f in _FILTERS.values():
    _validate(_f)

FILTER_NAMES = tuple(sorted(_FILTERS, key=lambda s: (s.rstrip("0123456789"), len(s), s))) + tuple(_ALIASES)


def make_filter(name):
    key = _ALIASES.get(name.lower(), name.lower())
    try:
        return _FILTERS[key]
    except KeyError:
        raise LookupError(
            f"unknown wavelet {name!r}; available (named by filter length): {', '.join(FILTER_NAMES)}"
        ) from None


def check_decorrelation(filt, hurst):
    """Warn when the wavelet cannot decorrelate coefficients for this Hurst value.

    Short memory of the detail coefficients needs M > H + 1/2; the Haar
    wavelet (M = 1) is flagged for every H.
    """
    if filt.vanishing_moments == 1 or filt.vanishing_moments <= hurst + 0.5:
        warnings.warn(
            f"wavelet {filt.name} has {filt.vanishing_moments} vanishing moment(s); "
            f"M > H + 1/2 fails for H = {hurst}, detail coefficients stay correlated",
            stacklevel=2,
        )
        return False
    return True
