"""Periodic orthogonal DWT pyramid and per-level wavelet energies.

Level ``j`` holds ``2**j`` detail coefficients; larger ``j`` is finer.  The
first analysis step on a length-``2**J`` signal therefore produces level
``J - 1``.
"""

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import DomainError, InsufficientDataError, ShapeError
from .fbm import Signal, is_power_of_two

DWT_MAGIC = b"HDWT"


@dataclass(frozen=True, eq=False)
class WaveletDecomposition:
    j0: int
    j_max: int
    approx: np.ndarray
    details: dict

    def __post_init__(self):
        if self.approx.shape[0] != 2 ** self.j0:
            raise ShapeError(f"approximation block has {self.approx.shape[0]} entries, expected {2 ** self.j0}")
        expected = set(range(self.j0, self.j_max + 1))
        if set(self.details) != expected:
            raise ShapeError(f"detail levels {sorted(self.details)} do not cover {self.j0}..{self.j_max}")
        for j, d in self.details.items():
            if d.shape[0] != 2 ** j:
                raise ShapeError(f"level {j} holds {d.shape[0]} coefficients, expected {2 ** j}")
            d.flags.writeable = False
        self.approx.flags.writeable = False

    @property
    def length(self):
        return 2 ** (self.j_max + 1)

    def flat(self):
        """Coefficients in pyramid order (c_j0, d_j0, d_j0+1, ..., d_J-1)."""
        return np.concatenate([self.approx] + [self.details[j] for j in range(self.j0, self.j_max + 1)])


@dataclass(frozen=True)
class LevelEnergy:
    level: int
    count: int
    mean_sq: float
    log2_energy: float

    @property
    def degenerate(self):
        return not self.mean_sq > 0


def _samples(signal):
    return signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)


def dwt(signal, filt, j0=0):
    x = _samples(signal)
    n = x.shape[0]
    if not is_power_of_two(n) or n < 2:
        raise ShapeError(f"signal length must be a power of two >= 2, got {n}")
    big_j = int(math.log2(n))
    if not 0 <= j0 <= big_j - 1:
        raise DomainError(f"j0 must lie in [0, {big_j - 1}], got {j0}")
    details = {}
    approx = x
    for j in range(big_j - 1, j0 - 1, -1):
        approx, details[j] = _kernels.dwt_step(approx, filt.lowpass, filt.highpass)
    return WaveletDecomposition(j0, big_j - 1, approx, details)


def idwt(decomp, filt):
    approx = decomp.approx
    for j in range(decomp.j0, decomp.j_max + 1):
        d = decomp.details[j]
        if d.shape[0] != approx.shape[0]:
            raise ShapeError(f"level {j}: detail block of {d.shape[0]} vs approximation of {approx.shape[0]}")
        approx = _kernels.idwt_step(approx, d, filt.lowpass, filt.highpass)
    return Signal(approx)


def level_mean_squares(decomp, j_min, j_max):
    """Mean squared detail coefficient for each level in [j_min, j_max] as an array."""
    return np.array([np.dot(decomp.details[j], decomp.details[j]) / 2 ** j for j in range(j_min, j_max + 1)])


def level_energies(decomp, j_min=None, j_max=None):
    j_min = decomp.j0 if j_min is None else j_min
    j_max = decomp.j_max if j_max is None else j_max
    if j_min > j_max:
        raise DomainError(f"empty level range [{j_min}, {j_max}]")
    if j_min < decomp.j0 or j_max > decomp.j_max:
        raise DomainError(f"levels [{j_min}, {j_max}] outside the decomposition's [{decomp.j0}, {decomp.j_max}]")
    out = []
    for j, m in zip(range(j_min, j_max + 1), level_mean_squares(decomp, j_min, j_max)):
        m = float(m)
        if m > 0:
            s = math.log2(m)
        else:
            warnings.warn(f"level {j} has identically zero detail coefficients; excluded from estimation", stacklevel=2)
            s = -math.inf
        out.append(LevelEnergy(j, 2 ** j, m, s))
    return out


def detrend_endpoints(signal):
    """Subtract the straight line through the first and last samples.

    A non-periodic path such as fBm jumps by roughly N**H where the periodic
    transform wraps it around; removing the endpoint line closes that jump.
    Wavelets with at least two vanishing moments leave all coefficients away
    from the wrap unchanged.
    """
    x = _samples(signal)
    n = x.shape[0]
    if n < 2:
        return Signal(x.copy())
    t = np.arange(n, dtype=np.float64) / (n - 1)
    return Signal(x - (x[0] + (x[-1] - x[0]) * t), getattr(signal, "spec", None))


def spectrum_slope(energies):
    """OLS slope of log2 energy on level (a diagnostic; no Hurst mapping)."""
    good = [e for e in energies if not e.degenerate]
    if len(good) < 2:
        raise InsufficientDataError("need two non-degenerate levels for a slope")
    j = np.array([e.level for e in good], dtype=np.float64)
    s = np.array([e.log2_energy for e in good])
    jc = j - j.mean()
    return float(np.dot(jc, s - s.mean()) / np.dot(jc, jc))


# --- container -----------------------------------------------------------

def write_decomposition(decomp, path):
    """16-byte header (magic, j0 as u32, N as u64) then float64 LE coefficients."""
    with open(path, "wb") as fh:
        fh.write(DWT_MAGIC + struct.pack("<IQ", decomp.j0, decomp.length))
        fh.write(decomp.flat().astype("<f8").tobytes())


def read_decomposition(path):
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != DWT_MAGIC:
        raise ShapeError(f"{path}: not a decomposition container")
    j0, n = struct.unpack("<IQ", data[4:16])
    if not is_power_of_two(n) or len(data) != 16 + 8 * n:
        raise ShapeError(f"{path}: inconsistent header (N={n}) for a {len(data)}-byte file")
    flat = np.frombuffer(data, dtype="<f8", offset=16).astype(np.float64)
    big_j = int(math.log2(n))
    if j0 > big_j - 1:
        raise ShapeError(f"{path}: j0={j0} out of range for N={n}")
    approx = flat[: 2 ** j0]
    details, pos = {}, 2 ** j0
    for j in range(j0, big_j):
        details[j] = flat[pos: pos + 2 ** j]
        pos += 2 ** j
    return WaveletDecomposition(j0, big_j - 1, approx, details)
