"""Fractional Brownian motion synthesis, additive noise and signal I/O."""

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, HurstError, ShapeError

NOISE_SALT = 0x9E3779B97F4A7C15
SIGNAL_MAGIC = b"HURSTSIG"
_U64 = (1 << 64) - 1


def is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def _check_hurst(hurst):
    if not 0.0 < hurst < 1.0:
        raise DomainError(f"Hurst exponent must lie in (0, 1), got {hurst!r}")


@dataclass(frozen=True)
class SignalSpec:
    """Parameters of one synthetic path Y = sigma_x * fBm_H + N(0, sigma_eps^2)."""

    length: int
    hurst: float
    sigma_x: float = 1.0
    sigma_eps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not is_power_of_two(self.length):
            raise ShapeError(f"length must be a power of two, got {self.length!r}")
        _check_hurst(self.hurst)
        if not self.sigma_x > 0:
            raise DomainError(f"sigma_x must be positive, got {self.sigma_x!r}")
        if not self.sigma_eps >= 0:
            raise DomainError(f"sigma_eps must be nonnegative, got {self.sigma_eps!r}")
        if not 0 <= self.seed <= _U64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True, eq=False)
class Signal:
    samples: np.ndarray
    spec: SignalSpec | None = field(default=None)

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64, copy=True).ravel()
        if not np.all(np.isfinite(arr)):
            raise DomainError("signal contains non-finite samples")
        if self.spec is not None and arr.shape[0] != self.spec.length:
            raise ShapeError(f"signal has {arr.shape[0]} samples, spec says {self.spec.length}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.shape[0]


def fgn_autocovariance(hurst, lag):
    """Autocovariance of unit-variance fractional Gaussian noise at integer lag."""
    _check_hurst(hurst)
    k = np.abs(np.asarray(lag, dtype=np.float64))
    two_h = 2.0 * hurst
    out = 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k ** two_h + np.abs(k - 1) ** two_h)
    return float(out) if out.ndim == 0 else out


def circulant_eigenvalues(hurst, n):
    """Eigenvalues of the size-2n circulant embedding of n fGn autocovariances."""
    gamma = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-9 * lam.max():
        raise HurstError(f"circulant embedding is not nonnegative definite (min eigenvalue {lam.min():.3g})")
    return np.clip(lam, 0.0, None)


def circulant_fgn(lam, n, z_re, z_im):
    """Map standard normals to n fGn samples through the circulant square root.

    Linear in (z_re, z_im); the real part of the weighted DFT has covariance
    equal to the first n rows/columns of the circulant matrix.
    """
    m = lam.shape[0]
    w = np.fft.fft(np.sqrt(lam / m) * (z_re + 1j * z_im))
    return w.real[:n]


def _rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & _U64))


def generate_fbm(spec):
    """Exact fBm path of ``spec.length`` points starting at 0 (no noise added)."""
    n_inc = spec.length - 1
    rng = _rng(spec.seed)
    if n_inc == 0:
        return Signal(np.zeros(1), spec)
    lam = circulant_eigenvalues(spec.hurst, n_inc)
    m = lam.shape[0]
    z = rng.standard_normal((2, m))
    inc = circulant_fgn(lam, n_inc, z[0], z[1])
    path = np.empty(spec.length)
    path[0] = 0.0
    np.cumsum(inc, out=path[1:])
    path *= spec.sigma_x
    return Signal(path, spec)


def add_noise(signal, sigma_eps, seed):
    """Add i.i.d. N(0, sigma_eps^2) noise drawn from the noise stream of ``seed``."""
    if not sigma_eps >= 0:
        raise DomainError(f"sigma_eps must be nonnegative, got {sigma_eps!r}")
    if sigma_eps == 0:
        return signal
    rng = _rng((int(seed) & _U64) ^ NOISE_SALT)
    noisy = signal.samples + sigma_eps * rng.standard_normal(len(signal))
    return Signal(noisy, signal.spec)


def synthesize(spec):
    """fBm plus the spec's noise level, the observed signal of the data model."""
    return add_noise(generate_fbm(spec), spec.sigma_eps, spec.seed)


# --- serialization -------------------------------------------------------

def write_csv(signal, path):
    with open(path, "w", newline="") as fh:
        fh.write("value\n")
        for v in signal.samples:
            fh.write(repr(float(v)) + "\n")


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["value"]:
            raise ShapeError(f"{path}: expected a single 'value' column header")
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 1:
                raise ShapeError(f"{path}:{lineno}: expected one column, got {len(row)}")
            try:
                values.append(float(row[0]))
            except ValueError:
                raise ShapeError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
    return Signal(np.array(values))


def write_binary(signal, path):
    with open(path, "wb") as fh:
        fh.write(SIGNAL_MAGIC + struct.pack("<Q", len(signal)))
        fh.write(signal.samples.astype("<f8").tobytes())


def read_binary(path):
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:8] != SIGNAL_MAGIC:
        raise ShapeError(f"{path}: not a signal container")
    (n,) = struct.unpack("<Q", data[8:16])
    if len(data) != 16 + 8 * n:
        raise ShapeError(f"{path}: header says {n} samples, payload holds {(len(data) - 16) / 8:g}")
    return Signal(np.frombuffer(data, dtype="<f8", offset=16).astype(np.float64))


def read_signal(path):
    """Read a signal from either the CSV or the binary container (sniffed)."""
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head == SIGNAL_MAGIC:
        return read_binary(path)
    return read_csv(path)


def log2_length(n):
    if not is_power_of_two(n):
        raise ShapeError(f"length must be a power of two, got {n}")
    return int(math.log2(n))
