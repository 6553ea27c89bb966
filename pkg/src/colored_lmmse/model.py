"""
AR(p) colored noise, ISI observation model and reproducible sampling.

Indexing convention: every sequence is a 0-based numpy array.  Time k=1..N+L
of the observation model lives at index k-1.

The noise process is

    n(k) = sum_{j=1}^{p} a(j) n(k-j) + w(k),    w(k) ~ CN(0, sigma_w2)

and the observation is r(k) = sum_{i=0}^{L} h(i) x(k-i) + n(k).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import InvalidArg, LengthMismatch, UnstableAr

#: roots with modulus at or above ``1 - STABILITY_MARGIN`` are rejected
STABILITY_MARGIN = 1e-9


def _frozen(values, dtype=np.complex128) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


def ar_roots(a) -> np.ndarray:
    """Roots of z^p - a(1) z^(p-1) - ... - a(p) (companion eigenvalues)."""
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    p = a.size
    if p == 0:
        return np.zeros(0, dtype=np.complex128)
    companion = np.zeros((p, p), dtype=np.complex128)
    companion[0, :] = a
    companion[1:, :-1] = np.eye(p - 1)
    return np.linalg.eigvals(companion)


def check_stable(a) -> None:
    roots = ar_roots(a)
    if roots.size and np.max(np.abs(roots)) >= 1.0 - STABILITY_MARGIN:
        raise UnstableAr(
            f"AR polynomial has a root of modulus {np.max(np.abs(roots)):.12g}"
        )


def yule_walker_lags(a, sigma_w2: float) -> np.ndarray:
    """Stationary autocorrelation R(0..p) of an AR model.

    Solves the p+1 Yule-Walker relations

        R(0) = sum_i a(i) R(-i) + sigma_w2
        R(j) = sum_i a(i) R(j-i),   j = 1..p

    with R(-m) = conj(R(m)).  Conjugation is not complex-linear, so the system
    is split into real and imaginary parts (2p+2 real unknowns).
    """
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    p = a.size
    if p == 0:
        return np.array([sigma_w2], dtype=np.complex128)

    n_unk = 2 * (p + 1)
    # unknown layout: [Re R(0..p), Im R(0..p)]

    def lag(m: int) -> np.ndarray:
        """Coefficients c such that R(m) = c @ u (complex row over real u)."""
        c = np.zeros(n_unk, dtype=np.complex128)
        if m >= 0:
            c[m] = 1.0
            c[p + 1 + m] = 1.0j
        else:
            c[-m] = 1.0
            c[p + 1 - m] = -1.0j
        return c

    rows = []
    rhs = []
    for j in range(p + 1):
        eq = lag(j).copy()
        for i in range(1, p + 1):
            eq -= a[i - 1] * lag(j - i)
        rows.append(eq)
        rhs.append(sigma_w2 if j == 0 else 0.0)
    rows = np.array(rows)
    rhs = np.array(rhs, dtype=np.complex128)
    system = np.vstack([rows.real, rows.imag])
    target = np.concatenate([rhs.real, rhs.imag])
    u = np.linalg.solve(system, target)
    lags = u[: p + 1] + 1j * u[p + 1:]
    lags[0] = lags[0].real
    return lags


@dataclass(frozen=True, eq=False)
class ArModel:
    """Order-p AR noise: coefficients a(1..p), innovation and stationary variance."""

    a: np.ndarray
    sigma_w2: float
    n0: float

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a))
        object.__setattr__(self, "sigma_w2", float(self.sigma_w2))
        object.__setattr__(self, "n0", float(self.n0))
        if not self.sigma_w2 > 0 or not self.n0 > 0:
            raise InvalidArg("sigma_w2 and n0 must be positive")
        check_stable(self.a)
        implied = yule_walker_lags(self.a, self.sigma_w2)[0].real
        if abs(implied - self.n0) > 1e-10 * self.n0:
            raise InvalidArg(
                f"n0={self.n0!r} inconsistent with (a, sigma_w2): implied {implied!r}"
            )

    @property
    def p(self) -> int:
        return int(self.a.size)

    @classmethod
    def white(cls, n0: float) -> "ArModel":
        return cls(np.zeros(0), n0, n0)


def stabilize_ar(a, n0: float) -> ArModel:
    """AR model with coefficients ``a`` whose stationary variance is ``n0``.

    The innovation variance is n0 / R(0) where R(0) is the stationary
    variance under unit innovation variance.
    """
    if not n0 > 0:
        raise InvalidArg(f"n0 must be positive, got {n0!r}")
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    check_stable(a)
    r0_unit = yule_walker_lags(a, 1.0)[0].real
    return ArModel(a, n0 / r0_unit, n0)


@dataclass(frozen=True, eq=False)
class AutocorrSeq:
    """Autocorrelation samples R(0..m) of a wide-sense stationary process."""

    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=np.complex128).reshape(-1)
        if r.size == 0:
            raise InvalidArg("autocorrelation needs at least R(0)")
        if not r[0].real > 0 or abs(r[0].imag) > 1e-12 * abs(r[0]):
            raise InvalidArg("R(0) must be real and positive")
        r[0] = r[0].real
        toep = scipy.linalg.toeplitz(r, r.conj())
        jitter = 1e-12 * r[0].real * r.size
        try:
            np.linalg.cholesky(toep + jitter * np.eye(r.size))
        except np.linalg.LinAlgError:
            raise InvalidArg("autocorrelation is not positive semidefinite") from None
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def _from_model(cls, r: np.ndarray) -> "AutocorrSeq":
        """Wrap lags of a stable AR model; positive definite by construction."""
        seq = object.__new__(cls)
        r.setflags(write=False)
        object.__setattr__(seq, "r", r)
        return seq

    @property
    def m(self) -> int:
        return int(self.r.size - 1)

    def toeplitz(self, size: int | None = None) -> np.ndarray:
        """Hermitian Toeplitz matrix with (i, j) entry R(i - j)."""
        size = self.r.size if size is None else size
        if size > self.r.size:
            raise InvalidArg(f"only {self.r.size} lags available, need {size}")
        c = self.r[:size]
        return scipy.linalg.toeplitz(c, c.conj())


def ar_autocorrelation(model: ArModel, maxlag: int) -> AutocorrSeq:
    """R(0..maxlag) of the stationary AR process described by ``model``."""
    if maxlag < 0:
        raise InvalidArg("maxlag must be nonnegative")
    p = model.p
    lags = yule_walker_lags(model.a, model.sigma_w2)
    r = np.zeros(max(maxlag, p) + 1, dtype=np.complex128)
    r[: p + 1] = lags
    for j in range(p + 1, maxlag + 1):
        r[j] = np.dot(model.a, r[j - p: j][::-1])
    r = r[: maxlag + 1].copy()
    r[0] = model.n0
    return AutocorrSeq._from_model(r)


@dataclass(frozen=True, eq=False)
class IsiChannel:
    """Static ISI channel with taps h(0..L)."""

    h: np.ndarray
    es: float = field(init=False)

    def __post_init__(self):
        h = _frozen(self.h)
        if h.size == 0:
            raise InvalidArg("channel needs at least one tap")
        es = float(np.sum(np.abs(h) ** 2))
        if not es > 0:
            raise InvalidArg("channel energy must be positive")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "es", es)

    @property
    def L(self) -> int:
        return int(self.h.size - 1)

    def scaled_to(self, es: float) -> "IsiChannel":
        return IsiChannel(self.h * np.sqrt(es / self.es))


def six_tap_channel(es: float = 1.0) -> IsiChannel:
    """The 6-tap static channel sqrt(Es/6) [1, 2, 0, 0, 0, 1]."""
    return IsiChannel(np.sqrt(es / 6.0) * np.array([1, 2, 0, 0, 0, 1], dtype=float))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def complex_normal(size, var: float = 1.0, seed=None) -> np.ndarray:
    """Circularly symmetric CN(0, var) samples (real/imag each var/2)."""
    rng = _rng(seed)
    scale = np.sqrt(var / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return scale * (re + 1j * im)


def burn_in_length(p: int) -> int:
    return max(1000, 50 * p)


def sample_ar_noise(model: ArModel, length: int, seed) -> np.ndarray:
    """Draw ``length`` samples of the stationary AR process.

    The recursion starts from rest and the first ``burn_in_length(p)``
    samples are discarded.  ``seed`` may be an int, a seed sequence or a
    ``numpy.random.Generator``.
    """
    if length < 1:
        raise InvalidArg("length must be at least 1")
    if model.p == 0:
        return complex_normal(length, model.sigma_w2, seed)
    burn = burn_in_length(model.p)
    w = complex_normal(length + burn, model.sigma_w2, seed)
    denom = np.concatenate([[1.0], -model.a])
    return scipy.signal.lfilter([1.0], denom, w)[burn:]


def sample_source(n: int, seed) -> np.ndarray:
    """i.i.d. CN(0, 1) source symbols."""
    if n < 1:
        raise InvalidArg("source length must be at least 1")
    return complex_normal(n, 1.0, seed)


def observe(ch: IsiChannel, x, n) -> np.ndarray:
    """r = h * x + n, of length len(x) + L."""
    x = np.asarray(x, dtype=np.complex128)
    n = np.asarray(n, dtype=np.complex128)
    if n.shape[-1] != x.shape[-1] + ch.L:
        raise LengthMismatch(
            f"noise length {n.shape[-1]} != source length {x.shape[-1]} + L={ch.L}"
        )
    return np.convolve(x, ch.h) + n
