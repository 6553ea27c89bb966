"""
Exact block LMMSE over the whole observation block.

Cost is cubic in the block length.  This is the reference every
linear-complexity smoother in the package is checked against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArg, LengthMismatch, SingularMatrix
from .messages import SymbolBeliefs, combine
from .model import ArModel, IsiChannel, ar_autocorrelation

#: refuse blocks larger than this unless the caller raises the limit
MAX_BLOCK_SIZE = 5000


@dataclass(frozen=True, eq=False)
class NoiseCov:
    """Noise autocorrelation matrix R_n, optionally padded by eps on the diagonal."""

    matrix: np.ndarray
    eps: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArg("noise covariance must be square")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > 1e-12 * scale:
            raise InvalidArg("noise covariance is not Hermitian")
        if self.eps < 0:
            raise InvalidArg("eps must be nonnegative")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def noise_covariance(model: ArModel, size: int, eps: float = 0.0) -> NoiseCov:
    """Toeplitz R_n with (i, j) entry R(i - j), plus eps on the diagonal."""
    if size < 1:
        raise InvalidArg("size must be at least 1")
    acorr = ar_autocorrelation(model, size - 1)
    return NoiseCov(acorr.toeplitz(size) + eps * np.eye(size), eps)


def convolution_matrix(ch: IsiChannel, n: int) -> np.ndarray:
    """(N+L) x N matrix whose k-th column is b_k = h shifted down by k."""
    b = np.zeros((n + ch.L, n), dtype=np.complex128)
    for i, tap in enumerate(ch.h):
        idx = np.arange(n)
        b[idx + i, idx] = tap
    return b


def matrix_backward_messages(r, b: np.ndarray, noise_cov: np.ndarray,
                             priors: SymbolBeliefs) -> SymbolBeliefs:
    """Per-symbol messages from the observations r = B x + n back to each x(k).

    With the auxiliary weight W = (V_fwd + R_n)^-1, where V_fwd = B V_prior B^H
    is the prior covariance of the noise-free observation, each symbol gets

        v_back(k) = 1 / (b_k^H W b_k) - v_prior(k)
        m_back(k) = (b_k^H W b_k)^-1 b_k^H W (r - B m_prior + b_k m_prior(k))

    One W serves every symbol.
    """
    r = np.asarray(r, dtype=np.complex128)
    size = b.shape[0]
    v_fwd = (b * priors.var) @ b.conj().T
    try:
        factor = scipy.linalg.cho_factor(v_fwd + noise_cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"auxiliary weight inversion failed: {exc}") from None
    w_aux = scipy.linalg.cho_solve(factor, np.eye(size, dtype=np.complex128))

    wb = w_aux @ b
    w_sym = np.einsum("ij,ij->j", b.conj(), wb).real
    if np.any(w_sym <= 0):
        raise SingularMatrix("non-positive symbol weight b_k^H W b_k")
    resid = r - priors.mean @ b.T
    mean = (resid @ wb.conj()) / w_sym + priors.mean
    var = np.maximum(1.0 / w_sym - priors.var, 0.0)
    return SymbolBeliefs(mean, var)


def block_backward_messages(r, ch: IsiChannel, cov: NoiseCov,
                            priors: SymbolBeliefs,
                            max_size: int = MAX_BLOCK_SIZE) -> SymbolBeliefs:
    """Extrinsic messages on x(1..N) from r(1..N+L) through the ISI channel."""
    r = np.asarray(r, dtype=np.complex128)
    n = len(priors)
    size = n + ch.L
    if r.shape[-1] != size:
        raise LengthMismatch(f"observation length {r.shape[-1]} != N+L = {size}")
    if cov.size != size:
        raise LengthMismatch(f"noise covariance size {cov.size} != N+L = {size}")
    if size > max_size:
        raise InvalidArg(f"block size {size} exceeds limit {max_size}")
    return matrix_backward_messages(r, convolution_matrix(ch, n), cov.matrix, priors)


def block_lmmse(r, ch: IsiChannel, cov: NoiseCov, priors: SymbolBeliefs | None = None,
                max_size: int = MAX_BLOCK_SIZE) -> SymbolBeliefs:
    """Block LMMSE posteriors of x(1..N) given r(1..N+L).

    ``r`` may be a single block (N+L,) or a stack (T, N+L) sharing priors
    and noise statistics.  ``priors`` defaults to CN(0, 1) per symbol.
    """
    r = np.asarray(r, dtype=np.complex128)
    if priors is None:
        priors = SymbolBeliefs.standard(r.shape[-1] - ch.L)
    back = block_backward_messages(r, ch, cov, priors, max_size)
    return combine(priors, back)


def matrix_lmmse(r, b: np.ndarray, noise_cov: np.ndarray,
                 priors: SymbolBeliefs) -> SymbolBeliefs:
    """LMMSE posteriors for a general linear model r = B x + n."""
    return combine(priors, matrix_backward_messages(r, b, noise_cov, priors))
