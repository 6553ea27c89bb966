"""
Linear-complexity LMMSE smoothing under AR(p) noise by forward/backward
Gaussian message passing on an augmented state.

The state at block k joins the channel memory with the noise memory,

    s_k = [x(k-L) ... x(k-1) x(k), n(k-p+1) ... n(k)]^T,   d = L + p + 1,

so that r(k) = hbar s_k exactly and s_k = G s_{k-1} + F [x(k), w(k)]^T.
The exact observation is relaxed to one with a tiny variance eps.

Forward messages are computed in covariance form.  The backward pass is the
modified Bryson-Frazier recursion: it propagates the auxiliary weight
(W-tilde) and auxiliary mean of the future observations, and never inverts G
or a predicted covariance (both are singular here).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import IndexOutOfRange, InvalidArg, LengthMismatch, NonFiniteValue
from .messages import SymbolBeliefs
from .model import ArModel, IsiChannel, ar_autocorrelation

#: prior variance that pins the non-existent symbols x(N+1..N+L) to zero
PIN_VAR = 1e-12

ExtractionSlot = Literal["x_slot", "first_row"]


@dataclass(frozen=True)
class FilterOptions:
    eps: float = 1e-5
    extraction_slot: ExtractionSlot = "x_slot"

    def __post_init__(self):
        if not 1e-12 <= self.eps <= 1e-2:
            raise InvalidArg(f"eps must lie in [1e-12, 1e-2], got {self.eps!r}")
        if self.extraction_slot not in ("x_slot", "first_row"):
            raise InvalidArg(f"unknown extraction slot {self.extraction_slot!r}")


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Augmented-state operators for one (channel, AR model) pair.

    For p = 0 the noise slot is dropped (d = L + 1) and the white noise
    variance ``obs_var`` is added to every observation instead.
    """

    hbar: np.ndarray  # (d,)
    g: np.ndarray  # (d, d)
    f: np.ndarray  # (d, 2)
    l: int
    p: int
    sigma_w2: float
    obs_var: float
    init_cov: np.ndarray  # (d, d), covariance of the state before block 1

    @property
    def d(self) -> int:
        return self.hbar.shape[0]

    @property
    def x_slot(self) -> int:
        """0-based position of x(k) within the state at block k."""
        return self.l


def build_state_space(ch: IsiChannel, ar: ArModel) -> StateSpace:
    l, p = ch.L, ar.p
    d = l + p + 1
    hbar = np.zeros(d, dtype=np.complex128)
    hbar[: l + 1] = ch.h[::-1]
    g = np.zeros((d, d), dtype=np.complex128)
    g[np.arange(l), np.arange(1, l + 1)] = 1.0
    f = np.zeros((d, 2), dtype=np.complex128)
    f[l, 0] = 1.0
    init_cov = np.zeros((d, d), dtype=np.complex128)
    if p == 0:
        obs_var = ar.n0
    else:
        hbar[-1] = 1.0
        rows = np.arange(l + 1, d - 1)
        g[rows, rows + 1] = 1.0
        g[-1, l + 1:] = ar.a[::-1]
        f[-1, 1] = 1.0
        # stationary covariance of n(-p+1..0), entry (i, j) = R(i - j)
        init_cov[l + 1:, l + 1:] = ar_autocorrelation(ar, p - 1).toeplitz(p)
        obs_var = 0.0
    return StateSpace(hbar, g, f, l, p, ar.sigma_w2, obs_var, init_cov)


@dataclass(frozen=True, eq=False)
class BlockPriors:
    """Prior on [x(k), w(k)] for every block: diagonal, x and w independent."""

    mean: np.ndarray  # (K, 2)
    var: np.ndarray  # (K, 2)

    def __len__(self):
        return self.var.shape[0]


def block_priors(priors: SymbolBeliefs, ss: StateSpace) -> BlockPriors:
    """Extend N symbol priors to the N+L blocks; trailing symbols are pinned to 0."""
    n = len(priors)
    k_total = n + ss.l
    if priors.mean.ndim != 1:
        raise InvalidArg("block priors need a single prior mean vector")
    mean = np.zeros((k_total, 2), dtype=np.complex128)
    var = np.zeros((k_total, 2))
    mean[:n, 0] = priors.mean
    var[:n, 0] = priors.var
    var[n:, 0] = PIN_VAR
    var[:, 1] = ss.sigma_w2 if ss.p > 0 else 0.0
    return BlockPriors(mean, var)


@dataclass(eq=False)
class ForwardMessages:
    """Forward recursion output and the cache the backward pass needs.

    Means carry a leading trial axis: shape (T, K, d).
    """

    pred_mean: np.ndarray
    pred_cov: np.ndarray  # (K, d, d)
    filt_mean: np.ndarray
    filt_cov: np.ndarray
    innovation: np.ndarray  # (T, K)
    innovation_var: np.ndarray  # (K,)
    gain: np.ndarray  # (K, d)
    squeeze: bool = field(default=False)

    def __len__(self):
        return self.pred_cov.shape[0]


def _as_trials(r) -> tuple[np.ndarray, bool]:
    r = np.asarray(r, dtype=np.complex128)
    if r.ndim == 1:
        return r[None, :], True
    if r.ndim != 2:
        raise InvalidArg("observations must be 1-D or a 2-D stack of blocks")
    return r, False


def forward_pass(ss: StateSpace, r, priors: BlockPriors,
                 opts: FilterOptions = FilterOptions()) -> ForwardMessages:
    """Kalman forward recursion over the K = N + L blocks."""
    r, squeeze = _as_trials(r)
    t, k_total = r.shape
    if k_total != len(priors):
        raise LengthMismatch(f"{k_total} observations but {len(priors)} block priors")
    d = ss.d
    g, f, hbar = ss.g, ss.f, ss.hbar
    g_h = g.conj().T
    hbar_c = hbar.conj()
    obs_var = ss.obs_var + opts.eps

    pred_mean = np.empty((t, k_total, d), dtype=np.complex128)
    filt_mean = np.empty((t, k_total, d), dtype=np.complex128)
    pred_cov = np.empty((k_total, d, d), dtype=np.complex128)
    filt_cov = np.empty((k_total, d, d), dtype=np.complex128)
    innovation = np.empty((t, k_total), dtype=np.complex128)
    s_all = np.empty(k_total)
    gain_all = np.empty((k_total, d), dtype=np.complex128)

    m = np.zeros((t, d), dtype=np.complex128)
    v = ss.init_cov.copy()
    for k in range(k_total):
        m = m @ g.T + f @ priors.mean[k]
        v = g @ v @ g_h + (f * priors.var[k]) @ f.conj().T
        v = 0.5 * (v + v.conj().T)
        pred_mean[:, k] = m
        pred_cov[k] = v

        vh = v @ hbar_c
        s = float((hbar @ vh).real) + obs_var
        gain = vh / s
        e = r[:, k] - m @ hbar
        m = m + e[:, None] * gain
        v = v - np.outer(gain, vh.conj())
        v = 0.5 * (v + v.conj().T)

        filt_mean[:, k] = m
        filt_cov[k] = v
        innovation[:, k] = e
        s_all[k] = s
        gain_all[k] = gain

    if not (np.all(np.isfinite(filt_cov)) and np.all(np.isfinite(filt_mean))):
        raise NonFiniteValue("forward recursion produced non-finite values")
    return ForwardMessages(pred_mean, pred_cov, filt_mean, filt_cov, innovation,
                           s_all, gain_all, squeeze)


@dataclass(eq=False)
class SmoothedStates:
    mean: np.ndarray  # (T, K, d)
    cov: np.ndarray  # (K, d, d)
    squeeze: bool = False

    def __len__(self):
        return self.cov.shape[0]


def backward_smooth(ss: StateSpace, fwd: ForwardMessages,
                    opts: FilterOptions = FilterOptions()) -> SmoothedStates:
    """Posterior of every augmented state given all observations.

    Runs backwards keeping xi (auxiliary mean) and omega (auxiliary weight)
    of the observations after the current one, then

        m_post = m_pred - V_pred xi_k,   V_post = V_pred - V_pred Omega_k V_pred.
    """
    k_total = len(fwd)
    t = fwd.pred_mean.shape[0]
    d = ss.d
    g, g_h = ss.g, ss.g.conj().T
    hbar = ss.hbar
    hh = np.outer(hbar.conj(), hbar)
    eye = np.eye(d)

    mean = np.empty_like(fwd.pred_mean)
    cov = np.empty_like(fwd.pred_cov)
    xi = np.zeros((t, d), dtype=np.complex128)
    omega = np.zeros((d, d), dtype=np.complex128)
    for k in range(k_total - 1, -1, -1):
        s = fwd.innovation_var[k]
        a = eye - np.outer(fwd.gain[k], hbar)
        a_h = a.conj().T
        omega = hh / s + a_h @ omega @ a
        omega = 0.5 * (omega + omega.conj().T)
        xi = -np.outer(fwd.innovation[:, k], hbar.conj()) / s + xi @ a.conj()

        vp = fwd.pred_cov[k]
        c = vp - vp @ omega @ vp
        cov[k] = 0.5 * (c + c.conj().T)
        mean[:, k] = fwd.pred_mean[:, k] - xi @ vp.T

        omega = g_h @ omega @ g
        xi = xi @ g.conj()

    if not (np.all(np.isfinite(cov)) and np.all(np.isfinite(mean))):
        raise NonFiniteValue("backward recursion produced non-finite values")
    return SmoothedStates(mean, cov, fwd.squeeze)


def extract_symbol_posteriors(smoothed: SmoothedStates, ss: StateSpace, n: int,
                              opts: FilterOptions = FilterOptions()) -> SymbolBeliefs:
    """Read the x(k) marginals for k = 1..N out of the smoothed states.

    ``x_slot`` reads position L of block k; ``first_row`` reads position 0
    of block k + L.  Both hold the same variable.
    """
    if n < 1 or n + ss.l > len(smoothed):
        raise IndexOutOfRange(f"cannot extract {n} symbols from {len(smoothed)} blocks")
    if opts.extraction_slot == "x_slot":
        blocks, pos = np.arange(n), ss.l
    else:
        blocks, pos = np.arange(ss.l, n + ss.l), 0
    mean = smoothed.mean[:, blocks, pos]
    var = smoothed.cov[blocks, pos, pos].real
    if smoothed.squeeze:
        mean = mean[0]
    return SymbolBeliefs(mean, np.maximum(var, 0.0))


def fg_lmmse(r, ch: IsiChannel, ar: ArModel, priors: SymbolBeliefs | None = None,
             opts: FilterOptions = FilterOptions()) -> SymbolBeliefs:
    """LMMSE posteriors of x(1..N) in O(N (L+p+1)^2) per observation block.

    Parameters
    ----------
    r : array_like
        Observations r(1..N+L), shape (N+L,), or a (T, N+L) stack of blocks
        that share priors and statistics; covariances are computed once.
    ch : IsiChannel
    ar : ArModel
        Noise model assumed by the filter.  A p = 0 model gives the
        white-noise filter.
    priors : SymbolBeliefs, optional
        Prior per symbol, default CN(0, 1).
    """
    r_arr = np.asarray(r)
    n = r_arr.shape[-1] - ch.L
    if n < 1:
        raise LengthMismatch("observation shorter than the channel memory")
    if priors is None:
        priors = SymbolBeliefs.standard(n)
    if len(priors) != n:
        raise LengthMismatch(f"{len(priors)} priors for {n} symbols")
    ss = build_state_space(ch, ar)
    fwd = forward_pass(ss, r_arr, block_priors(priors, ss), opts)
    smoothed = backward_smooth(ss, fwd, opts)
    return extract_symbol_posteriors(smoothed, ss, n, opts)
