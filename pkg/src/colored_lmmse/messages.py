"""Per-symbol Gaussian messages: priors, posteriors and extrinsic beliefs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArg, NoInformation

#: finite stand-in for an uninformative (infinite-variance) prior
UNINFORMATIVE_VAR = 1e12


@dataclass(frozen=True, eq=False)
class SymbolBeliefs:
    """Means and variances of N scalar complex Gaussian messages.

    ``mean`` has shape (N,) or (T, N) when T observation blocks are processed
    together; ``var`` always has shape (N,) because variances do not depend on
    the data.
    """

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.complex128)
        var = np.array(self.var, dtype=float).reshape(-1)
        if mean.shape[-1] != var.shape[0]:
            raise InvalidArg(f"mean shape {mean.shape} does not match var {var.shape}")
        if np.any(var < 0) or not np.all(np.isfinite(var)):
            raise InvalidArg("variances must be finite and nonnegative")
        mean.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    def __len__(self):
        return self.var.shape[0]

    @classmethod
    def standard(cls, n: int) -> "SymbolBeliefs":
        """CN(0, 1) priors for n symbols."""
        return cls(np.zeros(n), np.ones(n))

    @classmethod
    def uninformative(cls, n: int) -> "SymbolBeliefs":
        return cls(np.zeros(n), np.full(n, UNINFORMATIVE_VAR))

    @property
    def is_uninformative(self) -> np.ndarray:
        return self.var >= UNINFORMATIVE_VAR


def combine(a: SymbolBeliefs, b: SymbolBeliefs) -> SymbolBeliefs:
    """Product of two Gaussian messages on the same variables.

    v = (1/va + 1/vb)^-1,  m = v (ma/va + mb/vb), evaluated in a form that
    tolerates a zero variance on either side.
    """
    total = a.var + b.var
    if np.any(total <= 0):
        raise InvalidArg("cannot combine two zero-variance messages")
    var = a.var * b.var / total
    mean = (a.mean * b.var + b.mean * a.var) / total
    return SymbolBeliefs(mean, var)


def extrinsic(post: SymbolBeliefs, prior: SymbolBeliefs) -> SymbolBeliefs:
    """Remove the prior's contribution from a posterior.

    Returns the outgoing message with 1/v_ext = 1/v_post - 1/v_prior and
    m_ext/v_ext = m_post/v_post - m_prior/v_prior.

    Raises
    ------
    NoInformation
        If any posterior variance is not strictly below its prior variance,
        i.e. the extrinsic message would have infinite variance.
    """
    if len(post) != len(prior):
        raise InvalidArg("posterior and prior lengths differ")
    if np.any(post.var >= prior.var):
        idx = int(np.argmax(post.var >= prior.var))
        raise NoInformation(f"symbol {idx}: posterior variance equals prior variance")
    w_ext = 1.0 / post.var - 1.0 / prior.var
    var = 1.0 / w_ext
    mean = var * (post.mean / post.var - prior.mean / prior.var)
    return SymbolBeliefs(mean, var)
