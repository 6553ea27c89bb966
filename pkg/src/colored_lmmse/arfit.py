"""
Yule-Walker AR(p) fitting of a wide-sense stationary autocorrelation.

Lets the smoother approximate colored noise that is not AR to begin with.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArg, LmmseError, SingularSystem, UnstableAr, UnstableFit
from .model import (ArModel, AutocorrSeq, ar_autocorrelation, check_stable,
                    yule_walker_lags)

#: reflection coefficients closer to the unit circle trigger the dense fallback
REFLECTION_LIMIT = 1.0 - 1e-8


@dataclass(frozen=True, eq=False)
class FitReport:
    """Outcome of fitting one AR order.

    ``residual[j]`` is |R_fit(j) - R_input(j)| for every input lag j = 0..m;
    lags 0..p are reproduced by construction.  When the fit failed, ``model``
    is None and ``error`` holds the exception.
    """

    p: int
    model: ArModel | None
    residual: np.ndarray | None
    condition: float
    reflection: np.ndarray | None = None
    error: LmmseError | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def tail_residual(self) -> float:
        """Largest residual over the lags the fit did not interpolate."""
        tail = self.residual[self.p + 1:]
        return float(np.max(tail)) if tail.size else 0.0


def levinson_durbin(r: np.ndarray, p: int) -> tuple[np.ndarray, float, np.ndarray]:
    """Complex Levinson-Durbin recursion.

    Returns predictor coefficients a(1..p), final prediction error power and
    the reflection coefficients.  Raises SingularSystem when a reflection
    coefficient reaches the unit circle.
    """
    a = np.zeros(0, dtype=np.complex128)
    err = float(r[0].real)
    refl = np.zeros(p, dtype=np.complex128)
    for m in range(1, p + 1):
        k = (r[m] - np.dot(a, r[m - 1:0:-1])) / err
        refl[m - 1] = k
        if abs(k) >= REFLECTION_LIMIT:
            raise SingularSystem(f"reflection coefficient {m} has modulus {abs(k):.12g}")
        a = np.concatenate([a - k * a[::-1].conj(), [k]])
        err = err * (1.0 - abs(k) ** 2)
    return a, err, refl


def _dense_yule_walker(r: np.ndarray, p: int) -> np.ndarray:
    system = scipy.linalg.toeplitz(r[:p], r[:p].conj())
    try:
        return np.linalg.solve(system, r[1:p + 1])
    except np.linalg.LinAlgError:
        raise SingularSystem("Yule-Walker system is singular") from None


def fit_ar(acorr: AutocorrSeq, p: int, n0_override: float | None = None) -> FitReport:
    """Fit AR(p) to the first p+1 autocorrelation lags.

    Solves R(j) = sum_i a(i) R(j-i), j = 1..p, then
    sigma_w2 = R(0) - sum_i a(i) conj(R(i)).

    Raises
    ------
    SingularSystem
        The Toeplitz system cannot be solved.
    UnstableFit
        The solved coefficients describe an unstable process.  The fit is not
        projected onto the stable set.
    """
    if p < 0:
        raise InvalidArg("order must be nonnegative")
    if acorr.m < p:
        raise InvalidArg(f"order {p} needs {p + 1} lags, got {acorr.m + 1}")
    r = acorr.r
    r0 = float(r[0].real)

    condition = 1.0
    reflection = None
    if p > 0:
        condition = float(np.linalg.cond(acorr.toeplitz(p)))
        try:
            a, _, reflection = levinson_durbin(r, p)
        except SingularSystem:
            a = _dense_yule_walker(r, p)
    else:
        a = np.zeros(0, dtype=np.complex128)

    sigma_w2 = float((r0 - np.dot(a, r[1:p + 1].conj())).real)
    if not sigma_w2 > 0:
        raise UnstableFit(f"non-positive innovation variance {sigma_w2!r}")
    try:
        check_stable(a)
    except UnstableAr as exc:
        raise UnstableFit(str(exc)) from None

    # exact stationary variance of the fitted model, so ArModel's consistency check holds
    model = ArModel(a, sigma_w2, yule_walker_lags(a, sigma_w2)[0].real)
    if n0_override is not None:
        if not n0_override > 0:
            raise InvalidArg("n0_override must be positive")
        scale = n0_override / model.n0
        model = ArModel(a, sigma_w2 * scale, n0_override)
        fitted = ar_autocorrelation(model, acorr.m).r / scale
    else:
        fitted = ar_autocorrelation(model, acorr.m).r
    residual = np.abs(fitted - r)
    return FitReport(p, model, residual, condition, reflection)


def approximate_process(acorr: AutocorrSeq, p_max: int) -> list[FitReport]:
    """Fit every order 0..p_max and return the reports in order.

    Failures are recorded in the report for that order rather than raised.
    No order is selected automatically.
    """
    if p_max < 1 or acorr.m < p_max + 2:
        raise InvalidArg(f"p_max={p_max} needs at least {p_max + 3} lags, got {acorr.m + 1}")
    reports = []
    for p in range(p_max + 1):
        try:
            reports.append(fit_ar(acorr, p))
        except LmmseError as exc:
            reports.append(FitReport(p, None, None, float("nan"), error=exc))
    return reports
