"""Channel fitting and secrecy outage probability.

The optimized end-to-end magnitude ``|h_i|`` of each link is approximated by
a Nakagami-m law, so the SNR ``gamma_bar_i |h_i|^2`` is Gamma distributed
with shape ``k = m`` and scale ``gamma_bar * Omega / m``. The SOP is then
evaluated

* in closed form (hypergeometric expression, evaluated in log space),
* by quadrature of ``int F_B(2^Rs g) f_E(g) dg``, and
* by Monte Carlo over paired SNR samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import specfun
from .errors import DomainError, NumericError

__all__ = [
    "M_FLOOR",
    "M_CEIL",
    "NakagamiFit",
    "GammaParams",
    "SecrecyParams",
    "SopRangeWarning",
    "fit_mle",
    "fit_mom",
    "nakagami_m_from_delta",
    "gamma_pdf",
    "gamma_cdf",
    "sop_closed_form",
    "sop_numeric",
    "sop_monte_carlo",
    "sop_monte_carlo_lower",
]

M_FLOOR = 0.5
M_CEIL = 500.0


class SopRangeWarning(RuntimeWarning):
    """Closed-form SOP left [0, 1] by more than 1e-9 and was clamped."""


@dataclass(frozen=True)
class GammaParams:
    """Gamma SNR law; the effective scale is ``gamma_bar * theta``."""

    k: float
    theta: float
    gamma_bar: float = 1.0
    degenerate: bool = False

    def __post_init__(self):
        if not (self.k > 0 and self.theta > 0 and self.gamma_bar > 0):
            raise DomainError(f"invalid Gamma parameters k={self.k}, theta={self.theta}, gamma_bar={self.gamma_bar}")

    @property
    def scale(self) -> float:
        return self.gamma_bar * self.theta

    def with_gamma_bar(self, gamma_bar: float) -> "GammaParams":
        return GammaParams(self.k, self.theta, gamma_bar, self.degenerate)


@dataclass(frozen=True)
class NakagamiFit:
    m: float
    omega: float
    delta_stat: float
    sample_count: int
    degenerate: bool = False
    zeros_excluded: int = 0

    def gamma_params(self, gamma_bar: float = 1.0) -> GammaParams:
        return GammaParams(self.m, self.omega / self.m, gamma_bar, self.degenerate)


@dataclass(frozen=True)
class SecrecyParams:
    rate_rs: float
    rho: float

    def __post_init__(self):
        if not self.rate_rs >= 0:
            raise DomainError("secrecy rate must be non-negative")
        if not self.rho > 0:
            raise DomainError("rho must be positive")

    @classmethod
    def from_fits(cls, bob: GammaParams, eve: GammaParams, rate_rs: float) -> "SecrecyParams":
        return cls(rate_rs, eve.scale / bob.scale)


def nakagami_m_from_delta(delta: float, m_floor: float = M_FLOOR, m_ceil: float = M_CEIL) -> float:
    """Closed-form shape estimate ``(1 + sqrt(1 + 4 delta / 3)) / (4 delta)``, clamped."""
    if delta <= 0:
        return m_ceil
    m = (1.0 + math.sqrt(1.0 + 4.0 * delta / 3.0)) / (4.0 * delta)
    return min(max(m, m_floor), m_ceil)


def fit_mle(samples, m_floor: float = M_FLOOR, m_ceil: float = M_CEIL) -> NakagamiFit:
    """Fit a Nakagami-m law to non-negative magnitudes.

    ``omega`` is the mean power; the shape comes from the log-moment
    statistic ``delta = ln mean(h^2) - mean(ln h^2)``. Exact zeros are left
    out of the log mean (with a warning). ``delta == 0`` gives ``m_ceil``
    and sets ``degenerate``.
    """
    h = np.asarray(samples, dtype=float).ravel()
    if h.size < 2:
        raise DomainError("fit_mle needs at least two samples")
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise DomainError("magnitudes must be finite and non-negative")
    p = h * h
    omega = float(p.mean())
    if omega <= 0:
        raise DomainError("all samples are zero")
    nz = p > 0
    zeros = int(p.size - nz.sum())
    if zeros:
        warnings.warn(f"fit_mle: {zeros} zero samples excluded from the log mean", RuntimeWarning, stacklevel=2)
    delta = math.log(omega) - float(np.log(p[nz]).mean())
    # rounding can push a constant sample set slightly below zero
    if delta <= 1e-14 * max(1.0, abs(math.log(omega))):
        return NakagamiFit(m_ceil, omega, 0.0, int(h.size), True, zeros)
    m = nakagami_m_from_delta(delta, m_floor, m_ceil)
    return NakagamiFit(m, omega, delta, int(h.size), False, zeros)


def fit_mom(samples) -> GammaParams:
    """Moment-matched Gamma law for squared-magnitude (SNR-proportional) samples."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("fit_mom needs at least two samples")
    mean = float(x.mean())
    var = float(x.var())
    if mean <= 0:
        raise DomainError("fit_mom needs a positive mean")
    if var <= 1e-14 * mean * mean:
        return GammaParams(M_CEIL, mean / M_CEIL, 1.0, True)
    return GammaParams(mean * mean / var, var / mean)


def gamma_pdf(x: float, p: GammaParams) -> float:
    if x < 0:
        raise DomainError("gamma_pdf needs x >= 0")
    s = p.scale
    if x == 0:
        if p.k < 1:
            return math.inf
        return 1.0 / s if p.k == 1 else 0.0
    return math.exp((p.k - 1) * math.log(x) - x / s - specfun.ln_gamma(p.k) - p.k * math.log(s))


def gamma_cdf(x: float, p: GammaParams) -> float:
    if x < 0:
        raise DomainError("gamma_cdf needs x >= 0")
    return specfun.lower_incomplete_gamma_regularized(p.k, x / p.scale)


def sop_closed_form(k_b: float, params: SecrecyParams, *, return_raw: bool = False):
    """Closed-form SOP lower bound.

    ``rho^k 2^(k Rs) / (k B(k, 1)) * 2F1(k+1, k; 1+k; -2^Rs rho)`` with
    ``k = k_b``, assembled in log space. Values above 1 + 1e-9 trigger a
    :class:`SopRangeWarning`; the result is clamped to ``[0, 1]``.
    """
    if not k_b > 0:
        raise DomainError("k_b must be positive")
    rho, rs = params.rho, params.rate_rs
    log_val = (
        k_b * math.log(rho)
        + k_b * rs * math.log(2.0)
        - math.log(k_b)
        - specfun.ln_beta(k_b, 1.0)
        + specfun.log_gauss_2f1(k_b + 1.0, k_b, 1.0 + k_b, -(2.0**rs) * rho)
    )
    raw = math.exp(log_val) if log_val < 700 else math.inf
    if raw > 1.0 + 1e-9:
        warnings.warn(f"closed-form SOP {raw} outside [0, 1]; clamped", SopRangeWarning, stacklevel=2)
    val = min(max(raw, 0.0), 1.0)
    return (val, raw) if return_raw else val


def sop_numeric(fit_b: GammaParams, fit_e: GammaParams, rate_rs: float) -> float:
    """Quadrature of ``int_0^inf F_B(2^Rs g) f_E(g) dg``.

    The integral is taken in ``t = g / (gamma_bar_E theta_E)``, where Eve's
    density is the standard Gamma(k_E) law, with breakpoints around its bulk.
    """
    if rate_rs < 0:
        raise DomainError("secrecy rate must be non-negative")
    ke, kb = fit_e.k, fit_b.k
    c = 2.0**rate_rs * fit_e.scale / fit_b.scale
    lg_ke = specfun.ln_gamma(ke)

    def integrand(t):
        if t <= 0:
            return 0.0
        dens = math.exp((ke - 1) * math.log(t) - t - lg_ke)
        if dens == 0.0:
            return 0.0
        return specfun.lower_incomplete_gamma_regularized(kb, c * t) * dens

    spread = 12.0 * math.sqrt(ke) + 12.0
    hi = ke + spread
    # Eve's bulk plus the point where Bob's CDF turns over
    edges = sorted({0.0, max(ke - spread, 0.0), ke, hi} | ({kb / c} if kb / c < hi else set()))
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(edges[:-1], edges[1:]):
                total += integrate.quad(integrand, a, b, epsabs=1e-300, epsrel=1e-11, limit=400)[0]
            total += integrate.quad(integrand, edges[-1], math.inf, epsabs=1e-300, epsrel=1e-11, limit=400)[0]
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"SOP quadrature did not converge: {exc}") from exc
    return min(max(total, 0.0), 1.0)


def _check_pairs(gb, ge):
    gb = np.asarray(gb, dtype=float).ravel()
    ge = np.asarray(ge, dtype=float).ravel()
    if gb.shape != ge.shape:
        raise DomainError("Bob and Eve sample lists differ in length")
    if gb.size < 1000:
        raise DomainError("Monte Carlo SOP needs at least 1000 sample pairs")
    return gb, ge


def sop_monte_carlo(gamma_b_samples, gamma_e_samples, rate_rs: float) -> tuple[float, float]:
    """Empirical ``Pr{log2((1+g_B)/(1+g_E)) < Rs}`` and its binomial standard error."""
    gb, ge = _check_pairs(gamma_b_samples, gamma_e_samples)
    out = (1.0 + gb) < 2.0**rate_rs * (1.0 + ge)
    p = float(out.mean())
    return p, math.sqrt(p * (1.0 - p) / out.size)


def sop_monte_carlo_lower(gamma_b_samples, gamma_e_samples, rate_rs: float) -> tuple[float, float]:
    """Empirical probability of the lower-bound event ``g_B < 2^Rs g_E``."""
    gb, ge = _check_pairs(gamma_b_samples, gamma_e_samples)
    out = gb < 2.0**rate_rs * ge
    p = float(out.mean())
    return p, math.sqrt(p * (1.0 - p) / out.size)
