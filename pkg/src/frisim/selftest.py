"""Quick self-check of the numerical core against scipy references."""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from . import secrecy, specfun


def _max_abs(f, ref, xs) -> float:
    return max(abs(f(x) - ref(x)) for x in xs)


def _max_rel(f, ref, args) -> float:
    worst = 0.0
    for a in args:
        r = ref(*a)
        if r != 0 and math.isfinite(r):
            worst = max(worst, abs(f(*a) - r) / abs(r))
    return worst


def checks() -> list[tuple[str, float, float]]:
    """``(name, error, tolerance)`` triples."""
    rng = np.random.default_rng(2024)
    xs = rng.uniform(0, 60, 300)
    out = [
        ("bessel_j0 abs", _max_abs(specfun.bessel_j0, special.j0, xs), 1e-10),
        ("ln_gamma abs", _max_abs(specfun.ln_gamma, special.gammaln, rng.uniform(0.01, 200, 300)), 1e-10),
        ("digamma abs", _max_abs(specfun.digamma, special.digamma, rng.uniform(0.05, 200, 300)), 1e-10),
    ]
    kx = list(zip(rng.uniform(0.1, 50, 300), rng.uniform(0, 80, 300)))
    out.append((
        "incomplete gamma rel",
        _max_rel(specfun.lower_incomplete_gamma_regularized, special.gammainc, kx),
        1e-8,
    ))
    hyp = list(zip(rng.uniform(0.1, 5, 200), rng.uniform(0.1, 5, 200), rng.uniform(0.5, 5, 200), -rng.uniform(0, 0.9, 200)))
    out.append(("gauss_2f1 rel (|z|<1)", _max_rel(specfun.gauss_2f1, special.hyp2f1, hyp), 1e-8))
    worst = 0.0
    for rho in (0.01, 1.0, 100.0):
        for rs in (0.0, 1.0, 3.0):
            x = 2.0**rs * rho
            worst = max(worst, abs(secrecy.sop_closed_form(1.0, secrecy.SecrecyParams(rs, rho)) - x / (1 + x)))
    out.append(("exponential SOP identity abs", worst, 1e-9))
    worst = 0.0
    for kb in (0.5, 1.0, 2.0, 5.0):
        for rho in (0.01, 1.0, 100.0):
            for rs in (0.0, 1.0, 3.0):
                closed = secrecy.sop_closed_form(kb, secrecy.SecrecyParams(rs, rho))
                num = secrecy.sop_numeric(secrecy.GammaParams(kb, 1.0), secrecy.GammaParams(1.0, rho), rs)
                worst = max(worst, abs(closed - num) / num)
    out.append(("closed form vs quadrature rel (k_E=1)", worst, 1e-6))
    return out


def run(verbose: bool = True) -> bool:
    ok = True
    for name, err, tol in checks():
        passed = err <= tol
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}: {err:.3e} (tol {tol:.0e})")
    return ok
