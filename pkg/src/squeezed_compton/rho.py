"""Peak-field enhancement factor of the squeezed pulse.

With s = (w - w0)/Gamma the cosine-quadrature amplitude at phi = 0, relative
to the unsqueezed pulse, is

    rho = (g/sqrt(2 pi)) int ds [sin^2(t/2) e^{z/(1+s^2)} + cos^2(t/2) e^{-z/(1+s^2)}]
                                 exp(-g^2 s^2 / 2)

for z = zeta0, t = theta0 and g = Gamma tau.  Three closed forms approximate it:

    small_zeta   1 - cos(t) sqrt(pi/2) z g
    bessel       g << 1, g sqrt(z) << 1; the Lorentzian integral in closed form
    asymptotic   bessel with I_n(z/2) replaced by its large-argument limit
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate, special

from .errors import NumericalError, ParameterError
from .specfun import bessel_i_scaled

METHODS = ("quadrature", "small_zeta", "bessel", "asymptotic")
QUAD_ABS_TOL = 1e-8
BESSEL_MAX_ZETA = 600.0
ASYMPTOTIC_MAX_ZETA = 700.0


@dataclass(frozen=True)
class RhoResult:
    value: float
    method: str
    validity: str

    def __float__(self):
        return self.value


def _check(zeta0, gamma_tau, theta0):
    if not math.isfinite(zeta0) or zeta0 < 0:
        raise ParameterError("zeta0", f"must be non-negative, got {zeta0}")
    if not math.isfinite(gamma_tau) or gamma_tau <= 0:
        raise ParameterError("gamma_tau", f"must be positive, got {gamma_tau}")
    if not math.isfinite(theta0):
        raise ParameterError("theta0", "must be finite")


def _weights(theta0):
    return math.sin(0.5 * theta0) ** 2, math.cos(0.5 * theta0) ** 2


def truncation(zeta0, gamma_tau):
    """Half-width of the s interval kept by the quadrature."""
    return max(10.0, 8.0 / gamma_tau, 5.0 * math.sqrt(zeta0))


def rho_quadrature(zeta0, gamma_tau, theta0):
    """rho by adaptive quadrature, absolute error below 1e-8."""
    _check(zeta0, gamma_tau, theta0)
    if zeta0 == 0:
        return RhoResult(1.0, "quadrature", "exact")
    sin2, cos2 = _weights(theta0)
    g = gamma_tau

    # the Gaussian alone integrates to one; only the deviation is integrated
    def integrand(s):
        lor = zeta0 / (1.0 + s * s)
        dev = sin2 * math.expm1(lor) + cos2 * math.expm1(-lor)
        return dev * math.exp(-0.5 * g * g * s * s)

    big_s = truncation(zeta0, g)
    # dropped tail: |dev| <= e^{zeta0/(1+S^2)} - 1 beyond S, times a Gaussian tail
    tail = math.expm1(zeta0 / (1.0 + big_s * big_s)) * special.erfc(g * big_s / math.sqrt(2.0))
    if tail > 0.1 * QUAD_ABS_TOL:
        raise NumericalError(f"rho quadrature tail {tail:.2e} exceeds tolerance")
    breaks = [b for b in (1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1e3, 3e3, 1e4, 3e4) if b < big_s]
    edges = [0.0, *breaks, big_s]
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, a, b, epsabs=1e-12, epsrel=1e-12, limit=200)
        total += val
        err += e
    scale = 2.0 * g / math.sqrt(2.0 * math.pi)
    if scale * err > QUAD_ABS_TOL:
        raise NumericalError(f"rho quadrature error estimate {scale * err:.2e} exceeds tolerance")
    return RhoResult(1.0 + scale * total, "quadrature", "exact")


def rho_small_zeta(zeta0, gamma_tau, theta0):
    """First order in zeta0."""
    _check(zeta0, gamma_tau, theta0)
    value = 1.0 - math.cos(theta0) * math.sqrt(0.5 * math.pi) * zeta0 * gamma_tau
    return RhoResult(value, "small_zeta", f"zeta0 << 1 (zeta0 = {zeta0:.3g})")


def _regime_tag(zeta0, gamma_tau):
    return f"gamma_tau << 1, gamma_tau*sqrt(zeta0) << 1 (= {gamma_tau * math.sqrt(zeta0):.3g})"


def rho_bessel(zeta0, gamma_tau, theta0):
    """Closed form valid for a Lorentzian much narrower than the spectrum."""
    _check(zeta0, gamma_tau, theta0)
    if zeta0 > BESSEL_MAX_ZETA:
        raise OverflowError(f"rho_bessel: zeta0 = {zeta0} exceeds {BESSEL_MAX_ZETA}")
    if zeta0 == 0:
        return RhoResult(1.0, "bessel", _regime_tag(zeta0, gamma_tau))
    sin2, cos2 = _weights(theta0)
    x = 0.5 * zeta0
    i0 = float(bessel_i_scaled(0, x))
    i1 = float(bessel_i_scaled(1, x))
    # e^{z/2} I_n(z/2) = e^{z} ie_n,  e^{-z/2} I_n(z/2) = ie_n
    bracket = sin2 * math.exp(zeta0) * (i0 - i1) - cos2 * (i0 + i1)
    value = 1.0 + math.sqrt(0.5 * math.pi) * zeta0 * gamma_tau * bracket
    return RhoResult(value, "bessel", _regime_tag(zeta0, gamma_tau))


def rho_asymptotic(zeta0, gamma_tau, theta0):
    """Large-zeta0 limit of the Bessel form."""
    _check(zeta0, gamma_tau, theta0)
    if zeta0 > ASYMPTOTIC_MAX_ZETA:
        raise OverflowError(f"rho_asymptotic: zeta0 = {zeta0} exceeds {ASYMPTOTIC_MAX_ZETA}")
    tag = f"zeta0 >> 1 (= {zeta0:.3g}), " + _regime_tag(zeta0, gamma_tau)
    if zeta0 == 0:
        return RhoResult(1.0, "asymptotic", tag)
    sin2, cos2 = _weights(theta0)
    root = math.sqrt(2.0 * zeta0)
    value = 1.0 + gamma_tau * (sin2 * math.exp(zeta0) / root - cos2 * root)
    return RhoResult(value, "asymptotic", tag)


_FUNCS = {
    "quadrature": rho_quadrature,
    "small_zeta": rho_small_zeta,
    "bessel": rho_bessel,
    "asymptotic": rho_asymptotic,
}


def rho(zeta0, gamma_tau, theta0, method="auto"):
    """Evaluate rho with the named method; ``auto`` picks a closed form only
    deep inside its regime and otherwise integrates."""
    if method == "auto":
        _check(zeta0, gamma_tau, theta0)
        small_width = gamma_tau < 0.01 and gamma_tau * math.sqrt(zeta0) < 0.01
        if zeta0 * gamma_tau < 1e-4 and zeta0 < 1e-2:
            method = "small_zeta"
        elif small_width and zeta0 <= BESSEL_MAX_ZETA:
            method = "bessel"
        else:
            method = "quadrature"
    if method not in _FUNCS:
        raise ValueError(f"unknown rho method {method!r}; choose from {METHODS}")
    return _FUNCS[method](zeta0, gamma_tau, theta0)
