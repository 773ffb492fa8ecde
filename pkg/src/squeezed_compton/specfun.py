"""Modified Bessel functions of the orders needed by the emission rates.

K_nu for nu in {1/3, 2/3, 5/3}:
    x <= 2        power series, K = pi/(2 sin(nu pi)) [I_-nu - I_nu]
    2 < x < 25    Steed's continued fraction (CF2) for K_mu, K_mu+1 with
                  |mu| <= 1/2, then upward recurrence
    x >= 25       Hankel asymptotic expansion
The series alone loses e^{2x} to cancellation and the asymptotic series
cannot reach 1e-8 below x ~ 20, hence the middle regime.

I_n for n in {0, 1}: power series for x <= 30, asymptotic expansion above.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.interpolate import PchipInterpolator

K_ORDERS = (Fraction(1, 3), Fraction(2, 3), Fraction(5, 3))
I_ORDERS = (0, 1)

SERIES_MAX_X = 2.0
ASYMPTOTIC_MIN_X = 25.0
I_ASYMPTOTIC_MIN_X = 30.0
I_MAX_X = 350.0
K_UNDERFLOW_X = 745.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _order(nu):
    for allowed in K_ORDERS:
        if abs(float(nu) - float(allowed)) < 1e-12:
            return allowed
    raise ValueError(f"unsupported Bessel K order {nu}; allowed: 1/3, 2/3, 5/3")


def _positive(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError(f"{name} must be positive")
    return x


def _i_series(nu, x, nterms=40):
    """I_nu(x) by direct power series; nu may be negative non-integer."""
    half = 0.5 * x
    q = half * half
    term = np.power(half, nu) / math.gamma(1.0 + nu)
    total = term.copy()
    for k in range(1, nterms):
        term = term * q / (k * (k + nu))
        total += term
    return total


def _k_series(nu, x):
    nu = float(nu)
    return 0.5 * math.pi / math.sin(nu * math.pi) * (_i_series(-nu, x) - _i_series(nu, x))


def _k_cf2_scaled(mu, x, eps=1e-16, maxit=10000):
    """exp(x) K_mu(x) and exp(x) K_mu+1(x) by Steed's method, x >= 2."""
    x = np.asarray(x, dtype=float)
    mu2 = mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu2
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, maxit):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = np.where(active, h + delh, h)
        dels = q * delh
        s = np.where(active, s + dels, s)
        active &= np.abs(dels) >= eps * np.abs(s)
        if not active.any():
            break
    h = a1 * h
    k_mu = np.sqrt(math.pi / (2.0 * x)) / s
    k_mu1 = k_mu * (mu + x + 0.5 - h) / x
    return k_mu, k_mu1


def _k_asymptotic_scaled(nu, x, max_terms=40):
    """exp(x) K_nu(x) from the Hankel expansion, valid for large x."""
    four_nu2 = 4.0 * float(nu) ** 2
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, max_terms):
        new = term * (four_nu2 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if np.all(np.abs(new) >= np.abs(term)):
            break
        term = np.where(np.abs(new) < np.abs(term), new, 0.0)
        total += term
        if np.all(np.abs(term) < 1e-17 * np.abs(total)):
            break
    return np.sqrt(math.pi / (2.0 * x)) * total


def _k_scaled_mid(nu, x):
    # mu in [-1/2, 1/2], nu = mu + n
    n = int(math.floor(float(nu) + 0.5))
    mu = float(nu) - n
    k0, k1 = _k_cf2_scaled(mu, x)
    for j in range(1, n):
        k0, k1 = k1, k0 + 2.0 * (mu + j) / x * k1
    return k0 if n == 0 else k1


def bessel_k_scaled(order, x):
    """exp(x) K_nu(x); avoids underflow for large arguments."""
    nu = _order(order)
    x = _positive(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    lo = x <= SERIES_MAX_X
    hi = x >= ASYMPTOTIC_MIN_X
    mid = ~(lo | hi)
    if lo.any():
        out[lo] = _k_series(nu, x[lo]) * np.exp(x[lo])
    if mid.any():
        out[mid] = _k_scaled_mid(nu, x[mid])
    if hi.any():
        out[hi] = _k_asymptotic_scaled(nu, x[hi])
    return out[0] if scalar else out


def bessel_k(order, x):
    """Modified Bessel function K_nu(x) for nu in {1/3, 2/3, 5/3}.

    Relative accuracy is better than 1e-8 on [1e-6, 700]; the result
    underflows to zero for x beyond ~745.
    """
    x = _positive(x)
    with np.errstate(under="ignore"):
        return bessel_k_scaled(order, x) * np.exp(-x)


def _i_asymptotic_scaled(n, x, max_terms=30):
    four_nu2 = 4.0 * n * n
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, max_terms):
        term = -term * (four_nu2 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        total += term
        if np.all(np.abs(term) < 1e-17):
            break
    return total / np.sqrt(2.0 * math.pi * x)


def bessel_i_scaled(order, x):
    """exp(-x) I_n(x) for n in {0, 1}."""
    if order not in I_ORDERS:
        raise ValueError(f"unsupported Bessel I order {order}; allowed: 0, 1")
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise ValueError("x must be non-negative")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    lo = x <= I_ASYMPTOTIC_MIN_X
    if lo.any():
        xs = x[lo]
        half = 0.5 * xs
        q = half * half
        term = np.ones_like(xs) if order == 0 else half.copy()
        total = term.copy()
        for k in range(1, 120):
            term = term * q / (k * (k + order))
            total += term
        out[lo] = total * np.exp(-xs)
    if (~lo).any():
        out[~lo] = _i_asymptotic_scaled(order, x[~lo])
    return out[0] if scalar else out


def bessel_i(order, x):
    """Modified Bessel function I_n(x), n in {0, 1}, 0 <= x <= 350."""
    x = np.asarray(x, dtype=float)
    if np.any(x > I_MAX_X):
        raise OverflowError(f"bessel_i argument exceeds {I_MAX_X}")
    return bessel_i_scaled(order, x) * np.exp(x)


def _k13_integral_from_zero(x):
    """int_0^x K_1/3(y) dy by term-wise integration of the power series."""
    nu = 1.0 / 3.0
    total = np.zeros_like(x)
    half = 0.5 * x
    q = half * half
    pref = 0.5 * math.pi / math.sin(nu * math.pi)
    for sign, order in ((1.0, -nu), (-1.0, nu)):
        term = np.power(half, order) / math.gamma(1.0 + order)
        acc = term * 2.0 * half / (order + 1.0)
        for k in range(1, 40):
            term = term * q / (k * (k + order))
            acc = acc + term * 2.0 * half / (2 * k + order + 1.0)
        total += sign * acc
    return pref * total


K13_TOTAL_INTEGRAL = math.pi / math.sqrt(3.0)


def _k13_tail_quadrature(x, span=60.0, panel=0.5):
    """int_x^inf K_1/3 by composite Gauss-Legendre on [x, x + span]."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    npan = int(round(span / panel))
    edges = np.arange(npan) * panel
    t = (edges[:, None] + 0.5 * panel * (_GL_NODES + 1.0)[None, :]).ravel()
    w = np.tile(0.5 * panel * _GL_WEIGHTS, npan)
    # e^{-t} e^{x+t} K(x+t): keeps the scaled Bessel near unity
    y = x[:, None] + t[None, :]
    vals = bessel_k_scaled(Fraction(1, 3), y.ravel()).reshape(y.shape) * np.exp(-t)[None, :]
    with np.errstate(under="ignore"):
        return (vals @ w) * np.exp(-x)


def bessel_k13_tail(x):
    """int_x^inf K_1/3(y) dy."""
    x = _positive(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    lo = x <= SERIES_MAX_X
    hi = (~lo) & (x < K_UNDERFLOW_X)
    if lo.any():
        out[lo] = K13_TOTAL_INTEGRAL - _k13_integral_from_zero(x[lo])
    if hi.any():
        out[hi] = _k13_tail_quadrature(x[hi])
    return out[0] if scalar else out


def bessel_k53_tail(x):
    """int_x^inf K_5/3(y) dy, evaluated directly.

    Uses K_5/3 = -2 K'_2/3 - K_1/3, so the tail is 2 K_2/3(x) minus the
    K_1/3 tail, which is bounded by pi/sqrt(3).
    """
    x = _positive(x)
    with np.errstate(under="ignore"):
        return 2.0 * bessel_k(Fraction(2, 3), x) - bessel_k13_tail(x)


class BesselTailTable:
    """Log-grid table of a Bessel tail integral with monotone cubic interpolation.

    Interpolates log(e^x tail(x)), which is smooth over the whole range.
    Below ``x_min`` the direct evaluation is used; above ``x_max`` the tail
    is zero to double precision.
    """

    def __init__(self, func, x_min=1e-6, x_max=700.0, n=2400):
        self.func = func
        self.x_min = x_min
        self.x_max = x_max
        self.log_x = np.linspace(math.log(x_min), math.log(x_max), n)
        x = np.exp(self.log_x)
        self._interp = PchipInterpolator(self.log_x, np.log(func(x)) + x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        inside = (x >= self.x_min) & (x <= self.x_max)
        below = x < self.x_min
        if inside.any():
            xi = x[inside]
            with np.errstate(under="ignore"):
                out[inside] = np.exp(self._interp(np.log(xi)) - xi)
        if below.any():
            out[below] = self.func(x[below])
        return out[0] if scalar else out


_TABLES = {}


def k53_tail_table():
    """Process-wide table of the K_5/3 tail, built on first use."""
    if "k53" not in _TABLES:
        _TABLES["k53"] = BesselTailTable(bessel_k53_tail)
    return _TABLES["k53"]


def k13_tail_table():
    """Process-wide table of the K_1/3 tail, built on first use."""
    if "k13" not in _TABLES:
        _TABLES["k13"] = BesselTailTable(bessel_k13_tail)
    return _TABLES["k13"]
