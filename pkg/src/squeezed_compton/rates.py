"""Locally-constant-field emission and pair-production probabilities.

Photon emission by an electron with quantum parameter chi, as a function
of the light-cone fraction u = k_-/p_- carried by the photon:

    d2P/(dphi du) = alpha / (sqrt(3) pi eta) * F(chi, u)
    F(chi, u)     = int_z^inf K_5/3(y) dy + u^2/(1-u) K_2/3(z),
    z             = 2u / (3 chi (1-u)).

Pair production by a photon with quantum parameter chi_g, per unit phase:

    dP/dphi = alpha / (sqrt(3) pi eta_g) * T(chi_g)
    T(chi_g) = int_0^1 dv [int_z^inf K_1/3 + (v/(1-v) + (1-v)/v) K_2/3(z)],
    z        = 2 / (3 chi_g v (1-v)).

Here eta = omega0 p_-/m^2 (eta_g = omega0 k_-/m^2) so the prefactors are
probabilities per unit laser phase phi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from .specfun import bessel_k, k13_tail_table, k53_tail_table
from .units import ALPHA

K23 = Fraction(2, 3)
RATE_PREFACTOR = ALPHA / (math.sqrt(3.0) * math.pi)

CHI_MIN = 1e-5
CHI_MAX = 20.0
N_CHI = 256
N_QUANTILES = 2048
U_FLOOR = 1e-7
# probability left above the last tabulated quantile
Q_TAIL = 1e-12
# quadrature variable s, with z = s^3; F decays as e^{-z}
S_MAX = 50.0 ** (1.0 / 3.0)
N_PANELS = 1024
PANEL_ORDER = 4

_PX, _PW = np.polynomial.legendre.leggauss(PANEL_ORDER)


def _check_domain(chi, u):
    chi = np.asarray(chi, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(~(chi > 0)):
        raise ValueError("chi must be positive")
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("u must lie in (0, 1)")
    return chi, u


def compton_spectral_density(chi, u):
    """Bracket F(chi, u) of the emission spectrum (dimensionless)."""
    chi, u = _check_domain(chi, u)
    z = 2.0 * u / (3.0 * chi * (1.0 - u))
    return _bracket(z, u)


def _bracket(z, u):
    tail = k53_tail_table()(z)
    with np.errstate(under="ignore"):
        k23 = np.where(z < 745.0, bessel_k(K23, np.minimum(z, 745.0)), 0.0)
    return tail + u * u / (1.0 - u) * k23


def emission_probability_density(chi, u, eta):
    """d2P/(dphi du) for an electron with energy parameter ``eta``."""
    return RATE_PREFACTOR / eta * compton_spectral_density(chi, u)


def _s_nodes(n_panels=N_PANELS, order_nodes=_PX, order_weights=_PW):
    edges = np.linspace(0.0, S_MAX, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * order_nodes[None, :]).ravel()
    w = (half[:, None] * order_weights[None, :]).ravel()
    return edges, s, w


def _density_in_s(chi, s):
    """F(chi, u(s)) du/ds along z = s^3, u = 3 chi z / (2 + 3 chi z)."""
    z = s**3
    denom = 2.0 + 3.0 * chi * z
    u = 3.0 * chi * z / denom
    du_ds = 6.0 * chi / denom**2 * 3.0 * s * s
    return _bracket(z, u) * du_ds, u


def spectrum_moment(chi, power=0, n_panels=N_PANELS):
    """int_0^1 u^power F(chi, u) du."""
    if chi <= 0:
        raise ValueError("chi must be positive")
    _, s, w = _s_nodes(n_panels)
    dens, u = _density_in_s(chi, s)
    return float(np.sum(w * dens * u**power))


def classical_rate(chi):
    """Small-chi limit of int F du: 5 pi chi / 2."""
    return 2.5 * math.pi * chi


def classical_power(chi):
    """Small-chi limit of int u F du: 2 pi chi^2 / sqrt(3)."""
    return 2.0 * math.pi * chi * chi / math.sqrt(3.0)


def gaunt_factor(chi):
    """Quantum-to-classical radiated power ratio."""
    return spectrum_moment(chi, 1) / classical_power(chi)


def _quantile_grid(n):
    # clustered at both ends, where u(q) varies fastest; the last node stops
    # short of 1, where the inverse CDF diverges, and its cell is sampled in
    # log(1 - q)
    j = np.arange(n)
    q = 0.5 * (1.0 - np.cos(math.pi * j / (n - 1)))
    q[-1] = 1.0 - Q_TAIL
    return q


@dataclass(frozen=True)
class RateTable:
    """Tabulated total rate and inverse CDF of the emission spectrum.

    ``total_rate[i]`` is int_0^1 F du at ``chi_grid[i]``; ``inv_cdf[i, j]`` is
    the u at which the normalised cumulative spectrum reaches ``quantiles[j]``.
    """

    chi_grid: np.ndarray = field(repr=False)
    total_rate: np.ndarray = field(repr=False)
    quantiles: np.ndarray = field(repr=False)
    inv_cdf: np.ndarray = field(repr=False)
    u_floor: float = U_FLOOR
    pair_chi_grid: np.ndarray = field(default=None, repr=False)
    pair_log_rate: np.ndarray = field(default=None, repr=False)

    @property
    def log_chi_min(self):
        return math.log(self.chi_grid[0])

    @property
    def log_chi_step(self):
        return (math.log(self.chi_grid[-1]) - math.log(self.chi_grid[0])) / (self.chi_grid.size - 1)

    def rate(self, chi):
        """Interpolated int F du; linear in chi below the grid."""
        chi = np.asarray(chi, dtype=float)
        lc = np.log(np.maximum(chi, 1e-300))
        inside = np.exp(np.interp(lc, np.log(self.chi_grid), np.log(self.total_rate)))
        below = self.total_rate[0] * chi / self.chi_grid[0]
        return np.where(chi < self.chi_grid[0], below, inside)

    def emission_rate(self, chi, eta):
        """Photon emission probability per unit phase."""
        return RATE_PREFACTOR / eta * self.rate(chi)

    def pair_rate(self, chi_gamma):
        """Interpolated Breit-Wheeler bracket T(chi_gamma); zero where negligible."""
        if self.pair_chi_grid is None:
            raise ValueError("table built without the pair channel")
        chi_gamma = np.asarray(chi_gamma, dtype=float)
        x = 1.0 / np.maximum(chi_gamma, 1e-300)
        xg = 1.0 / self.pair_chi_grid[::-1]
        out = np.exp(np.interp(x, xg, self.pair_log_rate[::-1]))
        return np.where(x > xg[-1], 0.0, out)

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("chi,total_rate\n")
            for c, r in zip(self.chi_grid.tolist(), self.total_rate.tolist()):
                fh.write(f"{c!r},{r!r}\n")


def _inverse_cdf_row(chi, quantiles, n_panels=N_PANELS):
    edges, s, w = _s_nodes(n_panels)
    dens, _ = _density_in_s(chi, s)
    panel = (w * dens).reshape(n_panels, PANEL_ORDER).sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    total = cum[-1]
    cdf = cum / total
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    s_of_q = PchipInterpolator(cdf[keep], edges[keep])
    s_q = s_of_q(np.minimum(quantiles, cdf[keep][-1]))
    z = s_q**3
    u = 3.0 * chi * z / (2.0 + 3.0 * chi * z)
    return total, u


def pair_bracket(chi_gamma, n=400):
    """T(chi_gamma) by Gauss-Legendre quadrature over the pair energy split."""
    chi_gamma = float(chi_gamma)
    if chi_gamma < 0:
        raise ValueError("chi_gamma must be non-negative")
    if chi_gamma == 0.0 or 8.0 / (3.0 * chi_gamma) > 740.0:
        return 0.0
    # integrand is symmetric about v = 1/2; t = 1 - 2v clusters nodes at the centre
    x, wq = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * wq
    v = 0.5 * (1.0 - t)
    z = 2.0 / (3.0 * chi_gamma * v * (1.0 - v))
    live = z < 740.0
    val = np.zeros_like(z)
    zl = z[live]
    vl = v[live]
    val[live] = k13_tail_table()(zl) + (vl / (1 - vl) + (1 - vl) / vl) * bessel_k(K23, zl)
    # dv = dt / 2, two symmetric halves
    return float(np.sum(wt * val))


def breit_wheeler_total_rate(chi_gamma, eta_gamma):
    """Pair-production probability per unit phase of a photon with ``eta_gamma``."""
    if not eta_gamma > 0:
        raise ValueError("eta_gamma must be positive")
    return RATE_PREFACTOR / eta_gamma * pair_bracket(chi_gamma)


@lru_cache(maxsize=4)
def build_rate_table(
    chi_min=CHI_MIN,
    chi_max=CHI_MAX,
    n_chi=N_CHI,
    n_quantiles=N_QUANTILES,
    u_floor=U_FLOOR,
    with_pairs=True,
):
    """Tabulate the emission spectrum (and optionally the pair rate) on a log chi grid."""
    if not 0 < u_floor < 1e-3:
        raise ValueError("u_floor must lie in (0, 1e-3)")
    chi_grid = np.exp(np.linspace(math.log(chi_min), math.log(chi_max), n_chi))
    chi_grid[[0, -1]] = chi_min, chi_max
    quantiles = _quantile_grid(n_quantiles)
    total = np.empty(n_chi)
    inv = np.empty((n_chi, n_quantiles))
    for i, chi in enumerate(chi_grid):
        total[i], inv[i] = _inverse_cdf_row(chi, quantiles)
    pair_grid = pair_log = None
    if with_pairs:
        pair_grid = np.exp(np.linspace(math.log(8.0 / (3.0 * 700.0)), math.log(chi_max), 128))
        pair_log = np.log([pair_bracket(c) for c in pair_grid])
    for arr in (chi_grid, total, quantiles, inv):
        arr.setflags(write=False)
    return RateTable(
        chi_grid=chi_grid,
        total_rate=total,
        quantiles=quantiles,
        inv_cdf=inv,
        u_floor=u_floor,
        pair_chi_grid=pair_grid,
        pair_log_rate=pair_log,
    )


def sample_photon_fraction(table, chi, q):
    """Inverse-CDF draw of u for uniform ``q`` in [0, 1); ``q`` may be an array.

    Bilinear in (log chi, quantile); values below ``u_floor`` are raised to it.
    Below the chi grid u is scaled with chi, as the spectrum there depends on
    u/chi only; above it chi is clamped with a warning.
    """
    q = np.asarray(q, dtype=float)
    if np.any(~((q >= 0) & (q < 1))):
        raise ValueError("q must lie in [0, 1)")
    if not chi > 0:
        raise ValueError("chi must be positive")
    if chi > table.chi_grid[-1]:
        warnings.warn(f"chi = {chi:.3g} above the rate table; clamped", RuntimeWarning, stacklevel=2)
        chi = float(table.chi_grid[-1])
    u = _sample_u(table, chi, q)
    return float(u) if u.ndim == 0 else u


def _sample_u(table, chi, q):
    scale = 1.0
    x = (math.log(chi) - table.log_chi_min) / table.log_chi_step
    if x < 0:
        scale = chi / table.chi_grid[0]
        x = 0.0
    i = min(int(x), table.chi_grid.size - 2)
    a = min(x - i, 1.0)
    nq = table.quantiles.size
    # quantile grid is q_j = (1 - cos(pi j/(n-1)))/2
    y = np.arccos(1.0 - 2.0 * q) * (nq - 1) / math.pi
    j = np.minimum(y.astype(np.int64), nq - 2)
    q0 = table.quantiles[j]
    q1 = table.quantiles[j + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(
            j == nq - 2,
            (np.log1p(-q) - np.log1p(-q0)) / (np.log1p(-q1) - np.log1p(-q0)),
            (q - q0) / (q1 - q0),
        )
    b = np.minimum(b, 1.0)
    inv = table.inv_cdf
    row0 = inv[i, j] + b * (inv[i, j + 1] - inv[i, j])
    row1 = inv[i + 1, j] + b * (inv[i + 1, j + 1] - inv[i + 1, j])
    return np.maximum((row0 + a * (row1 - row0)) * scale, table.u_floor)
