"""Synthesis of the frequency-modulated plane-wave field.

The potential is a superposition of squeezed modes,

    f(phi) = int_0^inf dw  w0 tau g(w) / (sqrt(2 pi) w)
                 Re[(cosh z(w) - sinh z(w) e^{-i theta0}) e^{i w phi / w0}]

with g the Gaussian spectral envelope and z(w) the Lorentzian squeezing
profile.  The field xi(phi) = -xi0 df/dphi is obtained by differentiating
the integrand, which only adds a factor w/w0.  Both are evaluated with a
composite Gauss-Legendre rule on a finite frequency window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, TruncatedPulseError, WindowError
from .units import HBAR_EV_S, PulseParams, SqueezeParams

MAX_PHASE_STEP = 0.15
TAIL_EPS = 1e-8
GL_ORDER = 16
CAPTURE_FRACTION = 0.999
EDGE_LEVEL = 1e-3
ENVELOPE_STEP = 1.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


def spectral_amplitude(omega, pulse):
    """Gaussian spectral amplitude b(w) in units of A0."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    return (
        math.sqrt(2 * math.pi)
        * pulse.omega0
        * pulse.tau
        * np.exp(-0.5 * (pulse.tau * (omega - pulse.omega0)) ** 2)
    )


def squeezing_profile(omega, squeeze, omega0):
    """Lorentzian squeezing amplitude z(w)."""
    return squeeze.zeta0 / (1.0 + ((np.asarray(omega) - omega0) / squeeze.gamma) ** 2)


def mode_function(phi, omega, squeeze, pulse):
    """Squeezed mode E(phi, w) at dimensionless phase ``phi``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    zeta = squeezing_profile(omega, squeeze, pulse.omega0)
    arg = omega * np.asarray(phi) / pulse.omega0
    return np.cosh(zeta) * np.exp(-1j * arg) - np.sinh(zeta) * np.exp(
        -1j * squeeze.theta0
    ) * np.exp(1j * arg)


@dataclass(frozen=True)
class FieldGrid:
    """Uniformly sampled f(phi) and xi(phi)."""

    phi_min: float
    step: float
    f_values: np.ndarray = field(repr=False)
    xi_values: np.ndarray = field(repr=False)
    pulse: PulseParams | None = None
    squeeze: SqueezeParams | None = None

    def __post_init__(self):
        if self.f_values.shape != self.xi_values.shape or self.f_values.ndim != 1:
            raise ValueError("f_values and xi_values must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.f_values)) and np.all(np.isfinite(self.xi_values))):
            raise ValueError("field samples must be finite")
        if not 0 < self.step <= MAX_PHASE_STEP:
            raise GridError(f"phase step {self.step} does not resolve the carrier (max {MAX_PHASE_STEP})")
        self.f_values.setflags(write=False)
        self.xi_values.setflags(write=False)

    @property
    def n(self):
        return self.f_values.size

    @property
    def phi_max(self):
        return self.phi_min + (self.n - 1) * self.step

    @property
    def phi(self):
        return self.phi_min + self.step * np.arange(self.n)

    @property
    def xi0(self):
        return self.pulse.xi0 if self.pulse is not None else float(np.abs(self.xi_values).max())

    def xi_at(self, phi):
        """Linear interpolation of xi; zero outside the grid."""
        return np.interp(phi, self.phi, self.xi_values, left=0.0, right=0.0)


@dataclass
class SpectralRule:
    """Quadrature nodes and complex mode coefficients on the frequency window.

    ``coef_f`` and ``coef_xi`` already include the quadrature weights, so that
    f = Re sum coef_f e^{i w phi/w0} and xi/xi0 = Im sum coef_xi e^{i w phi/w0}.
    """

    omega: np.ndarray
    weights: np.ndarray
    coef_f: np.ndarray
    coef_xi: np.ndarray
    omega0: float

    @property
    def size(self):
        return self.omega.size


def omega_window(pulse, squeeze):
    """Frequency window [lo, hi] (eV) for the mode integral."""
    half = max(8.0 / pulse.tau, 10.0 * squeeze.gamma)
    lo = max(pulse.omega0 - half, 1e-3 * pulse.omega0)
    return lo, pulse.omega0 + half


def _integrand_scale(omega, pulse, squeeze):
    zeta = squeezing_profile(omega, squeeze, pulse.omega0)
    amp = np.abs(np.cosh(zeta) - np.sinh(zeta) * np.exp(-1j * squeeze.theta0))
    return spectral_amplitude(omega, pulse) * amp


def check_window(pulse, squeeze, lo, hi):
    """Raise WindowError when the integrand is not negligible at the window edges."""
    probe = np.linspace(lo, hi, 4001)
    vals = _integrand_scale(probe, pulse, squeeze)
    peak = vals.max()
    edge = max(vals[0], vals[-1])
    if edge > TAIL_EPS * peak:
        raise WindowError(
            f"mode integrand at window edge is {edge / peak:.2e} of peak (limit {TAIL_EPS:g})"
        )


def spectral_rule(pulse, squeeze, npan, window=None):
    lo, hi = window if window is not None else omega_window(pulse, squeeze)
    edges = np.linspace(lo, hi, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    omega = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    zeta = squeezing_profile(omega, squeeze, pulse.omega0)
    mix = np.cosh(zeta) - np.sinh(zeta) * np.exp(-1j * squeeze.theta0)
    base = weights * spectral_amplitude(omega, pulse) / (2 * math.pi * omega) * mix
    base = base * np.exp(1j * pulse.carrier_phase)
    return SpectralRule(
        omega=omega,
        weights=weights,
        coef_f=base,
        coef_xi=base * omega / pulse.omega0,
        omega0=pulse.omega0,
    )


def _sum_modes(freqs, coefs, phi0, step, n, block=256, group=64):
    """sum_k coefs[:, c] exp(i freqs_k (phi0 + j step)) for j < n.

    Uses a fixed (block x K) phase-step matrix and one matrix product per group
    of blocks; each entry is an exact exponential, so no phase drift builds up.
    """
    freqs = np.asarray(freqs, dtype=float)
    coefs = np.asarray(coefs)
    if coefs.ndim == 1:
        coefs = coefs[:, None]
    ncol = coefs.shape[1]
    out = np.empty((n, ncol), dtype=complex)
    block = max(1, min(block, n))
    stepper = np.exp(1j * np.outer(np.arange(block) * step, freqs))
    nblocks = -(-n // block)
    for g0 in range(0, nblocks, group):
        g1 = min(nblocks, g0 + group)
        starts = phi0 + step * block * np.arange(g0, g1)
        lead = np.exp(1j * np.outer(freqs, starts))  # K x G
        rhs = (lead[:, :, None] * coefs[:, None, :]).reshape(freqs.size, -1)
        res = (stepper @ rhs).reshape(block, g1 - g0, ncol)
        res = res.transpose(1, 0, 2).reshape(-1, ncol)
        lo = g0 * block
        hi = min(n, g1 * block)
        out[lo:hi] = res[: hi - lo]
    return out


def evaluate_rule(rule, phi):
    """f and xi/xi0 at arbitrary phases (direct sum; for checks)."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    ph = np.exp(1j * np.outer(phi / rule.omega0, rule.omega))
    return (ph @ rule.coef_f).real, (ph @ rule.coef_xi).imag


def _envelopes(rule, half_width, step=ENVELOPE_STEP):
    """Complex envelopes A_f, A_xi on a coarse grid: f = Re(e^{i phi} A_f)."""
    n = int(math.ceil(2 * half_width / step)) + 1
    detune = (rule.omega - rule.omega0) / rule.omega0
    env = _sum_modes(detune, np.stack([rule.coef_f, rule.coef_xi], 1), -half_width, step, n)
    return -half_width + step * np.arange(n), env[:, 0], env[:, 1]


def normalized_energy(pulse, squeeze, npan=4096):
    """int (xi/xi0)^2 dphi over all phases, from the spectrum (Parseval)."""
    lo, hi = omega_window(pulse, squeeze)
    rule = spectral_rule(pulse, squeeze, npan, (lo, hi))
    zeta = squeezing_profile(rule.omega, squeeze, pulse.omega0)
    power = np.cosh(2 * zeta) - np.sinh(2 * zeta) * math.cos(squeeze.theta0)
    g2 = np.exp(-((pulse.tau * (rule.omega - pulse.omega0)) ** 2))
    return 0.5 * pulse.omega0 * pulse.tau**2 * float(np.sum(rule.weights * g2 * power))


def _capture(pulse, squeeze, rule, half_width, total):
    phi, _, a_xi = _envelopes(rule, half_width)
    # cycle average of (Im e^{i phi} A)^2 is |A|^2 / 2
    captured = 0.5 * np.trapezoid(np.abs(a_xi) ** 2, phi)
    edge = max(abs(a_xi[0]), abs(a_xi[-1]))
    return captured / total, edge


def _converge_rule(pulse, squeeze, half_width, window, npan, rtol, max_panels=1 << 15):
    rule = spectral_rule(pulse, squeeze, npan, window)
    _, prev_f, prev_xi = _envelopes(rule, half_width)
    while True:
        npan *= 2
        if npan > max_panels:
            raise WindowError("mode quadrature did not converge")
        rule = spectral_rule(pulse, squeeze, npan, window)
        _, a_f, a_xi = _envelopes(rule, half_width)
        peak = max(np.abs(a_f).max(), np.abs(a_xi).max())
        change = max(np.abs(a_f - prev_f).max(), np.abs(a_xi - prev_xi).max())
        if change <= rtol * peak:
            return rule, npan
        prev_f, prev_xi = a_f, a_xi


def _initial_panels(pulse, half_width, window):
    # each 16-point panel comfortably integrates ~6 rad of phase variation
    span = (window[1] - window[0]) * half_width / pulse.omega0
    return max(16, 1 << int(math.ceil(math.log2(max(span / 6.0, 1.0)))) - 1)


def synthesize_field(
    pulse,
    squeeze,
    phi_min=None,
    phi_max=None,
    step=0.1,
    window=None,
    rtol=1e-6,
):
    """Sample f and xi on a uniform phase grid.

    With ``phi_min``/``phi_max`` omitted the symmetric bounds are grown by a
    factor 1.5 until the grid holds 99.9% of int xi^2 dphi and the field at
    both edges is below 1e-3 xi0.
    """
    if step > MAX_PHASE_STEP or step <= 0:
        raise GridError(f"phase step {step} does not resolve the carrier (max {MAX_PHASE_STEP})")
    if window is None:
        window = omega_window(pulse, squeeze)
    check_window(pulse, squeeze, *window)

    if phi_min is None or phi_max is None:
        total = normalized_energy(pulse, squeeze)
        half = 8.0 * pulse.omega0_tau
        while True:
            npan = _initial_panels(pulse, half, window)
            rule, npan = _converge_rule(pulse, squeeze, half, window, npan, rtol)
            fraction, edge = _capture(pulse, squeeze, rule, half, total)
            if fraction >= CAPTURE_FRACTION and edge < EDGE_LEVEL:
                break
            half *= 1.5
        # whole number of steps, so phi = 0 is a sample
        half = step * math.ceil(half / step)
        phi_min, phi_max = -half, half
    else:
        if phi_max <= phi_min:
            raise GridError("phi_max must exceed phi_min")
        half = max(abs(phi_min), abs(phi_max))
        rule, _ = _converge_rule(
            pulse, squeeze, half, window, _initial_panels(pulse, half, window), rtol
        )

    n = int(round((phi_max - phi_min) / step)) + 1
    vals = _sum_modes(
        rule.omega / pulse.omega0, np.stack([rule.coef_f, rule.coef_xi], 1), phi_min, step, n
    )
    return FieldGrid(
        phi_min=float(phi_min),
        step=float(step),
        f_values=np.ascontiguousarray(vals[:, 0].real),
        xi_values=np.ascontiguousarray(pulse.xi0 * vals[:, 1].imag),
        pulse=pulse,
        squeeze=squeeze,
    )


def imaginary_residue(pulse, squeeze, phi, npan=256):
    """Largest |Im| of the literal (b E + c.c.) mode integral at ``phi``, relative to peak."""
    rule = spectral_rule(pulse, squeeze, npan)
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    b = spectral_amplitude(rule.omega, pulse)
    e = mode_function(phi[:, None], rule.omega[None, :], squeeze, pulse)
    integrand = b * e + np.conj(b * e)
    vals = (integrand / (4 * math.pi * rule.omega)) @ rule.weights
    return float(np.abs(vals.imag).max() / max(np.abs(vals.real).max(), 1e-300))


def pulse_energy(grid, spot_radius_um, peak_intensity_w_cm2):
    """Pulse energy in J for a flat-top spot of radius ``spot_radius_um``.

    ``peak_intensity_w_cm2`` is the intensity at which |xi| = xi0.
    """
    if spot_radius_um <= 0:
        raise ValueError("spot radius must be positive")
    xi0 = grid.pulse.xi0
    if xi0 == 0 or not np.any(grid.xi_values):
        return 0.0
    norm = grid.xi_values / xi0
    period = int(math.ceil(2 * math.pi / grid.step))
    edge = max(np.abs(norm[:period]).max(), np.abs(norm[-period:]).max())
    if edge >= EDGE_LEVEL:
        raise TruncatedPulseError(
            f"field at grid edge is {edge:.2e} xi0; the grid does not span the pulse"
        )
    phase_integral = float(np.sum(norm**2)) * grid.step
    seconds = phase_integral * HBAR_EV_S / grid.pulse.omega0
    area_cm2 = math.pi * (spot_radius_um * 1e-4) ** 2
    return area_cm2 * peak_intensity_w_cm2 * seconds


def write_field_csv(grid, path, comments=()):
    """Write ``phi,f_Z,xi`` rows at full precision; ``comments`` become # lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("phi,f_Z,xi\n")
        for p, f, x in zip(grid.phi.tolist(), grid.f_values.tolist(), grid.xi_values.tolist()):
            fh.write(f"{p!r},{f!r},{x!r}\n")


def read_field_csv(path, pulse=None, squeeze=None):
    """Load a grid written by :func:`write_field_csv`."""
    with open(path, encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    if not rows or rows[0] != "phi,f_Z,xi":
        raise ValueError(f"{path}: expected header phi,f_Z,xi")
    vals = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    phi = vals[:, 0]
    step = (phi[-1] - phi[0]) / (phi.size - 1)
    return FieldGrid(
        phi_min=float(phi[0]),
        step=float(step),
        f_values=np.ascontiguousarray(vals[:, 1]),
        xi_values=np.ascontiguousarray(vals[:, 2]),
        pulse=pulse,
        squeeze=squeeze,
    )
