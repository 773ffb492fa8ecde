"""Physical constants, unit conversions and validated parameter bundles.

Internal conventions: energies in eV (laser) or MeV (particles), times in
eV^-1, laser phase phi = omega0 * (t - z) dimensionless. Laboratory units
(fs, GeV, W/cm^2) are accepted only at construction boundaries.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import ParameterError

ALPHA = 1.0 / 137.035999084
M_E_MEV = 0.51099895000
M_E_EV = M_E_MEV * 1.0e6
HBAR_EV_S = 6.582119569e-16

# documentation-only scales
ELEMENTARY_CHARGE_C = 1.602176634e-19
EPSILON0_F_M = 8.8541878128e-12
SPEED_OF_LIGHT_M_S = 299792458.0
COMPTON_WAVELENGTH_CM = 3.8615926796e-11
CRITICAL_FIELD_V_CM = 1.32329e16

FWHM_PER_TAU = 2.0 * math.sqrt(math.log(2.0))


def fs_to_inverse_eV(t):
    """Convert a duration in femtoseconds to eV^-1."""
    if t < 0:
        raise ParameterError("t", f"duration must be non-negative, got {t}")
    return t * 1.0e-15 / HBAR_EV_S


def inverse_eV_to_fs(t):
    if t < 0:
        raise ParameterError("t", f"duration must be non-negative, got {t}")
    return t * HBAR_EV_S * 1.0e15


def eta_parameter(p_minus, omega0):
    """Head-on energy parameter eta = omega0 p_- / m^2.

    ``p_minus`` in MeV, ``omega0`` in eV.
    """
    if p_minus <= 0:
        raise ParameterError("p_minus", f"must be positive, got {p_minus}")
    return omega0 * 1.0e-6 * p_minus / M_E_MEV**2


def light_cone_momentum(energy):
    """p_- = eps - p_z for an electron (MeV) moving against the laser."""
    return energy + math.sqrt(max(energy * energy - M_E_MEV * M_E_MEV, 0.0))


def xi0_from_intensity(intensity_w_cm2, omega0):
    """Classical nonlinearity for a given peak instantaneous intensity.

    Uses I = eps0 c E0^2 and xi0 = |e| E0 / (m c omega0). At 1.55 eV and
    1e20 W/cm^2 this gives about 4.8; run configurations pin xi0 directly.
    """
    e0 = math.sqrt(intensity_w_cm2 * 1.0e4 / (EPSILON0_F_M * SPEED_OF_LIGHT_M_S))
    omega_rad_s = omega0 / HBAR_EV_S
    m_kg = M_E_EV * ELEMENTARY_CHARGE_C / SPEED_OF_LIGHT_M_S**2
    return ELEMENTARY_CHARGE_C * e0 / (m_kg * SPEED_OF_LIGHT_M_S * omega_rad_s)


def intensity_from_xi0(xi0, omega0):
    return 1.0e20 * (xi0 / xi0_from_intensity(1.0e20, omega0)) ** 2


@dataclass(frozen=True)
class PulseParams:
    """Gaussian plane-wave drive: omega0 [eV], tau [eV^-1], xi0, carrier phase [rad]."""

    omega0: float
    tau: float
    xi0: float
    carrier_phase: float = 0.0

    def __post_init__(self):
        for name in ("omega0", "tau", "xi0", "carrier_phase"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(name, "must be finite")
        if self.omega0 <= 0:
            raise ParameterError("omega0", f"must be positive, got {self.omega0}")
        if self.tau <= 0:
            raise ParameterError("tau", f"must be positive, got {self.tau}")
        if self.xi0 < 0:
            raise ParameterError("xi0", f"must be non-negative, got {self.xi0}")
        if self.omega0 * self.tau < 10:
            warnings.warn(
                f"omega0*tau = {self.omega0 * self.tau:.3g} < 10; the pulse is not long",
                stacklevel=3,
            )

    @classmethod
    def from_lab(cls, omega0_eV, tau_fwhm_fs, xi0, carrier_phase=0.0):
        """Build from the intensity FWHM duration in fs."""
        if tau_fwhm_fs <= 0:
            raise ParameterError("tau_fwhm_fs", f"must be positive, got {tau_fwhm_fs}")
        tau = fs_to_inverse_eV(tau_fwhm_fs / FWHM_PER_TAU)
        return cls(omega0=omega0_eV, tau=tau, xi0=xi0, carrier_phase=carrier_phase)

    @property
    def omega0_tau(self):
        return self.omega0 * self.tau

    @property
    def tau_fs(self):
        return inverse_eV_to_fs(self.tau)


@dataclass(frozen=True)
class SqueezeParams:
    """Lorentzian squeezing: amplitude zeta0, half-width gamma [eV], angle theta0 [rad]."""

    zeta0: float = 0.0
    gamma: float = 1.0e-3
    theta0: float = 0.0

    def __post_init__(self):
        for name in ("zeta0", "gamma", "theta0"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(name, "must be finite")
        if self.zeta0 < 0:
            raise ParameterError("zeta0", f"must be non-negative, got {self.zeta0}")
        if self.gamma <= 0:
            raise ParameterError("gamma", f"must be positive, got {self.gamma}")
        if not 0 <= self.theta0 < 2 * math.pi:
            raise ParameterError("theta0", f"must lie in [0, 2pi), got {self.theta0}")

    @property
    def is_trivial(self):
        return self.zeta0 == 0.0

    @staticmethod
    def zeta_from_db(db):
        """Squeezing amplitude for a quadrature-variance reduction in dB."""
        return db * math.log(10.0) / 20.0


@dataclass(frozen=True)
class BeamParams:
    """Electron beam: mean and rms energy in GeV, ensemble size."""

    mean_energy: float
    sigma_energy: float
    n_electrons: int

    def __post_init__(self):
        if not (math.isfinite(self.mean_energy) and math.isfinite(self.sigma_energy)):
            raise ParameterError("mean_energy", "must be finite")
        if self.sigma_energy < 0:
            raise ParameterError("sigma_energy", f"must be non-negative, got {self.sigma_energy}")
        if self.mean_energy <= 5 * self.sigma_energy or self.mean_energy <= 0:
            raise ParameterError(
                "mean_energy",
                f"must exceed 5 sigma ({5 * self.sigma_energy} GeV), got {self.mean_energy}",
            )
        if int(self.n_electrons) != self.n_electrons or self.n_electrons < 1:
            raise ParameterError("n_electrons", f"must be a positive integer, got {self.n_electrons}")

    @property
    def mean_energy_mev(self):
        return self.mean_energy * 1.0e3
