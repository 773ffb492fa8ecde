"""Run configuration: a line-oriented ``key = value`` file.

Blank lines and text after ``#`` are ignored.  Numeric values may be simple
arithmetic in ``pi``, ``sqrt``, ``log`` and ``exp`` (``theta0_rad = pi/4``);
lists are comma separated.  Every key is optional, but unknown keys are
errors so that a misspelt parameter never falls back to its default.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParameterError
from .kinetic import BinSpec, MarchSettings
from .rates import U_FLOOR
from .units import BeamParams, PulseParams, SqueezeParams

# key -> (kind, default, help)
KEYS = {
    "omega0_eV": ("float", 1.55, "central photon energy"),
    "tau_fwhm_fs": ("float", 40.0, "intensity FWHM duration"),
    "xi0": ("float", 5.0, "peak classical nonlinearity of the unsqueezed pulse"),
    "carrier_phase_rad": ("float", 0.0, "carrier-envelope phase"),
    "amplitude_scale": ("float", 1.0, "multiplies xi0; intensity scales with its square"),
    "peak_intensity_Wcm2": ("float", 1.0e20, "intensity at |xi| = xi0, for the pulse energy"),
    "spot_radius_um": ("float", 3.0, "flat-top spot radius, for the pulse energy"),
    "zeta0": ("float", 0.0, "peak squeezing amplitude"),
    "gamma_eV": ("float", 1.9e-3, "Lorentzian half-width of the squeezing profile"),
    "theta0_rad": ("float", 0.0, "squeezing angle"),
    "beam_energy_GeV": ("float", 5.0, "mean electron energy"),
    "beam_sigma_GeV": ("float", 0.5, "rms electron energy spread"),
    "n_electrons": ("int", 10000, "ensemble size"),
    "seed": ("int", 0, "64-bit run seed"),
    "workers": ("int", 1, "threads for the ensemble"),
    "phase_step": ("float", 0.1, "field grid spacing in phi"),
    "phi_min": ("float", None, "grid start; automatic when omitted"),
    "phi_max": ("float", None, "grid end; automatic when omitted"),
    "omega_window_min_eV": ("float", None, "lower edge of the mode integral"),
    "omega_window_max_eV": ("float", None, "upper edge of the mode integral"),
    "max_step_probability": ("float", 1.0e-2, "emission probability cap per step"),
    "min_substeps": ("int", 1, "substeps per grid interval"),
    "u_floor": ("float", U_FLOOR, "smallest sampled light-cone fraction"),
    "breit_wheeler": ("bool", True, "pair conversion of emitted photons"),
    "spectrum_bins": ("int", 400, "number of spectrum bins"),
    "spectrum_e_min_MeV": ("float", 0.0, "lower spectrum edge"),
    "spectrum_e_max_MeV": ("float", 8000.0, "upper spectrum edge"),
    "spectrum_scale": ("str", "linear", "linear or log bins"),
    "photon_dump": ("bool", False, "write every photon to photons.csv"),
    "rho_zeta0": ("list", None, "rho-scan amplitudes"),
    "rho_gamma_tau": ("list", None, "rho-scan Gamma*tau values; default from gamma_eV and tau"),
    "rho_theta0": ("list", None, "rho-scan angles"),
}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt, "log": math.log, "exp": math.exp, "log10": math.log10}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("not a numeric expression")


def parse_number(text):
    """Evaluate a restricted arithmetic expression."""
    try:
        value = _eval(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
        raise ValueError(f"cannot read {text!r} as a number") from exc
    return value


def _convert(key, raw):
    kind = KEYS[key][0]
    try:
        if kind == "float":
            value = float(parse_number(raw))
            if not math.isfinite(value):
                raise ValueError("must be finite")
            return value
        if kind == "int":
            value = parse_number(raw)
            if float(value) != int(value):
                raise ValueError(f"{raw!r} is not an integer")
            return int(value)
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"{raw!r} is not a boolean")
        if kind == "list":
            return tuple(float(parse_number(p)) for p in raw.split(",") if p.strip())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def parse_lines(lines, source="<config>"):
    """Raw ``{key: converted value}`` from config text lines."""
    values = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(None, f"{source}:{lineno}: expected 'key = value', got {text!r}")
        key, raw = (s.strip() for s in text.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, f"{source}:{lineno}: unknown key")
        if key in values:
            raise ConfigError(key, f"{source}:{lineno}: given twice")
        if not raw:
            raise ConfigError(key, f"{source}:{lineno}: missing value")
        values[key] = _convert(key, raw)
    return values


@dataclass(frozen=True)
class Numerics:
    phase_step: float = 0.1
    phi_min: float | None = None
    phi_max: float | None = None
    omega_window: tuple | None = None
    march: MarchSettings = field(default_factory=MarchSettings)
    u_floor: float = U_FLOOR
    bins: BinSpec = field(default_factory=BinSpec)
    photon_dump: bool = False


@dataclass(frozen=True)
class RunConfig:
    pulse: PulseParams
    squeeze: SqueezeParams
    beam: BeamParams
    numerics: Numerics
    seed: int
    workers: int
    peak_intensity: float
    spot_radius_um: float
    rho_zeta0: tuple
    rho_gamma_tau: tuple
    rho_theta0: tuple
    values: dict = field(repr=False, default_factory=dict)

    def echo(self):
        """``key = value`` lines of every effective setting."""
        return [f"{k} = {_fmt(self.values[k])}" for k in KEYS]

    def with_overrides(self, **overrides):
        merged = dict(self.values)
        for key, value in overrides.items():
            if key not in KEYS:
                raise ConfigError(key, "unknown key")
            merged[key] = value
        return build_config(merged)


def _fmt(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


_PARAM_KEYS = {
    "omega0": "omega0_eV",
    "tau": "tau_fwhm_fs",
    "tau_fwhm_fs": "tau_fwhm_fs",
    "xi0": "xi0",
    "carrier_phase": "carrier_phase_rad",
    "zeta0": "zeta0",
    "gamma": "gamma_eV",
    "theta0": "theta0_rad",
    "mean_energy": "beam_energy_GeV",
    "sigma_energy": "beam_sigma_GeV",
    "n_electrons": "n_electrons",
}


def build_config(values):
    """Validate converted values (missing keys take defaults) into a RunConfig."""
    v = {k: entry[1] for k, entry in KEYS.items()}
    unknown = set(values) - set(KEYS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    v.update(values)

    def need(key, ok, what):
        if not ok:
            raise ConfigError(key, f"{what}, got {v[key]!r}")

    need("amplitude_scale", v["amplitude_scale"] > 0, "must be positive")
    need("peak_intensity_Wcm2", v["peak_intensity_Wcm2"] > 0, "must be positive")
    need("spot_radius_um", v["spot_radius_um"] > 0, "must be positive")
    need("phase_step", 0 < v["phase_step"] <= 0.15, "must lie in (0, 0.15]")
    need("workers", v["workers"] >= 1, "must be at least 1")
    need("seed", 0 <= v["seed"] < 2**64, "must be a 64-bit unsigned integer")
    need("u_floor", 0 < v["u_floor"] < 1e-3, "must lie in (0, 1e-3)")
    need("max_step_probability", 0 < v["max_step_probability"] <= 0.05, "must lie in (0, 0.05]")
    need("min_substeps", v["min_substeps"] >= 1, "must be at least 1")
    need("spectrum_scale", v["spectrum_scale"] in ("linear", "log"), "must be 'linear' or 'log'")
    need("spectrum_bins", v["spectrum_bins"] >= 1, "must be positive")
    need("spectrum_e_max_MeV", v["spectrum_e_max_MeV"] > v["spectrum_e_min_MeV"], "must exceed spectrum_e_min_MeV")
    if v["spectrum_scale"] == "log":
        need("spectrum_e_min_MeV", v["spectrum_e_min_MeV"] > 0, "must be positive for log bins")
    else:
        need("spectrum_e_min_MeV", v["spectrum_e_min_MeV"] >= 0, "must be non-negative")
    if (v["phi_min"] is None) != (v["phi_max"] is None):
        raise ConfigError("phi_max" if v["phi_max"] is None else "phi_min", "phi_min and phi_max go together")
    if v["phi_min"] is not None:
        need("phi_max", v["phi_max"] > v["phi_min"], "must exceed phi_min")
    lo, hi = v["omega_window_min_eV"], v["omega_window_max_eV"]
    if (lo is None) != (hi is None):
        raise ConfigError("omega_window_max_eV" if hi is None else "omega_window_min_eV", "window edges go together")
    if lo is not None:
        need("omega_window_min_eV", lo > 0, "must be positive")
        need("omega_window_max_eV", hi > lo, "must exceed omega_window_min_eV")

    scale = v["amplitude_scale"]
    try:
        pulse = PulseParams.from_lab(
            v["omega0_eV"], v["tau_fwhm_fs"], v["xi0"] * scale, v["carrier_phase_rad"]
        )
        squeeze = SqueezeParams(v["zeta0"], v["gamma_eV"], v["theta0_rad"])
        beam = BeamParams(v["beam_energy_GeV"], v["beam_sigma_GeV"], v["n_electrons"])
        march = MarchSettings(v["max_step_probability"], v["min_substeps"], v["breit_wheeler"])
        bins = BinSpec(v["spectrum_bins"], v["spectrum_e_max_MeV"], v["spectrum_scale"], v["spectrum_e_min_MeV"])
    except ParameterError as exc:
        raise ConfigError(_PARAM_KEYS.get(exc.name, exc.name), str(exc).split(": ", 1)[-1]) from None
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from None

    gamma_tau = v["rho_gamma_tau"] or (v["gamma_eV"] * pulse.tau,)
    numerics = Numerics(
        phase_step=v["phase_step"],
        phi_min=v["phi_min"],
        phi_max=v["phi_max"],
        omega_window=None if lo is None else (lo, hi),
        march=march,
        u_floor=v["u_floor"],
        bins=bins,
        photon_dump=v["photon_dump"],
    )
    return RunConfig(
        pulse=pulse,
        squeeze=squeeze,
        beam=beam,
        numerics=numerics,
        seed=v["seed"],
        workers=v["workers"],
        peak_intensity=v["peak_intensity_Wcm2"] * scale**2,
        spot_radius_um=v["spot_radius_um"],
        rho_zeta0=v["rho_zeta0"] or (v["zeta0"],),
        rho_gamma_tau=tuple(gamma_tau),
        rho_theta0=v["rho_theta0"] or (v["theta0_rad"],),
        values=v,
    )


def parse_config(source=None, overrides=None):
    """Read a config file (or none) and apply ``overrides`` given as raw strings."""
    values = {}
    if source is not None:
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(None, f"config file not found: {path}") from None
        except OSError as exc:
            raise ConfigError(None, f"cannot read {path}: {exc}") from None
        values = parse_lines(text.splitlines(), str(path))
    for key, raw in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, raw) if isinstance(raw, str) else raw
    return build_config(values)


def config_fields():
    """(key, default, description) for documentation."""
    return [(k, entry[1], entry[2]) for k, entry in KEYS.items()]


__all__ = ["KEYS", "Numerics", "RunConfig", "build_config", "config_fields", "parse_config", "parse_number"]
