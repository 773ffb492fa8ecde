"""One-dimensional stochastic emission of an electron beam crossing the pulse.

Each electron is described by its light-cone momentum p_- alone, which is
constant in a plane wave except at photon emission.  The phase is marched
over the field grid; in a (sub)step of length dphi the electron emits with
probability

    P = alpha / (sqrt(3) pi eta) R(chi) dphi,   chi = |xi| eta,

draws u from the emission spectrum, and recoils p_- -> p_- - u p_-.  The
photon is collinear and backscattered, so its energy is u p_- / 2.

Bernoulli trials per step are realised through their first-success time:
one uniform U is drawn per emission and the electron emits in the step at
which the accumulated survival prod(1 - P_k) first drops below U.  This is
the same discrete process with one draw per photon instead of per step.

Random numbers come from a Philox generator keyed by (seed, electron index),
so each electron's history is independent of scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.special import ndtr, ndtri

from .errors import StepSizeError
from .rates import RATE_PREFACTOR
from .units import M_E_MEV, BeamParams, eta_parameter, light_cone_momentum

STEP_PROBABILITY = 1e-2
MAX_STEP_PROBABILITY = 5e-2
MAX_SUBSTEPS = 4096
BW_BLOCK = 256
BW_NEGLIGIBLE = 1e-16
PHOTON_CAPACITY = 256
TRUNCATION_SIGMAS = 5.0

_OK = 0
_FULL = 1
_STEP = 2


@dataclass(frozen=True)
class ElectronState:
    p_minus: float
    phi: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.p_minus > 0:
            raise ValueError(f"p_minus must be positive, got {self.p_minus}")

    @property
    def energy(self):
        """Lab energy (MeV) with no transverse momentum."""
        return 0.5 * (self.p_minus + M_E_MEV**2 / self.p_minus)


@dataclass(frozen=True)
class PhotonRecord:
    energy: float
    emission_phi: float
    parent_chi: float
    converted: bool = False


@dataclass(frozen=True)
class BinSpec:
    """Photon-energy bins in MeV, uniform in energy or in log energy."""

    n_bins: int = 400
    e_max: float = 8000.0
    scale: str = "linear"
    e_min: float = 0.0

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be positive")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"bin scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and not 0 < self.e_min < self.e_max:
            raise ValueError("log bins need 0 < e_min < e_max")
        if self.scale == "linear" and not 0 <= self.e_min < self.e_max:
            raise ValueError("linear bins need 0 <= e_min < e_max")

    def edges(self):
        if self.scale == "log":
            return np.geomspace(self.e_min, self.e_max, self.n_bins + 1)
        return np.linspace(self.e_min, self.e_max, self.n_bins + 1)


@dataclass(frozen=True)
class SpectrumHist:
    bin_edges: np.ndarray = field(repr=False)
    dE_domega: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    n_electrons: int
    overflow_count: int = 0
    overflow_energy: float = 0.0
    underflow_count: int = 0
    underflow_energy: float = 0.0

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def integral(self):
        """int dE/domega domega over the binned range (MeV per electron)."""
        return float(np.sum(self.dE_domega * np.diff(self.bin_edges)))

    def write_csv(self, path, comments=()):
        with open(path, "w", encoding="utf-8") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write(f"# overflow_count = {self.overflow_count}\n")
            fh.write(f"# overflow_energy_MeV_per_electron = {float(self.overflow_energy)!r}\n")
            fh.write(f"# underflow_count = {self.underflow_count}\n")
            fh.write("omega_MeV,dE_domega\n")
            for c, v in zip(self.centers.tolist(), self.dE_domega.tolist()):
                fh.write(f"{c!r},{v!r}\n")


def _finite_or_none(x):
    return float(x) if math.isfinite(x) else None


@dataclass(frozen=True)
class RunSummary:
    mean_emitted_energy: float
    mean_emitted_energy_stderr: float
    mean_photon_count: float
    mean_photon_count_stderr: float
    pair_count: int
    pulse_energy: float
    n_electrons: int
    seed: int
    chi_clamped: int = 0
    params: dict = field(default_factory=dict)

    def as_dict(self):
        """Plain dict for JSON output; undefined values (e.g. a one-electron stderr) become None."""
        return {
            "mean_emitted_energy_MeV": _finite_or_none(self.mean_emitted_energy),
            "mean_emitted_energy_stderr_MeV": _finite_or_none(self.mean_emitted_energy_stderr),
            "mean_photon_count": _finite_or_none(self.mean_photon_count),
            "mean_photon_count_stderr": _finite_or_none(self.mean_photon_count_stderr),
            "pair_count": self.pair_count,
            "pulse_energy_J": _finite_or_none(self.pulse_energy),
            "n_electrons": self.n_electrons,
            "seed": self.seed,
            "chi_clamped": self.chi_clamped,
            "params": dict(self.params),
        }


@dataclass(frozen=True)
class MarchSettings:
    """Integrator controls shared by every electron of a run."""

    step_probability: float = STEP_PROBABILITY
    min_substeps: int = 1
    breit_wheeler: bool = True

    def __post_init__(self):
        if not 0 < self.step_probability <= MAX_STEP_PROBABILITY:
            raise ValueError(
                f"step probability cap must lie in (0, {MAX_STEP_PROBABILITY}], "
                f"got {self.step_probability}"
            )
        if self.min_substeps < 1:
            raise ValueError("min_substeps must be at least 1")


# ---------------------------------------------------------------- kernel


@numba.njit(cache=True, nogil=True)
def _total_rate(chi, log_chi0, dlog, log_rate):
    n = log_rate.size
    lc = math.log(chi)
    x = (lc - log_chi0) / dlog
    if x < 0.0:
        return math.exp(log_rate[0]) * chi / math.exp(log_chi0)
    i = int(x)
    if i >= n - 1:
        i = n - 2
        x = float(n - 1)
    a = x - i
    return math.exp(log_rate[i] + a * (log_rate[i + 1] - log_rate[i]))


@numba.njit(cache=True, nogil=True)
def _sample_u(chi, q, log_chi0, dlog, quantiles, inv_cdf, u_floor):
    n_chi = inv_cdf.shape[0]
    nq = quantiles.size
    scale = 1.0
    x = (math.log(chi) - log_chi0) / dlog
    if x < 0.0:
        # below the grid the spectrum depends on u/chi only
        scale = chi / math.exp(log_chi0)
        x = 0.0
    i = int(x)
    if i >= n_chi - 1:
        i = n_chi - 2
        x = float(n_chi - 1)
    a = x - i
    y = math.acos(1.0 - 2.0 * q) * (nq - 1) / math.pi
    j = int(y)
    if j >= nq - 1:
        j = nq - 2
    if j == nq - 2:
        # exponential tail: u is close to linear in log(1 - q)
        b = math.log1p(-q) - math.log1p(-quantiles[j])
        b /= math.log1p(-quantiles[j + 1]) - math.log1p(-quantiles[j])
    else:
        b = (q - quantiles[j]) / (quantiles[j + 1] - quantiles[j])
    b = min(b, 1.0)
    r0 = inv_cdf[i, j] + b * (inv_cdf[i, j + 1] - inv_cdf[i, j])
    r1 = inv_cdf[i + 1, j] + b * (inv_cdf[i + 1, j + 1] - inv_cdf[i + 1, j])
    u = (r0 + a * (r1 - r0)) * scale
    return max(u, u_floor)


@numba.njit(cache=True, nogil=True)
def _pair_rate(chi, pair_inv_chi, pair_log_rate):
    # pair_inv_chi is increasing 1/chi; log T is interpolated linearly in 1/chi
    x = 1.0 / chi
    n = pair_inv_chi.size
    if x > pair_inv_chi[n - 1]:
        return 0.0
    if x <= pair_inv_chi[0]:
        return math.exp(pair_log_rate[0])
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if pair_inv_chi[mid] <= x:
            lo = mid
        else:
            hi = mid
    a = (x - pair_inv_chi[lo]) / (pair_inv_chi[hi] - pair_inv_chi[lo])
    return math.exp(pair_log_rate[lo] + a * (pair_log_rate[hi] - pair_log_rate[lo]))


@numba.njit(cache=True, nogil=True)
def _march(
    gen,
    xi,
    phi_min,
    step,
    p_minus,
    eta_per_mev,
    prefactor,
    step_probability,
    min_substeps,
    log_chi0,
    dlog,
    log_rate,
    chi_max,
    quantiles,
    inv_cdf,
    u_floor,
    out_energy,
    out_phi,
    out_chi,
    out_index,
):
    """Evolve one electron; returns (status, n_photons, final p_-, clamps, max P)."""
    n = xi.size
    cap = out_energy.size
    n_ph = 0
    clamps = 0
    p_max = 0.0
    eta = eta_per_mev * p_minus
    log_target = math.log(1.0 - gen.random())
    log_surv = 0.0
    for k in range(n - 1):
        a = xi[k]
        b = xi[k + 1]
        if a == 0.0 and b == 0.0:
            continue
        chi_mid = abs(0.5 * (a + b)) * eta
        if chi_mid > 0.0:
            p_est = prefactor / eta * _total_rate(chi_mid, log_chi0, dlog, log_rate) * step
        else:
            p_est = 0.0
        m = min_substeps
        if p_est > step_probability * m:
            m = int(math.ceil(p_est / step_probability))
        if m > MAX_SUBSTEPS:
            return _STEP, n_ph, p_minus, clamps, p_est / m
        h = step / m
        for j in range(m):
            s = (j + 0.5) / m
            chi = abs(a + s * (b - a)) * eta
            if chi == 0.0:
                continue
            p = prefactor / eta * _total_rate(chi, log_chi0, dlog, log_rate) * h
            if p > p_max:
                p_max = p
            if p > MAX_STEP_PROBABILITY:
                return _STEP, n_ph, p_minus, clamps, p
            log_surv += math.log1p(-p)
            if log_surv < log_target:
                if n_ph == cap:
                    return _FULL, n_ph, p_minus, clamps, p_max
                chi_s = chi
                if chi_s > chi_max:
                    chi_s = chi_max
                    clamps += 1
                u = _sample_u(chi_s, gen.random(), log_chi0, dlog, quantiles, inv_cdf, u_floor)
                k_minus = u * p_minus
                out_energy[n_ph] = 0.5 * k_minus
                out_phi[n_ph] = phi_min + (k + s) * step
                out_chi[n_ph] = chi
                out_index[n_ph] = k
                n_ph += 1
                p_minus = p_minus - k_minus
                eta = eta_per_mev * p_minus
                log_surv = 0.0
                log_target = math.log(1.0 - gen.random())
    return _OK, n_ph, p_minus, clamps, p_max


@numba.njit(cache=True, nogil=True)
def _convert(
    gen,
    xi,
    step,
    block_max,
    eta_per_mev,
    prefactor,
    pair_inv_chi,
    pair_log_rate,
    energy,
    index,
    converted,
):
    """Decide pair conversion of each photon along the rest of the pulse."""
    n = xi.size
    n_pairs = 0
    for i in range(energy.size):
        eta_g = eta_per_mev * 2.0 * energy[i]
        scale = prefactor / eta_g * step
        depth = 0.0
        k0 = index[i]
        blk = k0 // BW_BLOCK
        while blk < block_max.size:
            chi_b = block_max[blk] * eta_g
            lo = max(blk * BW_BLOCK, k0)
            hi = min((blk + 1) * BW_BLOCK, n - 1)
            if chi_b > 0.0 and _pair_rate(chi_b, pair_inv_chi, pair_log_rate) * scale * (
                hi - lo
            ) > BW_NEGLIGIBLE:
                for k in range(lo, hi):
                    chi = abs(0.5 * (xi[k] + xi[k + 1])) * eta_g
                    if chi > 0.0:
                        depth += _pair_rate(chi, pair_inv_chi, pair_log_rate) * scale
            blk += 1
        q = gen.random()
        if depth > 0.0 and q < -math.expm1(-depth):
            converted[i] = True
            n_pairs += 1
    return n_pairs


# ---------------------------------------------------------------- drivers


def electron_generator(seed, index):
    """Counter-based stream for electron ``index`` of a run seeded with ``seed``."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def initial_energy(gen, beam):
    """Beam energy (MeV) from a Gaussian truncated at 5 sigma."""
    lo = ndtr(-TRUNCATION_SIGMAS)
    q = lo + gen.random() * (1.0 - 2.0 * lo)
    return beam.mean_energy_mev + beam.sigma_energy * 1.0e3 * float(ndtri(q))


@dataclass(frozen=True)
class _Context:
    xi: np.ndarray
    phi_min: float
    step: float
    eta_per_mev: float
    table: object
    settings: MarchSettings
    block_max: np.ndarray
    log_rate: np.ndarray
    pair_inv_chi: np.ndarray
    pair_log_rate: np.ndarray

    @classmethod
    def build(cls, grid, table, settings):
        xi = np.ascontiguousarray(grid.xi_values, dtype=float)
        nblk = (xi.size - 1 + BW_BLOCK - 1) // BW_BLOCK
        block_max = np.zeros(max(nblk, 0))
        absxi = np.abs(xi)
        for b in range(nblk):
            block_max[b] = absxi[b * BW_BLOCK : min((b + 1) * BW_BLOCK + 1, xi.size)].max()
        if settings.breit_wheeler:
            if table.pair_chi_grid is None:
                raise ValueError("rate table has no pair channel")
            pair_inv_chi = np.ascontiguousarray(1.0 / table.pair_chi_grid[::-1])
            pair_log_rate = np.ascontiguousarray(table.pair_log_rate[::-1])
        else:
            pair_inv_chi = np.ones(2)
            pair_log_rate = np.zeros(2)
        return cls(
            xi=xi,
            phi_min=grid.phi_min,
            step=grid.step,
            eta_per_mev=eta_parameter(1.0, grid.pulse.omega0),
            table=table,
            settings=settings,
            block_max=block_max,
            log_rate=np.log(table.total_rate),
            pair_inv_chi=pair_inv_chi,
            pair_log_rate=pair_log_rate,
        )


def _run_one(ctx, gen, p_minus):
    t = ctx.table
    cap = PHOTON_CAPACITY
    while True:
        state = gen.bit_generator.state
        bufs = [np.empty(cap) for _ in range(3)] + [np.empty(cap, dtype=np.int64)]
        status, n_ph, p_final, clamps, p_max = _march(
            gen,
            ctx.xi,
            ctx.phi_min,
            ctx.step,
            p_minus,
            ctx.eta_per_mev,
            RATE_PREFACTOR,
            ctx.settings.step_probability,
            ctx.settings.min_substeps,
            t.log_chi_min,
            t.log_chi_step,
            ctx.log_rate,
            float(t.chi_grid[-1]),
            t.quantiles,
            t.inv_cdf,
            t.u_floor,
            *bufs,
        )
        if status == _FULL:
            # replay the same stream with room for more photons
            gen.bit_generator.state = state
            cap *= 4
            continue
        if status == _STEP:
            raise StepSizeError(
                f"emission probability {p_max:.3g} per step exceeds {MAX_STEP_PROBABILITY} "
                f"after {MAX_SUBSTEPS}-fold refinement"
            )
        break
    energy, phi, chi, index = (b[:n_ph].copy() for b in bufs)
    converted = np.zeros(n_ph, dtype=np.bool_)
    if ctx.settings.breit_wheeler and n_ph:
        _convert(
            gen,
            ctx.xi,
            ctx.step,
            ctx.block_max,
            ctx.eta_per_mev,
            RATE_PREFACTOR,
            ctx.pair_inv_chi,
            ctx.pair_log_rate,
            energy,
            index,
            converted,
        )
    return energy, phi, chi, converted, p_final, clamps


def simulate_electron(grid, table, initial, gen, settings=None):
    """Photons emitted by one electron entering the grid in ``initial``.

    Returns the photon list and the outgoing electron state.
    """
    if not initial.p_minus > 0:
        raise ValueError("initial p_minus must be positive")
    ctx = _Context.build(grid, table, settings or MarchSettings())
    energy, phi, chi, converted, p_final, _ = _run_one(ctx, gen, initial.p_minus)
    photons = [
        PhotonRecord(float(e), float(f), float(c), bool(v))
        for e, f, c, v in zip(energy, phi, chi, converted)
    ]
    return photons, ElectronState(p_minus=p_final, phi=grid.phi_max, weight=initial.weight)


@dataclass(frozen=True)
class PhotonArrays:
    """Photons of a whole run in electron-index order."""

    energy: np.ndarray = field(repr=False)
    emission_phi: np.ndarray = field(repr=False)
    parent_chi: np.ndarray = field(repr=False)
    converted: np.ndarray = field(repr=False)
    electron: np.ndarray = field(repr=False)

    def __len__(self):
        return self.energy.size

    def records(self):
        return [
            PhotonRecord(float(e), float(f), float(c), bool(v))
            for e, f, c, v in zip(self.energy, self.emission_phi, self.parent_chi, self.converted)
        ]

    def write_csv(self, path, comments=()):
        with open(path, "w", encoding="utf-8") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write("energy_MeV,emission_phi,parent_chi\n")
            keep = ~self.converted
            for e, f, c in zip(
                self.energy[keep].tolist(), self.emission_phi[keep].tolist(), self.parent_chi[keep].tolist()
            ):
                fh.write(f"{e!r},{f!r},{c!r}\n")


@dataclass(frozen=True)
class EnsembleResult:
    spectrum: SpectrumHist
    summary: RunSummary
    photons: PhotonArrays
    initial_p_minus: np.ndarray = field(repr=False)
    final_p_minus: np.ndarray = field(repr=False)


def _chunk(ctx, beam, seed, lo, hi):
    out = []
    for idx in range(lo, hi):
        gen = electron_generator(seed, idx)
        p0 = light_cone_momentum(initial_energy(gen, beam))
        out.append((p0,) + _run_one(ctx, gen, p0))
    return out


def accumulate_spectrum(energies, bins, n_electrons, weights=None):
    """dE/domega per electron; out-of-range photons go to explicit buckets."""
    if isinstance(bins, BinSpec):
        edges = bins.edges()
    else:
        edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be a strictly increasing sequence of at least two values")
    if n_electrons < 1:
        raise ValueError("n_electrons must be positive")
    if isinstance(energies, (list, tuple)) and energies and isinstance(energies[0], PhotonRecord):
        energies = [r.energy for r in energies]
    energies = np.asarray(energies, dtype=float).ravel()
    weights = np.ones_like(energies) if weights is None else np.asarray(weights, dtype=float)
    over = energies >= edges[-1]
    under = energies < edges[0]
    inside = ~(over | under)
    counts, _ = np.histogram(energies[inside], bins=edges)
    summed, _ = np.histogram(energies[inside], bins=edges, weights=energies[inside] * weights[inside])
    return SpectrumHist(
        bin_edges=edges,
        dE_domega=summed / (n_electrons * np.diff(edges)),
        counts=counts,
        n_electrons=int(n_electrons),
        overflow_count=int(over.sum()),
        overflow_energy=float(np.sum(energies[over] * weights[over])) / n_electrons,
        underflow_count=int(under.sum()),
        underflow_energy=float(np.sum(energies[under] * weights[under])) / n_electrons,
    )


def run_ensemble(
    grid,
    table,
    beam: BeamParams,
    seed,
    settings=None,
    bins=None,
    workers=1,
    pulse_energy=float("nan"),
    params=None,
):
    """Simulate ``beam.n_electrons`` electrons; bit-identical for any ``workers``."""
    if workers < 1:
        raise ValueError("workers must be positive")
    settings = settings or MarchSettings()
    bins = bins or BinSpec()
    ctx = _Context.build(grid, table, settings)
    n = int(beam.n_electrons)
    bounds = np.linspace(0, n, min(workers * 4, n) + 1).astype(int)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        parts = [_chunk(ctx, beam, seed, a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: _chunk(ctx, beam, seed, *ab), spans))
    rows = [row for part in parts for row in part]

    p_initial = np.array([r[0] for r in rows])
    p_final = np.array([r[5] for r in rows])
    clamps = sum(r[6] for r in rows)
    counts = np.array([r[1].size for r in rows])
    electron = np.repeat(np.arange(n), counts)
    photons = PhotonArrays(
        energy=np.concatenate([r[1] for r in rows]) if n else np.empty(0),
        emission_phi=np.concatenate([r[2] for r in rows]) if n else np.empty(0),
        parent_chi=np.concatenate([r[3] for r in rows]) if n else np.empty(0),
        converted=np.concatenate([r[4] for r in rows]) if n else np.empty(0, bool),
        electron=electron,
    )
    kept = ~photons.converted
    per_electron_energy = np.bincount(electron[kept], weights=photons.energy[kept], minlength=n)
    per_electron_count = np.bincount(electron[kept], minlength=n).astype(float)
    spectrum = accumulate_spectrum(photons.energy[kept], bins, n)
    root_n = math.sqrt(n)
    summary = RunSummary(
        mean_emitted_energy=float(np.sum(photons.energy[kept])) / n,
        mean_emitted_energy_stderr=float(per_electron_energy.std(ddof=1)) / root_n if n > 1 else float("nan"),
        mean_photon_count=float(kept.sum()) / n,
        mean_photon_count_stderr=float(per_electron_count.std(ddof=1)) / root_n if n > 1 else float("nan"),
        pair_count=int(photons.converted.sum()),
        pulse_energy=float(pulse_energy),
        n_electrons=n,
        seed=int(seed),
        chi_clamped=int(clamps),
        params=dict(params or {}),
    )
    return EnsembleResult(spectrum, summary, photons, p_initial, p_final)
