import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from squeezed_compton import kinetic
from squeezed_compton.rates import (
    RATE_PREFACTOR,
    U_FLOOR,
    _inverse_cdf_row,
    breit_wheeler_total_rate,
    build_rate_table,
    classical_power,
    classical_rate,
    compton_spectral_density,
    emission_probability_density,
    gaunt_factor,
    pair_bracket,
    sample_photon_fraction,
    spectrum_moment,
)
from squeezed_compton.units import ALPHA, M_E_MEV, eta_parameter


@pytest.mark.parametrize("chi,u", [(1e-3, 1e-4), (0.3, 0.01), (0.3, 0.5), (2.0, 0.9), (20.0, 0.3)])
def test_spectral_density_matches_oracle(chi, u):
    assert compton_spectral_density(chi, u) == pytest.approx(oracles.spectral_density(chi, u), rel=1e-8)


def test_spectral_density_vanishes_at_u_to_1():
    u = np.array([0.9, 0.99, 0.999, 1 - 1e-6])
    f = compton_spectral_density(0.3, u)
    assert np.all(np.diff(f) <= 0) and f[0] > f[1]
    assert f[-1] == 0.0


def test_spectral_density_domain():
    for chi, u in [(0.0, 0.5), (-1.0, 0.5), (0.3, 0.0), (0.3, 1.0)]:
        with pytest.raises(ValueError):
            compton_spectral_density(chi, u)


@settings(max_examples=200, deadline=None)
@given(chi=st.floats(1e-5, 20.0), u=st.floats(1e-9, 1 - 1e-9))
def test_spectral_density_nonnegative(chi, u):
    assert compton_spectral_density(chi, u) >= 0.0


def test_probability_density_prefactor():
    eta = 0.06
    assert emission_probability_density(0.3, 0.2, eta) == pytest.approx(
        ALPHA / (math.sqrt(3) * math.pi * eta) * compton_spectral_density(0.3, 0.2), rel=1e-14
    )


@pytest.mark.parametrize("chi", [1e-4, 1e-3, 0.01, 0.3, 1.0, 10.0])
@pytest.mark.parametrize("power", [0, 1])
def test_moments_match_oracle(chi, power):
    assert spectrum_moment(chi, power) == pytest.approx(oracles.spectrum_moment(chi, power), rel=1e-8)


def test_small_chi_total_rate():
    # lab-frame rate per unit time: prefactor/eta * R * dphi/dt, dphi/dt = omega0 p / eps
    chi = 1e-3
    eps = 5000.0
    p = 2 * eps
    eta = eta_parameter(p, 1.55)
    w_phase = RATE_PREFACTOR / eta * spectrum_moment(chi)
    w_time = w_phase * 1.55e-6 * p / eps
    ref = 5 / (2 * math.sqrt(3)) * ALPHA * M_E_MEV**2 / eps * chi
    assert w_time == pytest.approx(ref, rel=0.01)
    assert spectrum_moment(chi) == pytest.approx(classical_rate(chi), rel=0.01)


def test_small_chi_mean_fraction():
    chi = 1e-3
    mean = spectrum_moment(chi, 1) / spectrum_moment(chi, 0)
    ref = oracles.spectrum_moment(chi, 1) / oracles.spectrum_moment(chi, 0)
    assert mean == pytest.approx(ref, rel=1e-8)
    assert mean == pytest.approx(classical_power(chi) / classical_rate(chi), rel=0.01)


def test_gaunt_factor_properties():
    chis = np.geomspace(1e-4, 20, 30)
    g = np.array([gaunt_factor(c) for c in chis])
    assert np.all(g <= 1.0)
    assert np.all(np.diff(g) < 0)
    assert gaunt_factor(1e-3) == pytest.approx(1.0, abs=0.01)


def test_table_invariants(table):
    assert table.chi_grid.size >= 256 and table.quantiles.size >= 1024
    assert table.chi_grid[0] == pytest.approx(1e-5) and table.chi_grid[-1] == pytest.approx(20.0)
    assert np.all(np.diff(table.total_rate) > 0)
    assert np.all(np.diff(table.inv_cdf, axis=1) > 0)
    assert np.all(table.inv_cdf[:, 1] <= 1e-6)
    assert np.all(table.inv_cdf[:, -1] < 1)
    assert table.u_floor == U_FLOOR


def test_table_linear_at_small_chi(table):
    assert table.rate(2e-5) / table.rate(1e-5) == pytest.approx(2.0, rel=1e-3)


def test_table_rate_accuracy(table):
    rng = np.random.default_rng(7)
    chis = np.exp(rng.uniform(math.log(1e-5), math.log(20), 1000))
    direct = np.array([spectrum_moment(c) for c in chis])
    assert np.abs(table.rate(chis) / direct - 1).max() < 5e-3


def test_table_rate_against_oracle(table):
    for chi in (3e-5, 0.0137, 0.3, 4.2):
        assert table.rate(chi) == pytest.approx(oracles.spectrum_moment(chi, 0), rel=5e-3)


def test_inverse_cdf_accuracy(table):
    rng = np.random.default_rng(11)
    chis = np.exp(rng.uniform(math.log(1e-5), math.log(20), 1000))
    qs = rng.uniform(0.0, 0.999, 1000)
    worst = 0.0
    for chi, q in zip(chis, qs):
        _, direct = _inverse_cdf_row(chi, np.array([q]), n_panels=4096)
        if direct[0] < 10 * table.u_floor:
            continue  # draws there are clamped to the floor by design
        worst = max(worst, abs(sample_photon_fraction(table, chi, q) / direct[0] - 1))
    assert worst < 5e-3


@pytest.mark.parametrize("chi,q", [(0.01, 0.5), (0.3, 0.5), (0.3, 0.9), (2.0, 0.25)])
def test_inverse_cdf_against_oracle(table, chi, q):
    assert sample_photon_fraction(table, chi, q) == pytest.approx(oracles.spectrum_quantile(chi, q), rel=5e-3)


def test_inverse_cdf_continuous_in_chi(table):
    chis = np.geomspace(1e-4, 19.9, 3000)
    u = np.array([sample_photon_fraction(table, c, 0.5) for c in chis])
    assert np.abs(np.diff(u) / u[:-1]).max() < 0.01


def test_q_zero_gives_floor(table):
    for chi in (1e-6, 1e-3, 0.3, 20.0):
        assert sample_photon_fraction(table, chi, 0.0) == table.u_floor


def test_monotone_in_chi(table):
    qs = np.linspace(0, 0.999, 200)
    prev = sample_photon_fraction(table, 1e-6, qs)
    for chi in np.geomspace(1e-5, 20, 60):
        u = sample_photon_fraction(table, chi, qs)
        assert np.all(u >= prev)
        prev = u
    assert oracles.spectrum_quantile(0.01, 0.5) < oracles.spectrum_quantile(0.3, 0.5)


def test_sampling_deterministic(table):
    qs = np.random.default_rng(3).random(100)
    np.testing.assert_array_equal(sample_photon_fraction(table, 0.3, qs), sample_photon_fraction(table, 0.3, qs))


def test_sampling_domain(table):
    with pytest.raises(ValueError):
        sample_photon_fraction(table, 0.3, 1.0)
    with pytest.raises(ValueError):
        sample_photon_fraction(table, 0.3, -0.1)
    with pytest.raises(ValueError):
        sample_photon_fraction(table, 0.0, 0.5)
    with pytest.warns(RuntimeWarning):
        assert sample_photon_fraction(table, 50.0, 0.5) == sample_photon_fraction(table, 20.0, 0.5)


def test_sampled_mean_fraction(table):
    chi = 0.3
    u = sample_photon_fraction(table, chi, np.random.default_rng(5).random(10**6))
    ref = oracles.spectrum_moment(chi, 1) / oracles.spectrum_moment(chi, 0)
    sigma = u.std() / math.sqrt(u.size)
    assert abs(u.mean() - ref) < 3 * sigma


def test_sampled_histogram(table):
    chi = 0.3
    n = 10**6
    u = sample_photon_fraction(table, chi, np.random.default_rng(9).random(n))
    edges = np.concatenate([[0.0], np.geomspace(1e-5, 0.99, 49), [1.0]])
    counts, _ = np.histogram(u, edges)
    cdf = np.array([0.0] + [oracles.spectrum_cdf(chi, e) for e in edges[1:-1]] + [1.0])
    expect = n * np.diff(cdf)
    sigma = np.sqrt(expect * (1 - np.diff(cdf)))
    assert np.all(np.abs(counts - expect) <= 4 * sigma)


def test_numba_sampler_matches_numpy(table):
    rng = np.random.default_rng(13)
    for chi in np.exp(rng.uniform(math.log(1e-7), math.log(19.9), 50)):
        qs = rng.random(20)
        ref = sample_photon_fraction(table, chi, qs)
        got = [
            kinetic._sample_u(chi, q, table.log_chi_min, table.log_chi_step, table.quantiles, table.inv_cdf, table.u_floor)
            for q in qs
        ]
        np.testing.assert_allclose(got, ref, rtol=1e-12)


# ------------------------------------------------------------------ pairs


def test_pair_bracket_matches_oracle():
    for chi in (0.05, 0.1, 0.3, 1.0, 5.0):
        assert pair_bracket(chi) == pytest.approx(oracles.pair_bracket(chi), rel=1e-8)


def test_pair_zero_field():
    assert pair_bracket(0.0) == 0.0
    assert breit_wheeler_total_rate(0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        pair_bracket(-0.1)


def test_pair_table(table):
    for chi in (0.02, 0.1, 0.3, 3.0):
        assert table.pair_rate(chi) == pytest.approx(pair_bracket(chi), rel=1e-3)
    assert table.pair_rate(1e-4) == 0.0


def test_pair_suppression():
    ratio = pair_bracket(0.1) / pair_bracket(0.2)
    expo = math.exp(-8 / 3 * (1 / 0.1 - 1 / 0.2))
    assert 0.1 < ratio / expo < 10
    assert ratio == pytest.approx(oracles.pair_bracket(0.1) / oracles.pair_bracket(0.2), rel=1e-6)


@pytest.mark.parametrize("theta0", [None, 0.0, math.pi / 4])
def test_pair_conversion_negligible(theta0, table, plain_grid, squeezed_grids):
    grid = plain_grid if theta0 is None else squeezed_grids(theta0)
    # hardest photon possible: the whole light-cone momentum of a 5 GeV electron
    eta = eta_parameter(10000.0, grid.pulse.omega0)
    chi = np.abs(grid.xi_values) * eta
    prob = RATE_PREFACTOR / eta * float(np.sum(table.pair_rate(chi))) * grid.step
    assert prob < 1e-3


def test_build_rejects_bad_floor():
    with pytest.raises(ValueError):
        build_rate_table(u_floor=0.1)


def test_rate_table_csv(tmp_path, table):
    path = tmp_path / "rate.csv"
    table.write_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().splitlines()[0] == "chi,total_rate"
    np.testing.assert_array_equal(data[:, 1], table.total_rate)



@pytest.mark.parametrize("chi", [1e-4, 0.01, 0.3, 5.0])
def test_inverse_cdf_tail_cell(table, chi):
    # q beyond the second-to-last node falls in the log(1 - q) cell
    q = 1.0 - np.array([3e-7, 1e-8, 1e-10])
    _, direct = _inverse_cdf_row(chi, q, n_panels=4096)
    np.testing.assert_allclose(sample_photon_fraction(table, chi, q), direct, rtol=0.02)
