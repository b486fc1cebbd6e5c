import math

import numpy as np
import pytest

from conftest import loop_shift_matrix, rand_unit
from wsspulse.channel import (ChannelRealization, ScatteringFunction, channel_matrix_element,
                              flat_scattering, lattice_indices, mean_shift, sample_amplitudes,
                              sample_realization, scattering_moments, time_invariant_realization)
from wsspulse.tfcore import Lattice, Pulse, cp_ofdm_pulses


def test_flat_scattering_rows():
    C = flat_scattering(512, 0, 0)
    assert C.size == 1 and C.weights[0] == 1.0
    C = flat_scattering(512, 1, 37)
    assert C.size == 150 and np.allclose(C.weights, 1 / 150)
    assert (C.tau_d, C.B_D) == (1, 37)
    C = flat_scattering(512, 149, 0)
    assert C.size == 150 and not np.any(C.nus)
    with pytest.raises(ValueError):
        flat_scattering(16, 16, 0)
    with pytest.raises(ValueError):
        flat_scattering(16, 0, 8)


def test_scattering_validation():
    with pytest.raises(ValueError):
        ScatteringFunction.from_atoms(8, [(0, 0, 0.5)])
    with pytest.raises(ValueError):
        ScatteringFunction.from_atoms(8, [(0, 0, 1.5), (1, 0, -0.5)])
    with pytest.raises(ValueError):
        ScatteringFunction.from_atoms(8, [(0, 1, 0.5), (0, 9, 0.5)])
    C = ScatteringFunction.from_atoms(8, [(1, -1, 2.0), (0, 0, 2.0)], normalize=True)
    assert abs(C.weights.sum() - 1) < 1e-15
    assert C.grid()[1, 7] == 0.5
    assert C.reflected().grid()[7, 1] == 0.5


def test_scattering_moments():
    assert scattering_moments(flat_scattering(64, 0, 0)) == (0.0, 0.0)
    L, td, bd = 64, 5, 3
    C = flat_scattering(L, td, bd)
    taus = [t for t in range(td + 1) for _ in range(2 * bd + 1)]
    nus = [n / L for _ in range(td + 1) for n in range(-bd, bd + 1)]
    ct, cf = scattering_moments(C)
    assert ct == pytest.approx(np.mean(np.square(taus)), rel=1e-14)
    assert cf == pytest.approx(np.mean(np.square(nus)), rel=1e-14)
    C2 = ScatteringFunction(L, 2 * C.taus, C.nus, C.weights)
    assert scattering_moments(C2)[0] == pytest.approx(4 * ct, rel=1e-14)
    ctc, _ = scattering_moments(C, centered=True)
    assert ctc == pytest.approx(np.var(taus), rel=1e-14)
    assert mean_shift(C) == pytest.approx((2.5, 0.0))


def test_amplitude_statistics():
    C = ScatteringFunction.from_atoms(16, [(0, 0, 0.5), (2, 1, 0.3), (3, -2, 0.2)])
    K = 100_000
    S = sample_amplitudes(C, np.random.default_rng(7), K)
    p = np.abs(S) ** 2
    z_var = (p.mean(0) - C.weights) / (p.std(0) / math.sqrt(K))
    assert np.all(np.abs(z_var) < 3)
    for stat in (S, S ** 2):
        se = np.sqrt((np.abs(stat) ** 2).mean(0) / K)
        assert np.all(np.abs(stat.mean(0)) < 3 * se)


def test_sample_realization_reproducible():
    C = flat_scattering(32, 2, 1)
    a, b = sample_realization(C, 5), sample_realization(C, 5)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert a.seed == 5
    supp = {(t, n) for t, n in zip(C.taus, C.nus)}
    assert {tuple(mu) for mu, _ in a.spread} <= supp


def test_realization_operator_matches_apply(rng):
    H = sample_realization(flat_scattering(16, 2, 1), 3)
    f = rand_unit(rng, 16)
    dense = sum(a * loop_shift_matrix(t % 16, n % 16, 16) for t, n, a in zip(H.taus, H.nus, H.amplitudes))
    assert np.allclose(H.operator(), dense, atol=1e-13)
    assert np.allclose(H.apply(f), dense @ f, atol=1e-13)


def test_channel_matrix_identity_channel(rng):
    Lat = Lattice(4, 4, 16)
    H = ChannelRealization(16, np.array([0]), np.array([0]), np.array([1.0 + 0j]))
    g, y = cp_ofdm_pulses(16, 4, 0)
    for m in [(0, 0), (2, 3)]:
        assert abs(channel_matrix_element(False, H, g, y, Lat, m, m) - 1) < 1e-14


def test_channel_matrix_dense_oracle(rng):
    L = 16
    Lat = Lattice(4, 8, L)
    H = sample_realization(flat_scattering(L, 2, 1), 11)
    g = Pulse(rand_unit(rng, L))
    y = Pulse(rand_unit(rng, L))
    Hd = H.operator()
    for m, n in [((0, 0), (0, 0)), ((1, 1), (3, 0)), ((2, 0), (1, 1))]:
        gm = loop_shift_matrix(m[0] * 4, m[1] * 8, L) @ g.samples
        yn = loop_shift_matrix(n[0] * 4, n[1] * 8, L) @ y.samples
        ref = np.vdot(gm, Hd @ yn)
        assert abs(channel_matrix_element(False, H, g, y, Lat, m, n) - ref) < 1e-12
        k = (n[0] + n[1] - m[0] - m[1]) % 4
        assert abs(channel_matrix_element(True, H, g, y, Lat, m, n) - (1j ** k * ref).real) < 1e-12
    with pytest.raises(ValueError):
        channel_matrix_element(False, H, Pulse(rand_unit(rng, 8)), y, Lat, (0, 0), (0, 0))


def test_cp_ofdm_diagonalizes_time_invariant_channel(rng):
    L, Tu, Tcp = 32, 8, 2
    Lat = Lattice(Tu + Tcp if L % (Tu + Tcp) == 0 else 16, L // Tu, L)
    g, y = cp_ofdm_pulses(L, Tu, Tcp)
    h = rng.standard_normal(Tcp + 1) + 1j * rng.standard_normal(Tcp + 1)
    H = time_invariant_realization(L, h)
    for m2 in range(Tu):
        for n2 in range(Tu):
            v = channel_matrix_element(False, H, g, y, Lat, (0, m2), (0, n2))
            if m2 == n2:
                hh = sum(h[k] * np.exp(-2j * np.pi * k * m2 * (L // Tu) / L) for k in range(Tcp + 1))
                assert abs(v - math.sqrt(Tu / (Tu + Tcp)) * hh) < 1e-12
            else:
                assert abs(v) < 1e-12


def test_lattice_indices_order():
    Lat = Lattice(4, 8, 16)
    idx = lattice_indices(Lat)
    assert np.array_equal(idx * [4, 8], Lat.points())
