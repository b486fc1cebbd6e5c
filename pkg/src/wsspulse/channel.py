"""Discrete WSSUS scattering functions, channel realizations and channel-matrix elements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tfcore import Lattice, Pulse, TFShiftIndex, _samples, tf_shift


@dataclass(frozen=True)
class ScatteringFunction:
    """l1-normalized nonnegative weights on delay-Doppler atoms.

    ``taus`` and ``nus`` are signed integers (delay in samples, Doppler in
    bins); they are reduced mod ``L`` only when shifts are applied.
    """

    L: int
    taus: np.ndarray
    nus: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=np.int64).ravel()
        nus = np.asarray(self.nus, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if not (taus.size == nus.size == w.size) or w.size == 0:
            raise ValueError("atoms need matching, nonempty tau/nu/weight arrays")
        if np.any(w < 0):
            raise ValueError("scattering weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"scattering weights must sum to 1, got {w.sum()!r}")
        # fixed atom order keeps sums bit-stable
        order = np.lexsort((nus, taus))
        for name, arr in (("taus", taus[order]), ("nus", nus[order]), ("weights", w[order])):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        keys = np.stack([self.taus % self.L, self.nus % self.L], axis=1)
        if np.unique(keys, axis=0).shape[0] != keys.shape[0]:
            raise ValueError("duplicate atoms after reduction mod L")

    @classmethod
    def from_atoms(cls, L: int, atoms, normalize: bool = False) -> "ScatteringFunction":
        """Build from ``(tau, nu, weight)`` triples."""
        atoms = list(atoms)
        taus = [int(a[0]) for a in atoms]
        nus = [int(a[1]) for a in atoms]
        w = np.array([float(a[2]) for a in atoms])
        if normalize:
            w = w / w.sum()
        return cls(L, np.array(taus), np.array(nus), w)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def tau_d(self) -> int:
        return int(self.taus.max())

    @property
    def B_D(self) -> int:
        return int(np.abs(self.nus).max())

    def support(self) -> list[tuple[TFShiftIndex, float]]:
        return [(TFShiftIndex(int(t), int(n)), float(w))
                for t, n, w in zip(self.taus, self.nus, self.weights)]

    def grid(self) -> np.ndarray:
        """Dense ``L x L`` weight grid indexed ``[tau mod L, nu mod L]``."""
        G = np.zeros((self.L, self.L))
        np.add.at(G, (self.taus % self.L, self.nus % self.L), self.weights)
        return G

    def reflected(self) -> "ScatteringFunction":
        """``C'(mu) = C(-mu)``; delays are no longer causal."""
        return ScatteringFunction(self.L, -self.taus, -self.nus, self.weights)

    def is_symmetric(self) -> bool:
        G = self.grid()
        R = np.roll(G[::-1, ::-1], 1, axis=(0, 1))
        return bool(np.allclose(G, R, atol=1e-15))


def flat_scattering(L: int, tau_d: int, B_D: int) -> ScatteringFunction:
    """Uniform weight on the causal box ``[0, tau_d] x [-B_D, B_D]``."""
    tau_d, B_D = int(tau_d), int(B_D)
    if tau_d < 0 or B_D < 0:
        raise ValueError("tau_d and B_D must be nonnegative")
    if tau_d >= L or 2 * B_D + 1 > L:
        raise ValueError(f"support {tau_d + 1} x {2 * B_D + 1} exceeds the {L} x {L} grid")
    t, n = np.meshgrid(np.arange(tau_d + 1), np.arange(-B_D, B_D + 1), indexing="ij")
    P = t.size
    return ScatteringFunction(L, t.ravel(), n.ravel(), np.full(P, 1.0 / P))


def scattering_moments(C: ScatteringFunction, centered: bool = False) -> tuple[float, float]:
    """Second moments ``(C_t, C_f) = (sum C tau^2, sum C nu^2)``.

    ``tau`` in samples, ``nu = nu_bins / L`` in cycles/sample. With
    ``centered=True`` the moments are taken about the mean delay/Doppler,
    which is what pulse matching needs for causal channels.
    """
    tau = C.taus.astype(float)
    nu = C.nus.astype(float) / C.L
    w = C.weights
    if centered:
        tau = tau - np.dot(w, tau)
        nu = nu - np.dot(w, nu)
    return float(np.dot(w, tau ** 2)), float(np.dot(w, nu ** 2))


def mean_shift(C: ScatteringFunction) -> tuple[float, float]:
    """Mean delay (samples) and mean Doppler (bins)."""
    return float(np.dot(C.weights, C.taus)), float(np.dot(C.weights, C.nus))


@dataclass(frozen=True)
class ChannelRealization:
    L: int
    taus: np.ndarray
    nus: np.ndarray
    amplitudes: np.ndarray
    seed: int | None = None

    @property
    def spread(self) -> list[tuple[TFShiftIndex, complex]]:
        return [(TFShiftIndex(int(t), int(n)), complex(a))
                for t, n, a in zip(self.taus, self.nus, self.amplitudes)]

    def operator(self) -> np.ndarray:
        """Dense ``L x L`` channel matrix ``sum_mu Sigma(mu) S_mu``."""
        H = np.zeros((self.L, self.L), dtype=np.complex128)
        m = np.arange(self.L)
        for t, n, a in zip(self.taus, self.nus, self.amplitudes):
            H[m, (m - t) % self.L] += a * np.exp(2j * np.pi * n * m / self.L)
        return H

    def apply(self, f) -> np.ndarray:
        x = _samples(f)
        out = np.zeros(self.L, dtype=np.complex128)
        for t, n, a in zip(self.taus, self.nus, self.amplitudes):
            out += a * tf_shift((t, n), x)
        return out


def sample_amplitudes(C: ScatteringFunction, rng: np.random.Generator, K: int) -> np.ndarray:
    """``K x P`` circular-symmetric complex Gaussian amplitudes with variance ``C(mu)``."""
    scale = np.sqrt(C.weights / 2.0)
    return (rng.standard_normal((K, C.size)) + 1j * rng.standard_normal((K, C.size))) * scale


def sample_realization(C: ScatteringFunction, seed: int) -> ChannelRealization:
    rng = np.random.default_rng(seed)
    amps = sample_amplitudes(C, rng, 1)[0]
    return ChannelRealization(C.L, C.taus.copy(), C.nus.copy(), amps, seed)


def time_invariant_realization(L: int, h, seed: int | None = None) -> ChannelRealization:
    """Realization with impulse response ``h`` on delays ``0..len(h)-1`` and no Doppler."""
    h = np.asarray(h, dtype=np.complex128)
    return ChannelRealization(L, np.arange(h.size), np.zeros(h.size, dtype=np.int64), h, seed)


def _lattice_point(Lat: Lattice, idx) -> tuple[int, int]:
    return (int(idx[0]) * Lat.a) % Lat.L, (int(idx[1]) * Lat.b) % Lat.L


def channel_matrix_element(real_scheme: bool, H: ChannelRealization, g: Pulse, gamma: Pulse,
                           Lat: Lattice, m, n):
    """``<S_{Lambda m} g, H S_{Lambda n} gamma>``; real part of ``i^{n-m}`` times it for OQAM."""
    gs, ys = _samples(g), _samples(gamma)
    if gs.size != H.L or ys.size != H.L or Lat.L != H.L:
        raise ValueError("dimension mismatch between pulses, lattice and channel")
    gm = tf_shift(_lattice_point(Lat, m), gs)
    yn = tf_shift(_lattice_point(Lat, n), ys)
    val = complex(np.vdot(gm, H.apply(yn)))
    if not real_scheme:
        return val
    k = (int(n[0]) + int(n[1]) - int(m[0]) - int(m[1])) % 4
    return float((1j ** k * val).real)


def lattice_indices(Lat: Lattice) -> np.ndarray:
    """All lattice index pairs ``(n1, n2)`` in the same order as ``Lat.points()``."""
    n1, n2 = np.meshgrid(np.arange(Lat.shape[0]), np.arange(Lat.shape[1]), indexing="ij")
    return np.stack([n1.ravel(), n2.ravel()], axis=1)
