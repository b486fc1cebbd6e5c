"""Discrete time-frequency shifts, pulses and ambiguity functions on C^L.

Conventions used throughout the package:

* ``(S_mu f)[m] = exp(i 2 pi mu_f m / L) f[(m - mu_t) mod L]``
* ``<x, y> = sum(conj(x) * y)``
* time is centered at sample ``L // 2`` for moments and pulse placement
* a Gaussian "spread ratio" is sigma_t / sigma_f in continuum units with unit
  sampling rate, i.e. sigma_t in samples and sigma_f in cycles/sample.
  The self-dual discrete Gaussian has ratio ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class Pulse:
    """Unit-norm complex pulse of length ``L``."""

    __slots__ = ("samples", "label")

    def __init__(self, samples, label: str = "", normalize: bool = False):
        x = np.asarray(samples, dtype=np.complex128).ravel().copy()
        if x.size < 2:
            raise ValueError("pulse length must be at least 2")
        nrm = np.linalg.norm(x)
        if normalize:
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            x /= nrm
        elif abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"pulse must have unit norm, got {nrm!r}")
        x.setflags(write=False)
        self.samples = x
        self.label = label

    @property
    def L(self) -> int:
        return self.samples.size

    def __len__(self) -> int:
        return self.samples.size

    def __repr__(self) -> str:
        return f"Pulse(L={self.L}, label={self.label!r})"

    def with_label(self, label: str) -> "Pulse":
        return Pulse(self.samples, label)


class TFShiftIndex(NamedTuple):
    time: int
    freq: int

    def reduced(self, L: int) -> "TFShiftIndex":
        return TFShiftIndex(int(self.time) % L, int(self.freq) % L)


@dataclass(frozen=True)
class Lattice:
    """Separable lattice ``a Z_L x b Z_L`` (time step ``a`` samples, frequency step ``b`` bins)."""

    a: int
    b: int
    L: int
    _points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a, b, L = int(self.a), int(self.b), int(self.L)
        if a <= 0 or b <= 0 or L < 2:
            raise ValueError(f"invalid lattice parameters a={a}, b={b}, L={L}")
        if L % a or L % b:
            raise ValueError(f"lattice steps must divide L: a={a}, b={b}, L={L}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "L", L)
        n1, n2 = np.meshgrid(np.arange(L // a), np.arange(L // b), indexing="ij")
        pts = np.stack([n1.ravel() * a, n2.ravel() * b], axis=1)
        pts.setflags(write=False)
        object.__setattr__(self, "_points", pts)

    @property
    def epsilon(self) -> float:
        return self.L / (self.a * self.b)

    @property
    def shape(self) -> tuple[int, int]:
        """Number of lattice points along (time, frequency)."""
        return self.L // self.a, self.L // self.b

    @property
    def size(self) -> int:
        return (self.L // self.a) * (self.L // self.b)

    def points(self) -> np.ndarray:
        """All lattice points as an ``(size, 2)`` integer array, origin first."""
        return self._points

    def indicator(self) -> np.ndarray:
        """``L x L`` 0/1 grid marking lattice points, indexed ``[time, freq]``."""
        grid = np.zeros((self.L, self.L))
        grid[:: self.a, :: self.b] = 1.0
        return grid


def _check_len(f: np.ndarray, L: int) -> None:
    if f.shape[-1] != L:
        raise ValueError(f"dimension mismatch: expected length {L}, got {f.shape[-1]}")


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, Pulse) else np.asarray(x, dtype=np.complex128)


def signed(k, L: int):
    """Map indices mod L to the signed range [-L/2, L/2)."""
    return ((np.asarray(k) + L // 2) % L) - L // 2


def tf_shift(mu, f) -> np.ndarray:
    """Apply the time-frequency shift ``S_mu`` to ``f`` (last axis)."""
    x = _samples(f)
    L = x.shape[-1]
    tau, nu = int(mu[0]) % L, int(mu[1]) % L
    m = np.arange(L)
    return np.exp(2j * np.pi * nu * m / L) * np.roll(x, tau, axis=-1)


def shift_matrix(mu, L: int) -> np.ndarray:
    """Dense ``L x L`` matrix of ``S_mu``: ``(S_mu)_{mn} = delta_{m, n+tau} e^{i 2 pi nu m / L}``."""
    tau, nu = int(mu[0]) % L, int(mu[1]) % L
    S = np.zeros((L, L), dtype=np.complex128)
    m = np.arange(L)
    S[m, (m - tau) % L] = np.exp(2j * np.pi * nu * m / L)
    return S


def cross_ambiguity(g, gamma, mu) -> complex:
    """``<g, S_mu gamma>``."""
    gs, ys = _samples(g), _samples(gamma)
    _check_len(ys, gs.shape[-1])
    return complex(np.vdot(gs, tf_shift(mu, ys)))


def ambiguity_surface(g, gamma) -> np.ndarray:
    """All cross ambiguities on Z_L^2; ``grid[tau, nu] = <g, S_(tau,nu) gamma>``.

    Row ``tau`` is ``L * ifft(conj(g) * roll(gamma, tau))``.
    """
    gs, ys = _samples(g), _samples(gamma)
    L = gs.shape[-1]
    _check_len(ys, L)
    idx = (np.arange(L)[None, :] - np.arange(L)[:, None]) % L
    prod = np.conj(gs)[None, :] * ys[idx]
    return L * np.fft.ifft(prod, axis=1)


def fractional_shift(f, tau: float) -> np.ndarray:
    """Band-limited cyclic delay by a real number of samples.

    Coincides with ``tf_shift((tau, 0), f)`` for integer ``tau``. The Nyquist
    bin (even L) is delayed with a real factor so real inputs stay real.
    """
    x = _samples(f)
    L = x.shape[-1]
    k = np.fft.fftfreq(L, d=1.0 / L)
    phase = np.exp(-2j * np.pi * k * tau / L)
    if L % 2 == 0:
        phase[L // 2] = np.cos(np.pi * tau)
    out = np.fft.ifft(np.fft.fft(x) * phase)
    if not np.any(np.imag(x)):
        out = out.real.astype(np.complex128)
    return out


def canonical_phase(x: np.ndarray) -> np.ndarray:
    """Rotate ``x`` so that its largest-magnitude sample is real positive."""
    x = np.asarray(x, dtype=np.complex128)
    k = int(np.argmax(np.abs(x)))
    if abs(x[k]) == 0:
        return x.copy()
    out = x * (abs(x[k]) / x[k])
    out[k] = abs(x[k])
    return out


def gaussian_pulse(L: int, spread_ratio: float, center: float | None = None,
                   label: str = "gaussian") -> Pulse:
    """Periodized discrete Gaussian ``sum_k exp(-pi (m - c + kL)^2 / s)`` with ``s = spread_ratio``.

    ``spread_ratio`` is sigma_t/sigma_f (samples per cycle/sample); the
    continuum Gaussian ``exp(-pi t^2 / s)`` has exactly this ratio. ``s = L``
    gives the DFT-invariant pulse.
    """
    if not np.isfinite(spread_ratio) or spread_ratio <= 0:
        raise ValueError(f"spread ratio must be positive and finite, got {spread_ratio!r}")
    if L < 2:
        raise ValueError("pulse length must be at least 2")
    c = L // 2 if center is None else float(center)
    s = float(spread_ratio)
    # wrap terms until exp(-pi (kL - L)^2 / s) < 1e-16
    reach = math.sqrt(16 * math.log(10) * s / math.pi)
    t = np.arange(L) - c
    if s <= L * L:
        K = int(math.ceil(reach / L)) + 1
        k = np.arange(-K, K + 1)[:, None]
        x = np.exp(-math.pi * (t[None, :] + k * L) ** 2 / s).sum(axis=0)
    else:
        # Poisson dual: sum_j exp(-pi s j^2 / L^2) cos(2 pi j t / L), up to scale
        J = int(math.ceil(L * math.sqrt(16 * math.log(10) / (math.pi * s)))) + 1
        j = np.arange(1, J + 1)[:, None]
        x = 1.0 + 2.0 * (np.exp(-math.pi * s * j ** 2 / L ** 2)
                         * np.cos(2 * math.pi * j * t[None, :] / L)).sum(axis=0)
    if not np.any(x):
        # extreme concentration: nearest sample
        x[int(round(c)) % L] = 1.0
    return Pulse(x, label=label, normalize=True)


def cp_ofdm_pulses(L: int, Tu: int, Tcp: int) -> tuple[Pulse, Pulse]:
    """Rectangular cp-OFDM receive/transmit pair ``(g, gamma)``.

    ``gamma`` covers samples ``-Tcp .. Tu-1`` (cyclically), ``g`` covers ``0 .. Tu-1``.
    """
    Tu, Tcp = int(Tu), int(Tcp)
    if Tu < 1 or Tcp < 0:
        raise ValueError("need Tu >= 1 and Tcp >= 0")
    if Tu + Tcp > L:
        raise ValueError(f"window Tu+Tcp={Tu + Tcp} exceeds L={L}")
    g = np.zeros(L)
    g[:Tu] = 1.0 / math.sqrt(Tu)
    gamma = np.zeros(L)
    gamma[np.arange(-Tcp, Tu) % L] = 1.0 / math.sqrt(Tu + Tcp)
    return (Pulse(g, "cp-ofdm-rx", normalize=True),
            Pulse(gamma, "cp-ofdm-tx", normalize=True))


class Moments(NamedTuple):
    sigma_t2: float
    sigma_f2: float
    symmetric: bool


def _is_even_real(x: np.ndarray, c: int, tol: float = 1e-9) -> bool:
    L = x.size
    if np.max(np.abs(x.imag)) > tol * max(1.0, np.max(np.abs(x))):
        return False
    m = np.arange(L)
    return bool(np.allclose(x.real, x.real[(2 * c - m) % L], atol=tol))


def second_moments(g, gamma) -> Moments:
    """Normalized second moments ``<t^2 g, gamma>/<g, gamma>`` in time and frequency.

    ``sigma_t2`` is in samples^2 (centered at ``L // 2``), ``sigma_f2`` in
    bins^2 (signed bins of the unitary DFT). ``symmetric`` is False when a
    pulse is complex or not even about the center; the values are then only
    the real parts and should be treated as unreliable.
    """
    gs, ys = _samples(g), _samples(gamma)
    L = gs.size
    _check_len(ys, L)
    c = L // 2
    ip = np.vdot(gs, ys)
    if abs(ip) < 1e-14:
        raise ValueError("<g, gamma> vanishes; moments undefined")
    t = np.arange(L) - c
    st = np.vdot(t ** 2 * gs, ys) / ip
    # centered DFT: phases from the time center cancel in the inner product
    gh = np.fft.fft(np.roll(gs, -c)) / math.sqrt(L)
    yh = np.fft.fft(np.roll(ys, -c)) / math.sqrt(L)
    k = signed(np.arange(L), L)
    sf = np.vdot(k ** 2 * gh, yh) / ip
    sym = _is_even_real(gs, c) and _is_even_real(ys, c)
    return Moments(float(st.real), float(sf.real), sym)


def measured_spread_ratio(pulse) -> float:
    """sigma_t/sigma_f of a pulse in the continuum units of :func:`gaussian_pulse`."""
    mom = second_moments(pulse, pulse)
    L = _samples(pulse).size
    return math.sqrt(mom.sigma_t2) / (math.sqrt(mom.sigma_f2) / L)


def o2_ambiguity_approx(g, gamma, mu) -> float:
    """Second-order approximation of ``|A_{g gamma}(mu)|^2`` around the origin.

    ``<g,gamma>^2 [1 - 4 pi^2 (nu^2 sigma_t^2 + tau^2 sigma_f^2)]`` with ``tau``
    in samples and ``nu`` in cycles/sample (signed, reduced mod L).
    """
    gs = _samples(g)
    L = gs.size
    mom = second_moments(g, gamma)
    tau = float(signed(int(mu[0]), L))
    nu = float(signed(int(mu[1]), L)) / L
    ip = np.vdot(gs, _samples(gamma)).real
    sf2 = mom.sigma_f2 / L ** 2
    return float(ip ** 2 * (1.0 - 4 * math.pi ** 2 * (nu ** 2 * mom.sigma_t2 + tau ** 2 * sf2)))


# --- conjugation sums ---------------------------------------------------------
#
# A matrix M is stored by its cyclic diagonals D[m, d] = M[m, (m - d) mod L].
# Conjugation by S_(tau,nu) maps D[:, d] to exp(i2pi nu d/L) * roll(D[:, d], tau),
# so sum_mu W(mu) S_mu M S_mu^* is a per-column circular convolution along m.

def _diag_index(L: int) -> np.ndarray:
    m = np.arange(L)
    return (m[:, None] - m[None, :]) % L


def to_diagonals(M: np.ndarray) -> np.ndarray:
    L = M.shape[0]
    return M[np.arange(L)[:, None], _diag_index(L)]


def from_diagonals(D: np.ndarray) -> np.ndarray:
    L = D.shape[0]
    M = np.empty_like(D)
    M[np.arange(L)[:, None], _diag_index(L)] = D
    return M


def conjugation_sum(M: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_mu weights[mu] S_mu M S_mu^*`` for an ``L x L`` weight grid indexed ``[tau, nu]``."""
    M = np.asarray(M, dtype=np.complex128)
    L = M.shape[0]
    if M.shape != (L, L) or weights.shape != (L, L):
        raise ValueError("dimension mismatch in conjugation sum")
    taus = np.flatnonzero(np.any(weights != 0, axis=1))
    # kernel over (tau, d): sum_nu w[tau, nu] e^{i 2 pi nu d / L}
    D = to_diagonals(M)
    if taus.size <= 8:
        out = np.zeros_like(D)
        for tau in taus:
            q = L * np.fft.ifft(weights[tau])
            out += q[None, :] * np.roll(D, tau, axis=0)
    else:
        Q = L * np.fft.ifft(weights, axis=1)
        out = np.fft.ifft(np.fft.fft(D, axis=0) * np.fft.fft(Q, axis=0), axis=0)
    return from_diagonals(out)


def reflect_grid(weights: np.ndarray) -> np.ndarray:
    """``w'[mu] = w[-mu]`` on Z_L^2."""
    return np.roll(weights[::-1, ::-1], 1, axis=(0, 1))
