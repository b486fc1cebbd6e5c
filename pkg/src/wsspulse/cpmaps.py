"""CP maps of the WSSUS channel and the averaged gain / interference / SINR functionals.

With ``G``, ``Gamma`` the projectors onto ``g`` and ``gamma``:

    gain         = Tr(G A(Gamma))       = sum_mu C(mu) |<g, S_mu gamma>|^2
    interference = Tr(G B(A(Gamma)))    = sum_{lambda != 0} sum_mu C(mu) |<g, S_{lambda+mu} gamma>|^2

The real (OQAM) scheme halves gain, interference and noise alike, so the
same formulas are used on its density-2 lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ScatteringFunction
from .tfcore import Lattice, _samples, ambiguity_surface, conjugation_sum, reflect_grid

SCHEMES = ("complex", "real")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x == math.inf:
        return math.inf
    if x <= 0:
        return -math.inf
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemConfig:
    C: ScatteringFunction
    Lat: Lattice
    sigma2: float
    scheme: str = "complex"

    def __post_init__(self):
        if self.sigma2 < 0 or not np.isfinite(self.sigma2):
            raise ValueError(f"noise power must be finite and >= 0, got {self.sigma2!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.C.L != self.Lat.L:
            raise ValueError(f"scattering function L={self.C.L} differs from lattice L={self.Lat.L}")

    @classmethod
    def from_db(cls, C, Lat, sigma2_db: float, scheme: str = "complex") -> "SystemConfig":
        return cls(C, Lat, db_to_linear(sigma2_db), scheme)

    @property
    def L(self) -> int:
        return self.Lat.L


def _square(X, L: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.complex128)
    if X.shape != (L, L):
        raise ValueError(f"dimension mismatch: expected {L}x{L}, got {X.shape}")
    return X


def _herm(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def apply_A(C: ScatteringFunction, X) -> np.ndarray:
    """``sum_mu C(mu) S_mu X S_mu^*``."""
    return _herm(conjugation_sum(_square(X, C.L), C.grid()))


def apply_A_adjoint(C: ScatteringFunction, Y) -> np.ndarray:
    """``sum_mu C(mu) S_mu^* Y S_mu``."""
    return _herm(conjugation_sum(_square(Y, C.L), reflect_grid(C.grid())))


def apply_B(Lat: Lattice, X) -> np.ndarray:
    """``sum_{lambda != 0} S_lambda X S_lambda^*`` over the lattice subgroup."""
    X = _square(X, Lat.L)
    return _herm(conjugation_sum(X, Lat.indicator()) - X)


def projector(v) -> np.ndarray:
    v = _samples(v)
    return np.outer(v, v.conj())


# --- ambiguity form (default) -----------------------------------------------

def _correlated_surface(cfg: SystemConfig, g, gamma) -> np.ndarray:
    """``Z(lambda) = sum_mu C(mu) |A_{g gamma}(lambda + mu)|^2`` on Z_L^2."""
    W = np.abs(ambiguity_surface(g, gamma)) ** 2
    Cg = cfg.C.grid()
    Z = np.fft.ifft2(np.fft.fft2(W) * np.conj(np.fft.fft2(Cg))).real
    return Z


def gain(cfg: SystemConfig, g, gamma) -> float:
    """Averaged channel gain, ``sum_mu C(mu) |<g, S_mu gamma>|^2``."""
    A = ambiguity_surface(g, gamma)
    C = cfg.C
    vals = np.abs(A[C.taus % C.L, C.nus % C.L]) ** 2
    return float(np.dot(C.weights, vals))


def interference(cfg: SystemConfig, g, gamma) -> float:
    """Averaged interference from all other lattice points."""
    Z = _correlated_surface(cfg, g, gamma)
    Lat = cfg.Lat
    total = Z[:: Lat.a, :: Lat.b].sum() - Z[0, 0]
    return float(max(total, 0.0))


def gain_interference(cfg: SystemConfig, g, gamma) -> tuple[float, float]:
    Z = _correlated_surface(cfg, g, gamma)
    Lat = cfg.Lat
    e_b = Z[:: Lat.a, :: Lat.b].sum() - Z[0, 0]
    return gain(cfg, g, gamma), float(max(e_b, 0.0))


# --- trace form -------------------------------------------------------------

def gain_trace(cfg: SystemConfig, g, gamma) -> float:
    """``Tr(G A(Gamma))``."""
    return float(np.trace(projector(g) @ apply_A(cfg.C, projector(gamma))).real)


def interference_trace(cfg: SystemConfig, g, gamma) -> float:
    """``Tr(G B(A(Gamma)))``."""
    M = apply_B(cfg.Lat, apply_A(cfg.C, projector(gamma)))
    return float(np.trace(projector(g) @ M).real)


def sinr_from(gain_value: float, interference_value: float, sigma2: float) -> float:
    den = sigma2 + interference_value
    if den <= 0:
        # sigma2 = 0 with no interference
        return math.inf
    return gain_value / den


def sinr(cfg: SystemConfig, g, gamma) -> float:
    """Averaged SINR ``gain / (sigma2 + interference)`` (linear)."""
    a, b = gain_interference(cfg, g, gamma)
    return sinr_from(a, b, cfg.sigma2)


def sinr_db(cfg: SystemConfig, g, gamma) -> float:
    return linear_to_db(sinr(cfg, g, gamma))


@dataclass(frozen=True)
class Evaluation:
    gain: float
    interference: float
    sinr: float

    @property
    def sinr_db(self) -> float:
        return linear_to_db(self.sinr)


def evaluate(cfg: SystemConfig, g, gamma) -> Evaluation:
    a, b = gain_interference(cfg, g, gamma)
    return Evaluation(a, b, sinr_from(a, b, cfg.sigma2))
