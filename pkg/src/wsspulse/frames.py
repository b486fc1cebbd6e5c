"""Gabor frame operator, frame/Bessel bounds and tight-window orthogonalization."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .tfcore import Lattice, Pulse, _samples, canonical_phase, conjugation_sum, tf_shift

EIG_FLOOR = 1e-12
TIGHT_TOL = 1e-9


class FrameError(ValueError):
    """The Gabor system is numerically not a frame where one is required."""


@dataclass(frozen=True)
class FrameReport:
    A: float
    B: float
    epsilon: float
    is_frame: bool
    is_tight: bool

    def to_json(self) -> dict:
        return asdict(self)


def frame_operator(gamma, Lat: Lattice) -> np.ndarray:
    """``sum_lambda (S_lambda gamma)(S_lambda gamma)^*`` over all points of the lattice subgroup."""
    y = _samples(gamma)
    if y.size != Lat.L:
        raise ValueError(f"dimension mismatch: pulse length {y.size}, lattice L={Lat.L}")
    S = conjugation_sum(np.outer(y, y.conj()), Lat.indicator())
    return 0.5 * (S + S.conj().T)


def frame_bounds(gamma, Lat: Lattice) -> FrameReport:
    ev = np.linalg.eigvalsh(frame_operator(gamma, Lat))
    B = float(ev[-1])
    A = float(ev[0])
    is_frame = A > EIG_FLOOR * B
    if not is_frame:
        A = 0.0
    is_tight = is_frame and (B / A - 1.0) < TIGHT_TOL
    return FrameReport(A=A, B=B, epsilon=Lat.epsilon, is_frame=is_frame, is_tight=is_tight)


def adjoint_lattice(Lat: Lattice) -> Lattice:
    """Ron-Shen adjoint ``(L/b, L/a)``; its efficiency is ``1/epsilon``."""
    if Lat.L % Lat.b or Lat.L % Lat.a:
        raise ValueError("adjoint lattice is not integral")
    return Lattice(Lat.L // Lat.b, Lat.L // Lat.a, Lat.L)


def inverse_sqrt(S: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """``S^{-1/2}`` of a Hermitian positive definite matrix.

    Raises :class:`FrameError` if any eigenvalue is below ``floor * lambda_max``.
    """
    w, V = np.linalg.eigh(0.5 * (S + S.conj().T))
    if w[-1] <= 0 or w[0] < floor * w[-1]:
        raise FrameError(f"frame operator is singular: eigenvalues in [{w[0]:.3e}, {w[-1]:.3e}]")
    return (V / np.sqrt(w)) @ V.conj().T


def orthogonalize(gamma, Lat: Lattice, label: str | None = None) -> Pulse:
    """Closest tight window (epsilon >= 1) or orthonormal window (epsilon < 1).

    For ``epsilon >= 1`` returns the normalized ``S_{gamma,Lat}^{-1/2} gamma``;
    otherwise ``S_{gamma,Lat°}^{-1/2} gamma`` on the adjoint lattice, whose
    translates over ``Lat`` are orthonormal.
    """
    y = _samples(gamma)
    work = Lat if Lat.epsilon >= 1.0 else adjoint_lattice(Lat)
    try:
        Sm = inverse_sqrt(frame_operator(y, work))
    except FrameError as exc:
        raise FrameError(f"{exc} (pulse {getattr(gamma, 'label', '')!r}, "
                         f"lattice a={work.a}, b={work.b}, L={work.L})") from None
    out = Sm @ y
    out = canonical_phase(out / np.linalg.norm(out))
    base = getattr(gamma, "label", "") or "pulse"
    return Pulse(out, label=label or f"{base}-orth", normalize=True)


def gram_matrix(gamma, Lat: Lattice) -> np.ndarray:
    """``<S_lambda gamma, S_kappa gamma>`` over all lattice points."""
    y = _samples(gamma)
    V = np.stack([tf_shift(p, y) for p in Lat.points()], axis=1)
    return V.conj().T @ V


def closeness(gamma, gamma_tight) -> float:
    """``min_phi || e^{i phi} gamma_tight - gamma ||_2`` for unit vectors."""
    x, y = _samples(gamma), _samples(gamma_tight)
    if x.size != y.size:
        raise ValueError("dimension mismatch")
    ip = abs(np.vdot(y, x))
    d2 = np.vdot(x, x).real + np.vdot(y, y).real - 2.0 * ip
    return math.sqrt(max(d2, 0.0))
