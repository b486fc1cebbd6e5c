"""Alternating eigenvector iterations for gain and SINR, plus closed-form design rules."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .channel import ScatteringFunction, mean_shift, scattering_moments
from .cpmaps import SystemConfig, apply_A, apply_A_adjoint, apply_B, gain, projector
from .frames import orthogonalize
from .tfcore import Lattice, Pulse, _samples, canonical_phase, from_diagonals, gaussian_pulse

log = logging.getLogger(__name__)

METHODS = ("sinr_opt", "gain_opt", "gain_lower_bound", "tightened_gain_opt",
           "matched_gaussian", "iota", "rectangular")

DEFAULT_DELTA = 1e-8
DEFAULT_MAX_ITER = 50
GAP_TOL = 1e-12


class SolverError(RuntimeError):
    """Numerical failure inside an optimization run."""


@dataclass
class IterationTrace:
    objective_values: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    delta: float = DEFAULT_DELTA
    degenerate: bool = False

    def is_monotone(self, slack: float = 1e-12) -> bool:
        v = self.objective_values
        return all(b >= a - slack * max(1.0, abs(a)) for a, b in zip(v, v[1:]))


@dataclass
class DesignResult:
    g: Pulse
    gamma: Pulse
    trace: IterationTrace
    method: str

    @property
    def objective(self) -> float:
        return self.trace.objective_values[-1] if self.trace.objective_values else math.nan

    def metadata(self) -> dict:
        return {
            "method": self.method,
            "objective": self.objective,
            "iterations": self.trace.iterations,
            "converged": self.trace.converged,
            "objective_values": list(self.trace.objective_values),
            "delta": self.trace.delta,
            "degenerate": self.trace.degenerate,
        }


def _top_eigvec(M: np.ndarray, D: np.ndarray | None = None,
                prev: np.ndarray | None = None) -> tuple[np.ndarray, float, bool]:
    """Top (generalized) eigenvector of Hermitian ``M`` (w.r.t. positive definite ``D``).

    A top eigenspace with gap below ``GAP_TOL`` is resolved by projecting the
    previous iterate onto it, falling back to the lowest-index basis vector
    with a nonzero projection. Returns ``(unit vector, eigenvalue, degenerate)``.
    """
    L = M.shape[0]
    w, V = scipy.linalg.eigh(M, D, subset_by_index=[L - 2, L - 1])
    lam = float(w[-1])
    if w[-1] - w[-2] >= GAP_TOL * max(1.0, abs(lam)):
        v = V[:, -1]
        return canonical_phase(v / np.linalg.norm(v)), lam, False

    w, V = scipy.linalg.eigh(M, D)
    top = V[:, w >= w[-1] - GAP_TOL * max(1.0, abs(w[-1]))]
    metric = np.eye(L) if D is None else D
    v = None
    if prev is not None:
        cand = top @ (top.conj().T @ (metric @ prev))
        if np.linalg.norm(cand) > 1e-8:
            v = cand
    if v is None:
        for k in range(L):
            cand = top @ top[k].conj()
            if np.linalg.norm(cand) > 1e-8:
                v = cand
                break
    return canonical_phase(v / np.linalg.norm(v)), lam, True


def _converged(new: float, old: float, delta: float) -> bool:
    return new - old <= delta * max(abs(old), 1e-300)


def gain_optimize(cfg: SystemConfig, gamma0, delta: float = DEFAULT_DELTA,
                  max_iter: int = DEFAULT_MAX_ITER) -> DesignResult:
    """Alternate ``g = top eigvec A(Gamma)`` and ``gamma = top eigvec Ã(G)``.

    Stops once the relative gain increase drops to ``delta`` or after ``max_iter`` rounds.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    y = _samples(gamma0)
    if abs(np.linalg.norm(y) - 1.0) > 1e-10:
        raise ValueError("initial pulse must have unit norm")
    C = cfg.C
    trace = IterationTrace(delta=delta)
    g, val, deg = _top_eigvec(apply_A(C, projector(y)), prev=y)
    trace.degenerate |= deg
    trace.objective_values.append(val)
    for it in range(1, max_iter + 1):
        y, _, deg1 = _top_eigvec(apply_A_adjoint(C, projector(g)), prev=y)
        g, new, deg2 = _top_eigvec(apply_A(C, projector(y)), prev=g)
        trace.degenerate |= deg1 or deg2
        trace.objective_values.append(new)
        trace.iterations = it
        if _converged(new, val, delta):
            trace.converged = True
            break
        val = new
    return DesignResult(Pulse(g, "gain-opt-rx", normalize=True),
                        Pulse(y, "gain-opt-tx", normalize=True), trace, "gain_opt")


def _D(cfg: SystemConfig, AX: np.ndarray) -> np.ndarray:
    return cfg.sigma2 * np.eye(cfg.L) + apply_B(cfg.Lat, AX)


def _D_adjoint(cfg: SystemConfig, Y: np.ndarray) -> np.ndarray:
    return cfg.sigma2 * np.eye(cfg.L) + apply_A_adjoint(cfg.C, apply_B(cfg.Lat, Y))


def _gen_top(M, D, prev, it: int, side: str):
    try:
        return _top_eigvec(M, D, prev)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"generalized eigensolver failed at iteration {it} ({side}): {exc}") from exc


def sinr_optimize(cfg: SystemConfig, gamma0, delta: float = DEFAULT_DELTA,
                  max_iter: int = DEFAULT_MAX_ITER) -> DesignResult:
    """Alternate generalized eigenvectors of ``(A(X), D(X))`` and ``(Ã(Y), D̃(Y))``.

    ``D(X) = sigma2 I + B(A(X))`` and ``D̃(Y) = sigma2 I + Ã(B(Y))``; each
    half-step maximizes the SINR over one pulse with the other fixed, so the
    objective sequence never decreases.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if cfg.sigma2 <= 0:
        raise ValueError("SINR optimization requires sigma2 > 0")
    y = _samples(gamma0)
    if abs(np.linalg.norm(y) - 1.0) > 1e-10:
        raise ValueError("initial pulse must have unit norm")
    C = cfg.C
    trace = IterationTrace(delta=delta)

    AX = apply_A(C, projector(y))
    g, val, deg = _gen_top(AX, _D(cfg, AX), y, 0, "receive")
    trace.degenerate |= deg
    trace.objective_values.append(val)
    for it in range(1, max_iter + 1):
        G = projector(g)
        y, _, deg1 = _gen_top(apply_A_adjoint(C, G), _D_adjoint(cfg, G), y, it, "transmit")
        AX = apply_A(C, projector(y))
        g, new, deg2 = _gen_top(AX, _D(cfg, AX), g, it, "receive")
        trace.degenerate |= deg1 or deg2
        trace.objective_values.append(new)
        trace.iterations = it
        log.debug("sinr iteration %d: %.12g", it, new)
        if _converged(new, val, delta):
            trace.converged = True
            break
        val = new
    return DesignResult(Pulse(g, "sinr-opt-rx", normalize=True),
                        Pulse(y, "sinr-opt-tx", normalize=True), trace, "sinr_opt")


def averaged_shift_operator(C: ScatteringFunction) -> np.ndarray:
    """Dense ``sum_mu C(mu) S_mu``."""
    L = C.L
    # diagonal d of S_(d, nu) carries e^{i 2 pi nu m / L}
    Q = L * np.fft.ifft(C.grid(), axis=1)
    return from_diagonals(Q.T.copy())


def gain_lower_bound_design(cfg: SystemConfig) -> DesignResult:
    """Top singular pair of the averaged shift operator; objective ``|<g, L gamma>|^2``."""
    Lop = averaged_shift_operator(cfg.C)
    U, s, Vh = np.linalg.svd(Lop)
    g = canonical_phase(U[:, 0])
    y = canonical_phase(Vh[0].conj())
    bound = float(abs(np.vdot(g, Lop @ y)) ** 2)
    trace = IterationTrace([bound], iterations=0, converged=True, delta=0.0)
    return DesignResult(Pulse(g, "lower-bound-rx", normalize=True),
                        Pulse(y, "lower-bound-tx", normalize=True), trace, "gain_lower_bound")


def match_pulse_scale(C: ScatteringFunction) -> float:
    """sigma_t/sigma_f = sqrt(C_t / C_f) from the centered scattering moments.

    Returns ``math.inf`` for channels without Doppler spread and ``0.0`` for
    channels without delay spread.
    """
    ct, cf = scattering_moments(C, centered=True)
    if cf == 0.0:
        if ct == 0.0:
            raise ValueError("scattering function has no spread; scale is undefined")
        return math.inf
    return math.sqrt(ct / cf)


def _admissible(L: int | None, lo: int = 1) -> list[int]:
    top = L if L is not None else 1 << 30
    out, n = [], 1
    while n <= top:
        if n >= lo and (L is None or L % n == 0):
            out.append(n)
        n *= 2
    return out


def match_grid(W: float, epsilon: float, tau_d: float, B_D: float, L: int | None = None,
               candidates: list[int] | None = None) -> int:
    """Number of subcarriers ``N = W sqrt(epsilon tau_d / (2 B_D))``, rounded to a power of two.

    Rounding is to the nearest power of two in log scale, restricted to
    divisors of ``L`` when given.
    """
    if min(W, epsilon, tau_d) <= 0 or B_D < 0:
        raise ValueError("match_grid needs positive W, epsilon, tau_d and nonnegative B_D")
    cands = candidates if candidates is not None else _admissible(L)
    if not cands:
        raise ValueError("no admissible subcarrier count")
    if B_D == 0:
        return max(cands)
    x = W * math.sqrt(epsilon * tau_d / (2.0 * B_D))
    return min(cands, key=lambda n: (abs(math.log2(n) - math.log2(x)), n))


def match_grid_discrete(L: int, epsilon: float, tau_d: int, B_D: int) -> int:
    """Grid matching for a discrete causal box ``[0, tau_d] x [-B_D, B_D]``.

    Uses the support widths ``tau_d + 1`` samples and ``(2 B_D + 1) / L``
    cycles/sample, and only subcarrier counts that give a valid lattice.
    """
    cands = [n for n in _admissible(L) if _lattice_ok(L, epsilon, n)]
    return match_grid(1.0, epsilon, tau_d + 1, (2 * B_D + 1) / (2.0 * L), candidates=cands)


def _lattice_ok(L: int, epsilon: float, N: int) -> bool:
    if L % N:
        return False
    a = N / epsilon
    return a >= 1 and float(a).is_integer() and L % int(a) == 0


def lattice_for(L: int, epsilon: float, N: int) -> Lattice:
    """Lattice with ``N`` subcarriers: ``b = L/N`` bins, ``a = L/(epsilon b)`` samples."""
    if not _lattice_ok(L, epsilon, N):
        raise ValueError(f"no valid lattice for L={L}, epsilon={epsilon}, N={N}")
    return Lattice(int(round(N / epsilon)), L // N, L)


def matched_gaussian(cfg: SystemConfig, center: float | None = None) -> tuple[Pulse, Pulse]:
    """Channel-matched Gaussian pair; the receive pulse is offset by the mean delay.

    Degenerate scales (no delay or no Doppler spread) are clipped to an
    almost time- or frequency-concentrated pulse.
    """
    L = cfg.L
    try:
        s = match_pulse_scale(cfg.C)
    except ValueError:
        s = cfg.Lat.a * L / cfg.Lat.b
    s = min(max(s, 1e-3), 1e3 * L * L)
    c = L // 2 if center is None else center
    tau_bar, _ = mean_shift(cfg.C)
    gamma = gaussian_pulse(L, s, center=c, label="gaussian-tx")
    g = gaussian_pulse(L, s, center=c + tau_bar, label="gaussian-rx")
    return g, gamma


def receive_for(cfg: SystemConfig, gamma) -> Pulse:
    """Gain-maximizing receive pulse for a fixed transmit pulse."""
    v, _, _ = _top_eigvec(apply_A(cfg.C, projector(gamma)), prev=_samples(gamma))
    return Pulse(v, "rx", normalize=True)


def tighten_design(result: DesignResult, cfg: SystemConfig) -> DesignResult:
    """Orthogonalize the transmit pulse on ``cfg.Lat`` and re-derive the receive pulse."""
    y = orthogonalize(result.gamma, cfg.Lat, label="tightened-tx")
    g = receive_for(cfg, y).with_label("tightened-rx")
    trace = IterationTrace([gain(cfg, g, y)], result.trace.iterations,
                           result.trace.converged, result.trace.delta, result.trace.degenerate)
    return DesignResult(g, y, trace, "tightened_gain_opt")
