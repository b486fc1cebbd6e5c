"""Scatter-ratio sweeps over pulse families and Monte-Carlo checks of the averaged functionals."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .channel import ScatteringFunction, flat_scattering, lattice_indices, sample_amplitudes
from .cpmaps import SystemConfig, evaluate
from .frames import frame_bounds, orthogonalize
from .io import json_safe, write_json
from .optim import (METHODS, DesignResult, IterationTrace, gain_lower_bound_design, gain_optimize,
                    lattice_for, match_grid_discrete, matched_gaussian, sinr_optimize,
                    tighten_design)
from .tfcore import Lattice, _samples, cp_ofdm_pulses, tf_shift

log = logging.getLogger(__name__)

# (tau_d, B_D) rows of the reference sweep at L = 512; (tau_d+1)(2 B_D+1) is about 150
REFERENCE_ROWS = ((0, 74), (1, 37), (5, 12), (9, 7), (29, 2), (49, 1), (149, 0))
REFERENCE_L = 512
REFERENCE_P = 150

CSV_FIELDS = ("tau_d", "B_D", "N", "epsilon", "scheme", "family", "gain", "interference",
              "sinr_db", "bessel_bound", "iterations", "seed", "error")


@dataclass(frozen=True)
class SweepScenario:
    tau_d: int
    B_D: int
    N: int
    epsilon: float
    L: int = REFERENCE_L
    sigma2_db: float = -20.0

    def __post_init__(self):
        self.lattice()

    @property
    def P(self) -> int:
        return (self.tau_d + 1) * (2 * self.B_D + 1)

    @property
    def scheme(self) -> str:
        # density-2 lattices carry real (OQAM) symbols
        return "real" if self.epsilon == 2 else "complex"

    def lattice(self) -> Lattice:
        return lattice_for(self.L, self.epsilon, self.N)

    def config(self) -> SystemConfig:
        C = flat_scattering(self.L, self.tau_d, self.B_D)
        return SystemConfig.from_db(C, self.lattice(), self.sigma2_db, self.scheme)


@dataclass(frozen=True)
class ScenarioResult:
    scenario: SweepScenario
    family: str
    gain: float
    interference: float
    sinr_db: float
    bessel_bound: float
    iterations: int
    seed: int | None
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    def row(self) -> dict:
        s = self.scenario
        return {"tau_d": s.tau_d, "B_D": s.B_D, "N": s.N, "epsilon": s.epsilon,
                "scheme": s.scheme, "family": self.family, "gain": self.gain,
                "interference": self.interference, "sinr_db": self.sinr_db,
                "bessel_bound": self.bessel_bound, "iterations": self.iterations,
                "seed": self.seed, "error": self.error}


def _scaled_rows(L: int) -> list[tuple[int, int]]:
    """Reference rows rescaled to ``P ~ 150 L / 512`` atoms at the same delay/Doppler ratio."""
    P = max(3, int(round(REFERENCE_P * L / REFERENCE_L)))
    rows = []
    for td, bd in REFERENCE_ROWS:
        if td == 0:
            rows.append((0, min((P - 1) // 2, (L - 1) // 2)))
            continue
        if bd == 0:
            rows.append((min(P - 1, L - 1), 0))
            continue
        R = (td + 1) / (2 * bd + 1)
        # interior rows stay doubly dispersive
        t1 = max(2, int(round(math.sqrt(P * R))))
        b2 = max(1, int(round((P / t1 - 1) / 2)))
        rows.append((min(t1 - 1, L - 1), min(b2, (L - 1) // 2)))
    return rows


def build_sweep(epsilon: float, L: int = REFERENCE_L, sigma2_db: float = -20.0) -> list[SweepScenario]:
    """Scenarios of constant ``P`` with the delay/Doppler ratio swept from Doppler-only to delay-only.

    At ``L = 512`` these are the reference rows; other ``L`` rescale ``P``
    proportionally. ``N`` comes from grid matching and doubles for
    ``epsilon = 2`` relative to ``epsilon = 0.5``.
    """
    rows = REFERENCE_ROWS if L == REFERENCE_L else _scaled_rows(L)
    out = []
    for td, bd in rows:
        N = match_grid_discrete(L, epsilon, td, bd)
        out.append(SweepScenario(td, bd, N, float(epsilon), L, float(sigma2_db)))
    return out


def _bessel(gamma, Lat) -> float:
    return frame_bounds(gamma, Lat).B


def design_family(cfg: SystemConfig, family: str, cache: dict | None = None) -> DesignResult:
    """Construct the pulse pair of one family; ``cache`` shares work between families."""
    cache = {} if cache is None else cache
    if family not in METHODS:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(METHODS)}")
    if "gauss" not in cache:
        cache["gauss"] = matched_gaussian(cfg)
    g0, y0 = cache["gauss"]
    empty = IterationTrace(iterations=0, converged=True, delta=0.0)
    if family == "matched_gaussian":
        return DesignResult(g0, y0, empty, family)
    if family == "iota":
        return DesignResult(orthogonalize(g0, cfg.Lat, "iota-rx"),
                            orthogonalize(y0, cfg.Lat, "iota-tx"), empty, family)
    if family == "rectangular":
        Lat = cfg.Lat
        Tu = min(cfg.L // Lat.b, Lat.a)
        g, y = cp_ofdm_pulses(cfg.L, Tu, Lat.a - Tu)
        return DesignResult(g, y, empty, family)
    if family in ("gain_opt", "tightened_gain_opt"):
        if "gain_opt" not in cache:
            cache["gain_opt"] = gain_optimize(cfg, y0)
        if family == "gain_opt":
            return cache["gain_opt"]
        return tighten_design(cache["gain_opt"], cfg)
    if family == "gain_lower_bound":
        return gain_lower_bound_design(cfg)
    return sinr_optimize(cfg, y0)


def _run_scenario(scenario: SweepScenario, families, seeds) -> list[ScenarioResult]:
    out = []
    cache: dict = {}
    try:
        cfg = scenario.config()
    except Exception as exc:  # noqa: BLE001 - recorded in the row
        return [ScenarioResult(scenario, f, math.nan, math.nan, math.nan, math.nan, 0, s,
                               f"{type(exc).__name__}: {exc}") for f, s in zip(families, seeds)]
    for fam, seed in zip(families, seeds):
        try:
            res = design_family(cfg, fam, cache)
            ev = evaluate(cfg, res.g, res.gamma)
            out.append(ScenarioResult(scenario, fam, ev.gain, ev.interference, ev.sinr_db,
                                      _bessel(res.gamma, cfg.Lat), res.trace.iterations, seed))
        except Exception as exc:  # noqa: BLE001 - recorded in the row
            log.warning("cell %s/%s failed: %s", scenario, fam, exc)
            out.append(ScenarioResult(scenario, fam, math.nan, math.nan, math.nan, math.nan, 0,
                                      seed, f"{type(exc).__name__}: {exc}"))
    return out


def default_threads() -> int:
    env = os.environ.get("WSSPULSE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer WSSPULSE_THREADS=%r", env)
    return 1


def run_sweep(scenarios, families=METHODS, out=None, base_seed: int = 0,
              threads: int | None = None) -> list[ScenarioResult]:
    """Evaluate every family on every scenario.

    Rows come back in scenario-major, family-minor order regardless of
    ``threads``. Cell ``k`` in that order gets seed ``base_seed ^ k``.
    Failures inside a cell are stored in the row's ``error`` field.
    If ``out`` is given, CSV and JSON files are written (``out`` and
    ``out`` with suffix ``.json``).
    """
    families = list(families)
    bad = [f for f in families if f not in METHODS]
    if bad:
        raise ValueError(f"unknown families {bad}; choose from {', '.join(METHODS)}")
    scenarios = list(scenarios)
    nf = len(families)
    seeds = [[base_seed ^ (i * nf + j) for j in range(nf)] for i in range(len(scenarios))]
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1:
        parts = [_run_scenario(s, families, sd) for s, sd in zip(scenarios, seeds)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_scenario, scenarios, [families] * len(scenarios), seeds))
    results = [r for part in parts for r in part]
    if out is not None:
        write_csv(results, out)
        write_results_json(results, Path(out).with_suffix(".json"))
    return results


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in results:
            row = r.row()
            w.writerow([_fmt(row[k]) for k in CSV_FIELDS])


def write_results_json(results, path) -> None:
    write_json([r.row() for r in results], path)


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# --- Monte-Carlo validation -------------------------------------------------

@dataclass(frozen=True)
class MCStat:
    empirical: float
    stderr: float
    analytic: float

    @property
    def z(self) -> float:
        diff = self.empirical - self.analytic
        # agreement to round-off counts as exact, whatever the sample spread
        if abs(diff) <= 1e-12 * max(1.0, abs(self.analytic)):
            return 0.0
        if self.stderr > 0:
            return diff / self.stderr
        return math.copysign(math.inf, diff)


@dataclass(frozen=True)
class MCValidation:
    scheme: str
    K: int
    seed: int
    ref: tuple[int, int]
    a: MCStat
    b: MCStat

    def max_abs_z(self) -> float:
        return max(abs(self.a.z), abs(self.b.z))

    def passed(self, threshold: float = 4.0) -> bool:
        return self.max_abs_z() < threshold

    def to_json(self) -> dict:
        d = asdict(self)
        d["a"]["z"] = self.a.z
        d["b"]["z"] = self.b.z
        d["ref"] = list(self.ref)
        return json_safe(d)


MIN_REALIZATIONS = 100


def _is_identity(C: ScatteringFunction) -> bool:
    return C.size == 1 and C.taus[0] % C.L == 0 and C.nus[0] % C.L == 0


def mc_validate(cfg: SystemConfig, g, gamma, K: int, seed: int,
                ref: tuple[int, int] = (0, 0)) -> MCValidation:
    """Empirical ``E|H_mm|^2`` and ``E sum_{n != m} |H_mn|^2`` against the analytic gain/interference.

    Channel elements are built from direct shifts of the lattice pulses
    (independent of the FFT evaluation path). For the real scheme the
    elements are ``Re(i^{n-m} H_mn)`` and the analytic targets are halved.
    A channel consisting of the single atom at the origin is the
    deterministic identity channel (amplitude 1).
    """
    if K < MIN_REALIZATIONS:
        raise ValueError(f"need at least {MIN_REALIZATIONS} realizations, got {K}")
    C, Lat = cfg.C, cfg.Lat
    gs, ys = _samples(g), _samples(gamma)
    if gs.size != cfg.L or ys.size != cfg.L:
        raise ValueError("pulse length does not match the configuration")
    idx = lattice_indices(Lat)
    m = np.array(ref, dtype=np.int64) % np.array(Lat.shape)
    gm = tf_shift(((m[0] * Lat.a) % cfg.L, (m[1] * Lat.b) % cfg.L), gs)
    # T[n, p] = <g_m, S_mu_p gamma_n>
    T = np.empty((idx.shape[0], C.size), dtype=np.complex128)
    for i, (n1, n2) in enumerate(idx):
        yn = tf_shift(((n1 * Lat.a) % cfg.L, (n2 * Lat.b) % cfg.L), ys)
        for p, (t, nu) in enumerate(zip(C.taus, C.nus)):
            T[i, p] = np.vdot(gm, tf_shift((t, nu), yn))
    rng = np.random.default_rng(seed)
    if _is_identity(C):
        amps = np.ones((K, 1), dtype=np.complex128)
    else:
        amps = sample_amplitudes(C, rng, K)
    H = amps @ T.T  # K x lattice size
    self_mask = np.all(idx == m, axis=1)
    half = 1.0
    if cfg.scheme == "real":
        k = (idx[:, 0] + idx[:, 1] - m[0] - m[1]) % 4
        H = (H * (1j ** k)[None, :]).real
        half = 0.5
    P = np.abs(H) ** 2
    a_s = P[:, self_mask].sum(axis=1)
    b_s = P[:, ~self_mask].sum(axis=1)
    ev = evaluate(cfg, g, gamma)

    def stat(x, target):
        return MCStat(float(x.mean()), float(x.std(ddof=1) / math.sqrt(K)), half * target)

    return MCValidation(cfg.scheme, K, seed, (int(m[0]), int(m[1])),
                        stat(a_s, ev.gain), stat(b_s, ev.interference))


def sinr_gap_db(results, family: str, baseline: str) -> dict[tuple[int, int], float]:
    """Per-scenario ``SINR(family) - SINR(baseline)`` in dB."""
    by = {(r.scenario.tau_d, r.scenario.B_D, r.family): r.sinr_db for r in results}
    out = {}
    for r in results:
        if r.family == family and (r.scenario.tau_d, r.scenario.B_D, baseline) in by:
            out[(r.scenario.tau_d, r.scenario.B_D)] = r.sinr_db - by[(r.scenario.tau_d, r.scenario.B_D, baseline)]
    return out

