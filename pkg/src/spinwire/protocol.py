"""Entanglement transfer runs: evolve, measure (0', end), locate the first peak.

The spectator spin 0' never couples to anything, so the global state
splits into two branches labelled by the value of 0'::

    |psi(t)> = |0>_0' (x) |u(t)> + |1>_0' (x) |d(t)>

and both branches evolve under the coupled block (spin 0 plus chain) alone.
Every member of the chain ensemble sits in a single magnetization sector,
so each branch lives in one sector block of the coupled Hamiltonian.  The
pair matrix of (0', end) is then read off the two branches directly,
without ever building the 2^N register.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .dynamics import ChainEnsemble, Channel, DegenerateGroundStateError, chain_ensemble, decompose
from .hamiltonian import ChainConfig, coupled_blocks, gauge_coefficients, gauge_phases

PEAK_THRESHOLD = 1e-3
DT_UNITS = 0.02
TMAX_UNITS = 6.0
_CHUNK = 1 << 22


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    dt: float

    def __post_init__(self):
        if not (self.t_max > 0 and self.dt > 0):
            raise ValueError("t_max and dt must be positive")

    @classmethod
    def default(cls, cfg: ChainConfig) -> TimeGrid:
        jt = abs(cfg.j_tilde)
        return cls(TMAX_UNITS * cfg.n_total / jt, DT_UNITS / jt)

    def times(self) -> np.ndarray:
        n = math.floor(self.t_max / self.dt + 1e-9)
        return self.dt * np.arange(n + 1)


# transfer engine ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Member:
    """One chain sector of the ensemble, lifted into the two branches."""

    blk0: object
    blk1: object
    coef0: np.ndarray
    coef1: np.ndarray
    weights: np.ndarray
    ia: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    ib: np.ndarray
    p0: np.ndarray
    p1: np.ndarray


class TransferEngine:
    """Evolves the singlet-plus-chain state and returns pair components of
    (0', chain end) at arbitrary times."""

    def __init__(
        self, cfg: ChainConfig, channel: Channel, phase_phi: float | None = None, tie_break: bool = True
    ):
        ens = chain_ensemble(cfg, channel, tie_break=tie_break)
        self.ensemble: ChainEnsemble = ens
        self.cfg = ens.cfg
        self.channel = channel
        self.phase_phi = phase_phi
        n_ch = self.cfg.n_ch
        spec = decompose(coupled_blocks(self.cfg))
        by_tag = {b.tag: b for b in spec.blocks}
        end = 1 << n_ch
        self._members = []
        for g in ens.groups:
            vecs = g.vectors
            if phase_phi is not None:
                ph = gauge_phases(g.states, phase_phi, gauge_coefficients(n_ch, "total_frame"))
                vecs = ph[:, None] * vecs
            # 0' up: spin 0 down; 0' down: spin 0 up and a minus sign
            s0 = (g.states << 1) | 1
            s1 = g.states << 1
            b0, b1 = by_tag[g.tag + 1], by_tag[g.tag]
            amp0 = np.zeros((len(b0.states), vecs.shape[1]), dtype=np.complex128)
            amp1 = np.zeros((len(b1.states), vecs.shape[1]), dtype=np.complex128)
            amp0[np.searchsorted(b0.states, s0)] = vecs / math.sqrt(2)
            amp1[np.searchsorted(b1.states, s1)] = -vecs / math.sqrt(2)
            e0 = (b0.states & end) != 0
            e1 = (b1.states & end) != 0
            pair0 = np.flatnonzero(e0)
            partner = b0.states[pair0] ^ end
            pos = np.searchsorted(b1.states, partner)
            ok = (pos < len(b1.states)) & (b1.states[np.minimum(pos, len(b1.states) - 1)] == partner)
            self._members.append(
                _Member(
                    b0,
                    b1,
                    b0.eigenvectors.conj().T @ amp0,
                    b1.eigenvectors.conj().T @ amp1,
                    np.ascontiguousarray(g.weights, dtype=np.float64),
                    np.flatnonzero(~e0),
                    pair0,
                    np.flatnonzero(~e1),
                    np.flatnonzero(e1),
                    pair0[ok],
                    pos[ok],
                )
            )

    @staticmethod
    def _amps(blk, coef, times, derivative=False):
        ph = np.exp(-1j * np.outer(times, blk.eigenvalues))
        if derivative:
            ph = ph * (-1j * blk.eigenvalues)
        return np.einsum("ij,tjk->tik", blk.eigenvectors, ph[:, :, None] * coef[None, :, :])

    def components(self, times) -> tuple[np.ndarray, ...]:
        """Arrays a, x, y, b (real) and z (complex) over ``times``."""
        times = np.atleast_1d(np.asarray(times, dtype=np.float64))
        a = np.zeros(len(times))
        x = np.zeros(len(times))
        y = np.zeros(len(times))
        b = np.zeros(len(times))
        z = np.zeros(len(times), dtype=np.complex128)
        for mb in self._members:
            width = max(len(mb.blk0.states), len(mb.blk1.states)) * len(mb.weights)
            step = max(1, _CHUNK // max(width, 1))
            for lo in range(0, len(times), step):
                sl = slice(lo, lo + step)
                amps0 = self._amps(mb.blk0, mb.coef0, times[sl])
                amps1 = self._amps(mb.blk1, mb.coef1, times[sl])
                da, dx, dy, db, dz = kernels.xstate_accumulate(
                    amps0, amps1, mb.weights, mb.ia, mb.ix, mb.iy, mb.ib, mb.p0, mb.p1
                )
                a[sl] += da
                x[sl] += dx
                y[sl] += dy
                b[sl] += db
                z[sl] += dz
        return a, x, y, b, z

    def concurrence_and_slope(self, t: float) -> tuple[float, float]:
        """Concurrence at ``t`` and the exact time derivative of the unclamped
        expression 2(|z| - sqrt(ab))."""
        tt = np.array([t], dtype=np.float64)
        a = b = 0.0
        da = db = 0.0
        z = dz = 0j
        for mb in self._members:
            u0 = self._amps(mb.blk0, mb.coef0, tt)[0]
            u1 = self._amps(mb.blk1, mb.coef1, tt)[0]
            v0 = self._amps(mb.blk0, mb.coef0, tt, derivative=True)[0]
            v1 = self._amps(mb.blk1, mb.coef1, tt, derivative=True)[0]
            w = mb.weights
            a += float(np.sum(w * np.abs(u0[mb.ia]) ** 2))
            b += float(np.sum(w * np.abs(u1[mb.ib]) ** 2))
            da += float(2 * np.sum(w * np.real(u0[mb.ia].conj() * v0[mb.ia])))
            db += float(2 * np.sum(w * np.real(u1[mb.ib].conj() * v1[mb.ib])))
            z += complex(np.sum(w * u0[mb.p0] * u1[mb.p1].conj()))
            dz += complex(np.sum(w * (v0[mb.p0] * u1[mb.p1].conj() + u0[mb.p0] * v1[mb.p1].conj())))
        a, b = max(a, 0.0), max(b, 0.0)
        sab = math.sqrt(a * b)
        c = 2.0 * max(0.0, abs(z) - sab)
        dmod = (z.conjugate() * dz).real / abs(z) if abs(z) > 0 else 0.0
        dsab = (da * b + a * db) / (2 * sab) if sab > 0 else 0.0
        return c, 2.0 * (dmod - dsab)


def concurrence_from_components(a, b, z) -> np.ndarray:
    return 2.0 * np.maximum(0.0, np.abs(z) - np.sqrt(np.clip(a, 0, None) * np.clip(b, 0, None)))


def fidelity_from_components(x, y, z) -> np.ndarray:
    return 0.5 * (x + y - 2.0 * np.real(z))


# peak finding ------------------------------------------------------------------


def first_peak_index(c: np.ndarray, threshold: float = PEAK_THRESHOLD) -> int | None:
    """Index of the first grid point above ``threshold`` that beats its left
    neighbour strictly and its right neighbour weakly."""
    c = np.asarray(c)
    if len(c) < 3:
        return None
    k = np.flatnonzero((c[1:-1] > threshold) & (c[1:-1] > c[:-2]) & (c[1:-1] >= c[2:]))
    return int(k[0]) + 1 if len(k) else None


def quadratic_vertex(t: np.ndarray, c: np.ndarray, k: int) -> float:
    """Vertex of the parabola through grid points k-1, k, k+1."""
    c0, c1, c2 = c[k - 1], c[k], c[k + 1]
    curv = c0 - 2 * c1 + c2
    if curv >= 0:
        return float(t[k])
    h = t[k + 1] - t[k]
    return float(t[k] + 0.5 * h * (c0 - c2) / curv)


def refine_peak(engine: TransferEngine, times: np.ndarray, c: np.ndarray, k: int) -> float:
    """Quadratic estimate, then polished to a zero of dC/dt inside the
    bracketing grid cells when the slope changes sign there."""
    guess = quadratic_vertex(times, c, k)
    lo, hi = times[k - 1], times[k + 1]
    slope = lambda t: engine.concurrence_and_slope(t)[1]
    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo > 0 > s_hi:
        return float(brentq(slope, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return guess


# records -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransferRecord:
    times: np.ndarray
    concurrence: np.ndarray
    fidelity: np.ndarray
    t_opt: float
    e_max: float
    fidelity_at_topt: float
    transferred: bool
    cfg: ChainConfig
    channel: Channel
    phase_phi: float | None = None
    tie_broken: bool = False

    def summary(self) -> dict:
        return {"t_opt": self.t_opt, "e_max": self.e_max, "fidelity_at_topt": self.fidelity_at_topt}


def run_transfer(
    cfg: ChainConfig,
    channel: Channel | None = None,
    time_grid: TimeGrid | None = None,
    phase_phi: float | None = None,
    tie_break: bool = True,
) -> TransferRecord:
    """Concurrence and singlet fraction of (0', end) over a time grid.

    With ``phase_phi`` set, ``cfg`` is taken as the already rotated XXZ
    chain and the chain state carries the DM phase factor instead.
    """
    channel = channel or Channel.ground()
    time_grid = time_grid or TimeGrid.default(cfg)
    engine = TransferEngine(cfg, channel, phase_phi, tie_break)
    times = time_grid.times()
    a, x, y, b, z = engine.components(times)
    conc = concurrence_from_components(a, b, z)
    fid = fidelity_from_components(x, y, z)
    k = first_peak_index(conc)
    common = {
        "cfg": engine.cfg,
        "channel": channel,
        "phase_phi": phase_phi,
        "tie_broken": engine.ensemble.tie_broken,
    }
    if k is None:
        return TransferRecord(times, conc, fid, math.nan, 0.0, math.nan, False, **common)
    t_opt = refine_peak(engine, times, conc, k)
    a1, x1, y1, b1, z1 = engine.components([t_opt])
    e_max = float(concurrence_from_components(a1, b1, z1)[0])
    f_opt = float(fidelity_from_components(x1, y1, z1)[0])
    return TransferRecord(times, conc, fid, t_opt, e_max, f_opt, True, **common)


def oracle_discrepancy(delta: float, d: float, n_times: int = 200, j: float = 1.0) -> float:
    """Largest |C_closed_form - C_numeric| on the two-spin chain over
    ``n_times`` points in [0, 4 pi / xi]."""
    from .oracle import TwoSpinParams, concurrence_xx, concurrence_xxz

    params = TwoSpinParams.from_chain(j, delta, d)
    cfg = ChainConfig(2, j, delta, d).modified()
    times = np.linspace(0.0, 4 * math.pi / abs(params.xi), n_times)
    engine = TransferEngine(cfg, Channel.ground(sector=1), phase_phi=params.phi)
    a, _, _, b, z = engine.components(times)
    numeric = concurrence_from_components(a, b, z)
    err = float(np.max(np.abs(numeric - concurrence_xxz(params, times))))
    if delta == 0:
        err = max(err, float(np.max(np.abs(numeric - concurrence_xx(params, times)))))
    return err


# sweeps ------------------------------------------------------------------------


def spin_wave_velocity(delta: float, j_tilde: float = 1.0) -> float:
    """pi J~ sin(gamma) / gamma with delta = cos(gamma); needs |delta| < 1."""
    if not abs(delta) < 1:
        raise ValueError("spin-wave velocity needs |delta| < 1")
    g = math.acos(delta)
    return math.pi * j_tilde * math.sin(g) / g


@dataclass(frozen=True)
class SweepPoint:
    axis_value: float
    d: float
    delta: float
    e_max: float = math.nan
    t_opt: float = math.nan
    fidelity_at_topt: float = math.nan
    error: str = ""


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis: str
    values: np.ndarray
    points: tuple

    def series(self, attr: str, **match) -> np.ndarray:
        """Column ``attr`` over the axis for the points matching ``match``."""
        sel = [p for p in self.points if all(getattr(p, k) == v for k, v in match.items())]
        return np.array([getattr(p, attr) for p in sel], dtype=float)


def check_grid(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(v) == 0:
        raise ValueError("grid is empty")
    if len(v) > 1 and not (np.all(np.diff(v) > 0) or np.all(np.diff(v) < 0)):
        raise ValueError("grid must be strictly monotone")
    return v


def worker_count() -> int:
    raw = os.environ.get("SPINWIRE_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("SPINWIRE_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def parallel_map(fn, items) -> list:
    """Map in a thread pool; results keep the order of ``items``."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _point(axis_value, cfg, channel, time_grid, phase_phi=None, d_label=None, tie_break=True) -> SweepPoint:
    d = cfg.d if d_label is None else d_label
    try:
        rec = run_transfer(cfg, channel, time_grid, phase_phi, tie_break)
    except (DegenerateGroundStateError, ValueError, np.linalg.LinAlgError) as exc:
        return SweepPoint(axis_value, d, cfg.delta, error=str(exc))
    return SweepPoint(
        axis_value,
        d,
        cfg.delta,
        rec.e_max,
        rec.t_opt,
        rec.fidelity_at_topt,
        "" if rec.transferred else "no-transfer",
    )


def sweep_delta(
    template: ChainConfig, delta_grid, d_values, channel=None, time_grid=None, tie_break=True
) -> SweepResult:
    deltas = check_grid(delta_grid)
    jobs = [(float(dl), float(d)) for d in np.atleast_1d(d_values) for dl in deltas]
    pts = parallel_map(
        lambda job: _point(
            job[0], replace(template, delta=job[0], d=job[1]), channel, time_grid, tie_break=tie_break
        ),
        jobs,
    )
    return SweepResult("delta", deltas, tuple(pts))


def sweep_d(
    template: ChainConfig, d_grid, delta_values, channel=None, time_grid=None, tie_break=True
) -> SweepResult:
    ds = check_grid(d_grid)
    jobs = [(float(dl), float(d)) for dl in np.atleast_1d(delta_values) for d in ds]
    pts = parallel_map(
        lambda job: _point(
            job[1], replace(template, delta=job[0], d=job[1]), channel, time_grid, tie_break=tie_break
        ),
        jobs,
    )
    return SweepResult("d", ds, tuple(pts))


def sweep_thermal(template: ChainConfig, beta_grid, d_values, time_grid=None, tie_break=True) -> SweepResult:
    betas = check_grid(beta_grid)
    if np.any(betas < 0):
        raise ValueError("inverse temperatures must be >= 0")
    jobs = [(float(bt), float(d)) for d in np.atleast_1d(d_values) for bt in betas]
    pts = parallel_map(
        lambda job: _point(
            job[0], replace(template, d=job[1]), Channel.thermal(job[0]), time_grid, tie_break=tie_break
        ),
        jobs,
    )
    return SweepResult("beta", betas, tuple(pts))


def sweep_phi_fixed_jtilde(
    j_tilde: float, delta_grid, phi_grid, n_ch: int = 6, channel=None, time_grid=None, tie_break=True
) -> SweepResult:
    """E_max and t_opt over phi with J~ held fixed: the chain is the rotated
    XXZ chain and phi enters only through the phase carried by its state."""
    if not j_tilde > 0:
        raise ValueError("j_tilde must be positive")
    phis = check_grid(phi_grid)
    deltas = np.atleast_1d(np.asarray(delta_grid, dtype=np.float64))
    jobs = [(float(dl), float(ph)) for dl in deltas for ph in phis]

    def run(job):
        dl, ph = job
        cfg = ChainConfig(n_ch, j_tilde, dl, 0.0)
        return _point(
            ph, cfg, channel, time_grid, phase_phi=ph, d_label=j_tilde * math.sin(ph), tie_break=tie_break
        )

    return SweepResult("phi", phis, tuple(parallel_map(run, jobs)))
