"""Spin-1/2 wavepacket through a nested interferometer folded onto a line.

Units hbar = m = 1.  The Hamiltonian is ``-1/2 d^2/dx^2 + V(x, t)`` plus a
local spin coupling ``g(x) sigma_y``.  Writing the spin-down component as
``down = i * e`` makes the full Hamiltonian real and symmetric on
``(up, e)``, so the staggered leapfrog scheme (real parts on integer steps,
imaginary parts on half steps) applies to both components at once.

Line layout, left to right::

    hard wall | Alice (2L) | splitter S1 | inner (L) | splitter S2 | Bob (L) | wall W | exit

The packet starts in Alice's region heading right.  At S1 it splits: the
reflected part bounces off the hard wall and returns to S1 after a path of
``4L``.  The transmitted part splits again at S2; while both halves bounce
(S1 acting as a mirror on the inner side, W closing Bob's region) they
travel ``2L`` each and recombine at S2.  W then opens so the part leaving
S2 to the right escapes to the exit, and S1 switches back to a splitter in
time for the final recombination.  The spin coupling sits in Bob's region
and is active until W opens.  Final regions map to detectors:
Alice -> D1, inner -> D2, Bob + exit -> D3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, StabilityError

STAGES = ("initial", "after_bs1", "after_bs2", "at_bob_wall", "after_bs3", "after_bs4")
REGIONS = ("alice", "inner", "bob", "exit")


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass
class SpinorField:
    """Leapfrog state: real parts at ``time``, imaginary parts half a step either side.

    Rows of ``real``/``imag`` are (up, e) with ``down = i * e``.  Before the
    first step only ``imag`` (at ``time``) is set.
    """

    grid: Grid
    real: np.ndarray
    imag: np.ndarray | None = None
    imag_half: np.ndarray | None = None
    imag_prev: np.ndarray | None = None
    time: float = 0.0
    dt: float | None = None

    def _imag_now(self) -> np.ndarray:
        if self.imag is not None:
            return self.imag
        return 0.5 * (self.imag_half + self.imag_prev)

    @property
    def up(self) -> np.ndarray:
        return self.real[0] + 1j * self._imag_now()[0]

    @property
    def down(self) -> np.ndarray:
        return 1j * (self.real[1] + 1j * self._imag_now()[1])

    def density(self) -> np.ndarray:
        """Per-spin density; between steps this is the leapfrog-conserved form."""
        if self.imag is not None:
            return self.real ** 2 + self.imag ** 2
        return self.real ** 2 + self.imag_half * self.imag_prev

    def norm(self) -> float:
        return _row_sum(self.density()) * self.grid.dx


def init_gaussian(x0: float, sigma: float, k0: float, spin: str = "up", grid: Grid | None = None) -> SpinorField:
    """Normalized ``exp(-(x - x0)^2 / (4 sigma^2) + i k0 x)`` in one spin component."""
    if grid is None:
        grid = Grid(x0 - 12 * sigma, x0 + 12 * sigma, 2 ** 12)
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4.0 * sigma ** 2) + 1j * k0 * x)
    psi[0] = psi[-1] = 0.0
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    comp = np.zeros((2, grid.n_points), dtype=complex)
    if spin == "up":
        comp[0] = psi
    elif spin == "down":
        comp[1] = -1j * psi        # e = -i * down
    else:
        raise ConfigurationError(f"spin must be 'up' or 'down', got {spin!r}")
    return SpinorField(grid, comp.real.copy(), comp.imag.copy())


class _Hamiltonian:
    """Applies H to a (2, N) or (N,) real array with Dirichlet ends."""

    def __init__(self, dx: float):
        self.c = 0.5 / (dx * dx)

    def __call__(self, X, V, g, out):
        c = self.c
        out[..., 1:-1] = X[..., 1:-1]
        out[..., 1:-1] *= 2.0
        out[..., 1:-1] -= X[..., :-2]
        out[..., 1:-1] -= X[..., 2:]
        out[..., 1:-1] *= c
        out[..., 0] = 0.0
        out[..., -1] = 0.0
        out += V * X
        if g is not None and X.ndim == 2:
            out[0] += g * X[1]
            out[1] += g * X[0]
        return out


def stability_limit(dx: float, v_max: float, g_max: float = 0.0) -> float:
    """Largest admissible time step, ``1 / (1/dx^2 + V_max + |g|_max)``."""
    return 1.0 / (1.0 / dx ** 2 + max(v_max, 0.0) + abs(g_max))


def _as_potential(potential, grid: Grid):
    if callable(potential) and not isinstance(potential, np.ndarray):
        return potential
    V = np.broadcast_to(np.asarray(potential, dtype=float), (grid.n_points,))
    return lambda t: (V, None)


def _start_stagger(real, imag, H, V, g, dt):
    """Second-order Taylor start for the half-step imaginary parts.

    The three arrays are rescaled so that the leapfrog-conserved norm equals
    the input norm.  Sums run row by row, so a spinor run whose second row
    is zero rescales its first row exactly like a scalar run.
    """
    HR = H(real, V, g, np.empty_like(real))
    HHI = H(H(imag, V, g, np.empty_like(imag)), V, g, np.empty_like(imag))
    half = imag - 0.5 * dt * HR - dt * dt / 8.0 * HHI
    prev = imag + 0.5 * dt * HR - dt * dt / 8.0 * HHI
    target = _row_sum(real * real + imag * imag)
    current = _row_sum(real * real + half * prev)
    scale = math.sqrt(target / current)
    return real * scale, half * scale, prev * scale


def _row_sum(a: np.ndarray) -> float:
    return float(sum(np.atleast_2d(a).sum(axis=1)))


def step(field: SpinorField, potential, dt: float) -> SpinorField:
    """One leapfrog step.  ``potential`` is an array or ``t -> (V, g)``."""
    pot = _as_potential(potential, field.grid)
    V, g = pot(field.time)
    bound = stability_limit(field.grid.dx, float(np.max(V)), 0.0 if g is None else float(np.max(np.abs(g))))
    if dt > bound:
        raise StabilityError(f"dt={dt:.3g} exceeds the stability bound {bound:.3g}")
    H = _Hamiltonian(field.grid.dx)
    if field.imag_half is None or field.dt != dt:
        R0, half, _prev = _start_stagger(field.real, field._imag_now(), H, V, g, dt)
    else:
        R0, half = field.real, field.imag_half
    Vh, gh = pot(field.time + 0.5 * dt)
    R = R0 + dt * H(half, Vh, gh, np.empty_like(half))
    V1, g1 = pot(field.time + dt)
    nxt = half - dt * H(R, V1, g1, np.empty_like(R))
    return SpinorField(field.grid, R, None, nxt, half, field.time + dt, dt)


def evolve_until(field: SpinorField, potential, dt: float, t_end: float, check_bound=None) -> SpinorField:
    """Step in place-efficient loops until ``time >= t_end - dt/2``."""
    pot = _as_potential(potential, field.grid)
    H = _Hamiltonian(field.grid.dx)
    if check_bound is not None and dt > check_bound:
        raise StabilityError(f"dt={dt:.3g} exceeds the stability bound {check_bound:.3g}")
    t = field.time
    if field.imag_half is None or field.dt != dt:
        V, g = pot(t)
        R, half, prev = _start_stagger(field.real, field._imag_now(), H, V, g, dt)
    else:
        R, half, prev = field.real.copy(), field.imag_half.copy(), field.imag_prev.copy()
    n_steps = int(round((t_end - t) / dt))
    work = np.empty_like(R)
    for _ in range(n_steps):
        V, g = pot(t + 0.5 * dt)
        R += dt * H(half, V, g, work)
        V, g = pot(t + dt)
        prev, half = half, half - dt * H(R, V, g, work)
        t += dt
    return SpinorField(field.grid, R, None, half, prev, t, dt)


# --- barrier calibration -------------------------------------------------------

def _barrier_mask(x: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.abs(x - center) <= 0.5 * width + 1e-12


def lattice_transmission(height: float, n_sites: int, k: float, dx: float) -> float:
    """Transmission probability of a barrier covering ``n_sites`` grid points."""
    n_bar = int(n_sites)
    kappa = k * dx
    E = (1.0 - math.cos(kappa)) / (dx * dx)
    V = np.zeros(n_bar + 4)
    V[2:2 + n_bar] = height
    # Shoot from the right: pure outgoing wave e^{i kappa j}.
    J = V.size
    psi = np.zeros(J, dtype=complex)
    psi[J - 1] = np.exp(1j * kappa * (J - 1))
    psi[J - 2] = np.exp(1j * kappa * (J - 2))
    for j in range(J - 2, 0, -1):
        psi[j - 1] = 2.0 * (1.0 + dx * dx * (V[j] - E)) * psi[j] - psi[j + 1]
    e_p, e_m = np.exp(1j * kappa), np.exp(-1j * kappa)
    incident = (psi[1] - psi[0] * e_m) / (e_p - e_m)
    return float(1.0 / abs(incident) ** 2)


def _spectrum(k0: float, sigma: float, n: int = 41):
    sk = 1.0 / (2.0 * sigma)
    ks = np.linspace(k0 - 4 * sk, k0 + 4 * sk, n)
    w = np.exp(-((ks - k0) ** 2) / (2 * sk * sk))
    return ks, w / w.sum()


def packet_transmission(height: float, n_sites: int, k0: float, sigma: float, dx: float) -> float:
    """Transmission averaged over the packet's momentum distribution."""
    ks, w = _spectrum(k0, sigma)
    return float(sum(wi * lattice_transmission(height, n_sites, k, dx) for k, wi in zip(ks, w)))


@lru_cache(maxsize=64)
def calibrate_height(target: float, n_sites: int, k0: float, sigma: float, dx: float) -> float:
    """Barrier height whose packet-averaged transmission equals ``target``."""
    if not 0.0 < target < 1.0:
        raise ConfigurationError(f"target transmission must lie in (0, 1), got {target}")
    E = (1.0 - math.cos(k0 * dx)) / (dx * dx)
    hi = E
    while packet_transmission(hi, n_sites, k0, sigma, dx) > target:
        hi *= 2.0
        if hi > 1e6:
            raise ConfigurationError("barrier too thin to reach the target transmission")
    return brentq(lambda h: packet_transmission(h, n_sites, k0, sigma, dx) - target, 0.0, hi, xtol=1e-10)


# --- scenario ------------------------------------------------------------------

@dataclass(frozen=True)
class WavepacketConfig:
    n_points: int = 2 ** 14
    k0: float = 10.0
    sigma: float = 6.0
    inner_length: float = 60.0        # L in the layout sketch
    exit_length: float = 120.0
    barrier_width: float = 0.5
    mirror_height: float = 300.0
    t1_sq: float = 0.25               # outer splitter transmission probability
    t2_sq: float = 0.5                # inner splitter transmission probability
    coupling: float = 0.0             # peak of g(x)
    coupling_width: float = 4.0
    dt_fraction: float = 0.9          # dt as a fraction of the stability bound

    @property
    def x_s1(self) -> float:
        return 2.0 * self.inner_length

    @property
    def x_s2(self) -> float:
        return 3.0 * self.inner_length

    @property
    def x_wall(self) -> float:
        return 4.0 * self.inner_length

    @property
    def x_max(self) -> float:
        return self.x_wall + self.exit_length

    @property
    def x0(self) -> float:
        return self.inner_length

    @property
    def x_coupling(self) -> float:
        return 3.5 * self.inner_length

    @property
    def grid(self) -> Grid:
        return Grid(0.0, self.x_max, self.n_points)

    @property
    def velocity(self) -> float:
        dx = self.grid.dx
        return math.sin(self.k0 * dx) / dx


@dataclass(frozen=True)
class PotentialLayout:
    """Static arrays for the three switching phases plus the coupling profile."""

    grid: Grid
    v_open: np.ndarray        # S1 splitter, W closed
    v_mirror: np.ndarray      # S1 mirror, W closed
    v_exit: np.ndarray        # S1 splitter, W open
    coupling: np.ndarray | None
    t_mirror_on: float
    t_mirror_off: float
    heights: dict = field(default_factory=dict)
    regions: dict = field(default_factory=dict)

    def __call__(self, t: float):
        if t < self.t_mirror_on:
            return self.v_open, self.coupling
        if t < self.t_mirror_off:
            return self.v_mirror, self.coupling
        # Bob's interaction ends with the inner recombination; the exit
        # beam would otherwise cross the coupling region a third time.
        return self.v_exit, None

    @property
    def v_max(self) -> float:
        return float(max(self.v_open.max(), self.v_mirror.max(), self.v_exit.max()))


def coupling_profile(cfg: WavepacketConfig, x: np.ndarray) -> np.ndarray:
    return cfg.coupling * np.exp(-((x - cfg.x_coupling) ** 2) / (2.0 * cfg.coupling_width ** 2))


def rotation_per_pass(cfg: WavepacketConfig) -> float:
    """Spin rotation angle accumulated in one traversal of the coupling bump."""
    return cfg.coupling * cfg.coupling_width * math.sqrt(2.0 * math.pi) / cfg.velocity


def arrival_time(cfg: WavepacketConfig) -> float:
    return (cfg.x_s1 - cfg.x0) / cfg.velocity


def build_layout(cfg: WavepacketConfig) -> PotentialLayout:
    grid = cfg.grid
    x = grid.x
    dx = grid.dx
    if cfg.sigma / dx < 100:
        raise ConfigurationError(f"packet spans only {cfg.sigma / dx:.0f} grid points (need >= 100)")
    s1 = _barrier_mask(x, cfg.x_s1, cfg.barrier_width)
    s2 = _barrier_mask(x, cfg.x_s2, cfg.barrier_width)
    h1 = calibrate_height(cfg.t1_sq, int(s1.sum()), cfg.k0, cfg.sigma, dx)
    h2 = calibrate_height(cfg.t2_sq, int(s2.sum()), cfg.k0, cfg.sigma, dx)
    wall = _barrier_mask(x, cfg.x_wall, cfg.barrier_width)
    base = np.where(s2, h2, 0.0)
    v_open = base + np.where(s1, h1, 0.0) + np.where(wall, cfg.mirror_height, 0.0)
    v_mirror = base + np.where(s1, cfg.mirror_height, 0.0) + np.where(wall, cfg.mirror_height, 0.0)
    v_exit = base + np.where(s1, h1, 0.0)
    T = cfg.inner_length / cfg.velocity
    tau = arrival_time(cfg)
    g = coupling_profile(cfg, x) if cfg.coupling else None
    regions = {"alice": (0.0, cfg.x_s1), "inner": (cfg.x_s1, cfg.x_s2),
               "bob": (cfg.x_s2, cfg.x_wall), "exit": (cfg.x_wall, cfg.x_max + dx)}
    return PotentialLayout(grid, v_open, v_mirror, v_exit, g, tau + T, tau + 3 * T,
                           {"s1": h1, "s2": h2, "mirror": cfg.mirror_height}, regions)


def stage_times(cfg: WavepacketConfig) -> list[float]:
    T = cfg.inner_length / cfg.velocity
    tau = arrival_time(cfg)
    return [0.0, tau + 0.5 * T, tau + 1.5 * T, tau + 2.0 * T, tau + 3.5 * T, tau + 4.5 * T]


def region_probabilities(field: SpinorField, layout: PotentialLayout) -> dict:
    x = field.grid.x
    rho = field.density() * field.grid.dx
    out = {}
    for name, (a, b) in layout.regions.items():
        m = (x >= a) & (x < b)
        out[name] = {"up": float(rho[0, m].sum()), "down": float(rho[1, m].sum())}
    return out


def detector_probabilities(regions: dict) -> dict:
    """Map regions onto D1, D2, D3 for comparison with the matrix model."""
    def tot(*names, spin=None):
        spins = ("up", "down") if spin is None else (spin,)
        return sum(regions[n][s] for n in names for s in spins)
    return {"D1": tot("alice"), "D2": tot("inner"), "D3": tot("bob", "exit"),
            "D1_down": tot("alice", spin="down")}


@dataclass
class Snapshot:
    stage: str
    time: float
    regions: dict
    norm: float
    field: SpinorField | None = None

    def summary(self) -> dict:
        return {"stage": self.stage, "time": self.time, "norm": self.norm, "regions": self.regions,
                "detectors": detector_probabilities(self.regions)}

    def frame_rows(self, layout: PotentialLayout):
        """Rows (x, |up|^2, |down|^2, V) at this snapshot."""
        rho = self.field.density()
        V, _ = layout(self.time)
        return zip(self.field.grid.x, rho[0], rho[1], V)


def run_nmzi_scenario(weak_rotation: bool = False, config: WavepacketConfig | None = None,
                      keep_fields: bool = False) -> list[Snapshot]:
    """Full traversal; one snapshot per stage in :data:`STAGES`.

    With ``weak_rotation`` false the coupling is forced to zero.
    """
    cfg = config or WavepacketConfig()
    if not weak_rotation:
        cfg = replace(cfg, coupling=0.0)
    elif cfg.coupling == 0.0:
        raise ConfigurationError("weak rotation requested with zero coupling strength")
    layout = build_layout(cfg)
    g_max = 0.0 if layout.coupling is None else float(np.max(np.abs(layout.coupling)))
    bound = stability_limit(cfg.grid.dx, layout.v_max, g_max)
    dt = cfg.dt_fraction * bound
    if cfg.dt_fraction > 1.0:
        raise StabilityError(f"dt fraction {cfg.dt_fraction} exceeds the stability bound")
    field = init_gaussian(cfg.x0, cfg.sigma, cfg.k0, "up", cfg.grid)
    snaps = []
    for stage, t in zip(STAGES, stage_times(cfg)):
        field = evolve_until(field, layout, dt, t, check_bound=bound)
        snaps.append(Snapshot(stage, field.time, region_probabilities(field, layout), field.norm(),
                              field if keep_fields else None))
    return snaps


def run_scalar_reference(config: WavepacketConfig | None = None) -> np.ndarray:
    """Spinless run of the same schedule; returns the final real part."""
    cfg = replace(config or WavepacketConfig(), coupling=0.0)
    layout = build_layout(cfg)
    bound = stability_limit(cfg.grid.dx, layout.v_max)
    dt = cfg.dt_fraction * bound
    full = init_gaussian(cfg.x0, cfg.sigma, cfg.k0, "up", cfg.grid)
    H = _Hamiltonian(cfg.grid.dx)
    t = 0.0
    V, _ = layout(t)
    R, half, _ = _start_stagger(full.real[0].copy(), full.imag[0].copy(), H, V, None, dt)
    work = np.empty_like(R)
    t_end = stage_times(cfg)[-1]
    # Same step partition as run_nmzi_scenario: advance stage by stage.
    for t_stage in stage_times(cfg):
        for _ in range(int(round((t_stage - t) / dt))):
            V, _ = layout(t + 0.5 * dt)
            R += dt * H(half, V, None, work)
            V, _ = layout(t + dt)
            half = half - dt * H(R, V, None, work)
            t += dt
    assert abs(t - t_end) < dt
    return R


def matrix_model_targets(cfg: WavepacketConfig | None = None) -> dict:
    """Detector probabilities the interferometer model predicts for this layout."""
    from .circuit import PolarizedState, evolve
    from .devices import build_nmzi

    cfg = cfg or WavepacketConfig()
    t1 = math.sqrt(cfg.t1_sq)
    r1 = math.sqrt(1.0 - cfg.t1_sq)
    c = build_nmzi(r1, t1, r1, t1)
    p = evolve(c, PolarizedState.single(3)).probabilities()
    spin_down = math.sin(2.0 * rotation_per_pass(cfg)) ** 2
    return {"D1": p[0] + p[3], "D2": p[1] + p[4], "D3": p[2] + p[5],
            "D1_down": cfg.t1_sq * cfg.t2_sq * spin_down * cfg.t2_sq * cfg.t1_sq}
