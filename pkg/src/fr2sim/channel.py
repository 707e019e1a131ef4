"""Large- and small-scale channel for a single line-of-sight FR2 link.

Path loss follows the TR 38.901 UMi street-canyon LOS formula. Shadowing
is a spatially correlated lognormal AR(1) process in travelled distance;
fast fading is Rician with a Gauss-Markov diffuse part whose per-step
correlation is J0(2*pi*f_d*dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0
from scipy.signal import lfilter

SPEED_OF_LIGHT = 3.0e8
THERMAL_NOISE_DBM_HZ = -174.0
MIN_D2D_M = 10.0
MAX_D2D_M = 5000.0


@dataclass(frozen=True)
class LinkBudget:
    """Static downlink link-budget terms.

    ``gnb_rx_gain_db`` is the base station's receive gain; it only matters
    for the uplink and is carried so a config can state it.
    """

    eirp_dbm: float = 67.0
    ue_rx_gain_db: float = 1.0
    noise_figure_db: float = 10.0
    n_prb: int = 66
    scs_hz: float = 120e3
    carrier_freq_ghz: float = 24.8
    h_bs_m: float = 10.0
    h_ut_m: float = 1.5
    sinr_ceiling_db: float | None = None
    gnb_rx_gain_db: float = 29.5

    def __post_init__(self):
        if self.n_prb < 1 or self.scs_hz <= 0:
            raise ValueError("occupied bandwidth must be positive")
        if not 0.5 <= self.carrier_freq_ghz <= 100.0:
            raise ValueError(f"carrier_freq_ghz {self.carrier_freq_ghz} outside 0.5..100 GHz")
        if not self.h_bs_m > self.h_ut_m >= 1.0:
            raise ValueError("heights must satisfy h_bs_m > h_ut_m >= 1.0")

    @property
    def n_subcarriers(self) -> int:
        return 12 * self.n_prb

    @property
    def occupied_bandwidth_hz(self) -> float:
        return self.n_subcarriers * self.scs_hz

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / (self.carrier_freq_ghz * 1e9)


@dataclass(frozen=True)
class LinkSample:
    sinr_db: float
    rsrp_dbm: float
    path_loss_db: float


def breakpoint_distance(budget: LinkBudget) -> float:
    """Effective breakpoint distance d'_BP in metres."""
    h_bs = budget.h_bs_m - 1.0
    h_ut = budget.h_ut_m - 1.0
    return 4.0 * h_bs * h_ut * budget.carrier_freq_ghz * 1e9 / SPEED_OF_LIGHT


def umi_los_path_loss(d2d_m, budget: LinkBudget):
    """UMi street-canyon LOS path loss in dB; accepts scalars or arrays.

    Distances are clamped into the model's 10 m .. 5 km validity range.
    """
    d2d = np.clip(np.asarray(d2d_m, dtype=float), MIN_D2D_M, MAX_D2D_M)
    dh = budget.h_bs_m - budget.h_ut_m
    d3d = np.sqrt(d2d**2 + dh**2)
    d_bp = breakpoint_distance(budget)
    f_term = 20.0 * math.log10(budget.carrier_freq_ghz)
    pl1 = 32.4 + 21.0 * np.log10(d3d) + f_term
    pl2 = 32.4 + 40.0 * np.log10(d3d) + f_term - 9.5 * math.log10(d_bp**2 + dh**2)
    pl = np.where(d2d <= d_bp, pl1, pl2)
    return float(pl) if pl.ndim == 0 else pl


def noise_power_dbm(budget: LinkBudget) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(budget.occupied_bandwidth_hz) + budget.noise_figure_db


def doppler_hz(speed_mps: float, budget: LinkBudget) -> float:
    return speed_mps / budget.wavelength_m


def fading_step_correlation(dt_s: float, speed_mps: float, budget: LinkBudget) -> float:
    return float(j0(2.0 * math.pi * doppler_hz(speed_mps, budget) * dt_s))


def rician_gain(diffuse, k_factor_db: float):
    """Power gain of a unit-mean Rician channel given its diffuse part."""
    k = 10.0 ** (k_factor_db / 10.0)
    h = math.sqrt(k / (k + 1.0)) + math.sqrt(1.0 / (k + 1.0)) * diffuse
    return np.abs(h) ** 2


@dataclass
class ChannelState:
    """Evolving shadow and fast-fading state of one link.

    Shadow and fading draw from separate generators so that toggling one
    concern never reshuffles the other.
    """

    shadow_rng: np.random.Generator
    fading_rng: np.random.Generator
    shadow_db: float = 0.0
    diffuse: complex = 0j
    fading_db: float = 0.0
    last_position_m: float = 0.0

    @classmethod
    def initial(cls, shadow_rng, fading_rng, position_m: float, sigma_sf_db: float,
                k_factor_db: float) -> "ChannelState":
        state = cls(shadow_rng=shadow_rng, fading_rng=fading_rng, last_position_m=position_m)
        state.shadow_db = sigma_sf_db * float(shadow_rng.standard_normal())
        w = fading_rng.standard_normal(2)
        state.diffuse = complex(w[0], w[1]) / math.sqrt(2.0)
        state.fading_db = 10.0 * math.log10(float(rician_gain(state.diffuse, k_factor_db)))
        return state


def advance_shadow(state: ChannelState, new_position_m: float, sigma_sf_db: float = 4.0,
                   decorr_m: float = 10.0) -> ChannelState:
    if decorr_m <= 0:
        raise ValueError("decorr_m must be positive")
    rho = math.exp(-abs(new_position_m - state.last_position_m) / decorr_m)
    w = float(state.shadow_rng.standard_normal())
    state.shadow_db = rho * state.shadow_db + math.sqrt(1.0 - rho * rho) * sigma_sf_db * w
    state.last_position_m = new_position_m
    return state


def advance_fading(state: ChannelState, dt_s: float, speed_mps: float, budget: LinkBudget,
                   k_factor_db: float = 10.0) -> float:
    """Step the diffuse component by ``dt_s`` and return the new gain in dB."""
    if dt_s < 0 or speed_mps < 0:
        raise ValueError("dt_s and speed_mps must be non-negative")
    rho = fading_step_correlation(dt_s, speed_mps, budget)
    w = state.fading_rng.standard_normal(2)
    innov = complex(w[0], w[1]) / math.sqrt(2.0)
    state.diffuse = rho * state.diffuse + math.sqrt(max(0.0, 1.0 - rho * rho)) * innov
    state.fading_db = 10.0 * math.log10(float(rician_gain(state.diffuse, k_factor_db)))
    return state.fading_db


def sample_link(d2d_m: float, state: ChannelState, budget: LinkBudget) -> LinkSample:
    pl = umi_los_path_loss(d2d_m, budget)
    rx = budget.eirp_dbm - pl - state.shadow_db + state.fading_db + budget.ue_rx_gain_db
    sinr = rx - noise_power_dbm(budget)
    if budget.sinr_ceiling_db is not None:
        sinr = min(sinr, budget.sinr_ceiling_db)
    return LinkSample(sinr, rx - 10.0 * math.log10(budget.n_subcarriers), pl)


def _ar1(x0: float, rho: np.ndarray, innov: np.ndarray) -> np.ndarray:
    """x[k] = rho[k] * x[k-1] + innov[k], starting from x0 (x0 not returned)."""
    if rho.size == 0:
        return np.empty(0, dtype=innov.dtype)
    if np.all(rho == rho[0]):
        out, _ = lfilter([1.0], [1.0, -rho[0]], innov, zi=np.array([rho[0] * x0], dtype=innov.dtype))
        return out
    out = np.empty_like(innov)
    x = x0
    for k in range(rho.size):
        x = rho[k] * x + innov[k]
        out[k] = x
    return out


@dataclass(frozen=True)
class ChannelTrace:
    """Per-slot channel for a whole run; slot 0 is the initial state."""

    distance_m: np.ndarray
    path_loss_db: np.ndarray
    shadow_db: np.ndarray
    fading_db: np.ndarray
    sinr_db: np.ndarray
    rsrp_dbm: np.ndarray


def generate_trace(state: ChannelState, distances_m: np.ndarray, travelled_m: np.ndarray,
                   dt_s: float, speed_mps: float, budget: LinkBudget, sigma_sf_db: float = 4.0,
                   decorr_m: float = 10.0, k_factor_db: float = 10.0) -> ChannelTrace:
    """Vectorised equivalent of stepping ``advance_shadow``/``advance_fading`` per slot.

    ``travelled_m`` is the cumulative path length the shadow process sees;
    it differs from ``distances_m`` when distance is pinned but the terminal
    still moves. The state is left as it would be after the last slot.
    """
    n = distances_m.size
    steps = n - 1
    # Shadow: one standard normal per step, same order as advance_shadow.
    rho_s = np.exp(-np.abs(np.diff(travelled_m)) / decorr_m)
    w_s = state.shadow_rng.standard_normal(steps)
    shadow = np.empty(n)
    shadow[0] = state.shadow_db
    shadow[1:] = _ar1(state.shadow_db, rho_s, np.sqrt(1.0 - rho_s**2) * sigma_sf_db * w_s)

    rho_f = fading_step_correlation(dt_s, speed_mps, budget)
    w_f = state.fading_rng.standard_normal((steps, 2))
    innov = (w_f[:, 0] + 1j * w_f[:, 1]) / math.sqrt(2.0)
    diffuse = np.empty(n, dtype=complex)
    diffuse[0] = state.diffuse
    diffuse[1:] = _ar1(state.diffuse, np.full(steps, rho_f),
                       math.sqrt(max(0.0, 1.0 - rho_f * rho_f)) * innov)
    fading = 10.0 * np.log10(rician_gain(diffuse, k_factor_db))
    fading[0] = state.fading_db

    pl = np.atleast_1d(umi_los_path_loss(distances_m, budget))
    rx = budget.eirp_dbm - pl - shadow + fading + budget.ue_rx_gain_db
    sinr = rx - noise_power_dbm(budget)
    if budget.sinr_ceiling_db is not None:
        sinr = np.minimum(sinr, budget.sinr_ceiling_db)
    rsrp = rx - 10.0 * math.log10(budget.n_subcarriers)

    state.shadow_db = float(shadow[-1])
    state.diffuse = complex(diffuse[-1])
    state.fading_db = float(fading[-1])
    state.last_position_m = float(travelled_m[-1])
    return ChannelTrace(distances_m, pl, shadow, fading, sinr, rsrp)
