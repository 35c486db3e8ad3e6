"""Analytic pumping-rate model for the two-atom singlet.

Covers the one- and two-atom pumping rates into and out of the singlet,
their closed-form equilibrium, the large-detuning limit, the coherent
three-amplitude model behind the effective Rabi frequency, and the mapping
of drive parameters onto transverse-field Ising couplings.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import curve_fit

from .errors import DegenerateParameterError, InvalidArgumentError, NumericError
from .model import PumpParams

# Singlet population assumed when turning the two-atom pumping rate into J.
AVERAGE_PAF = 0.5


def effective_rabi(omega: float, delta33: float) -> float:
    """Two-photon Rabi frequency (sqrt(2) Omega)**2 / Delta33 between |11> and |33>."""
    if delta33 == 0:
        raise InvalidArgumentError("delta33 must be nonzero")
    return 2.0 * omega**2 / delta33


@dataclass(frozen=True)
class RateModelParams:
    omega: float
    omega_r: float
    gamma: float
    delta33: float
    delta_small: float  # Delta33 - Delta34

    def __post_init__(self):
        for name in ("omega", "omega_r", "gamma", "delta33", "delta_small"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")

    @classmethod
    def from_pump(cls, p: PumpParams) -> "RateModelParams":
        return cls(
            omega=p.omega1,
            omega_r=effective_rabi(p.omega1, p.delta33),
            gamma=p.gamma,
            delta33=p.delta33,
            delta_small=p.delta33 - p.delta34,
        )


@dataclass(frozen=True)
class PumpRates:
    r1_in: float
    r1_out: float
    r2_in: float
    r2_out: float


def pump_rates(p: RateModelParams, p_af: float) -> PumpRates:
    if not 0.0 <= p_af <= 1.0:
        raise InvalidArgumentError("p_af must lie in [0, 1]")
    g2 = p.gamma**2
    one_atom = (p.omega**2 / g2) / (1 + p.delta33**2 / g2 + 2 * p.omega**2 / g2)
    two_in = (p.omega_r**2 / g2) / (1 + 2 * p.omega_r**2 / g2)
    two_out = (p.omega_r**2 / g2) / (1 + 4 * p.delta_small**2 / g2 + 2 * p.omega_r**2 / g2)
    return PumpRates(
        r1_in=(1 - p_af) * 2 * (p.gamma / 4) * one_atom,
        r1_out=p_af * 2 * (3 * p.gamma / 4) * one_atom,
        r2_in=(1 - p_af) * (p.gamma / 4) * two_in,
        r2_out=p_af * (3 * p.gamma / 4) * two_out,
    )


def paf_equilibrium(p: RateModelParams) -> float:
    """Singlet population balancing the in and out rates, in closed form.

    Evaluated with every frequency divided by gamma so the sixth-order
    polynomial terms stay O(1) for moderate ratios.
    """
    if p.gamma <= 0:
        raise InvalidArgumentError("gamma must be positive")
    w = p.omega / p.gamma
    wr = p.omega_r / p.gamma
    d33 = p.delta33 / p.gamma
    d = p.delta_small / p.gamma
    num = (1 + 4 * d**2 + 2 * wr**2) * (wr**2 * (1 + d33**2) + 2 * w**2 * (1 + 3 * wr**2))
    den = 4 * wr**2 * (1 + d33**2) * (1 + d**2 + 2 * wr**2) + 8 * w**2 * (
        1 + (4 * d**2 + 5 * wr**2) + 9 * d**2 * wr**2 + 6 * wr**4
    )
    if den == 0 or not math.isfinite(den):
        raise DegenerateParameterError("equilibrium denominator vanishes")
    return num / den


def paf_limit(omega: float, gamma: float) -> float:
    """Large-detuning limit (1 + g^2/2W^2) / (1 + 2 g^2/W^2)."""
    x = (gamma / omega) ** 2
    return (1 + x / 2) / (1 + 2 * x)


@dataclass
class CoherentAmplitudes:
    times: np.ndarray
    c11: np.ndarray
    s: np.ndarray  # (c13 + c31)/sqrt(2)
    c33: np.ndarray

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.c11) ** 2 + np.abs(self.s) ** 2 + np.abs(self.c33) ** 2


def integrate_coherent(omega: float, delta33: float, times: np.ndarray,
                       delta: float | None = None) -> CoherentAmplitudes:
    """Integrate the interaction-picture equations for c11, s, c33 from c11 = 1.

    The couplings carry explicit phases exp(+-i Delta t) and
    exp(+-i (Delta - Delta33) t); ``delta`` defaults to Delta33/2.
    """
    if delta is None:
        delta = delta33 / 2
    k = 1j * math.sqrt(2) * omega / 2
    w1, w2 = delta, delta - delta33

    def rhs(t, y):
        c11, s, c33 = y
        # scalar cmath keeps the per-call overhead low; this is the hot loop
        e1 = cmath.exp(1j * w1 * t)
        e2 = cmath.exp(1j * w2 * t)
        return np.array([k * e1 * s, k * (e1.conjugate() * c11 + e2 * c33), k * e2.conjugate() * s])

    sol = solve_ivp(rhs, (times[0], times[-1]), np.array([1, 0, 0], dtype=complex),
                    method="DOP853", t_eval=times, rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NumericError(f"coherent integration failed: {sol.message}")
    return CoherentAmplitudes(sol.t, sol.y[0], sol.y[1], sol.y[2])


def coherent_adiabatic_check(omega: float, delta33: float, t_final: float | None = None) -> float:
    """Fitted angular frequency of the |c33|^2 oscillation at Delta = Delta33/2.

    ``t_final`` defaults to two periods of 2 Omega^2/Delta33.
    """
    if omega == 0:
        return 0.0
    if abs(delta33 / omega) < 20:
        raise InvalidArgumentError("adiabatic regime needs |Delta33/Omega| >= 20")
    if t_final is None:
        t_final = 2 * 2 * math.pi / abs(effective_rabi(omega, delta33))
    # Sample the fast Delta33 ripple a few times per period so it cannot alias.
    n = max(2000, int(8 * abs(delta33) * t_final / (2 * math.pi)))
    times = np.linspace(0.0, t_final, min(n, 40_000))
    amp = integrate_coherent(omega, delta33, times)
    p33 = np.abs(amp.c33) ** 2
    if p33.max() < 1e-6:
        return 0.0
    # Initial guess from the spectrum of the sampled population.
    spec = np.abs(np.fft.rfft(p33 - p33.mean()))
    freqs = 2 * math.pi * np.fft.rfftfreq(len(times), times[1] - times[0])
    w0 = freqs[1 + np.argmax(spec[1:])]

    def model(t, a, b, w):
        return a - b * np.cos(w * t)

    try:
        popt, _ = curve_fit(model, times, p33, p0=[p33.mean(), p33.max() / 2, w0])
    except RuntimeError as exc:
        raise NumericError(f"oscillation fit failed: {exc}") from exc
    return float(abs(popt[2]))


@dataclass(frozen=True)
class IsingMapping:
    j: float
    b: float
    b_over_j: float


def ising_coupling(omega_r: float, gamma: float) -> float:
    """J = (1 - <P_AF>) Omega_R^2 / (4 gamma), i.e. Omega_R^2/(8 gamma) at <P_AF> = 1/2."""
    if gamma <= 0:
        raise InvalidArgumentError("gamma must be positive")
    return (1 - AVERAGE_PAF) * omega_r**2 / (4 * gamma)


def ising_map(params: PumpParams) -> IsingMapping:
    omega_r = effective_rabi(params.omega1, params.delta33)
    j = ising_coupling(omega_r, params.gamma)
    return IsingMapping(j=j, b=params.omega_g, b_over_j=params.omega_g / j)


def omega_g_for(b_over_j: float, omega: float, delta33: float, gamma: float) -> float:
    """Ground-state drive that realises a target B/J."""
    return b_over_j * ising_coupling(effective_rabi(omega, delta33), gamma)
