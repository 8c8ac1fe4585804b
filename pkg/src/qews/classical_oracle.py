"""Classical point-charge emission into one cavity mode, kept independent of
the quantum code so it can serve as a cross-check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c, e, epsilon_0, hbar, mu_0


@dataclass(frozen=True)
class ClassicalModeSpec:
    eta_q: float  # |E_z| / |E_perp| at the electron trajectory
    n_eff: float
    L: float  # interaction length (m)
    L_c: float  # resonator circumference (m)
    A_em: float  # effective mode area (m^2)
    omega: float  # angular frequency (rad/s)

    def __post_init__(self):
        for name in ("eta_q", "L_c", "A_em", "omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.L < 0:
            raise ValueError("L must be >= 0")
        if not self.n_eff > 1:
            raise ValueError("n_eff must exceed 1")

    @property
    def volume(self) -> float:
        return self.A_em * self.L_c


def classical_bunching(omega: float, t0) -> complex:
    """Ensemble bunching coefficient (1/N) sum_j exp(i omega t_0j)."""
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    if t0.size < 1:
        raise ValueError("need at least one arrival time")
    return complex(np.mean(np.exp(1j * omega * t0)))


def energy_transfer(mode: ClassicalModeSpec, field_z: float = 1.0, mismatch: float = 0.0) -> complex:
    """Work done by the mode field on one electron over the interaction length.

    mismatch is omega/v - q_z; at synchronism the phase integral is just L.
    """
    if mismatch == 0.0:
        phase_integral = mode.L
    else:
        phase_integral = (np.exp(1j * mismatch * mode.L) - 1) / (1j * mismatch)
    return -e * field_z * phase_integral


def mode_impedance(mode: ClassicalModeSpec) -> float:
    return math.sqrt(mu_0 / epsilon_0) / mode.n_eff


def power_normalization(mode: ClassicalModeSpec, field_perp: float) -> float:
    return abs(field_perp) ** 2 * mode.A_em / (2 * mode_impedance(mode))


def spectral_energy_per_electron(mode: ClassicalModeSpec) -> float:
    """dW/domega radiated into the transverse mode by one electron."""
    field_perp = 1.0
    field_z = mode.eta_q * field_perp
    dw = energy_transfer(mode, field_z)
    return abs(dw) ** 2 / (8 * math.pi * power_normalization(mode, field_perp))


def mode_spacing(mode: ClassicalModeSpec) -> float:
    """Longitudinal mode spacing 2 pi c / (L_c n_eff)."""
    return 2 * math.pi * c / (mode.L_c * mode.n_eff)


def energy_per_mode(mode: ClassicalModeSpec) -> float:
    return spectral_energy_per_electron(mode) * mode_spacing(mode)


def spontaneous_photons_per_electron(mode: ClassicalModeSpec) -> float:
    return energy_per_mode(mode) / (hbar * mode.omega)


def beam_emission(n_e: int, m_b: complex, mode: ClassicalModeSpec) -> tuple[float, float]:
    """(spontaneous N n, superradiant |M_b|^2 N^2 n) photon numbers per mode."""
    n = spontaneous_photons_per_electron(mode)
    return n_e * n, abs(m_b) ** 2 * n_e**2 * n


def vacuum_amplitude(mode: ClassicalModeSpec) -> float:
    """Vector-potential amplitude of one photon in the mode."""
    return math.sqrt(hbar / (2 * mode.n_eff**2 * epsilon_0 * mode.omega * mode.volume))


def qed_coupling(mode: ClassicalModeSpec) -> complex:
    return 1j * mode.eta_q * e * vacuum_amplitude(mode) * mode.L / hbar


def qed_coupling_magnitude(mode: ClassicalModeSpec) -> float:
    """|g|^2 of the quantum coupling for the same mode."""
    return abs(qed_coupling(mode)) ** 2
