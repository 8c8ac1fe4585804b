"""A single laser-modulated Gaussian electron wavepacket: momentum amplitudes,
bunching factors and real-space density profiles.

Dimensionless units throughout: momenta in units of the laser recoil dk,
positions in units of 1/dk, drift times as the ratio t_d/T_b with
T_b = 2*pi / (hbar dk^2 / 2 gamma^3 m_e).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as sc
from scipy.integrate import trapezoid
from scipy.special import jv

PRUNE = 1e-12
SAMPLES_PER_RECOIL = 64
NORM_TOL = 1e-8


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalQEW:
    """Laboratory description of the wavepacket and its drift."""

    energy_keV: float
    wavelength_m: float
    sigma_t_s: float  # rms duration of the density envelope
    drift_length_m: float

    @property
    def gamma(self) -> float:
        return 1.0 + self.energy_keV * 1e3 * sc.e / (sc.m_e * sc.c**2)

    @property
    def velocity(self) -> float:
        return sc.c * math.sqrt(1.0 - 1.0 / self.gamma**2)

    @property
    def omega(self) -> float:
        return 2 * math.pi * sc.c / self.wavelength_m

    @property
    def recoil(self) -> float:
        return self.omega / self.velocity

    @property
    def period_b(self) -> float:
        return 2 * math.pi * 2 * self.gamma**3 * sc.m_e / (sc.hbar * self.recoil**2)

    @property
    def drift_time(self) -> float:
        return self.drift_length_m / self.velocity

    def dimensionless(self) -> dict:
        return {
            "sigma_ratio": 1.0 / (2.0 * self.omega * self.sigma_t_s),
            "t_d_ratio": self.drift_time / self.period_b,
            "carrier_phase": math.remainder(self.omega * self.drift_time, 2 * math.pi),
        }


@dataclass(frozen=True)
class QEWParams:
    """Modulated wavepacket.

    carrier_phase is omega_L * t_d reduced mod 2 pi; in purely dimensionless
    use it is a free offset and defaults to 0.
    """

    g_L: float = 0.0
    sigma_ratio: float = 0.05
    t_d_ratio: float = 0.0
    phi_0: float = 0.0
    detuning_ratio: float = 0.0
    carrier_phase: float = 0.0
    physical: PhysicalQEW | None = None

    def __post_init__(self):
        if not self.sigma_ratio > 0:
            raise ValueError(f"sigma_ratio must be > 0, got {self.sigma_ratio}")
        if self.g_L < 0:
            raise ValueError(f"g_L must be >= 0, got {self.g_L}")
        if self.t_d_ratio < 0:
            raise ValueError(f"t_d_ratio must be >= 0, got {self.t_d_ratio}")
        if self.physical is not None:
            derived = self.physical.dimensionless()
            for key, val in derived.items():
                mine = getattr(self, key)
                if abs(mine - val) > 1e-12 * max(1.0, abs(val)):
                    raise ValueError(f"{key}={mine!r} inconsistent with physical block ({val!r})")

    @classmethod
    def from_physical(cls, physical: PhysicalQEW, g_L: float, phi_0: float,
                      detuning_ratio: float = 0.0) -> "QEWParams":
        return cls(g_L=g_L, phi_0=phi_0, detuning_ratio=detuning_ratio, physical=physical,
                   **physical.dimensionless())

    @property
    def modulated(self) -> bool:
        return self.g_L > 0


@dataclass(frozen=True)
class MomentumAmplitudes:
    """Samples c_k on a uniform grid k = (k0 + j) / samples_per_recoil."""

    k: np.ndarray
    c: np.ndarray
    samples_per_recoil: int
    carrier_phase: float
    params: QEWParams

    @property
    def dk(self) -> float:
        return 1.0 / self.samples_per_recoil

    def comoving(self) -> np.ndarray:
        """Amplitudes with the bulk translation exp(-i k omega_L t_d) removed."""
        return self.c * np.exp(1j * self.k * self.carrier_phase)


@dataclass(frozen=True)
class BunchingSpectrum:
    """Harmonics b^(n) for n = -r_max..r_max, stored at index n + r_max."""

    values: np.ndarray
    picture: str = "schrodinger"
    arrival_phase: float | None = None
    support: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 1 or len(v) % 2 != 1:
            raise ValueError("harmonic array must have odd length 2*r_max+1")
        r = len(v) // 2
        if abs(v[r] - 1) > 1e-12:
            raise ValueError(f"b^(0) must equal 1, got {v[r]}")
        v[r] = 1.0
        if np.max(np.abs(v - np.conj(v[::-1]))) > 1e-10:
            raise ValueError("harmonics are not conjugate symmetric")
        if np.max(np.abs(v)) > 1 + 1e-12:
            raise ValueError("harmonic magnitude exceeds 1")
        if self.picture not in ("schrodinger", "interaction"):
            raise ValueError(f"unknown picture {self.picture!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        sup = np.flatnonzero(np.abs(v) >= PRUNE) - r
        object.__setattr__(self, "support", sup)

    @property
    def r_max(self) -> int:
        return len(self.values) // 2

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.r_max:
            return 0j
        return complex(self.values[n + self.r_max])

    @classmethod
    def from_harmonics(cls, positive, picture: str = "schrodinger", arrival_phase=None) -> "BunchingSpectrum":
        """Build from b^(1), b^(2), ...; negative orders follow by conjugation."""
        pos = np.asarray(list(positive), dtype=complex)
        vals = np.concatenate([np.conj(pos[::-1]), [1.0], pos])
        return cls(vals, picture, arrival_phase)

    @classmethod
    def unmodulated(cls) -> "BunchingSpectrum":
        return cls(np.array([1.0 + 0j]))

    def rotated(self, angle: float) -> "BunchingSpectrum":
        n = np.arange(-self.r_max, self.r_max + 1)
        return BunchingSpectrum(self.values * np.exp(1j * n * angle), self.picture, self.arrival_phase)


def bessel_cutoff(g_L: float, tol: float = 1e-14) -> int:
    """Smallest N with sum_{|n|>N} J_n(2 g_L)^2 < tol."""
    x = 2.0 * g_L
    n = np.arange(0, int(4 * x) + 80)
    w = jv(n, x) ** 2
    tail = 2.0 * np.cumsum(w[::-1])[::-1]  # tail[N] = sum_{|n|>=N}
    for N in range(len(n) - 1):
        if tail[N + 1] < tol:
            return N
    raise ValueError(f"g_L={g_L} too large for the sideband table")


def harmonic_cutoff(params: QEWParams, tol: float = PRUNE) -> int:
    """Highest order whose bunching amplitude is at least tol (minimum 1)."""
    x = 4.0 * params.g_L
    top = 1
    # |J_n(X)| <= (X/2)^n / n! and |X| <= 4 g_L bounds every harmonic
    while math.exp(top * math.log(max(x / 2, 1e-300)) - math.lgamma(top + 1)) >= tol or top < x:
        top += 1
    amps = np.abs(_amplitudes(params, np.arange(1, top + 1)))
    big = np.flatnonzero(amps >= tol)
    return max(int(big[-1]) + 1 if len(big) else 1, 1)


def default_grid(params: QEWParams, samples_per_recoil: int = SAMPLES_PER_RECOIL, margin: float = 0.0):
    nb = bessel_cutoff(params.g_L)
    half = nb + 8 * params.sigma_ratio + abs(params.detuning_ratio) * nb + margin
    j = math.ceil(half * samples_per_recoil)
    return np.arange(-j, j + 1) / samples_per_recoil, samples_per_recoil


def momentum_amplitudes(params: QEWParams, k: np.ndarray | None = None,
                        samples_per_recoil: int = SAMPLES_PER_RECOIL) -> MomentumAmplitudes:
    """Sideband superposition of Gaussians after modulation and free drift."""
    if k is None:
        k, samples_per_recoil = default_grid(params, samples_per_recoil)
    k = np.asarray(k, dtype=float)
    steps = np.diff(k) * samples_per_recoil
    if len(k) < 3 or np.max(np.abs(steps - 1)) > 1e-9:
        raise GridError(f"k grid must be uniform with spacing 1/{samples_per_recoil}")
    sig = params.sigma_ratio
    nb = bessel_cutoff(params.g_L)
    orders = np.arange(-nb, nb + 1)
    weights = jv(orders, 2 * params.g_L) * np.exp(-1j * orders * params.phi_0)
    # laser sidebands sit at multiples of the laser recoil, cavity recoil is 1 - detuning
    centers = orders.astype(float)
    env = np.exp(-((k[:, None] - centers[None, :]) ** 2) / (4 * sig**2))
    c = (2 * math.pi * sig**2) ** -0.25 * env @ weights
    tau = params.t_d_ratio
    c = c * np.exp(-1j * (k * params.carrier_phase + 2 * math.pi * tau * k**2))
    norm = trapezoid(np.abs(c) ** 2, dx=1.0 / samples_per_recoil)
    if abs(norm - 1) > NORM_TOL:
        raise GridError(
            f"normalization deficit {1 - norm:.3e} exceeds {NORM_TOL:.0e}; grid [{k[0]:.3f}, {k[-1]:.3f}] "
            f"with {samples_per_recoil} samples per recoil is too narrow or coarse (need about "
            f"+-{nb + 8 * sig:.3f})"
        )
    c = c / math.sqrt(norm)
    c.setflags(write=False)
    return MomentumAmplitudes(k, c, samples_per_recoil, params.carrier_phase, params)


def _shift_samples(amps: MomentumAmplitudes, shift: float) -> int:
    s = shift * amps.samples_per_recoil
    si = int(round(s))
    if abs(s - si) > 1e-9:
        raise GridError(f"shift {shift} is not a multiple of the grid spacing")
    return si


def _overlap(c: np.ndarray, si: int, dk: float) -> complex:
    # the packet lives inside the grid, so a shift past its span has no overlap
    if abs(si) >= len(c) - 1:
        return 0j
    if si >= 0:
        prod = np.conj(c[: len(c) - si]) * c[si:]
    else:
        prod = np.conj(c[-si:]) * c[: len(c) + si]
    return complex(trapezoid(prod, dx=dk))


def density_spectrum(amps: MomentumAmplitudes, k: float) -> complex:
    """M_b(k) = integral of conj(c_k') c_{k'+k} dk'."""
    return _overlap(amps.c, _shift_samples(amps, k), amps.dk)


def bunching_numeric(amps: MomentumAmplitudes, n: int) -> complex:
    """Brute-force overlap at n cavity recoils."""
    return density_spectrum(amps, n * (1.0 - amps.params.detuning_ratio))


def _amplitudes(params: QEWParams, n) -> np.ndarray:
    """Signed real amplitude of b^(n) without its phase factor."""
    n = np.asarray(n, dtype=float)
    ratio = 1.0 - params.detuning_ratio  # cavity recoil / laser recoil
    theta = 2 * math.pi * params.t_d_ratio
    arg = 4 * params.g_L * np.sin(n * theta * ratio)
    chirp = np.exp(-0.5 * (n * 2 * theta * params.sigma_ratio * ratio) ** 2)
    detune = np.exp(-(n**2) * params.detuning_ratio**2 / (8 * params.sigma_ratio**2))
    return jv(n, arg) * chirp * detune


def bunching_analytic(params: QEWParams, n: int) -> complex:
    """Closed-form bunching factor in the laboratory (Schrodinger) picture."""
    ratio = 1.0 - params.detuning_ratio
    phase = n * (params.carrier_phase * ratio + params.phi_0 + math.pi / 2)
    return complex(_amplitudes(params, n) * np.exp(-1j * phase))


def bunching_spectrum(params: QEWParams, r_max: int | None = None, picture: str = "schrodinger",
                      arrival_phase: float = 0.0) -> BunchingSpectrum:
    """Harmonics -r_max..r_max.

    In the interaction picture arrival_phase is omega_L t_0j, the laser phase at
    which the envelope centre entered the modulator; the drift phase cancels.
    """
    if r_max is None:
        r_max = harmonic_cutoff(params)
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    n = np.arange(1, r_max + 1)
    amp = _amplitudes(params, n)
    if picture == "schrodinger":
        ratio = 1.0 - params.detuning_ratio
        pos = amp * np.exp(-1j * n * (params.carrier_phase * ratio + params.phi_0 + math.pi / 2))
        arrival_phase = None
    elif picture == "interaction":
        pos = amp * np.exp(1j * n * (arrival_phase - params.phi_0 - math.pi / 2))
    else:
        raise ValueError(f"unknown picture {picture!r}")
    pos[np.abs(pos) < PRUNE] = 0.0
    return BunchingSpectrum.from_harmonics(pos, picture, arrival_phase)


def envelope(params: QEWParams, zeta: np.ndarray) -> np.ndarray:
    s = 1.0 / (2.0 * params.sigma_ratio)
    return np.exp(-np.asarray(zeta) ** 2 / (2 * s * s)) / (math.sqrt(2 * math.pi) * s)


def default_z_grid(params: QEWParams, points_per_period: int = 64) -> np.ndarray:
    """Co-moving positions covering the envelope and the drifted sidebands."""
    s = 1.0 / (2.0 * params.sigma_ratio)
    walk = 4 * math.pi * params.t_d_ratio * (bessel_cutoff(params.g_L) + 1)
    half = 10 * s + walk
    m = math.ceil(half / (2 * math.pi) * points_per_period)
    return np.arange(-m, m + 1) * (2 * math.pi / points_per_period)


def density_profile_exact(amps: MomentumAmplitudes, zeta: np.ndarray, check: bool = True,
                          chunk: int = 2048) -> np.ndarray:
    """|psi|^2 at co-moving positions zeta = dk (z - v0 t_d) from a direct Fourier sum."""
    zeta = np.asarray(zeta, dtype=float)
    c = amps.comoving()
    out = np.empty(len(zeta))
    for i in range(0, len(zeta), chunk):
        z = zeta[i : i + chunk]
        psi = np.exp(1j * np.outer(z, amps.k)) @ c * amps.dk / math.sqrt(2 * math.pi)
        out[i : i + chunk] = np.abs(psi) ** 2
    if check:
        if len(zeta) < 3 or np.ptp(np.diff(zeta)) > 1e-9 * max(1.0, np.max(np.abs(zeta))):
            raise GridError("normalization check needs a uniform z grid")
        total = trapezoid(out, zeta)
        if abs(total - 1) > NORM_TOL:
            raise GridError(f"profile integrates to {total:.10f}; z grid misses part of the packet")
    return out


def density_profile_approx(params: QEWParams, zeta: np.ndarray, r_max: int | None = None) -> np.ndarray:
    """Envelope times the harmonic carrier, chirp of the envelope neglected."""
    zeta = np.asarray(zeta, dtype=float)
    if r_max is None:
        r_max = harmonic_cutoff(params)
    n = np.arange(1, r_max + 1)
    b = _amplitudes(params, n) * np.exp(-1j * n * (params.phi_0 + math.pi / 2))
    carrier = 1.0 + 2.0 * np.real(np.exp(1j * np.outer(zeta, n)) @ b)
    return envelope(params, zeta) * carrier


def microbunch_phase(params: QEWParams) -> float:
    """Co-moving position (mod 2 pi) of the density maxima relative to the envelope centre."""
    extra = math.pi if _amplitudes(params, 1) < 0 else 0.0
    return math.remainder(params.phi_0 + math.pi / 2 + extra, 2 * math.pi)
