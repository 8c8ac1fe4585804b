"""Single-electron scattering channel acting on the cavity photon state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.constants as sc

from .fock_core import (
    DensityMatrix,
    DisplacementMatrix,
    TruncationError,
    coherent_amplitudes,
    displacement_matrix,
    validate,
)
from .qew import BunchingSpectrum

PERTURBATIVE_LIMIT = 0.3


@dataclass(frozen=True)
class PhysicalCoupling:
    """Vacuum-field coupling of one electron to the cavity mode (SI units)."""

    A0_eff: float  # effective vacuum vector-potential amplitude
    k0: float
    length: float
    gamma: float
    velocity: float

    @property
    def g(self) -> complex:
        return 1j * sc.e * self.A0_eff * self.k0 * self.length / (self.gamma * sc.m_e * self.velocity)


@dataclass(frozen=True)
class CouplingSpec:
    g: complex
    physical: PhysicalCoupling | None = None

    def __post_init__(self):
        object.__setattr__(self, "g", complex(self.g))
        if self.physical is not None:
            d = self.physical.g
            if abs(d - self.g) > 1e-12 * max(1.0, abs(d)):
                raise ValueError(f"g={self.g} inconsistent with physical block ({d})")

    @classmethod
    def from_physical(cls, physical: PhysicalCoupling) -> "CouplingSpec":
        return cls(physical.g, physical)


def dephasing_matrix(spec: BunchingSpectrum, s: int, cutoff: int) -> np.ndarray:
    """B[n, m] = b^(s + n - m), zero outside the stored harmonics."""
    n = np.arange(cutoff + 1)
    idx = s + n[:, None] - n[None, :] + spec.r_max
    out = np.zeros((cutoff + 1, cutoff + 1), complex)
    ok = (idx >= 0) & (idx <= 2 * spec.r_max)
    out[ok] = spec.values[idx[ok]]
    return out


@lru_cache(maxsize=32)
def _scatter_indices(N: int, r_max: int):
    n = np.arange(N + 1)
    s = n
    raw = n[None, None, :] - n[None, :, None] - s[:, None, None] + r_max
    ok = (raw >= 0) & (raw <= 2 * r_max)
    idx = np.clip(raw, 0, 2 * r_max)
    b = np.minimum(n[None, :] + s[:, None], N)
    gather = (s[:, None, None], n[None, :, None], b[:, None, :])
    cols, rows = np.nonzero(n[None, :] + s[:, None] <= N)
    return idx, ok, gather, rows, cols


def scatter(rho_in: DensityMatrix, spec: BunchingSpectrum, M: DisplacementMatrix,
            trace_budget: float | None = None) -> DensityMatrix:
    """Photon state after one electron with harmonics spec has passed.

    rho_f(a, b) = sum_{n, n'} rho_i(n, n') b^((a-n)-(b-n')) M[a, n] conj(M[b, n']),
    evaluated for all output diagonals b - a = s in one batched product.
    """
    N = rho_in.cutoff
    if M.cutoff != N:
        raise ValueError(f"cutoff mismatch: state {N}, displacement {M.cutoff}")
    budget = rho_in.trace_budget if trace_budget is None else trace_budget
    if rho_in.trace_deficit > budget:
        raise TruncationError(f"input trace deficit {rho_in.trace_deficit:.3e} exceeds {budget:.1e}")
    rho = rho_in.entries
    Mm = M.entries
    n = np.arange(N + 1)
    idx, ok, gather, rows, cols = _scatter_indices(N, spec.r_max)
    # W[s, n, n'] = b^(n' - n - s): weight of rho_i(n, n') in output diagonal s
    W = spec.values[idx] * ok
    Y = (W * rho[None, :, :]) @ Mm.conj().T  # Y[s, n, b]
    # keep column b = a + s for each output row a
    Yg = Y[gather]
    diag = np.einsum("ai,sia->sa", Mm, Yg)
    out = np.zeros((N + 1, N + 1), complex)
    out[rows, rows + cols] = diag[cols, rows]
    iu = np.triu_indices(N + 1, 1)
    out[iu[1], iu[0]] = np.conj(out[iu])
    out[n, n] = out[n, n].real
    result = DensityMatrix(out, budget)
    if result.trace_deficit > budget:
        report = validate(result, budget)
        raise TruncationError(
            f"trace deficit {report.trace_deficit:.3e} after scattering exceeds budget {budget:.1e}; "
            f"raise the cutoff above {N}",
            report,
        )
    return result


def spontaneous_single(spec: BunchingSpectrum, coupling: CouplingSpec, cutoff: int) -> DensityMatrix:
    """Closed form for one electron acting on the vacuum: a dephased coherent state."""
    c = coherent_amplitudes(coupling.g, cutoff)
    return DensityMatrix(np.outer(c, np.conj(c)) * dephasing_matrix(spec, 0, cutoff))


def perturbative_update(rho_in: DensityMatrix, coupling: CouplingSpec, spec: BunchingSpectrum) -> DensityMatrix:
    """Second-order expansion of the channel in g, exact prefactor exp(-|g|^2).

    Uses D(g) = exp(-|g|^2/2) exp(g a^dag) exp(-g* a); every term L rho R^dag of
    total order <= 2 is weighted by b^(p_L - p_R), p the net photon change.
    """
    g = coupling.g
    if abs(g) > PERTURBATIVE_LIMIT:
        raise ValueError(f"|g|={abs(g):.3f} exceeds the perturbative limit {PERTURBATIVE_LIMIT}")
    N = rho_in.cutoff
    rho = rho_in.entries
    sq = np.sqrt(np.arange(1, N + 1))
    a = np.diag(sq, 1).astype(complex)
    ad = a.T.copy()
    num = np.diag(np.arange(N + 1)).astype(complex)
    # (operator, order, photon change)
    terms = [
        (np.eye(N + 1), 0, 0),
        (g * ad, 1, 1),
        (-np.conj(g) * a, 1, -1),
        (g**2 / 2 * ad @ ad, 2, 2),
        (np.conj(g) ** 2 / 2 * a @ a, 2, -2),
        (-abs(g) ** 2 * num, 2, 0),
    ]
    out = np.zeros_like(rho)
    for L, oL, pL in terms:
        for R, oR, pR in terms:
            if oL + oR > 2:
                continue
            out += spec[pL - pR] * (L @ rho @ R.conj().T)
    return DensityMatrix(math.exp(-abs(g) ** 2) * out, rho_in.trace_budget)
