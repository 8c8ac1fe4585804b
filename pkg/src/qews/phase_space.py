"""Wigner distributions and quadrature moments of single-mode photon states.

Quadratures q = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2), vacuum variance 1/2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .fock_core import DensityMatrix, _diagonal_sweep, ladder_expectations, mean_photon

NORM_TOL = 1e-6


@dataclass(frozen=True)
class QuadratureMoments:
    q: float
    p: float
    dq2: float
    dp2: float

    @property
    def dc2(self) -> float:
        return (self.dq2 + self.dp2) / 2

    @property
    def dr2(self) -> float:
        return (self.dq2 - self.dp2) / 2

    @property
    def offset(self) -> float:
        return (self.q**2 + self.p**2) / 2


@dataclass(frozen=True)
class WignerGrid:
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray  # values[i, j] = W(q[i], p[j])
    normalization: float
    warnings: list = field(default_factory=list)

    def integrate(self, weight: np.ndarray | None = None) -> float:
        w = self.values if weight is None else self.values * weight
        return float(trapezoid(trapezoid(w, self.p, axis=1), self.q))

    def marginal_q(self) -> np.ndarray:
        return trapezoid(self.values, self.p, axis=1)

    def moments(self) -> QuadratureMoments:
        Q, P = np.meshgrid(self.q, self.p, indexing="ij")
        norm = self.integrate()
        mq = self.integrate(Q) / norm
        mp = self.integrate(P) / norm
        vq = self.integrate((Q - mq) ** 2) / norm
        vp = self.integrate((P - mp) ** 2) / norm
        return QuadratureMoments(mq, mp, vq, vp)


def moments_from_ladder(a1: complex, a2: complex, n: float) -> QuadratureMoments:
    """Quadrature moments from <a>, <a^2> and <a^dag a>."""
    q = math.sqrt(2) * a1.real
    p = math.sqrt(2) * a1.imag
    dq2 = 0.5 + n + a2.real - q * q
    dp2 = 0.5 + n - a2.real - p * p
    return QuadratureMoments(q, p, dq2, dp2)


def moments(rho: DensityMatrix) -> QuadratureMoments:
    return moments_from_ladder(*ladder_expectations(rho))


def default_extent(rho: DensityMatrix) -> float:
    return math.sqrt(2 * max(mean_photon(rho), 0.0)) + 4.0


def wigner(rho: DensityMatrix, q: np.ndarray | None = None, p: np.ndarray | None = None,
           points: int = 201, chunk: int = 8192) -> WignerGrid:
    """W(q, p) = (1/pi) Tr[rho D(2 alpha) Parity], alpha = (q + i p)/sqrt(2).

    The displaced-parity trace is accumulated diagonal by diagonal of D while
    the displacement recurrence runs, vectorized over grid points.
    """
    if q is None or p is None:
        L = default_extent(rho)
        q = np.linspace(-L, L, points) if q is None else q
        p = np.linspace(-L, L, points) if p is None else p
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    Q, P = np.meshgrid(q, p, indexing="ij")
    gs = (math.sqrt(2) * (Q + 1j * P)).ravel()
    r = rho.entries
    N = rho.cutoff
    out = np.empty(len(gs))
    for i in range(0, len(gs), chunk):
        acc = np.zeros(len(gs[i : i + chunk]))
        for n, vals in _diagonal_sweep(gs[i : i + chunk], N):
            row = r[n, n:]
            term = 2.0 * np.real(vals @ row) - np.real(vals[:, 0]) * row[0].real
            acc += term if n % 2 == 0 else -term
        out[i : i + chunk] = acc / math.pi
    W = out.reshape(Q.shape)
    warnings = []
    norm = float(trapezoid(trapezoid(W, p, axis=1), q)) if len(q) > 1 and len(p) > 1 else float("nan")
    trace = rho.trace
    if len(q) > 1 and len(p) > 1 and abs(norm - trace) > NORM_TOL:
        L = default_extent(rho)
        warnings.append(
            f"grid integral {norm:.8f} differs from trace {trace:.8f}; grid should cover +-{L:.2f} "
            f"with spacing well below 1"
        )
    return WignerGrid(q, p, W, norm, warnings)


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions <x|n> for n = 0..n_max (rows)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1, len(x)))
    out[0] = math.pi**-0.25 * np.exp(-x * x / 2)
    if n_max >= 1:
        out[1] = math.sqrt(2) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_distribution(rho: DensityMatrix, x: np.ndarray) -> np.ndarray:
    """<q|rho|q> from the Fock-basis wavefunctions."""
    h = hermite_functions(rho.cutoff, x)
    return np.real(np.einsum("nx,nm,mx->x", h, rho.entries, h))


def variance_closed_single(g: complex, b1: float, b2: float, phase: float) -> tuple[float, float]:
    """Quadrature variances after one electron acting on the vacuum.

    b1, b2 are the signed real amplitudes of the first two harmonics and
    phase = phi_0 + omega_L t_d. For real g this is the familiar
    1/2 + |g|^2(1-b1^2) -/+ |g|^2(b2 - b1^2) cos 2 phase pair; the phase of g
    enters as a shift.
    """
    g = complex(g)
    x = abs(g) ** 2
    base = 0.5 + x * (1 - b1 * b1)
    osc = x * (b2 - b1 * b1) * math.cos(2 * (phase - cmath.phase(g)))
    return base - osc, base + osc


def variance_closed_beam(n_e: int, g: complex, b1: float, b2: float, phi_l) -> tuple[float, float, float, float]:
    """(dq2, dp2, dc2, dr2) after n_e electrons with laser phases phi_l (scalar or one per electron)."""
    g = complex(g)
    x = abs(g) ** 2
    phis = np.broadcast_to(np.asarray(phi_l, dtype=float), (n_e,))
    dc2 = 0.5 + n_e * x * (1 - b1 * b1)
    dr2 = -x * (b2 - b1 * b1) * float(np.sum(np.cos(2 * (phis + cmath.phase(g)))))
    return dc2 + dr2, dc2 - dr2, dc2, dr2


def offset_closed(n_e: int, g: complex, b1: float) -> float:
    """(<q>^2 + <p>^2)/2 for a modulation-correlated beam."""
    return n_e**2 * abs(g) ** 2 * abs(b1) ** 2
