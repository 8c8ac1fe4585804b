"""Truncated Fock-space primitives: density matrices, displacement matrices
and photon-number statistics of a single cavity mode."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

TRACE_BUDGET = 1e-8
HERMITIAN_TOL = 1e-12
EIGEN_TOL = 1e-10


class TruncationError(RuntimeError):
    """Raised when a state loses more norm to the cutoff than the budget allows."""

    def __init__(self, message: str, diagnostics: "Diagnostics | None" = None, step: int | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics
        self.step = step


@dataclass(frozen=True)
class DensityMatrix:
    """Photon state on Fock levels 0..cutoff."""

    entries: np.ndarray
    trace_budget: float = TRACE_BUDGET

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise ValueError(f"density matrix must be square with cutoff >= 1, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def trace_deficit(self) -> float:
        return 1.0 - self.trace

    @classmethod
    def vacuum(cls, cutoff: int) -> "DensityMatrix":
        _check_cutoff(cutoff)
        rho = np.zeros((cutoff + 1, cutoff + 1), complex)
        rho[0, 0] = 1.0
        return cls(rho)

    @classmethod
    def fock(cls, n: int, cutoff: int) -> "DensityMatrix":
        _check_cutoff(cutoff)
        if not 0 <= n <= cutoff:
            raise ValueError(f"Fock level {n} outside 0..{cutoff}")
        rho = np.zeros((cutoff + 1, cutoff + 1), complex)
        rho[n, n] = 1.0
        return cls(rho)

    @classmethod
    def diagonal(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=float)).astype(complex))


@dataclass(frozen=True)
class DisplacementMatrix:
    """Matrix elements M[n_f, n_i] = <n_f|D(g)|n_i> on a truncated basis."""

    g: complex
    entries: np.ndarray

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1


@dataclass(frozen=True)
class Diagnostics:
    hermiticity_defect: float
    trace_deficit: float
    min_eigenvalue: float
    hermitian_ok: bool
    trace_ok: bool
    positive_ok: bool
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.hermitian_ok and self.trace_ok and self.positive_ok


def _check_cutoff(cutoff) -> None:
    if not isinstance(cutoff, (int, np.integer)) or isinstance(cutoff, bool) or cutoff < 1:
        raise ValueError(f"cutoff must be an integer >= 1, got {cutoff!r}")


def default_cutoff(mu: float) -> int:
    """Cutoff large enough that Poisson or thermal tails of mean mu are below ~1e-8."""
    mu = max(float(mu), 0.0)
    return int(math.ceil(mu + 8.0 * math.sqrt(mu + 1.0) + 20.0))


def unitary_block(g: complex, cutoff: int) -> int:
    """Size K of the leading block on which columns of the truncated D(g) keep
    their norm to ~1e-8.

    D(g)|n> spreads photon numbers roughly over (sqrt(n) +- |g|)^2; beyond that
    the amplitudes fall off faster than Gaussian, so a margin of 1.5 in
    sqrt(n) units is enough at the 1e-8 level for |g| <= 3, cutoff <= 400.
    """
    r = math.sqrt(cutoff) - abs(g) - 1.5
    return max(int(math.floor(r * r)) if r > 0 else 0, 0)


def _diagonal_sweep(gs: np.ndarray, cutoff: int):
    """Yield (n, values) with values[k, a] = <n+a|D(gs[k])|n> for a = 0..cutoff-n.

    Each diagonal a is a normalized associated-Laguerre sequence in n,
    advanced with the three-term recurrence and rescaled in the log domain.
    """
    gs = np.atleast_1d(np.asarray(gs, dtype=complex))
    x = np.abs(gs) ** 2
    alpha = np.arange(cutoff + 1)
    absg = np.abs(gs)
    zero = absg == 0.0
    safe = np.where(zero, 1.0, absg)
    # coherent column: e^{-x/2} |g|^a / sqrt(a!)
    scale = -x[:, None] / 2 + alpha[None, :] * np.log(safe)[:, None] - 0.5 * gammaln(alpha + 1)[None, :]
    phase = np.exp(1j * np.outer(np.angle(gs), alpha))
    s_prev = np.zeros((len(gs), cutoff + 1))
    s_cur = np.ones((len(gs), cutoff + 1))
    if zero.any():
        # D(0) = I: only the main diagonal survives
        s_cur[zero, 1:] = 0.0
        scale[zero, :] = 0.0

    def values(n):
        w = cutoff + 1 - n
        with np.errstate(over="ignore", under="ignore"):
            return s_cur[:, :w] * np.exp(scale[:, :w]) * phase[:, :w]

    yield 0, values(0)
    xs = x[:, None]
    for n in range(cutoff):
        s_next = ((2 * n + 1 + alpha - xs) * s_cur - np.sqrt(n * (n + alpha)) * s_prev) / np.sqrt(
            (n + 1) * (n + 1 + alpha)
        )
        s_prev, s_cur = s_cur, s_next
        f = np.abs(s_cur)
        big = f > 1e50
        if big.any():
            s_cur[big] /= f[big]
            s_prev[big] /= f[big]
            scale[big] += np.log(f[big])
        yield n + 1, values(n + 1)


def displacement_matrix(g: complex, cutoff: int) -> DisplacementMatrix:
    """Truncated displacement operator D(g) in the Fock basis."""
    _check_cutoff(cutoff)
    g = complex(g)
    M = np.zeros((cutoff + 1, cutoff + 1), complex)
    for n, vals in _diagonal_sweep(np.array([g]), cutoff):
        a = np.arange(cutoff + 1 - n)
        M[n + a, n] = vals[0]
    iu = np.triu_indices(cutoff + 1, 1)
    sign = np.where((iu[1] - iu[0]) % 2 == 0, 1.0, -1.0)
    M[iu] = sign * np.conj(M[iu[1], iu[0]])
    M.setflags(write=False)
    return DisplacementMatrix(g, M)


def coherent_amplitudes(g: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    g = complex(g)
    if g == 0:
        out = np.zeros(cutoff + 1, complex)
        out[0] = 1.0
        return out
    logmag = -abs(g) ** 2 / 2 + n * math.log(abs(g)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(g))


def coherent_density(g: complex, cutoff: int) -> DensityMatrix:
    _check_cutoff(cutoff)
    c = coherent_amplitudes(g, cutoff)
    return DensityMatrix(np.outer(c, np.conj(c)))


def photon_statistics(rho: DensityMatrix) -> np.ndarray:
    return np.diagonal(rho.entries).real.copy()


def mean_photon(rho: DensityMatrix) -> float:
    p = photon_statistics(rho)
    return float(np.dot(np.arange(len(p)), p))


def g2_zero(rho: DensityMatrix) -> float:
    p = photon_statistics(rho)
    n = np.arange(len(p))
    mean = float(np.dot(n, p))
    if mean <= 0.0:
        raise ValueError("g2(0) is undefined for a state with zero mean photon number")
    return float(np.dot(n * (n - 1), p)) / mean**2


def validate(rho: DensityMatrix, trace_budget: float | None = None,
             hermitian_tol: float = HERMITIAN_TOL, eigen_tol: float = EIGEN_TOL) -> Diagnostics:
    budget = rho.trace_budget if trace_budget is None else trace_budget
    a = rho.entries
    herm = float(np.max(np.abs(a - a.conj().T)))
    tr = np.trace(a)
    deficit = 1.0 - float(tr.real)
    lam = float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])
    messages = []
    herm_ok = herm <= hermitian_tol
    trace_ok = -1e-12 <= deficit <= budget and abs(tr.imag) <= hermitian_tol * len(a)
    pos_ok = lam >= -eigen_tol
    if not herm_ok:
        messages.append(f"hermiticity defect {herm:.3e} exceeds {hermitian_tol:.1e}")
    if not trace_ok:
        messages.append(f"trace deficit {deficit:.3e} outside [-1e-12, {budget:.1e}]")
    if not pos_ok:
        messages.append(f"smallest eigenvalue {lam:.3e} below -{eigen_tol:.1e}")
    return Diagnostics(herm, deficit, lam, herm_ok, trace_ok, pos_ok, messages)


def ladder_expectations(rho: DensityMatrix) -> tuple[complex, complex, float]:
    """Return <a>, <a^2>, <a^dag a> computed directly from matrix elements."""
    r = rho.entries
    n = np.arange(1, rho.cutoff + 1)
    a1 = complex(np.sum(np.sqrt(n) * np.diagonal(r, -1)))
    m = np.arange(2, rho.cutoff + 1)
    a2 = complex(np.sum(np.sqrt(m * (m - 1)) * np.diagonal(r, -2)))
    return a1, a2, mean_photon(rho)


def rotate(rho: DensityMatrix, angle: float) -> DensityMatrix:
    """Phase-space rotation exp(i angle n) rho exp(-i angle n)."""
    ph = np.exp(1j * angle * np.arange(rho.cutoff + 1))
    return DensityMatrix(ph[:, None] * rho.entries * np.conj(ph)[None, :], rho.trace_budget)


def embed(rho: DensityMatrix, cutoff: int) -> DensityMatrix:
    """Zero-pad a state onto a larger truncated basis."""
    if cutoff < rho.cutoff:
        raise ValueError(f"cannot embed cutoff {rho.cutoff} into {cutoff}")
    out = np.zeros((cutoff + 1, cutoff + 1), complex)
    out[: rho.cutoff + 1, : rho.cutoff + 1] = rho.entries
    return DensityMatrix(out, rho.trace_budget)
