"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is echoed in the pytest summary.
Closed-form comparison values are evaluated here from scipy special
functions rather than from the package, so they serve as independent oracles.
"""

import filecmp
import math
import time

import numpy as np
from scipy.signal import find_peaks
from scipy.special import gammaln, jv
from scipy.stats import poisson

from qews import cli
from qews.beam import (
    BeamSpec,
    CorrelatedModulated,
    UncorrelatedModulated,
    Unmodulated,
    bose_einstein_diagonal,
    ensemble_run,
    run_buildup,
    sum_rule_checks,
)
from qews.classical_oracle import (
    ClassicalModeSpec,
    classical_bunching,
    qed_coupling_magnitude,
    spontaneous_photons_per_electron,
)
from qews.fock_core import (
    DensityMatrix,
    TRACE_BUDGET,
    default_cutoff,
    displacement_matrix,
    g2_zero,
    photon_statistics,
)
from qews.interaction import CouplingSpec, scatter, spontaneous_single
from qews.phase_space import moments, wigner
from qews.qew import (
    QEWParams,
    bunching_analytic,
    bunching_numeric,
    bunching_spectrum,
    density_profile_approx,
    density_profile_exact,
    momentum_amplitudes,
)

FIG4 = QEWParams(g_L=0.4315831220286437, sigma_ratio=0.02, t_d_ratio=0.1966149863375614)


def preset_qew(name):
    cfg, _ = cli.resolve_config(cli.load_document(name)["command"], name, [], None)
    return cli.build_qew(cfg["qew"])


def signed_harmonic(p: QEWParams, n: int) -> float:
    """Real amplitude of the n-th harmonic from its Bessel closed form."""
    theta = 2 * math.pi * p.t_d_ratio
    kappa = 1 - p.detuning_ratio
    return (jv(n, 4 * p.g_L * math.sin(n * theta * kappa))
            * math.exp(-0.5 * (2 * n * theta * p.sigma_ratio * kappa) ** 2)
            * math.exp(-n * n * p.detuning_ratio**2 / (8 * p.sigma_ratio**2)))


def test_criterion_01_shape_independence(report):
    g = 1.3j
    N = 60
    diags = []
    for name in ("fig3-unmodulated", "fig3-energy", "fig3-density"):
        p = preset_qew(name)
        spec = bunching_spectrum(p)
        rho = scatter(DensityMatrix.vacuum(N), spec, displacement_matrix(g, N))
        diags.append((photon_statistics(rho), g2_zero(rho)))
    ref = poisson.pmf(np.arange(N + 1), abs(g) ** 2)
    dev_p = max(np.max(np.abs(d - ref)) for d, _ in diags)
    dev_pair = max(np.max(np.abs(a[0] - b[0])) for a in diags for b in diags)
    dev_g2 = max(abs(x - 1) for _, x in diags)
    ok = dev_p <= 1e-10 and dev_pair <= 1e-12 and dev_g2 <= 1e-9
    report(1, ok, f"poisson {dev_p:.1e}, pairwise {dev_pair:.1e}, |g2-1| {dev_g2:.1e}")
    assert ok


def test_criterion_02_dephased_coherent(report):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(5):
        p = QEWParams(g_L=rng.uniform(0.2, 1.5), sigma_ratio=rng.uniform(0.02, 0.08),
                      t_d_ratio=rng.uniform(0, 0.5), phi_0=rng.uniform(0, 2 * math.pi),
                      carrier_phase=rng.uniform(0, 2 * math.pi))
        g = rng.uniform(0.3, 1.5) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        N = default_cutoff(abs(g) ** 2)
        spec = bunching_spectrum(p)
        out = scatter(DensityMatrix.vacuum(N), spec, displacement_matrix(g, N)).entries
        # dephased coherent state written out term by term
        n = np.arange(N + 1)
        amp = np.exp(-abs(g) ** 2 / 2 + n * math.log(abs(g)) - 0.5 * gammaln(n + 1)) * np.exp(1j * n * np.angle(g))
        expect = np.empty((N + 1, N + 1), complex)
        for a in range(N + 1):
            for b in range(N + 1):
                expect[a, b] = amp[a] * np.conj(amp[b]) * spec[a - b]
        worst = max(worst, float(np.max(np.abs(out - expect))))
    ok = worst <= 1e-10
    report(2, ok, f"max elementwise deviation {worst:.1e} over 5 parameter sets")
    assert ok


def test_criterion_03_superradiance(report):
    g = 0.1j
    b1 = abs(signed_harmonic(FIG4, 1))
    t0 = time.perf_counter()
    _, traj = run_buildup(BeamSpec(50, CorrelatedModulated(0.0), FIG4), CouplingSpec(g), cutoff=60)
    elapsed = time.perf_counter() - t0
    N = np.arange(1, 51)
    law = N * 0.01 + N * (N - 1) * 0.01 * b1**2
    rel = float(np.max(np.abs(traj.mean / law - 1)))
    final = traj.mean[-1]
    ok = rel <= 1e-3 and abs(final - 8.516008) < 1e-4 and elapsed < 60 and abs(b1 - 0.572) < 1e-9
    report(3, ok, f"max rel error {rel:.1e}, final <n> {final:.4f} (law {law[-1]:.4f}), {elapsed:.1f} s")
    assert ok


def test_criterion_04_linear_laws(report):
    g = 0.1j
    _, traj = run_buildup(BeamSpec(50, Unmodulated(), FIG4), CouplingSpec(g))
    lin = float(np.max(np.abs(traj.mean - np.arange(1, 51) * 0.01)))
    rep = ensemble_run(BeamSpec(50, UncorrelatedModulated(), FIG4), CouplingSpec(g), 200, 2023)
    z = abs(rep.mean_curve[-1] - 0.5) / rep.stderr_curve[-1]
    ok = lin <= 1e-6 and z <= 3
    report(4, ok, f"unmodulated deviation {lin:.1e}; uncorrelated mean {rep.mean_curve[-1]:.4f} "
                  f"vs 0.5 at {z:.2f} standard errors")
    assert ok


def test_criterion_05_thermal_limit(report):
    rho, _ = run_buildup(BeamSpec(50, Unmodulated(), FIG4), CouplingSpec(0.1j))
    p = photon_statistics(rho)
    be = bose_einstein_diagonal(50, 0.1j, np.arange(len(p)))
    tv = 0.5 * float(np.sum(np.abs(p - be)))
    g2 = g2_zero(rho)
    ok = tv <= 0.05 and abs(g2 - 2) <= 0.1
    report(5, ok, f"total variation {tv:.3f}, g2(0) {g2:.3f}")
    assert ok


def test_criterion_06_bunching_oracle(report):
    worst = {}
    for sig in (0.1, 0.05, 0.02):
        errs = []
        for gL in (0.2, 0.5, 1.5):
            for tau in np.linspace(0, 0.5, 11):
                p = QEWParams(g_L=gL, sigma_ratio=sig, t_d_ratio=float(tau))
                amps = momentum_amplitudes(p)
                for n in range(1, 5):
                    a = bunching_analytic(p, n)
                    b = bunching_numeric(amps, n)
                    errs.append(abs(a - b) / max(abs(a), 1e-3))
        worst[sig] = max(errs)
    seq = [worst[s] for s in (0.1, 0.05, 0.02)]
    # non-increasing, allowing ties at the quadrature noise floor
    monotone = all(b <= a + 1e-12 for a, b in zip(seq, seq[1:]))
    ok = max(seq) <= 1e-3 and monotone
    report(6, ok, "max rel error by sigma ratio " + ", ".join(f"{s}: {worst[s]:.1e}" for s in worst)
           + f"; monotone {monotone}")
    assert ok


def test_criterion_07_variance_formulas(report):
    g = 1.3j
    N = 60
    x = abs(g) ** 2
    worst = 0.0
    sums = []
    for phi in np.linspace(0, 2 * math.pi, 16, endpoint=False):
        p = QEWParams(g_L=FIG4.g_L, sigma_ratio=FIG4.sigma_ratio, t_d_ratio=FIG4.t_d_ratio, phi_0=float(phi))
        m = moments(spontaneous_single(bunching_spectrum(p), CouplingSpec(g), N))
        b1 = signed_harmonic(p, 1)
        b2 = signed_harmonic(p, 2)
        base = 0.5 + x * (1 - b1 * b1)
        # g = i|g| turns cos 2 phi_0 into -cos 2 phi_0 relative to real g
        osc = x * (b2 - b1 * b1) * math.cos(2 * (phi - math.pi / 2))
        worst = max(worst, abs(m.dq2 - (base - osc)), abs(m.dp2 - (base + osc)))
        sums.append(m.dq2 + m.dp2)
    spread = float(np.ptp(sums))
    gb = 0.1j
    _, traj = run_buildup(BeamSpec(50, CorrelatedModulated(0.0), FIG4), CouplingSpec(gb), cutoff=60)
    dc2 = np.array([traj.moments(j).dc2 for j in range(1, 51)])
    slope = np.polyfit(np.arange(1, 51), dc2, 1)[0]
    b1 = signed_harmonic(FIG4, 1)
    expect = 0.01 * (1 - b1 * b1)
    rel = abs(slope / expect - 1)
    ok = worst <= 1e-8 and spread <= 1e-10 and rel <= 1e-3
    report(7, ok, f"closed-form deviation {worst:.1e}, dq2+dp2 spread {spread:.1e}, "
                  f"center-variance slope rel error {rel:.1e}")
    assert ok


def test_criterion_08_wigner_integrity(report):
    vac = wigner(DensityMatrix.vacuum(10))
    peak = vac.values[100, 100]
    rho_c, _ = run_buildup(BeamSpec(50, CorrelatedModulated(0.0), FIG4), CouplingSpec(0.1j), cutoff=60)
    rho_u, _ = run_buildup(BeamSpec(50, Unmodulated(), FIG4), CouplingSpec(0.1j))
    norms = [abs(vac.normalization - 1)]
    mom = 0.0
    for rho in (rho_c, rho_u):
        w = wigner(rho)
        norms.append(abs(w.normalization - 1))
        a, b = w.moments(), moments(rho)
        mom = max(mom, abs(a.q - b.q), abs(a.p - b.p), abs(a.dq2 - b.dq2), abs(a.dp2 - b.dp2))
    th = np.linspace(0, 2 * math.pi, 13)
    circ = 0.0
    for r in (0.5, 1.5, 3.0):
        vals = [wigner(rho_u, [r * math.cos(t)], [r * math.sin(t)]).values[0, 0] for t in th]
        circ = max(circ, float(np.ptp(vals)))
    m = wigner(rho_c).moments()
    offset = (m.q**2 + m.p**2) / 2
    expect = 50**2 * 0.01 * signed_harmonic(FIG4, 1) ** 2
    off_rel = abs(offset / expect - 1)
    ok = (max(norms) <= 1e-6 and abs(peak - 1 / math.pi) <= 1e-6 and mom <= 1e-4
          and circ <= 1e-6 and off_rel <= 0.05)
    report(8, ok, f"normalization {max(norms):.1e}, vacuum peak {abs(peak - 1 / math.pi):.1e}, "
                  f"moments {mom:.1e}, circular {circ:.1e}, offset rel {off_rel:.1e}")
    assert ok


def test_criterion_09_density_profile(report):
    p = preset_qew("figS2")
    amps = momentum_amplitudes(p)
    z = np.linspace(-60, 60, 24001)
    exact = density_profile_exact(amps, z)
    approx = density_profile_approx(p, z)
    l2 = float(np.linalg.norm(exact - approx) / np.linalg.norm(exact))
    near = np.abs(z) <= math.pi
    pk, _ = find_peaks(np.where(near, exact, 0.0))
    i = pk[np.argmax(exact[pk])]
    y0, y1, y2 = exact[i - 1 : i + 2]
    h = z[1] - z[0]
    zp = z[i] + h * 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2)
    expect = p.phi_0 + math.pi / 2 + (math.pi if signed_harmonic(p, 1) < 0 else 0.0)
    dphi = abs(math.remainder(zp - expect, 2 * math.pi))
    ok = l2 <= 0.05 and dphi <= 0.02
    report(9, ok, f"relative L2 {l2:.2e}, peak phase {zp:.4f} vs {math.remainder(expect, 2 * math.pi):.4f}")
    assert ok


def test_criterion_10_classical_identity(report):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(1000):
        mode = ClassicalModeSpec(
            eta_q=10 ** rng.uniform(-2, 0), n_eff=1 + 10 ** rng.uniform(-2, 0.5),
            L=10 ** rng.uniform(-6, -3), L_c=10 ** rng.uniform(-5, -2),
            A_em=10 ** rng.uniform(-13, -10), omega=2 * math.pi * 299792458.0 / 10 ** rng.uniform(-7, -5),
        )
        a = spontaneous_photons_per_electron(mode)
        b = qed_coupling_magnitude(mode)
        worst = max(worst, abs(a - b) / b)
    omega = 2.0 * math.pi
    n_e = 50
    draws = []
    for _ in range(4000):
        mb = classical_bunching(omega, rng.uniform(0, 1000, n_e))
        draws.append(abs(mb) ** 2)
    draws = np.array(draws)
    z = abs(draws.mean() - 1 / n_e) / (draws.std(ddof=1) / math.sqrt(len(draws)))
    ok = worst <= 1e-12 and z <= 3 and draws.max() <= 1
    report(10, ok, f"max rel difference {worst:.1e}; |M_b|^2 mean {draws.mean():.5f} vs {1 / n_e} "
                   f"({z:.2f} s.e.), max {draws.max():.3f}")
    assert ok


def test_criterion_11_channel_sanity(report):
    rng = np.random.default_rng(11)
    herm = trace = 0.0
    lam = math.inf
    for _ in range(120):
        p = QEWParams(g_L=rng.uniform(0, 1.5), sigma_ratio=rng.uniform(0.02, 0.1),
                      t_d_ratio=rng.uniform(0, 0.5), phi_0=rng.uniform(0, 2 * math.pi))
        spec = bunching_spectrum(p, picture=str(rng.choice(["schrodinger", "interaction"])),
                                 arrival_phase=rng.uniform(0, 2 * math.pi))
        g = rng.uniform(0.05, 1.2) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        k = int(rng.integers(1, 6))
        X = rng.normal(size=(k + 1, k + 1)) + 1j * rng.normal(size=(k + 1, k + 1))
        N = default_cutoff(k + abs(g) ** 2) + 10
        r = np.zeros((N + 1, N + 1), complex)
        r[: k + 1, : k + 1] = X @ X.conj().T
        r /= np.trace(r).real
        rho = DensityMatrix(r)
        out = scatter(rho, spec, displacement_matrix(g, N)).entries
        herm = max(herm, float(np.max(np.abs(out - out.conj().T))))
        trace = max(trace, abs(np.trace(out).real - 1))
        lam = min(lam, float(np.linalg.eigvalsh(out)[0]))
    rules = sum_rule_checks(0.1, 20)
    ok = herm <= 1e-12 and trace <= TRACE_BUDGET and lam >= -1e-9 and rules["ok"]
    report(11, ok, f"hermiticity {herm:.1e}, trace change {trace:.1e}, min eigenvalue {lam:.1e}; "
                   f"sum rules norm {rules['norm']:.6f}, first moment {rules['first_moment']:.4f}, "
                   f"slope {rules['slope_extrapolated']:.5f}")
    assert ok


def test_criterion_12_reproducibility(report, tmp_path):
    mismatched = []
    for name in cli.preset_names():
        command = cli.load_document(name)["command"]
        a, b = tmp_path / f"{name}-a", tmp_path / f"{name}-b"
        for out in (a, b):
            assert cli.main([command, "--config", name, "--out", str(out)]) == 0
        files = sorted(f.name for f in a.iterdir())
        _, diff, err = filecmp.cmpfiles(a, b, files, shallow=False)
        if diff or err or files != sorted(f.name for f in b.iterdir()):
            mismatched.append(name)
    ok = not mismatched
    report(12, ok, f"{len(cli.preset_names())} presets rerun; mismatched: {mismatched or 'none'}")
    assert ok
