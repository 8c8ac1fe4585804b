"""Command-line front end: `qews <command> --config FILE [--set key=value] ... --out DIR`."""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .beam import (
    BeamSpec,
    CorrelatedModulated,
    PartiallyCoherent,
    UncorrelatedModulated,
    Unmodulated,
    bose_einstein_diagonal,
    ensemble_run,
    expected_photon_correlated,
    run_buildup,
)
from .classical_oracle import (
    ClassicalModeSpec,
    beam_emission,
    qed_coupling_magnitude,
    spontaneous_photons_per_electron,
)
from .fock_core import (
    DensityMatrix,
    TruncationError,
    default_cutoff,
    displacement_matrix,
    g2_zero,
    mean_photon,
    photon_statistics,
)
from .interaction import CouplingSpec, spontaneous_single, scatter
from .phase_space import moments, variance_closed_single, wigner
from .qew import (
    BunchingSpectrum,
    GridError,
    PhysicalQEW,
    QEWParams,
    bunching_analytic,
    bunching_numeric,
    bunching_spectrum,
    default_z_grid,
    density_profile_approx,
    density_profile_exact,
    momentum_amplitudes,
)
from .serialization import container, density_from_json, density_payload, write_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("single", "buildup", "ensemble", "bunching", "classical", "wigner")


class ConfigError(ValueError):
    pass


QEW_DEFAULTS = {
    "g_L": 0.0,
    "sigma_ratio": 0.05,
    "t_d_ratio": 0.0,
    "phi_0": 0.0,
    "detuning_ratio": 0.0,
    "carrier_phase": 0.0,
    "physical": None,
}
WIGNER_DEFAULTS = {"enabled": False, "points": 201, "extent": None}
BEAM_DEFAULTS = {
    "n_e": 50,
    "mode": {"type": "correlated", "phi_L": 0.0},
    "mean_spacing": 100.0,
    "r_max": None,
}
DEFAULTS = {
    "single": {
        "qew": QEW_DEFAULTS,
        "coupling": {"g": [0.0, 1.3]},
        "picture": "schrodinger",
        "cutoff": None,
        "trace_budget": 1e-8,
        "wigner": WIGNER_DEFAULTS,
        "phi_0_sweep": None,
    },
    "buildup": {
        "qew": QEW_DEFAULTS,
        "coupling": {"g": [0.0, 0.1]},
        "beam": BEAM_DEFAULTS,
        "cutoff": None,
        "trace_budget": 1e-8,
        "wigner": WIGNER_DEFAULTS,
    },
    "ensemble": {
        "qew": QEW_DEFAULTS,
        "coupling": {"g": [0.0, 0.1]},
        "beam": BEAM_DEFAULTS,
        "events": 200,
        "cutoff": None,
        "trace_budget": 1e-8,
        "wigner": WIGNER_DEFAULTS,
    },
    "bunching": {
        "qew": QEW_DEFAULTS,
        "orders": [0, 1, 2, 3, 4],
        "t_d_ratios": {"start": 0.0, "stop": 0.5, "num": 11},
        "samples_per_recoil": 64,
        "profile": {"enabled": False, "points_per_period": 64},
    },
    "classical": {
        "mode": {
            "eta_q": 0.5,
            "n_eff": 1.5,
            "L": 20e-6,
            "L_c": 60e-6,
            "A_em": 0.3e-12,
            "wavelength_m": 800e-9,
        },
        "n_e": [1, 10, 50],
        "m_b": [0.0, 0.5, 1.0],
        "scaling_factors": [0.5, 1.0, 2.0],
    },
    "wigner": {
        "input": None,
        "wigner": {"enabled": True, "points": 201, "extent": None},
    },
}
FREE_KEYS = {"physical", "mode", "phi_0_sweep", "t_d_ratios", "input"}


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("qews.presets").iterdir() if p.name.endswith(".json"))


def load_document(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if path.is_file():
        text = path.read_text()
    else:
        res = resources.files("qews.presets").joinpath(f"{name_or_path}.json")
        if not res.is_file():
            raise ConfigError(f"no config file or preset named {name_or_path!r}; presets: {', '.join(preset_names())}")
        text = res.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{name_or_path}: invalid JSON ({err})") from err
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def merge(defaults: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        where = f"{path}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict) and key not in FREE_KEYS:
            if not isinstance(val, dict):
                raise ConfigError(f"{where} must be an object")
            out[key] = merge(defaults[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def apply_override(doc: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = doc
    for p in parts[:-1]:
        child = node.get(p)
        if child is None:
            child = node[p] = {}
        if not isinstance(child, dict):
            raise ConfigError(f"cannot set {key!r}: {p!r} is not an object")
        node = child
    node[parts[-1]] = value


def resolve_config(command: str, config: str | None, overrides: list[str], seed: int | None) -> tuple[dict, int]:
    doc = load_document(config) if config else {}
    doc = dict(doc)
    preset_cmd = doc.pop("command", command)
    if preset_cmd != command:
        raise ConfigError(f"config is for command {preset_cmd!r}, not {command!r}")
    doc_seed = doc.pop("seed", 0)
    doc.pop("description", None)
    for item in overrides:
        apply_override(doc, item)
    cfg = merge(DEFAULTS[command], doc)
    run_seed = doc_seed if seed is None else seed
    if not isinstance(run_seed, int) or run_seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {run_seed!r}")
    return cfg, run_seed


def to_complex(value) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    raise ConfigError(f"complex values are written as [re, im], got {value!r}")


def build_qew(block: dict) -> QEWParams:
    phys = block.get("physical")
    if phys:
        try:
            physical = PhysicalQEW(**phys)
        except TypeError as err:
            raise ConfigError(f"qew.physical: {err}") from err
        return QEWParams.from_physical(physical, float(block["g_L"]), float(block["phi_0"]),
                                       float(block["detuning_ratio"]))
    kw = {k: float(v) for k, v in block.items() if k != "physical"}
    return QEWParams(**kw)


def build_mode(block: dict, seed: int):
    kind = block.get("type")
    extra = {k: v for k, v in block.items() if k != "type"}
    try:
        if kind == "unmodulated":
            return Unmodulated(**extra)
        if kind == "correlated":
            return CorrelatedModulated(**{k: float(v) for k, v in extra.items()})
        if kind == "uncorrelated":
            return UncorrelatedModulated(seed=seed, **extra)
        if kind == "partial":
            return PartiallyCoherent(seed=seed, **{k: float(v) for k, v in extra.items()})
    except TypeError as err:
        raise ConfigError(f"beam.mode: {err}") from err
    raise ConfigError(f"beam.mode.type must be unmodulated, correlated, uncorrelated or partial, got {kind!r}")


def build_beam(cfg: dict, seed: int) -> BeamSpec:
    b = cfg["beam"]
    return BeamSpec(int(b["n_e"]), build_mode(b["mode"], seed), build_qew(cfg["qew"]),
                    float(b["mean_spacing"]), b["r_max"], seed)


def linspace(block) -> np.ndarray:
    if isinstance(block, list):
        return np.asarray(block, dtype=float)
    try:
        return np.linspace(float(block["start"]), float(block["stop"]), int(block["num"]))
    except (KeyError, TypeError) as err:
        raise ConfigError(f"ranges are lists or {{start, stop, num}} objects, got {block!r}") from err


class Writer:
    def __init__(self, out: Path, cfg: dict, seed: int, command: str):
        self.out = out
        self.meta = {"command": command, "config": cfg}
        self.seed = seed
        out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def json(self, name: str, payload: dict) -> None:
        write_json(self.out / name, container(payload, self.meta, self.seed, __version__))
        self.files.append(name)

    def csv(self, name: str, header: list[str], rows) -> None:
        header = list(header)
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def density(self, name: str, rho: DensityMatrix, extra: dict | None = None) -> None:
        payload = density_payload(rho)
        if extra:
            payload["summary"] = extra
        self.json(name, payload)

    def wigner(self, stem: str, rho: DensityMatrix, block: dict) -> None:
        extent = block.get("extent")
        pts = int(block.get("points", 201))
        if extent is None:
            grid = wigner(rho, points=pts)
        else:
            axis = np.linspace(-float(extent), float(extent), pts)
            grid = wigner(rho, axis, axis)
        Q, P = np.meshgrid(grid.q, grid.p, indexing="ij")
        self.csv(f"{stem}.csv", ["q", "p", "W"], zip(Q.ravel(), P.ravel(), grid.values.ravel()))
        self.json(f"{stem}.json", {
            "q": grid.q, "p": grid.p, "normalization": grid.normalization, "warnings": grid.warnings,
        })
        for w in grid.warnings:
            print(f"warning: {w}", file=sys.stderr)


def summary(rho: DensityMatrix) -> dict:
    m = moments(rho)
    mean = mean_photon(rho)
    return {
        "mean_photon": mean,
        "g2_zero": g2_zero(rho) if mean > 0 else None,
        "q": m.q, "p": m.p, "dq2": m.dq2, "dp2": m.dp2, "dc2": m.dc2, "dr2": m.dr2,
        "trace_deficit": rho.trace_deficit,
    }


def cmd_single(cfg: dict, seed: int, w: Writer) -> None:
    params = build_qew(cfg["qew"])
    g = to_complex(cfg["coupling"]["g"])
    coupling = CouplingSpec(g)
    cutoff = cfg["cutoff"] or default_cutoff(abs(g) ** 2)
    spec = bunching_spectrum(params, picture=cfg["picture"]) if params.modulated else None
    spec = spec or BunchingSpectrum.unmodulated()
    rho = scatter(DensityMatrix(DensityMatrix.vacuum(cutoff).entries, cfg["trace_budget"]), spec,
                  displacement_matrix(g, cutoff))
    w.density("state.json", rho, summary(rho))
    p = photon_statistics(rho)
    poisson = spontaneous_single(BunchingSpectrum.unmodulated(), coupling, cutoff)
    w.csv("photon_statistics.csv", ["n", "p_n", "poisson"],
          zip(range(len(p)), p, photon_statistics(poisson)))
    if cfg["wigner"]["enabled"]:
        w.wigner("wigner", rho, cfg["wigner"])
    if cfg["phi_0_sweep"]:
        rows = []
        for phi in linspace(cfg["phi_0_sweep"]):
            pp = replace(params, phi_0=float(phi), physical=None)
            s = bunching_spectrum(pp)
            m = moments(spontaneous_single(s, coupling, cutoff))
            b1 = float(np.real(s[1] * np.exp(1j * (pp.carrier_phase + pp.phi_0 + math.pi / 2))))
            b2 = float(np.real(s[2] * np.exp(2j * (pp.carrier_phase + pp.phi_0 + math.pi / 2))))
            cq, cp = variance_closed_single(g, b1, b2, pp.phi_0 + pp.carrier_phase)
            rows.append([phi, m.dq2, m.dp2, cq, cp])
        w.csv("variances.csv", ["phi_0", "dq2", "dp2", "dq2_closed", "dp2_closed"], rows)


def _closed_columns(beam: BeamSpec, g: complex) -> tuple[float, bool]:
    b1 = abs(bunching_analytic(beam.template, 1)) if beam.template.modulated else 0.0
    correlated = isinstance(beam.mode, (CorrelatedModulated,)) and beam.template.modulated
    return (b1 if correlated else 0.0), correlated


def cmd_buildup(cfg: dict, seed: int, w: Writer) -> None:
    beam = build_beam(cfg, seed)
    g = to_complex(cfg["coupling"]["g"])
    rho, traj = run_buildup(beam, CouplingSpec(g), cfg["cutoff"], trace_budget=cfg["trace_budget"])
    b1, _ = _closed_columns(beam, g)
    rows = []
    for row in traj.table():
        j = int(row[0])
        rows.append([j, *row[1:], expected_photon_correlated(j, g, b1), j * abs(g) ** 2])
    w.csv("trajectory.csv", ["j", "mean_photon", "dq2", "dp2", "dc2", "dr2", "trace_deficit",
                             "law_correlated", "law_linear"], rows)
    w.density("state.json", rho, summary(rho))
    p = photon_statistics(rho)
    w.csv("photon_statistics.csv", ["n", "p_n", "bose_einstein"],
          zip(range(len(p)), p, bose_einstein_diagonal(beam.n_e, g, np.arange(len(p)))))
    if cfg["wigner"]["enabled"]:
        w.wigner("wigner", rho, cfg["wigner"])


def cmd_ensemble(cfg: dict, seed: int, w: Writer, jobs: int = 1) -> None:
    beam = build_beam(cfg, seed)
    g = to_complex(cfg["coupling"]["g"])
    events = int(cfg["events"])
    rep = ensemble_run(beam, CouplingSpec(g), events, seed, cfg["cutoff"], jobs=jobs,
                       trace_budget=cfg["trace_budget"])
    w.csv("events.csv", ["event", "mean_photon", "q", "p", "dq2", "dp2", "phi_L_first"],
          [[int(r[0]), *r[1:]] for r in rep.summaries()])
    b1, _ = _closed_columns(beam, g)
    rows = [[j + 1, rep.mean_curve[j], rep.stderr_curve[j], expected_photon_correlated(j + 1, g, b1),
             (j + 1) * abs(g) ** 2] for j in range(beam.n_e)]
    w.csv("mean_trajectory.csv", ["j", "mean_photon", "stderr", "law_correlated", "law_linear"], rows)
    w.density("averaged_state.json", rep.averaged, summary(rep.averaged))
    if cfg["wigner"]["enabled"]:
        w.wigner("wigner_averaged", rep.averaged, cfg["wigner"])


def cmd_bunching(cfg: dict, seed: int, w: Writer) -> None:
    base = build_qew(cfg["qew"])
    spr = int(cfg["samples_per_recoil"])
    rows = []
    sweep = cfg["t_d_ratios"]
    params = [base] if sweep is None else [replace(base, t_d_ratio=float(t), physical=None) for t in linspace(sweep)]
    for p in params:
        tau = p.t_d_ratio
        amps = momentum_amplitudes(p, samples_per_recoil=spr)
        for n in cfg["orders"]:
            a = bunching_analytic(p, int(n))
            b = bunching_numeric(amps, int(n))
            rows.append([int(n), tau, a.real, a.imag, b.real, b.imag, abs(a - b)])
    w.csv("bunching.csv", ["n", "t_d_ratio", "analytic_re", "analytic_im", "numeric_re", "numeric_im",
                           "abs_error"], rows)
    if cfg["profile"]["enabled"]:
        z = default_z_grid(base, int(cfg["profile"]["points_per_period"]))
        exact = density_profile_exact(momentum_amplitudes(base, samples_per_recoil=spr), z)
        approx = density_profile_approx(base, z)
        w.csv("profile.csv", ["zeta", "exact", "approx"], zip(z, exact, approx))


def _mode(block: dict) -> ClassicalModeSpec:
    b = dict(block)
    if "wavelength_m" in b:
        b["omega"] = 2 * math.pi * 299792458.0 / float(b.pop("wavelength_m"))
    try:
        return ClassicalModeSpec(**{k: float(v) for k, v in b.items()})
    except TypeError as err:
        raise ConfigError(f"mode: {err}") from err


def cmd_classical(cfg: dict, seed: int, w: Writer) -> None:
    mode = _mode(cfg["mode"])
    n_cl = spontaneous_photons_per_electron(mode)
    g2 = qed_coupling_magnitude(mode)
    rel = abs(n_cl - g2) / max(abs(g2), 1e-300)
    w.json("equivalence.json", {
        "classical_photons_per_electron": n_cl,
        "qed_coupling_squared": g2,
        "relative_difference": rel,
        "pass": rel <= 1e-12 or (n_cl == 0 and g2 == 0),
    })
    rows = []
    for f in cfg["scaling_factors"]:
        rows.append(["L", f, spontaneous_photons_per_electron(replace(mode, L=mode.L * f)),
                     qed_coupling_magnitude(replace(mode, L=mode.L * f))])
        rows.append(["volume", f, spontaneous_photons_per_electron(replace(mode, A_em=mode.A_em * f)),
                     qed_coupling_magnitude(replace(mode, A_em=mode.A_em * f))])
    w.csv("scaling.csv", ["parameter", "factor", "classical", "qed"], rows)
    rows = []
    for n_e in cfg["n_e"]:
        for mb in cfg["m_b"]:
            sp, sr = beam_emission(int(n_e), float(mb), mode)
            rows.append([int(n_e), float(mb), sp, sr])
    w.csv("beam_emission.csv", ["n_e", "M_b", "spontaneous", "superradiant"], rows)


def cmd_wigner(cfg: dict, seed: int, w: Writer) -> None:
    if not cfg["input"]:
        raise ConfigError("wigner needs input=<density-matrix JSON>")
    rho, _ = density_from_json(Path(cfg["input"]).read_text())
    w.wigner("wigner", rho, cfg["wigner"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qews", description="Photon emission by modulated electron wavepackets.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file or preset name")
    ap.add_argument("--preset", help="preset name (same as --config NAME)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (dotted path, JSON value)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", required=True, help="output directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, seed = resolve_config(args.command, args.preset or args.config, args.overrides, args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        w = Writer(Path(args.out), cfg, seed, args.command)
        handler = {
            "single": cmd_single, "buildup": cmd_buildup, "bunching": cmd_bunching,
            "classical": cmd_classical, "wigner": cmd_wigner,
        }
        if args.command == "ensemble":
            cmd_ensemble(cfg, seed, w, args.jobs)
        else:
            handler[args.command](cfg, seed, w)
    except TruncationError as err:
        print(f"error: numerical budget exceeded: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, GridError, ValueError, KeyError, TypeError) as err:
        print(f"error: invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    for name in w.files:
        print(Path(args.out) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
