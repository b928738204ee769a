"""Batch command line front end.

Subcommands regenerate the pulse-dynamics, Rabi-sweep, yield-ratio and
entanglement analyses as plot-ready data files.  A run is fully determined
by its config file plus the seed: identical inputs give byte-identical
outputs.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import sweeps, timebin, tomography
from .config import ConfigError, RunConfig, load_config
from .dynamics import (
    DephasingModel,
    default_t_span,
    evolve,
    export_trajectory_csv,
)
from .linalg import state_fidelity
from .ode import IntegrationError
from .sweeps import GROUND, export_sweep_csv
from .timebin import TimeBinModelParams

CONFIG_ERROR_EXIT = 2
NUMERICAL_ERROR_EXIT = 3


def _evolve_from_config(cfg: RunConfig, deph: DephasingModel):
    drive = cfg.pulse.drive(cfg.dot)
    decay = cfg.dot.decay()
    span = cfg.numerics.t_span
    if span is None:
        span = default_t_span(drive, decay)
    traj = evolve(GROUND, drive, decay, deph, t_span=span,
                  tol=cfg.numerics.tol, max_step=cfg.numerics.max_step)
    return traj, drive, decay


def cmd_evolve(cfg: RunConfig, out: Path, args) -> None:
    cfg.require("dot", "pulse", "dephasing")
    traj, _, decay = _evolve_from_config(cfg, cfg.dephasing)
    path = out / "trajectory.csv"
    export_trajectory_csv(traj, decay, path, params=cfg.resolved())
    print(f"wrote {path} ({len(traj.times)} samples, "
          f"final rho_bb = {traj.populations[-1, 2]:.6f})")


def cmd_rabi(cfg: RunConfig, out: Path, args) -> None:
    cfg.require("dot", "pulse", "sweep")
    if cfg.sweep.areas is None or not cfg.sweep.models:
        raise ConfigError("rabi needs 'sweep.areas' and 'sweep.models'")
    decay = cfg.dot.decay()
    for i, model in enumerate(cfg.sweep.models):
        res = sweeps.rabi_sweep(cfg.pulse.sigma, model, decay,
                                cfg.sweep.areas, tol=cfg.numerics.tol,
                                delta_x=cfg.dot.delta_x,
                                delta_b=cfg.dot.delta_b, t0=cfg.pulse.t0,
                                workers=args.threads)
        path = out / f"rabi_model{i}_np{model.n_p}.csv"
        export_sweep_csv(res, path, extra_params={"config": cfg.resolved()})
        print(f"wrote {path}")
        if res.failures:
            print(f"  {len(res.failures)} point(s) failed integration",
                  file=sys.stderr)


def cmd_ratio(cfg: RunConfig, out: Path, args) -> None:
    cfg.require("dot", "dephasing", "sweep")
    if cfg.sweep.energies is None or not cfg.sweep.sigmas:
        raise ConfigError("ratio needs 'sweep.energies' and 'sweep.sigmas'")
    decay = cfg.dot.decay()
    results = sweeps.ratio_sweep(cfg.sweep.sigmas, cfg.sweep.energies,
                                 cfg.dephasing, decay,
                                 delta_x=cfg.dot.delta_x,
                                 delta_b=cfg.dot.delta_b,
                                 tol=cfg.numerics.tol, workers=args.threads)
    peaks = []
    for res in results:
        path = out / f"ratio_sigma{res.sigma:g}.csv"
        export_sweep_csv(res, path, extra_params={"config": cfg.resolved()})
        print(f"wrote {path}")
        peaks.append({"sigma": res.sigma, "peak_energy": res.peak_abscissa,
                      "peak_ratio": res.peak_ratio,
                      "interior": res.peak_interior})
    peak_path = out / "ratio_peaks.json"
    peak_path.write_text(json.dumps(
        {"config": cfg.resolved(), "peaks": peaks},
        sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {peak_path}")


def cmd_fit_dephasing(cfg: RunConfig, out: Path, args) -> None:
    cfg.require("dot", "pulse", "sweep")
    if cfg.sweep.fit_n_p is None:
        raise ConfigError("fit-dephasing needs 'sweep.fit'")
    decay = cfg.dot.decay()
    gamma_i0 = sweeps.fit_gamma_i0(
        cfg.sweep.fit_n_p, cfg.sweep.fit_target_ratio, cfg.pulse.sigma,
        decay, gamma_bg=cfg.dephasing.gamma_bg if cfg.dephasing else 0.0,
        delta_x=cfg.dot.delta_x, tol=cfg.numerics.tol)
    model = DephasingModel(
        gamma_bg=cfg.dephasing.gamma_bg if cfg.dephasing else 0.0,
        gamma_i0=gamma_i0, n_p=cfg.sweep.fit_n_p)
    achieved = sweeps.first_cycle_ratio(cfg.pulse.sigma, model, decay,
                                        delta_x=cfg.dot.delta_x,
                                        tol=cfg.numerics.tol)
    path = out / "fit_dephasing.json"
    path.write_text(json.dumps(
        {"config": cfg.resolved(), "n_p": cfg.sweep.fit_n_p,
         "target_ratio": cfg.sweep.fit_target_ratio,
         "gamma_i0": gamma_i0, "achieved_ratio": achieved},
        sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path} (gamma_i0 = {gamma_i0:.6g})")


def _state_metrics(rho: np.ndarray) -> dict:
    c = timebin.concurrence(rho)
    f, phi_opt = timebin.fidelity_bell(rho)
    coh, i, j = timebin.coherence_metric(rho)
    v_time, v_e0, v_e90 = timebin.visibilities(rho)
    return {"concurrence": c, "fidelity": f, "fidelity_phase": phi_opt,
            "coherence_re": coh.real, "coherence_im": coh.imag,
            "coherence_abs": abs(coh), "coherence_indices": [i, j],
            "visibility_time": v_time, "visibility_energy_0": v_e0,
            "visibility_energy_90": v_e90}


def _batch_stats(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std,
            "values": [float(v) for v in arr]}


def cmd_entangle(cfg: RunConfig, out: Path, args) -> None:
    cfg.require("timebin", "tomography")
    v_coh = cfg.timebin.v_coh
    if v_coh is None:
        cfg.require("dot", "pulse", "dephasing")
        drive = cfg.pulse.drive(cfg.dot)
        span = (drive.t0 - 5 * drive.sigma, drive.t0 + 5 * drive.sigma)
        traj = evolve(GROUND, drive, cfg.dot.decay(), cfg.dephasing,
                      t_span=span, tol=cfg.numerics.tol)
        v_coh = timebin.excitation_coherence(traj, span[1])

    params = TimeBinModelParams(phi_p=cfg.timebin.phi_p,
                                epsilon=cfg.timebin.epsilon,
                                v_coh=v_coh,
                                pairing_weight=cfg.timebin.pairing_weight)
    rho_model = timebin.model_state(params)
    timebin.export_density_csv(rho_model, out / "model_state.csv")

    seed = args.seed if args.seed is not None else cfg.tomography.seed
    seeds = [int(s) for s in
             np.random.SeedSequence(seed).generate_state(cfg.tomography.n_seeds)]
    settings = tomography.standard_settings()
    per_seed = {"concurrence": [], "fidelity": [], "coherence_abs": [],
                "visibility_time": [], "state_fidelity_to_model": []}
    first_reconstruction = None
    for s in seeds:
        data = tomography.simulate_counts(rho_model, settings,
                                          cfg.tomography.n_mean, s)
        mle = tomography.reconstruct_mle(data)
        m = _state_metrics(mle.rho)
        per_seed["concurrence"].append(m["concurrence"])
        per_seed["fidelity"].append(m["fidelity"])
        per_seed["coherence_abs"].append(m["coherence_abs"])
        per_seed["visibility_time"].append(m["visibility_time"])
        per_seed["state_fidelity_to_model"].append(
            state_fidelity(mle.rho, rho_model))
        if first_reconstruction is None:
            first_reconstruction = mle.rho
            tomography.save_dataset(data, out / "tomography_counts.txt")

    timebin.export_density_csv(first_reconstruction,
                               out / "reconstructed_state.csv")
    report = {
        "config": cfg.resolved(),
        "seed": seed,
        "v_coh": v_coh,
        "accidental_fraction": params.accidental_fraction(),
        "model_metrics": _state_metrics(rho_model),
        "reconstruction": {k: _batch_stats(v) for k, v in per_seed.items()},
    }
    path = out / "entangle_report.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
    print(f"wrote {path}")
    print(f"model: C = {report['model_metrics']['concurrence']:.4f}, "
          f"F = {report['model_metrics']['fidelity']:.4f}; "
          f"reconstruction F = "
          f"{report['reconstruction']['fidelity']['mean']:.4f}"
          f" +- {report['reconstruction']['fidelity']['std']:.4f}")


_COMMANDS = {
    "evolve": cmd_evolve,
    "rabi": cmd_rabi,
    "ratio": cmd_ratio,
    "entangle": cmd_entangle,
    "fit-dephasing": cmd_fit_dephasing,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdtimebin",
        description="Quantum-dot two-photon excitation and time-bin "
                    "entanglement simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, type=Path,
                       help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the tomography seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes for sweep points")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR_EXIT
    except IntegrationError as exc:
        print(f"numerical failure at t = {exc.t:.6g}: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR_EXIT
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
