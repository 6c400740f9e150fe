"""Command-line interface.

Subcommands: simulate, wigner, umatrix, icc-check, aggregate.
Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, certify, engine, fileio, mle, states, wigner
from .fileio import ConfigError


def _str2bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfrct",
        description="Randomized compressive tomography of time-frequency states",
    )
    parser.add_argument("--version", action="version", version=f"tfrct {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the iterative tomography loop")
    sim.add_argument("--config", required=True, help="YAML config or replay manifest")
    sim.add_argument("--seed", type=int, help="override rct.seed")
    sim.add_argument("--runs", type=int, help="override rct.runs")
    sim.add_argument("--rank", type=int, help="override state.rank (random states)")
    sim.add_argument("--dim", type=int, help="override state.dim")
    sim.add_argument("--clicks", type=int, help="override qpg.clicks_per_basis")
    sim.add_argument("--noiseless", type=_str2bool, help="override qpg.noiseless")
    sim.add_argument("--kmax", type=int, help="override rct.max_bases")
    sim.add_argument("--threshold", type=float, help="override rct.ic_threshold")
    sim.add_argument("--z-draws", type=int, help="override rct.z_draws")
    sim.add_argument("--out", help="override output.directory")
    sim.add_argument("--workers", type=int, default=os.cpu_count(),
                     help="worker processes (default: logical CPUs)")

    wig = sub.add_parser("wigner", help="export a Wigner function grid")
    wig.add_argument("--config", help="config whose state section is evaluated")
    wig.add_argument("--hg-mode", type=int, help="pure HG mode index instead of a config")
    wig.add_argument("--dim", type=int, default=10, help="dimension for --hg-mode")
    wig.add_argument("--tmin", type=float, default=-4.0)
    wig.add_argument("--tmax", type=float, default=4.0)
    wig.add_argument("--wmin", type=float, default=-4.0)
    wig.add_argument("--wmax", type=float, default=4.0)
    wig.add_argument("--points", type=int, default=101, help="grid nodes per axis")
    wig.add_argument("--out", default="wigner_grid.txt")

    uma = sub.add_parser("umatrix", help="export Re(u) of a frequency-bin state")
    uma.add_argument("--config", help="config whose state section is exported")
    uma.add_argument("--bins", help="comma-separated bin indices, e.g. 0,3,6")
    uma.add_argument("--signs", help="comma-separated signs, e.g. 1,-1,1")
    uma.add_argument("--dim", type=int, default=10)
    uma.add_argument("--out", default="u_matrix.txt")

    icc = sub.add_parser("icc-check", help="certify a measurement dataset")
    icc.add_argument("dataset", help="dataset file of bases and counts")
    icc.add_argument("--seed", type=int, default=0, help="seed of the random Z")
    icc.add_argument("--z-draws", type=int, default=1, help="number of Z draws to report")
    icc.add_argument("--noiseless", type=_str2bool, default=False,
                     help="treat frequencies as exact (equality constraints)")
    icc.add_argument("--threshold", type=float, help="absolute IC threshold")

    agg = sub.add_parser("aggregate", help="aggregate trajectory files")
    agg.add_argument("trajectories", nargs="+", help="trajectory CSV files")
    agg.add_argument("--out", default=".", help="output directory")
    return parser


def _apply_overrides(doc: dict, args) -> dict:
    rct = doc.setdefault("rct", {}) or {}
    doc["rct"] = rct
    state = doc.get("state")
    if not isinstance(state, dict):
        raise ConfigError("missing required key 'state'")
    if args.seed is not None:
        rct["seed"] = args.seed
    if args.runs is not None:
        rct["runs"] = args.runs
    if args.kmax is not None:
        rct["max_bases"] = args.kmax
    if args.threshold is not None:
        rct["ic_threshold"] = args.threshold
    if args.z_draws is not None:
        rct["z_draws"] = args.z_draws
    if args.dim is not None:
        state["dim"] = args.dim
    if args.rank is not None:
        if state.get("kind") != "random":
            raise ConfigError("--rank applies only to state.kind 'random'")
        state["rank"] = args.rank
        state.pop("ranks", None)
    qpg = doc.setdefault("qpg", {}) or {}
    doc["qpg"] = qpg
    if args.clicks is not None:
        qpg["clicks_per_basis"] = args.clicks
    if args.noiseless is not None:
        qpg["noiseless"] = args.noiseless
    if args.out is not None:
        out = doc.setdefault("output", {}) or {}
        doc["output"] = out
        out["directory"] = args.out
    return doc


def cmd_simulate(args) -> int:
    import yaml

    text = Path(args.config).read_text()
    doc = yaml.safe_load(text)
    if isinstance(doc, dict) and "effective_config" in doc:
        doc = doc["effective_config"]
    doc = _apply_overrides(doc if isinstance(doc, dict) else {}, args)
    plan = fileio.parse_config(doc)

    config = engine.RctConfig(
        dim=plan.dim,
        state=plan.fixed_state,
        qpg=plan.qpg,
        max_bases=plan.max_bases,
        runs_per_point=plan.runs,
        master_seed=plan.seed,
        ic_threshold=plan.ic_threshold,
        z_draws=plan.z_draws,
    )
    jobs: list[engine.RunJob] = []
    if plan.fixed_state is not None:
        jobs.extend(engine.make_jobs(config, label="state", spawn_base=(0,)))
    else:
        for i, r in enumerate(plan.ranks):
            jobs.extend(
                engine.make_jobs(config, label=f"rank{r}", family=plan.family,
                                 rank=r, spawn_base=(i,))
            )

    workers = max(1, args.workers or 1)
    if workers == 1 or len(jobs) == 1:
        trajectories = [engine.execute_job(j) for j in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(engine.execute_job, jobs))

    out_dir = Path(plan.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups: dict[str, list[engine.RctTrajectory]] = {}
    for t in trajectories:
        groups.setdefault(fileio.group_label(t.run_id), []).append(t)
    curves = {label: engine.aggregate(ts) for label, ts in groups.items()}

    traj_path = out_dir / "trajectories.csv"
    agg_path = out_dir / "aggregate.csv"
    summary_path = out_dir / "summary.csv"
    fileio.write_trajectories(traj_path, trajectories)
    fileio.write_aggregates(agg_path, curves)
    fileio.write_summary(summary_path, groups)

    effective = fileio.effective_config_doc(plan, doc["state"])
    outputs = {
        p.name: fileio.sha256_file(p) for p in (traj_path, agg_path, summary_path)
    }
    fileio.write_manifest(out_dir / "manifest.json", "simulate", effective, outputs, __version__)
    for label in sorted(groups):
        k_ics = [t.k_ic for t in groups[label] if t.k_ic is not None]
        mean = f"{np.mean(k_ics):.2f}" if k_ics else "n/a"
        print(f"{label}: {len(groups[label])} runs, {len(k_ics)} reached IC, mean K_IC = {mean}")
    print(f"wrote {traj_path}, {agg_path}, {summary_path}")
    return 0


def _state_from_config(path: str) -> states.DensityMatrix:
    plan, _ = fileio.load_config(path)
    if plan.fixed_state is None:
        raise ConfigError("this command needs a concrete state, not 'state.kind: random'")
    return states.mixture(plan.fixed_state)


def cmd_wigner(args) -> int:
    if args.hg_mode is not None:
        rho = states.hg_pure_state(args.hg_mode, args.dim)
    elif args.config:
        rho = _state_from_config(args.config)
    else:
        raise ConfigError("provide --config or --hg-mode")
    if rho.basis.kind is states.BasisKind.FREQUENCY_BIN:
        raise ConfigError("frequency-bin state: use the umatrix command instead")
    grid = wigner.wigner_grid(
        rho,
        t_range=(args.tmin, args.tmax),
        omega_range=(args.wmin, args.wmax),
        resolution=args.points,
    )
    fileio.write_grid_matrix(
        args.out, grid.t_axis, grid.omega_axis, grid.values,
        "chronocyclic Wigner function; rows: t, columns: omega",
    )
    print(f"normalization integral: {grid.normalization!r}")
    print(f"wrote {args.out}")
    return 0


def cmd_umatrix(args) -> int:
    if args.bins:
        try:
            idx = [int(tok) for tok in args.bins.split(",")]
            signs = [int(tok) for tok in (args.signs or "").split(",")] if args.signs else [1] * len(idx)
        except ValueError as exc:
            raise ConfigError(f"cannot parse --bins/--signs: {exc}") from exc
        rho = states.frequency_bin_superposition(idx, signs, args.dim)
    elif args.config:
        rho = _state_from_config(args.config)
    else:
        raise ConfigError("provide --config or --bins")
    if rho.basis.kind is not states.BasisKind.FREQUENCY_BIN:
        raise ConfigError("HG state: use the wigner command instead")
    matrix = wigner.export_u_matrix_real(rho)
    axis = np.arange(rho.dim)
    fileio.write_grid_matrix(
        args.out, axis, axis, matrix,
        "Re(u) of a frequency-bin state; rows and columns: bin index",
    )
    print(f"wrote {args.out}")
    return 0


def cmd_icc_check(args) -> int:
    data = fileio.read_dataset(args.dataset)
    ml = mle.maximize_likelihood(data)
    if args.noiseless:
        p_hat = np.array([rec.frequencies for _, rec in data])
        tolerances = np.zeros_like(p_hat)
    else:
        p_hat = ml.p_hat
        tolerances = np.array(
            [
                certify.binomial_band_tolerances(p_hat[i], rec.total)
                for i, (_, rec) in enumerate(data)
            ]
        )
    rng = np.random.default_rng(args.seed)
    d = data[0][0].dim
    verdicts = []
    for draw in range(args.z_draws):
        z = certify.random_full_rank_z(d, rng)
        problem = certify.IccProblem(
            bases=tuple(b for b, _ in data), p_hat=p_hat, z=z,
            tolerances=tolerances, ic_threshold=args.threshold,
        )
        cert = certify.solve_extrema(problem, warm_start=ml.rho_ml)
        verdicts.append(cert.is_ic)
        print(
            f"z_draw {draw}: s_cvx = {cert.s_cvx!r}  f_min = {cert.f_min!r}  "
            f"f_max = {cert.f_max!r}  duality_gaps = ({cert.duality_gaps[0]:.3e}, "
            f"{cert.duality_gaps[1]:.3e})  threshold = {cert.ic_threshold!r}"
        )
        print(
            f"  feasibility: rho_min violation {problem.max_violation(cert.rho_min):.3e}, "
            f"rho_max violation {problem.max_violation(cert.rho_max):.3e}"
        )
    print(f"ml: converged = {ml.converged}, iterations = {ml.iterations}, "
          f"log_likelihood = {ml.log_likelihood!r}")
    print(f"verdict: {'IC' if all(verdicts) else 'not IC'}")
    return 0


def cmd_aggregate(args) -> int:
    trajectories: list[engine.RctTrajectory] = []
    for path in args.trajectories:
        trajectories.extend(fileio.read_trajectories(path))
    groups: dict[str, list[engine.RctTrajectory]] = {}
    for t in trajectories:
        groups.setdefault(fileio.group_label(t.run_id), []).append(t)
    curves = {label: engine.aggregate(ts) for label, ts in groups.items()}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fileio.write_aggregates(out_dir / "aggregate.csv", curves)
    fileio.write_summary(out_dir / "summary.csv", groups)
    print(f"wrote {out_dir / 'aggregate.csv'}, {out_dir / 'summary.csv'}")
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "wigner": cmd_wigner,
    "umatrix": cmd_umatrix,
    "icc-check": cmd_icc_check,
    "aggregate": cmd_aggregate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (certify.CertificationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
