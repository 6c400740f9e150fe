"""Iterative randomized compressive tomography runs and their aggregation.

One run measures Haar-random bases one at a time; after each basis the
accumulated data is mapped to physical probabilities by maximum likelihood
and certified with the fixed per-run Z.  The run stops at the first
informationally complete step or at the basis budget.  Fidelity is tracked
against the minimizing extremal state, which doubles as the running
estimator before completeness is reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import certify, measurement, mle, states

WARM_START_BLEND = 1e-6


@dataclass(frozen=True)
class RctConfig:
    dim: int
    state: states.StateSpec | None      # None: drawn per run by a factory
    qpg: measurement.QpgConfig
    max_bases: int = 0                  # 0: defaults to 2*dim
    runs_per_point: int = 10
    master_seed: int = 0
    ic_threshold: float | None = None   # None: relative to the Z spectrum
    z_draws: int = 1                    # extra draws guard against degenerate Z
    ml_options: mle.MlOptions = field(default_factory=mle.MlOptions)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be at least 1")
        if self.max_bases == 0:
            object.__setattr__(self, "max_bases", 2 * self.dim)
        if self.max_bases < 1:
            raise ValueError("max_bases must be at least 1")
        if self.z_draws < 1:
            raise ValueError("z_draws must be at least 1")


@dataclass(frozen=True)
class StepRecord:
    k: int
    basis_seed: int
    s_cvx: float
    fidelity: float
    log_likelihood: float
    ml_converged: bool
    is_ic: bool


@dataclass(frozen=True)
class RctTrajectory:
    run_id: str
    records: tuple[StepRecord, ...]
    k_ic: int | None


@dataclass(frozen=True)
class AggregateCurve:
    k_axis: np.ndarray
    s_cvx_mean: np.ndarray
    s_cvx_std: np.ndarray
    fidelity_mean: np.ndarray
    fidelity_std: np.ndarray
    n_runs: int
    mean_k_ic: float | None

    def __post_init__(self):
        if np.any(self.s_cvx_std < 0) or np.any(self.fidelity_std < 0):
            raise ValueError("band half-widths must be nonnegative")


def state_factory(family: str, rank: int, d: int, rng: np.random.Generator) -> states.StateSpec:
    """Random rank-r state specification for the requested mode family."""
    if family == "hg":
        return states.random_hg_mixture(rank, d, rng)
    if family == "freq_bin":
        return states.random_bin_mixture(rank, d, rng)
    raise ValueError(f"unknown state family {family!r}")


def run_rct(
    config: RctConfig,
    seed_seq: np.random.SeedSequence | None = None,
    run_id: str = "run-00",
    state: states.StateSpec | None = None,
) -> RctTrajectory:
    """Execute one measure / estimate / certify loop until IC or the budget."""
    spec = state or config.state
    if spec is None:
        raise ValueError("run_rct needs a state specification")
    if spec.dim != config.dim:
        raise ValueError("state dimension does not match the configuration")
    ss = seed_seq or np.random.SeedSequence(config.master_seed)
    z_ss, seeder_ss, clicks_ss = ss.spawn(3)
    z_rng = np.random.default_rng(z_ss)
    z_list = [certify.random_full_rank_z(config.dim, z_rng) for _ in range(config.z_draws)]
    seeder = np.random.default_rng(seeder_ss)
    clicks_rng = np.random.default_rng(clicks_ss)

    true_state = states.mixture(spec)
    data: list[tuple[measurement.MeasurementBasis, measurement.CountRecord]] = []
    records: list[StepRecord] = []
    k_ic: int | None = None
    warm: states.DensityMatrix | None = None

    for k in range(1, config.max_bases + 1):
        basis_seed = int(seeder.integers(0, 2**63 - 1))
        basis = measurement.haar_unitary(
            config.dim, np.random.default_rng(basis_seed), seed=basis_seed
        )
        record = measurement.simulate_basis_measurement(
            true_state, basis, config.qpg, clicks_rng, basis_index=k - 1
        )
        data.append((basis, record))

        initial = None
        if warm is not None:
            blended = (1.0 - WARM_START_BLEND) * warm.matrix + WARM_START_BLEND * np.eye(
                config.dim
            ) / config.dim
            initial = states.DensityMatrix(blended, warm.basis)
        ml = mle.maximize_likelihood(data, config.ml_options, initial=initial)
        warm = ml.rho_ml

        if config.qpg.noiseless:
            # Exact frequencies are attainable, so they coincide with the ML
            # probabilities; using them directly keeps the equality
            # constraints free of iteration error.
            p_hat = np.array([rec.frequencies for _, rec in data])
            tolerances = np.zeros_like(p_hat)
        else:
            p_hat = ml.p_hat
            tolerances = certify.binomial_band_tolerances(
                p_hat, config.qpg.clicks_per_basis
            )
        # With several Z draws the indicator is the worst (largest) spread,
        # so a single accidentally degenerate Z cannot fake completeness.
        cert = None
        for z in z_list:
            problem = certify.IccProblem(
                bases=tuple(b for b, _ in data),
                p_hat=p_hat,
                z=z,
                tolerances=tolerances,
                ic_threshold=config.ic_threshold,
            )
            candidate = certify.solve_extrema(problem, warm_start=ml.rho_ml)
            if cert is None or candidate.s_cvx > cert.s_cvx:
                cert = candidate
        fid = states.fidelity(cert.rho_min, true_state)
        records.append(
            StepRecord(
                k=k,
                basis_seed=basis_seed,
                s_cvx=cert.s_cvx,
                fidelity=fid,
                log_likelihood=ml.log_likelihood,
                ml_converged=ml.converged,
                is_ic=cert.is_ic,
            )
        )
        if cert.is_ic:
            k_ic = k
            break

    return RctTrajectory(run_id=run_id, records=tuple(records), k_ic=k_ic)


@dataclass(frozen=True)
class RunJob:
    """One schedulable trajectory; picklable so pools can execute it."""

    config: RctConfig
    label: str
    family: str
    rank: int | None
    spawn_base: tuple[int, ...]
    index: int


def execute_job(job: RunJob) -> RctTrajectory:
    ss = np.random.SeedSequence(job.config.master_seed, spawn_key=job.spawn_base + (job.index,))
    spec = job.config.state
    if job.rank is not None:
        state_rng = np.random.default_rng(ss.spawn(1)[0])
        spec = state_factory(job.family, job.rank, job.config.dim, state_rng)
    return run_rct(job.config, seed_seq=ss, run_id=f"{job.label}-{job.index:02d}", state=spec)


def make_jobs(
    config: RctConfig,
    label: str = "run",
    family: str = "hg",
    rank: int | None = None,
    spawn_base: tuple[int, ...] = (),
) -> list[RunJob]:
    return [
        RunJob(config=config, label=label, family=family, rank=rank,
               spawn_base=spawn_base, index=j)
        for j in range(config.runs_per_point)
    ]


def run_batch(
    config: RctConfig,
    label: str = "run",
    family: str = "hg",
    rank: int | None = None,
    spawn_base: tuple[int, ...] = (),
) -> list[RctTrajectory]:
    """runs_per_point independent trajectories with per-run seeds.

    With a fixed config.state every run measures the same state; with
    rank set, a fresh random rank-r state is drawn per run.
    """
    return [execute_job(j) for j in make_jobs(config, label, family, rank, spawn_base)]


def run_rank_sweep(
    base_config: RctConfig,
    ranks: list[int],
    family: str = "hg",
) -> dict[int, list[RctTrajectory]]:
    """Fresh random states, bases and Z per run, runs_per_point runs per rank."""
    if not ranks:
        raise ValueError("at least one rank is required")
    sweeps: dict[int, list[RctTrajectory]] = {}
    for i, r in enumerate(ranks):
        sweeps[r] = run_batch(
            base_config, label=f"rank{r}", family=family, rank=r, spawn_base=(i,)
        )
    return sweeps


def aggregate(trajectories: list[RctTrajectory]) -> AggregateCurve:
    """Pointwise mean and 1-sigma band across runs.

    Shorter runs are padded at their final value so curves share a k-axis.
    """
    if not trajectories:
        raise ValueError("cannot aggregate zero trajectories")
    k_max = max(t.records[-1].k for t in trajectories)
    s = np.empty((len(trajectories), k_max))
    f = np.empty((len(trajectories), k_max))
    for i, t in enumerate(trajectories):
        s_vals = [r.s_cvx for r in t.records]
        f_vals = [r.fidelity for r in t.records]
        pad = k_max - len(s_vals)
        s[i] = s_vals + [s_vals[-1]] * pad
        f[i] = f_vals + [f_vals[-1]] * pad
    k_ics = [t.k_ic for t in trajectories if t.k_ic is not None]
    return AggregateCurve(
        k_axis=np.arange(1, k_max + 1),
        s_cvx_mean=s.mean(axis=0),
        s_cvx_std=s.std(axis=0),
        fidelity_mean=f.mean(axis=0),
        fidelity_std=f.std(axis=0),
        n_runs=len(trajectories),
        mean_k_ic=float(np.mean(k_ics)) if k_ics else None,
    )
