import numpy as np
import pytest

from tfrct import engine, states
from tfrct.engine import AggregateCurve, RctConfig, RctTrajectory, StepRecord, aggregate, run_rct
from tfrct.measurement import QpgConfig
from tfrct.states import StateSpec, hg_basis, maximally_mixed


def noiseless_qpg(n=10_000):
    return QpgConfig(noiseless=True, clicks_per_basis=n)


def pure_spec(n, d):
    v = np.zeros(d, dtype=complex)
    v[n] = 1.0
    return StateSpec(hg_basis(d), ((v, 1.0),))


def mixed_spec(d):
    return StateSpec(
        hg_basis(d), tuple((np.eye(d, dtype=complex)[:, i], 1.0 / d) for i in range(d))
    )


class TestRunRct:
    def test_noiseless_rank1_reaches_ic(self):
        cfg = RctConfig(dim=4, state=pure_spec(0, 4), qpg=noiseless_qpg(), master_seed=5)
        traj = run_rct(cfg)
        assert traj.k_ic is not None
        assert traj.records[-1].is_ic
        assert traj.records[-1].fidelity >= 0.999
        assert [r.k for r in traj.records] == list(range(1, traj.k_ic + 1))

    def test_single_basis_budget_is_never_complete(self):
        cfg = RctConfig(
            dim=4, state=mixed_spec(4), qpg=noiseless_qpg(), max_bases=1, master_seed=5
        )
        traj = run_rct(cfg)
        assert len(traj.records) == 1
        assert traj.k_ic is None

    def test_full_rank_needs_more_bases_than_rank_one(self):
        d = 10
        seed = 77
        cfg_mixed = RctConfig(
            dim=d, state=mixed_spec(d), qpg=noiseless_qpg(), master_seed=seed
        )
        cfg_pure = RctConfig(
            dim=d, state=pure_spec(0, d), qpg=noiseless_qpg(), master_seed=seed
        )
        t_mixed = run_rct(cfg_mixed)
        t_pure = run_rct(cfg_pure)
        s_mixed = [r.s_cvx for r in t_mixed.records]
        assert all(b <= a + 1e-6 for a, b in zip(s_mixed, s_mixed[1:]))
        assert t_mixed.k_ic is not None and t_pure.k_ic is not None
        assert t_pure.k_ic < t_mixed.k_ic
        # the same seed schedule produced identical basis draws
        assert [r.basis_seed for r in t_mixed.records[: t_pure.k_ic]] == [
            r.basis_seed for r in t_pure.records
        ]

    def test_reproducibility_bitwise(self):
        cfg = RctConfig(dim=4, state=pure_spec(1, 4), qpg=noiseless_qpg(), master_seed=13)
        assert run_rct(cfg) == run_rct(cfg)

    def test_z_draws_guard(self):
        cfg = RctConfig(
            dim=3, state=pure_spec(0, 3), qpg=noiseless_qpg(), master_seed=3, z_draws=2
        )
        traj = run_rct(cfg)
        assert traj.k_ic is not None

    def test_dimension_mismatch_rejected(self):
        cfg = RctConfig(dim=5, state=pure_spec(0, 4), qpg=noiseless_qpg())
        with pytest.raises(ValueError, match="dimension"):
            run_rct(cfg)

    def test_noisy_run_records_are_flagged_not_dropped(self):
        cfg = RctConfig(
            dim=3,
            state=pure_spec(0, 3),
            qpg=QpgConfig(clicks_per_basis=200),
            max_bases=3,
            master_seed=11,
        )
        traj = run_rct(cfg)
        assert len(traj.records) == 3
        assert all(np.isfinite(r.s_cvx) for r in traj.records)


class TestSweep:
    def test_rank_sweep_shapes(self):
        cfg = RctConfig(
            dim=6, state=None, qpg=noiseless_qpg(), runs_per_point=2, master_seed=21
        )
        sweeps = engine.run_rank_sweep(cfg, ranks=[1, 2], family="hg")
        assert set(sweeps) == {1, 2}
        for r, trajs in sweeps.items():
            assert len(trajs) == 2
            for t in trajs:
                assert t.k_ic is not None
                assert t.run_id.startswith(f"rank{r}-")

    def test_empty_ranks_rejected(self):
        cfg = RctConfig(dim=4, state=None, qpg=noiseless_qpg())
        with pytest.raises(ValueError, match="rank"):
            engine.run_rank_sweep(cfg, ranks=[])

    def test_jobs_execute_like_run_batch(self):
        cfg = RctConfig(
            dim=4, state=pure_spec(0, 4), qpg=noiseless_qpg(), runs_per_point=2,
            master_seed=8,
        )
        jobs = engine.make_jobs(cfg, label="state", spawn_base=(0,))
        assert [engine.execute_job(j) for j in jobs] == engine.run_batch(
            cfg, label="state", spawn_base=(0,)
        )


def make_traj(run_id, s_rows, f_rows=None):
    f_rows = f_rows or [0.5] * len(s_rows)
    records = tuple(
        StepRecord(
            k=i + 1, basis_seed=0, s_cvx=s, fidelity=f,
            log_likelihood=-1.0, ml_converged=True, is_ic=False,
        )
        for i, (s, f) in enumerate(zip(s_rows, f_rows))
    )
    return RctTrajectory(run_id=run_id, records=records, k_ic=None)


class TestAggregate:
    def test_single_trajectory_zero_band(self):
        curve = aggregate([make_traj("a-00", [1.0, 0.4])])
        assert np.allclose(curve.s_cvx_std, 0.0)
        assert curve.n_runs == 1

    def test_identical_trajectories_zero_band(self):
        t = make_traj("a-00", [0.9, 0.1])
        curve = aggregate([t, make_traj("a-01", [0.9, 0.1])])
        assert np.allclose(curve.s_cvx_std, 0.0)
        assert np.allclose(curve.s_cvx_mean, [0.9, 0.1])

    def test_hand_computed_mean_and_sigma(self):
        curve = aggregate([make_traj("a-00", [1.0, 0.0]), make_traj("a-01", [0.5, 0.0])])
        assert np.allclose(curve.s_cvx_mean, [0.75, 0.0])
        assert np.allclose(curve.s_cvx_std, [0.25, 0.0])

    def test_padding_at_final_value(self):
        curve = aggregate([make_traj("a-00", [1.0, 0.2]), make_traj("a-01", [0.6])])
        assert np.allclose(curve.s_cvx_mean, [0.8, 0.4])

    def test_mean_k_ic(self):
        t1 = make_traj("a-00", [1.0, 0.0])
        t1 = RctTrajectory(t1.run_id, t1.records, k_ic=2)
        t2 = make_traj("a-01", [1.0, 0.5, 0.0])
        t2 = RctTrajectory(t2.run_id, t2.records, k_ic=3)
        assert aggregate([t1, t2]).mean_k_ic == pytest.approx(2.5)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            aggregate([])

    def test_means_within_sample_range(self):
        curve = aggregate(
            [make_traj("a-00", [1.0, 0.3]), make_traj("a-01", [0.4, 0.2])]
        )
        assert np.all(curve.s_cvx_mean <= [1.0, 0.3])
        assert np.all(curve.s_cvx_mean >= [0.4, 0.2])
