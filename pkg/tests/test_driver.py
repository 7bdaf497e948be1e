import numpy as np
import pytest

from nchsolver import (ConfigError, Field, GridGeometry, KernelSpec, RunOptions,
                       SchemeConfig, equilibrium_residual, h1h2_probe,
                       make_cache, mean, norm2, project_zero_mean, random_initial_field,
                       run, run_batch, sample_kernel)
from nchsolver.fieldio import read_checkpoint, write_checkpoint

GEO = GridGeometry(16, 1.0)
CACHE = make_cache(GEO)
GAUSS = sample_kernel(KernelSpec.gaussian(12.5, 10.0), GEO)


def _cfg(scheme="backward_euler", tau=0.05, **kw):
    defaults = dict(epsilon=1.0, stabilization=5.5, cutoff=2.0)
    defaults.update(kw)
    return SchemeConfig(scheme=scheme, tau=tau, **defaults)


def test_random_initial_field_hits_target_mass_and_range():
    u = random_initial_field(GEO, mean_value=0.1, delta=0.05, seed=42)
    assert mean(u) == pytest.approx(0.1, abs=1e-15)
    assert np.abs(u.values - 0.1).max() <= 0.05 + 1e-12
    again = random_initial_field(GEO, mean_value=0.1, delta=0.05, seed=42)
    assert np.array_equal(u.values, again.values)


def test_constant_init_terminates_first_step():
    u0 = Field.constant(GEO, 0.2)
    result = run(u0, _cfg(), GAUSS, CACHE, RunOptions(max_steps=100))
    assert result.termination == "equilibrium"
    assert result.final_state.step_index == 1
    assert result.equilibrium_residual <= 1e-13
    assert result.records[-1].increment_l2 <= 1e-14


def test_run_reaches_equilibrium_with_monotone_energy():
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=7)
    result = run(u0, _cfg(), GAUSS, CACHE, RunOptions(max_steps=5000, eq_tol=1e-9))
    assert result.termination == "equilibrium"
    energies = [r.energy for r in result.records]
    for before, after in zip(energies, energies[1:]):
        assert after <= before + 1e-10 * (1.0 + abs(before))
    assert result.records[-1].omega_variance <= 1e-9
    masses = [r.mass for r in result.records]
    assert max(abs(m - masses[0]) for m in masses) <= 1e-11 * max(1.0, abs(masses[0]))


def test_all_schemes_reach_the_same_kind_of_stationarity():
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=11)
    finals = {}
    strong = sample_kernel(KernelSpec.gaussian(130.0, 10.0), GEO)
    for scheme in ("backward_euler", "convex_splitting", "ssi1", "bdf2", "two_li"):
        cfg = _cfg(scheme, tau=2e-3)
        result = run(u0, cfg, strong, CACHE, RunOptions(max_steps=20000, eq_tol=1e-9))
        assert result.termination == "equilibrium", scheme
        assert result.equilibrium_residual <= 1e-9
        finals[scheme] = result.records[-1].energy
    # Recorded for inspection; no cross-scheme equality is asserted.
    spread = max(finals.values()) - min(finals.values())
    assert np.isfinite(spread)


def test_equilibrium_residual_examples():
    c = 0.3
    u = Field.constant(GEO, c)
    omega = Field.constant(GEO, c**3 - c)
    pot = _cfg().potential
    assert equilibrium_residual(u, omega, GAUSS, 1.0, pot) == pytest.approx(0.0, abs=1e-13)
    rng = np.random.default_rng(3)
    bump = project_zero_mean(Field(GEO, rng.uniform(-1, 1, (16, 16))))
    noisy = Field(GEO, omega.values + bump.values)
    assert equilibrium_residual(u, noisy, GAUSS, 1.0, pot) >= norm2(bump) * (1 - 1e-12)


def test_run_rejects_invalid_gamma0():
    weak = sample_kernel(KernelSpec.constant(0.5), GEO)
    with pytest.raises(ConfigError):
        run(Field.constant(GEO, 0.0), _cfg(), weak, CACHE, RunOptions(max_steps=10))


def test_run_increment_tail_below_ten_eq_tol():
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=23)
    options = RunOptions(max_steps=5000, eq_tol=1e-9)
    result = run(u0, _cfg(tau=0.02), GAUSS, CACHE, options)
    assert result.termination == "equilibrium"
    last_step = result.final_state.step_index
    tail = [r for r in result.records if r.step >= 0.9 * last_step and r.step > 0]
    assert max(r.increment_l2 for r in tail) <= 10.0 * options.eq_tol


def test_error_termination_carries_step_index():
    # Narrow kernel: gamma0 > 0 but the per-mode margin fails at this tau.
    from nchsolver import check_solvability
    narrow = sample_kernel(KernelSpec.gaussian(76.4, 200.0), GEO)
    cfg = _cfg(tau=5.0, stability_policy="enforce")
    assert not check_solvability(cfg, narrow, CACHE).admissible
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=5)
    result = run(u0, cfg, narrow, CACHE, RunOptions(max_steps=10))
    assert result.termination == "error"
    assert "step 1" in result.error_detail


def test_max_steps_termination():
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=9)
    result = run(u0, _cfg(tau=1e-4), GAUSS, CACHE, RunOptions(max_steps=3, eq_tol=1e-14))
    assert result.termination == "max_steps"
    assert result.final_state.step_index == 3
    assert result.records[-1].step == 3


def test_restart_reproduces_records_bit_identically(tmp_path):
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=31)
    cfg = _cfg("bdf2", tau=0.01)
    options_full = RunOptions(max_steps=20, eq_tol=1e-14)
    full = run(u0, cfg, GAUSS, CACHE, options_full)

    options_half = RunOptions(max_steps=10, eq_tol=1e-14)
    half = run(u0, cfg, GAUSS, CACHE, options_half)
    ckpt = tmp_path / "state.nchk"
    write_checkpoint(ckpt, half.final_state)
    resumed_state = read_checkpoint(ckpt)
    tail = run(None, cfg, GAUSS, CACHE, options_full, initial_state=resumed_state)

    full_tail = [r for r in full.records if r.step > 10]
    resumed_records = tail.records
    assert len(full_tail) == len(resumed_records)
    for a, b in zip(full_tail, resumed_records):
        assert a == b  # bit-identical dataclasses, float for float


def test_record_cadence_and_final_record():
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=13)
    result = run(u0, _cfg(tau=1e-4), GAUSS, CACHE,
                 RunOptions(max_steps=10, eq_tol=1e-14, record_every=4))
    steps = [r.step for r in result.records]
    assert steps == [0, 4, 8, 10]


def test_snapshot_cadence_writes_files(tmp_path):
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=17)
    options = RunOptions(max_steps=6, eq_tol=1e-14, snapshot_every=2, snapshot_dir=tmp_path)
    run(u0, _cfg(tau=1e-4), GAUSS, CACHE, options)
    names = sorted(p.name for p in tmp_path.glob("u_*.nchf"))
    assert names == ["u_00000002.nchf", "u_00000004.nchf", "u_00000006.nchf"]


def test_h1h2_probe_convex_splitting_bound():
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=19)
    cfg = _cfg("convex_splitting", tau=0.1)
    result = run(u0, cfg, GAUSS, CACHE, RunOptions(max_steps=25, eq_tol=1e-14))
    probe = h1h2_probe(result.records, window=12)
    assert probe.steps_used > 0
    assert probe.c2_hat >= cfg.epsilon**2 * GAUSS.conv_one - 1e-10
    assert probe.c3_hat > 0.0


def test_h1h2_probe_empty_on_stationary_run():
    u0 = Field.constant(GEO, 0.25)
    cfg = _cfg("backward_euler", tau=0.1)
    result = run(u0, cfg, GAUSS, CACHE, RunOptions(max_steps=5))
    # Pad with copies of the last record so the window precondition is met.
    records = result.records + result.records[-1:] * 10
    probe = h1h2_probe(records, window=8)
    assert probe.steps_used == 0
    assert probe.c2_hat is None and probe.c3_hat is None


def test_h1h2_probe_backward_euler_positive_c2():
    # Short run: past ~10 steps the energy drops fall below one ulp of E
    # and the ratio scan would only measure the rounding floor.
    u0 = random_initial_field(GEO, 0.0, 0.05, seed=29)
    result = run(u0, _cfg(tau=0.05), GAUSS, CACHE, RunOptions(max_steps=9, eq_tol=1e-14))
    probe = h1h2_probe(result.records, window=len(result.records))
    assert probe.c2_hat is not None and probe.c2_hat > 0.0


def test_h1h2_probe_requires_window():
    with pytest.raises(ValueError):
        h1h2_probe([], window=4)


def test_run_batch_runs_jobs_in_order():
    u0 = Field.constant(GEO, 0.1)
    jobs = [(u0, _cfg(), GAUSS, CACHE, RunOptions(max_steps=3)) for _ in range(2)]
    results = run_batch(jobs)
    assert [r.termination for r in results] == ["equilibrium", "equilibrium"]
