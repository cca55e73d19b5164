import numpy as np
import pytest

from sweepca.decoder import CORRECTED, decode_error
from sweepca.noise import NoiseParams, run_memory_trial, sample_error
from sweepca.sweep import SweepConfig, engine_for


def test_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(p_data=1.5, p_meas=0.0)
    with pytest.raises(ValueError):
        NoiseParams(p_data=0.1, p_meas=0.1, n_cyc=0)
    with pytest.raises(ValueError):
        NoiseParams(p_data=0.1, p_meas=0.1, sweeps_per_cycle=0)
    assert NoiseParams.uniform(0.02, 4).to_dict()["p_meas"] == 0.02


def test_sample_error_extremes():
    rng = np.random.default_rng(0)
    assert not sample_error(100, 0.0, rng).any()
    assert sample_error(100, 1.0, rng).all()


def test_sample_error_density():
    n, p = 10**6, 0.01
    hits = int(sample_error(n, p, np.random.default_rng(123)).sum())
    sd = np.sqrt(n * p * (1 - p))
    assert abs(hits - n * p) < 3 * sd


def test_noiseless_memory_always_succeeds(lat):
    b = lat("bcc3d", 4)
    for n_cyc in (1, 3):
        rec = run_memory_trial(b, NoiseParams.uniform(0.0, n_cyc), seed=5)
        assert rec.outcome == CORRECTED and rec.residual_weight == 0 and not rec.failed


def test_single_cycle_is_plain_decoding(lat):
    b = lat("bcc3d", 6)
    for seed in range(40):
        rec = run_memory_trial(b, NoiseParams(p_data=0.05, p_meas=0.0, n_cyc=1), seed=seed)
        err = sample_error(b.num_qubits, 0.05, np.random.default_rng(seed))
        out = decode_error(b, err)
        assert rec.outcome == out.status
        assert rec.decode_steps == out.steps


def test_cycles_without_noise_iterate_the_rule(lat):
    """Errors only in cycle 1 and no measurement noise: n cycles followed by
    the final decode equal one decode of the initial error."""
    b = lat("bcc3d", 6)
    cfg = SweepConfig()
    rng = np.random.default_rng(8)
    err = (rng.random(b.num_qubits) < 0.04).astype(np.uint8)
    sigma = b.syndrome_of(err)
    eng = engine_for(b.structure, cfg.rule)
    s1, c1 = sigma.copy(), np.zeros(b.num_qubits, dtype=np.uint8)
    eng.run(s1, c1, 3)
    s2, c2 = sigma.copy(), np.zeros(b.num_qubits, dtype=np.uint8)
    for _ in range(3):
        eng.run(s2, c2, 1)
    assert np.array_equal(s1, s2) and np.array_equal(c1, c2)


def test_memory_trial_is_seed_deterministic(lat):
    b = lat("bcc3d", 6)
    noise = NoiseParams.uniform(0.02, 4)
    a = run_memory_trial(b, noise, seed=77)
    c = run_memory_trial(b, noise, seed=77)
    assert a == c


def test_failure_rate_increases_with_p(lat):
    b = lat("bcc3d", 6)
    rates = []
    for p in (0.02, 0.06, 0.12):
        fails = sum(run_memory_trial(b, NoiseParams.uniform(p, 1), seed=s).failed for s in range(150))
        rates.append(fails / 150)
    assert rates[0] <= rates[1] <= rates[2]
    assert rates[2] > rates[0]
