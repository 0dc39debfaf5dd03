import json
import math

import numpy as np
import pytest

from synergy_lab.lattice import PM1, ZERO_ONE, LoopModel, tc_loop_distribution
from synergy_lab.rbm import (
    RbmParams,
    TrainConfig,
    cd_gradient,
    energy,
    enumerate_joint,
    exact_distribution,
    hidden_conditional,
    read_params,
    sample_rbm,
    train,
    train_with_trace,
    visible_conditional,
    write_params,
)
from synergy_lab.sampling import sample_autoregressive


def random_params(rng, nv, nh, domain=PM1, scale=0.7):
    return RbmParams(nv, nh,
                     rng.normal(0, 0.5, nv),
                     rng.normal(0, 0.5, nh),
                     rng.normal(0, scale, (nv, nh)),
                     domain)


def all_configs(n, domain):
    vals = (1, -1) if domain == PM1 else (0, 1)
    ordered = []
    for k in range(1 << n):
        ordered.append([vals[(k >> i) & 1] for i in range(n)])
    return np.array(ordered, dtype=np.float64)


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


class TestEnergy:
    def test_zero_params_zero_energy(self):
        p = RbmParams.zeros(3, 2)
        assert energy(p, [1, -1, 1], [1, 1]) == 0.0

    def test_single_coupling(self):
        p = RbmParams(1, 1, np.zeros(1), np.zeros(1), np.ones((1, 1)))
        assert energy(p, [1], [1]) == -1.0

    @pytest.mark.parametrize("domain", [PM1, ZERO_ONE])
    def test_boltzmann_weights_normalize(self, domain):
        rng = np.random.default_rng(0)
        for nv, nh in [(2, 2), (3, 4), (4, 4)]:
            p = random_params(rng, nv, nh, domain)
            z = 0.0
            for v in all_configs(nv, domain):
                for h in all_configs(nh, domain):
                    z += math.exp(-energy(p, v, h))
            joint = enumerate_joint(p)
            assert joint.sum() == pytest.approx(1.0, abs=1e-12)
            # manual weights over Z match the enumerated joint
            w00 = math.exp(-energy(p, all_configs(nv, domain)[0],
                                   all_configs(nh, domain)[0])) / z
            assert joint[0, 0] == pytest.approx(w00, rel=1e-10)

    def test_dimension_mismatch(self):
        p = RbmParams.zeros(2, 2)
        with pytest.raises(ValueError):
            energy(p, [1, 1, 1], [1, 1])


class TestConditionals:
    def test_zero_params_give_half(self):
        p = RbmParams.zeros(3, 2)
        assert np.allclose(hidden_conditional(p, [1, -1, 1]), 0.5, atol=0)
        assert np.allclose(visible_conditional(p, [1, 1]), 0.5, atol=0)

    def test_large_negative_bias_switches_off(self):
        p = RbmParams(1, 1, np.zeros(1), np.array([-50.0]), np.zeros((1, 1)),
                      domain=ZERO_ONE)
        assert hidden_conditional(p, [1])[0] < 1e-20

    def test_pm1_example_value(self):
        p = RbmParams(2, 1, np.zeros(2), np.zeros(1), np.ones((2, 1)))
        got = hidden_conditional(p, [1, 1])[0]
        assert got == pytest.approx(sigmoid(4), abs=1e-12)

    @pytest.mark.parametrize("domain", [PM1, ZERO_ONE])
    def test_hidden_conditional_matches_enumeration(self, domain):
        rng = np.random.default_rng(1)
        for _ in range(10):
            p = random_params(rng, 3, 2, domain)
            joint = enumerate_joint(p)
            hcfg = all_configs(p.n_hidden, domain)
            on = 1 if domain == PM1 else 1
            for kv, v in enumerate(all_configs(p.n_visible, domain)):
                probs = hidden_conditional(p, v)
                row = joint[kv]
                row = row / row.sum()
                for j in range(p.n_hidden):
                    want = row[hcfg[:, j] == on].sum()
                    assert probs[j] == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("domain", [PM1, ZERO_ONE])
    def test_visible_conditional_matches_enumeration(self, domain):
        rng = np.random.default_rng(2)
        for _ in range(10):
            p = random_params(rng, 2, 3, domain)
            joint = enumerate_joint(p)
            vcfg = all_configs(p.n_visible, domain)
            for kh, h in enumerate(all_configs(p.n_hidden, domain)):
                probs = visible_conditional(p, h)
                col = joint[:, kh]
                col = col / col.sum()
                for i in range(p.n_visible):
                    want = col[vcfg[:, i] == 1].sum()
                    assert probs[i] == pytest.approx(want, abs=1e-12)

    def test_conditional_factorizes_over_units(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            p = random_params(rng, 3, 3)
            joint = enumerate_joint(p)
            hcfg = all_configs(p.n_hidden, p.domain)
            for kv, v in enumerate(all_configs(p.n_visible, p.domain)):
                row = joint[kv] / joint[kv].sum()
                probs = hidden_conditional(p, v)
                for kh, h in enumerate(hcfg):
                    product = 1.0
                    for j in range(p.n_hidden):
                        pj = probs[j]
                        product *= pj if h[j] == 1 else 1 - pj
                    assert row[kh] == pytest.approx(product, abs=1e-12)


class TestGibbsKernel:
    def test_half_updates_satisfy_detailed_balance(self):
        rng = np.random.default_rng(4)
        p = random_params(rng, 2, 2)
        joint = enumerate_joint(p)
        vcfg = all_configs(2, PM1)
        hcfg = all_configs(2, PM1)
        # resampling h given v: p(v,h) K((v,h)->(v,h')) symmetric in h,h'
        for kv in range(4):
            for kh in range(4):
                for kh2 in range(4):
                    probs = hidden_conditional(p, vcfg[kv])
                    def hprob(hvec):
                        out = 1.0
                        for j in range(2):
                            out *= probs[j] if hvec[j] == 1 else 1 - probs[j]
                        return out
                    lhs = joint[kv, kh] * hprob(hcfg[kh2])
                    rhs = joint[kv, kh2] * hprob(hcfg[kh])
                    assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_block_sweep_leaves_marginal_stationary(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            p = random_params(rng, 3, 2)
            dist = exact_distribution(p).dense_probs()
            vcfg = all_configs(3, PM1)
            hcfg = all_configs(2, PM1)
            # T[v, v'] = sum_h p(h|v) p(v'|h)
            T = np.zeros((8, 8))
            for kv in range(8):
                hp = hidden_conditional(p, vcfg[kv])
                for kh in range(4):
                    ph = np.prod([hp[j] if hcfg[kh, j] == 1 else 1 - hp[j]
                                  for j in range(2)])
                    vp = visible_conditional(p, hcfg[kh])
                    for kv2 in range(8):
                        pv = np.prod([vp[i] if vcfg[kv2, i] == 1 else 1 - vp[i]
                                      for i in range(3)])
                        T[kv, kv2] += ph * pv
            assert np.allclose(dist @ T, dist, atol=1e-12)


class TestCdGradient:
    def test_zero_params_give_zero_hidden_gradient(self):
        p = RbmParams.zeros(3, 2)
        batch = np.array([[1, 1, -1], [1, -1, -1], [-1, 1, 1]])
        da, db, dw = cd_gradient(p, batch, rng=0)
        assert np.allclose(db, 0.0, atol=0)

    def test_single_visible_all_plus_batch(self):
        p = RbmParams.zeros(1, 1)
        batch = np.ones((400, 1))
        da, db, dw = cd_gradient(p, batch, rng=1)
        assert da[0] > 0

    def test_stationary_at_the_model_distribution(self):
        rng = np.random.default_rng(6)
        p = random_params(rng, 3, 3, scale=0.4)
        model_dist = exact_distribution(p)
        batch = sample_autoregressive(model_dist, 20_000, seed=9)
        da, db, dw = cd_gradient(p, batch, cd_steps=1, rng=2)
        assert np.abs(dw).max() <= 0.05
        assert np.abs(da).max() <= 0.05

    def test_long_chain_matches_exact_model_moment(self):
        # the CD model term converges to the exact <v h> as the chain grows
        rng = np.random.default_rng(7)
        p = random_params(rng, 3, 3, scale=0.5)
        joint = enumerate_joint(p)
        vcfg = all_configs(3, PM1)
        hcfg = all_configs(3, PM1)
        exact = np.einsum("vh,vi,hj->ij", joint, vcfg, hcfg)
        batch = np.tile(vcfg, (625, 1))  # 5000 rows, start state irrelevant
        data_term = batch.T @ np.tanh(batch @ p.w + p.b) / batch.shape[0]
        da, db, dw = cd_gradient(p, batch, cd_steps=1000, rng=3)
        model_term = data_term - dw
        assert np.abs(model_term - exact).max() <= 0.02

    def test_empty_batch_rejected(self):
        p = RbmParams.zeros(2, 2)
        with pytest.raises(ValueError):
            cd_gradient(p, np.empty((0, 2)), rng=0)


class TestTrain:
    def test_zero_epochs_returns_initialization(self):
        dist = tc_loop_distribution(LoopModel(4, +1))
        samples = sample_autoregressive(dist, 200, seed=5)
        cfg = TrainConfig(epochs=0, seed=42)
        params = train(samples, 3, cfg)
        rng = np.random.default_rng(42)
        expected_w = rng.normal(0.0, cfg.init_scale, size=(4, 3))
        assert np.array_equal(params.w, expected_w)
        assert np.all(params.a == 0) and np.all(params.b == 0)

    def test_training_is_deterministic(self):
        dist = tc_loop_distribution(LoopModel(4, +1))
        samples = sample_autoregressive(dist, 500, seed=6)
        cfg = TrainConfig(epochs=30, seed=7)
        one = train(samples, 4, cfg)
        two = train(samples, 4, cfg)
        assert np.array_equal(one.w, two.w)
        assert np.array_equal(one.a, two.a)
        assert np.array_equal(one.b, two.b)

    def test_trace_length_matches_epochs(self):
        dist = tc_loop_distribution(LoopModel(4, +1))
        samples = sample_autoregressive(dist, 300, seed=8)
        _, trace = train_with_trace(samples, 2, TrainConfig(epochs=12, seed=1))
        assert trace.shape == (12,)
        assert np.all(trace >= 0) and np.all(trace <= 1)

    def test_needs_a_hidden_unit(self):
        dist = tc_loop_distribution(LoopModel(4, +1))
        samples = sample_autoregressive(dist, 100, seed=9)
        with pytest.raises(ValueError):
            train(samples, 0, TrainConfig(epochs=1))

    def test_faithful_and_random_start_variants_run(self):
        dist = tc_loop_distribution(LoopModel(4, +1))
        samples = sample_autoregressive(dist, 200, seed=10)
        for cfg in (TrainConfig(epochs=5, seed=2, faithful_alg1=True),
                    TrainConfig(epochs=5, seed=2, start="random")):
            params = train(samples, 3, cfg)
            assert np.all(np.isfinite(params.w))


class TestSampleRbm:
    def test_zero_params_give_uniform_marginals(self):
        p = RbmParams.zeros(4, 3)
        samples = sample_rbm(p, 10_000, burn_in=10, thinning=1, seed=11)
        means = samples.rows.mean(axis=0)
        assert np.abs(means).max() <= 0.04

    def test_seed_reproducibility(self):
        rng = np.random.default_rng(12)
        p = random_params(rng, 3, 3)
        one = sample_rbm(p, 500, burn_in=50, thinning=2, seed=13)
        two = sample_rbm(p, 500, burn_in=50, thinning=2, seed=13)
        assert one == two

    def test_matches_exact_distribution_in_tv(self):
        rng = np.random.default_rng(14)
        p = random_params(rng, 3, 2, scale=0.4)
        samples = sample_rbm(p, 40_000, burn_in=200, thinning=3, seed=15)
        from synergy_lab.sampling import empirical_distribution
        emp = empirical_distribution(samples).dense_probs()
        exact = exact_distribution(p).dense_probs()
        assert 0.5 * np.abs(emp - exact).sum() <= 0.02

    def test_zero_one_domain_values(self):
        p = RbmParams.zeros(2, 2, domain=ZERO_ONE)
        samples = sample_rbm(p, 100, burn_in=5, thinning=1, seed=16)
        assert set(np.unique(samples.rows)) <= {0, 1}


class TestParamsIo:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(17)
        p = random_params(rng, 4, 6)
        path = tmp_path / "params.json"
        write_params(p, path)
        q = read_params(path)
        assert q.domain == p.domain
        assert np.array_equal(q.a, p.a)
        assert np.array_equal(q.b, p.b)
        assert np.array_equal(q.w, p.w)

    def test_json_layout(self, tmp_path):
        p = RbmParams.zeros(2, 3)
        path = tmp_path / "p.json"
        write_params(p, path)
        obj = json.loads(path.read_text())
        assert sorted(obj) == ["a", "b", "domain", "n_hidden", "n_visible", "w"]
        assert len(obj["w"]) == 2 and len(obj["w"][0]) == 3

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValueError, match="malformed"):
            read_params(path)

    def test_inconsistent_dimensions(self, tmp_path):
        path = tmp_path / "dims.json"
        path.write_text(json.dumps({
            "n_visible": 2, "n_hidden": 2, "domain": "pm1",
            "a": [0.0, 0.0], "b": [0.0, 0.0], "w": [[0.0, 0.0]],
        }))
        with pytest.raises(ValueError, match="shape"):
            read_params(path)
