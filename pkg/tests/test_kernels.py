"""Backend equivalence: the compiled kernels must reproduce the numpy ones.

Sampled spins are compared exactly (both backends consume the same uniforms
and apply the same u < p rule); float moments are compared to rounding.
"""
import numpy as np
import pytest

from synergy_lab._kernels import _numpy

native = pytest.importorskip(
    "synergy_lab._kernels._native",
    reason="compiled kernels not built; numpy fallback already covered")


def make_inputs(rng, B, nv, nh, cd_steps, faithful):
    a = rng.normal(0, 0.5, nv)
    b = rng.normal(0, 0.5, nh)
    w = rng.normal(0, 0.8, (nv, nh))
    batch = np.where(rng.random((B, nv)) < 0.5, 1.0, -1.0)
    u_h = rng.random((cd_steps, B, nh))
    u_v = rng.random((cd_steps, B, nv))
    u_data = rng.random((B, nh)) if faithful else None
    return a, b, w, batch, u_h, u_v, u_data


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("faithful", [False, True])
def test_cd_stats_agree(seed, faithful):
    rng = np.random.default_rng(seed)
    cd_steps = int(rng.integers(1, 4))
    a, b, w, batch, u_h, u_v, u_data = make_inputs(rng, 64, 5, 7, cd_steps,
                                                   faithful)
    ref = _numpy.cd_stats(a, b, w, batch, batch, cd_steps, True, u_h, u_v, u_data)
    got = native.cd_stats(a, b, w, batch, batch, cd_steps, True, u_h, u_v, u_data)
    for r, g in zip(ref[:3], got[:3]):
        assert np.allclose(g, r, rtol=0, atol=1e-12)
    assert got[3] == pytest.approx(ref[3], abs=1e-12)


@pytest.mark.parametrize("pm1", [True, False])
def test_cd_stats_agree_across_domains(pm1):
    rng = np.random.default_rng(11)
    a, b, w, _, u_h, u_v, _ = make_inputs(rng, 32, 4, 3, 2, False)
    on, off = 1.0, (-1.0 if pm1 else 0.0)
    batch = np.where(rng.random((32, 4)) < 0.5, on, off)
    ref = _numpy.cd_stats(a, b, w, batch, batch, 2, pm1, u_h, u_v, None)
    got = native.cd_stats(a, b, w, batch, batch, 2, pm1, u_h, u_v, None)
    for r, g in zip(ref[:3], got[:3]):
        assert np.allclose(g, r, rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gibbs_chain_agrees_exactly(seed):
    rng = np.random.default_rng(100 + seed)
    nv, nh = 4, 6
    a = rng.normal(0, 0.5, nv)
    b = rng.normal(0, 0.5, nh)
    w = rng.normal(0, 1.0, (nv, nh))
    v0 = np.where(rng.random(nv) < 0.5, 1.0, -1.0)
    n_keep, burn_in, thinning = 200, 37, 3
    total = burn_in + n_keep * thinning
    u_h = rng.random((total, nh))
    u_v = rng.random((total, nv))
    ref = _numpy.gibbs_chain(a, b, w, True, v0, n_keep, burn_in, thinning,
                             u_h, u_v)
    got = native.gibbs_chain(a, b, w, True, v0, n_keep, burn_in, thinning,
                             u_h, u_v)
    assert np.array_equal(got, ref)


def test_transforms_agree_bitwise():
    rng = np.random.default_rng(7)
    for n in (1, 4, 10, 14):
        values = rng.normal(0, 1, 1 << n)
        a, b = values.copy(), values.copy()
        _numpy.wht_inplace(a)
        native.wht_inplace(b)
        assert np.array_equal(a, b)
        a, b = values.copy(), values.copy()
        _numpy.moebius_inplace(a)
        native.moebius_inplace(b)
        assert np.array_equal(a, b)


def test_backend_selection_env(monkeypatch):
    import importlib
    import synergy_lab._kernels as kernels
    assert kernels.BACKEND in ("native", "numpy")
    monkeypatch.setenv("SYNERGY_LAB_BACKEND", "numpy")
    reloaded = importlib.reload(kernels)
    assert reloaded.BACKEND == "numpy"
    monkeypatch.delenv("SYNERGY_LAB_BACKEND")
    importlib.reload(kernels)


def test_thread_cap_env(monkeypatch):
    from synergy_lab import _kernels
    monkeypatch.setenv("SYNERGY_LAB_THREADS", "3")
    assert _kernels.thread_cap() == 3
    monkeypatch.setenv("SYNERGY_LAB_THREADS", "0")
    with pytest.raises(ValueError):
        _kernels.thread_cap()
    monkeypatch.delenv("SYNERGY_LAB_THREADS")
    assert _kernels.thread_cap() >= 1
