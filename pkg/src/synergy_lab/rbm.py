"""Restricted Boltzmann machine over binary units, with CD-n training.

Sign convention: the joint energy is
    E(v, h) = -sum_i a_i v_i - sum_j b_j h_j - sum_ij w_ij v_i h_j
and p(v, h) = exp(-E) / Z. Both layers share one domain, either pm1
(values +1/-1) or zero_one. Conditionals factorize per unit; for zero_one
units p(on|field x) = sigmoid(x), for pm1 units sigmoid(2x).

Training is plain stochastic gradient ascent with CD-n statistics. The
data-side hidden moment uses the analytic conditional mean rather than a
single sampled hidden vector (same expectation, less variance); pass
``faithful_alg1=True`` for the sampled version. The model-side chain starts
from the data batch by default; ``start="random"`` starts it from a uniform
random visible vector instead.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import DOMAINS, PM1, ExactDistribution, states_to_values
from .sampling import SampleSet

_ENUM_LIMIT = 22  # largest n_visible + n_hidden enumerated exactly


@dataclass
class RbmParams:
    """Visible biases ``a``, hidden biases ``b``, couplings ``w`` (nv x nh)."""

    n_visible: int
    n_hidden: int
    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    domain: str = PM1

    def __post_init__(self):
        if self.n_visible < 1 or self.n_hidden < 1:
            raise ValueError("layer sizes must be >= 1")
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown spin domain {self.domain!r}")
        self.a = np.ascontiguousarray(self.a, dtype=np.float64)
        self.b = np.ascontiguousarray(self.b, dtype=np.float64)
        self.w = np.ascontiguousarray(self.w, dtype=np.float64)
        if self.a.shape != (self.n_visible,):
            raise ValueError("visible bias has the wrong shape")
        if self.b.shape != (self.n_hidden,):
            raise ValueError("hidden bias has the wrong shape")
        if self.w.shape != (self.n_visible, self.n_hidden):
            raise ValueError("coupling matrix has the wrong shape")
        for arr in (self.a, self.b, self.w):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters must be finite")

    def copy(self) -> "RbmParams":
        return RbmParams(self.n_visible, self.n_hidden,
                         self.a.copy(), self.b.copy(), self.w.copy(), self.domain)

    @classmethod
    def zeros(cls, n_visible: int, n_hidden: int, domain: str = PM1) -> "RbmParams":
        return cls(n_visible, n_hidden, np.zeros(n_visible), np.zeros(n_hidden),
                   np.zeros((n_visible, n_hidden)), domain)


@dataclass
class TrainConfig:
    # init_scale must be large enough to break the sign symmetry of the
    # parity target; near w = 0 the CD gradient is cubic in w and training
    # can stall at the symmetric saddle for thousands of epochs
    learning_rate: float = 0.05
    epochs: int = 2000
    batch_size: int = 100
    cd_steps: int = 1
    seed: int = 0
    init_scale: float = 0.1
    start: str = "data"
    faithful_alg1: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.cd_steps < 1:
            raise ValueError("cd_steps must be >= 1")
        if self.init_scale < 0:
            raise ValueError("init_scale must be >= 0")
        if self.start not in ("data", "random"):
            raise ValueError("start must be 'data' or 'random'")


def _as_float_rows(params: RbmParams, values, width: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"{what} must have {width} entries per row")
    on, off = (1.0, -1.0) if params.domain == PM1 else (1.0, 0.0)
    if not np.all((arr == on) | (arr == off)):
        raise ValueError(f"{what} contains values outside the {params.domain} domain")
    return arr


def energy(params: RbmParams, visible, hidden) -> float:
    """Joint energy E(v, h) of one configuration pair."""
    v = _as_float_rows(params, visible, params.n_visible, "visible")[0]
    h = _as_float_rows(params, hidden, params.n_hidden, "hidden")[0]
    return float(-params.a @ v - params.b @ h - v @ params.w @ h)


def _p_on(act: np.ndarray, pm1: bool) -> np.ndarray:
    t = np.exp(-np.abs(2.0 * act if pm1 else act))
    x = 2.0 * act if pm1 else act
    return np.where(x >= 0.0, 1.0 / (1.0 + t), t / (1.0 + t))


def hidden_conditional(params: RbmParams, visible) -> np.ndarray:
    """p(h_j = on | v) for every hidden unit; on is +1 for pm1, 1 for zero_one."""
    v = _as_float_rows(params, visible, params.n_visible, "visible")[0]
    return _p_on(params.b + v @ params.w, params.domain == PM1)


def visible_conditional(params: RbmParams, hidden) -> np.ndarray:
    """p(v_i = on | h); mirror of hidden_conditional with a and w transposed."""
    h = _as_float_rows(params, hidden, params.n_hidden, "hidden")[0]
    return _p_on(params.a + params.w @ h, params.domain == PM1)


def _chain_uniforms(rng: np.random.Generator, cd_steps: int, B: int,
                    nv: int, nh: int, start: str, faithful: bool,
                    pm1: bool, batch: np.ndarray):
    """Pre-draw every uniform the CD kernel consumes, in the pinned order."""
    u_data = rng.random((B, nh)) if faithful else None
    if start == "random":
        off = -1.0 if pm1 else 0.0
        v_start = np.where(rng.random((B, nv)) < 0.5, 1.0, off)
    else:
        v_start = batch
    u_h = rng.random((cd_steps, B, nh))
    u_v = rng.random((cd_steps, B, nv))
    return u_data, v_start, u_h, u_v


def cd_gradient(params: RbmParams, batch, cd_steps: int = 1,
                rng: np.random.Generator | int | None = None,
                start: str = "data", faithful_alg1: bool = False):
    """Unscaled CD-n gradient (da, db, dw); the caller applies the rate."""
    rows = batch.rows if isinstance(batch, SampleSet) else np.asarray(batch)
    data = _as_float_rows(params, rows, params.n_visible, "batch")
    if data.shape[0] == 0:
        raise ValueError("batch is empty")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    pm1 = params.domain == PM1
    u_data, v_start, u_h, u_v = _chain_uniforms(
        rng, cd_steps, data.shape[0], params.n_visible, params.n_hidden,
        start, faithful_alg1, pm1, data)
    da, db, dw, _ = _kernels.cd_stats(params.a, params.b, params.w, data,
                                      v_start, cd_steps, pm1, u_h, u_v, u_data)
    return da, db, dw


def train_with_trace(samples: SampleSet, n_hidden: int,
                     config: TrainConfig) -> tuple[RbmParams, np.ndarray]:
    """Train and also return the per-epoch reconstruction-error trace."""
    if n_hidden < 1:
        raise ValueError("need at least one hidden unit")
    nv = samples.num_vars
    rng = np.random.default_rng(config.seed)
    a = np.zeros(nv)
    b = np.zeros(n_hidden)
    w = rng.normal(0.0, config.init_scale, size=(nv, n_hidden))
    data = samples.rows.astype(np.float64)
    pm1 = samples.domain == PM1
    count = samples.count
    lr = config.learning_rate

    trace = np.zeros(config.epochs)
    for epoch in range(config.epochs):
        perm = rng.permutation(count)
        pos = 0
        acc = 0.0
        while pos < count:
            sel = perm[pos:pos + config.batch_size]
            vb = np.ascontiguousarray(data[sel])
            u_data, v_start, u_h, u_v = _chain_uniforms(
                rng, config.cd_steps, vb.shape[0], nv, n_hidden,
                config.start, config.faithful_alg1, pm1, vb)
            da, db, dw, recon = _kernels.cd_stats(
                a, b, w, vb, v_start, config.cd_steps, pm1, u_h, u_v, u_data)
            a += lr * da
            b += lr * db
            w += lr * dw
            acc += recon * vb.shape[0]
            pos += vb.shape[0]
        trace[epoch] = acc / count
    params = RbmParams(nv, n_hidden, a, b, w, domain=samples.domain)
    return params, trace


def train(samples: SampleSet, n_hidden: int, config: TrainConfig) -> RbmParams:
    """Train an RBM on the sample set; deterministic given config.seed."""
    params, _ = train_with_trace(samples, n_hidden, config)
    return params


def sample_rbm(params: RbmParams, count: int, burn_in: int = 1000,
               thinning: int = 1, seed: int = 0) -> SampleSet:
    """Visible configurations from one seeded block-Gibbs chain."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if burn_in < 0 or thinning < 1:
        raise ValueError("burn_in must be >= 0 and thinning >= 1")
    rng = np.random.default_rng(seed)
    pm1 = params.domain == PM1
    off = -1.0 if pm1 else 0.0
    v0 = np.where(rng.random(params.n_visible) < 0.5, 1.0, off)
    total = burn_in + count * thinning
    u_h = rng.random((total, params.n_hidden))
    u_v = rng.random((total, params.n_visible))
    rows = _kernels.gibbs_chain(params.a, params.b, params.w, pm1, v0,
                                count, burn_in, thinning, u_h, u_v)
    return SampleSet(params.n_visible, rows, seed=seed, source="rbm-gibbs",
                     domain=params.domain)


def enumerate_joint(params: RbmParams) -> np.ndarray:
    """Exact joint table p(v, h), shape (2**nv, 2**nh). Small instances only."""
    nv, nh = params.n_visible, params.n_hidden
    if nv + nh > _ENUM_LIMIT:
        raise ValueError(f"enumeration limited to {_ENUM_LIMIT} total units")
    vcfg = _all_values(nv, params.domain)
    hcfg = _all_values(nh, params.domain)
    logw = (vcfg @ params.a)[:, None] + (hcfg @ params.b)[None, :] \
        + vcfg @ params.w @ hcfg.T
    logw -= logw.max()
    joint = np.exp(logw)
    return joint / joint.sum()


def _all_values(n: int, domain: str) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    states = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return states_to_values(states, domain).astype(np.float64)


def exact_distribution(params: RbmParams) -> ExactDistribution:
    """Exact visible marginal by enumeration. Small instances only."""
    joint = enumerate_joint(params)
    return ExactDistribution(params.n_visible, joint.sum(axis=1), params.domain)


def write_params(params: RbmParams, path) -> None:
    obj = {
        "n_visible": params.n_visible,
        "n_hidden": params.n_hidden,
        "domain": params.domain,
        "a": params.a.tolist(),
        "b": params.b.tolist(),
        "w": params.w.tolist(),
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def read_params(path) -> RbmParams:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed parameter file: {exc}") from None
    try:
        nv = int(obj["n_visible"])
        nh = int(obj["n_hidden"])
        domain = obj["domain"]
        a = np.asarray(obj["a"], dtype=np.float64)
        b = np.asarray(obj["b"], dtype=np.float64)
        w = np.asarray(obj["w"], dtype=np.float64)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"parameter file missing field: {exc}") from None
    return RbmParams(nv, nh, a, b, w, domain)
