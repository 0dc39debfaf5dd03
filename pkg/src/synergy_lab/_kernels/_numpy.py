"""Reference numpy kernels; mirrored by the compiled ``_native`` module.

Uniform-consumption order and update sweep order are part of the contract:
``cd_stats`` uses u_h[k] then u_v[k] for Gibbs step k, ``gibbs_chain`` uses
u_h[t] then u_v[t] for sweep t. A unit switches on when its uniform is
strictly below the conditional on-probability.
"""
import numpy as np


def _stable_sigmoid(x):
    # exp argument kept nonpositive so large activations cannot overflow
    t = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + t), t / (1.0 + t))


def _p_on(act, pm1):
    # pm1 units: p(+1 | field x) = sigmoid(2x); zero_one units: sigmoid(x)
    return _stable_sigmoid(2.0 * act) if pm1 else _stable_sigmoid(act)


def _draw(act, u, pm1):
    p = _p_on(act, pm1)
    off = -1.0 if pm1 else 0.0
    return np.where(u < p, 1.0, off)


def _mean_on(act, pm1):
    return np.tanh(act) if pm1 else _stable_sigmoid(act)


def cd_stats(a, b, w, batch, v_start, cd_steps, pm1, u_h, u_v, u_data=None):
    """Contrastive-divergence statistics for one batch.

    Returns (da, db, dw, recon) where the d* are data-minus-model moment
    differences (unscaled) and recon is the fraction of visible units that
    differ from the batch after the first reconstruction sweep.
    """
    B = batch.shape[0]
    act = batch @ w + b
    if u_data is None:
        h_data = _mean_on(act, pm1)
    else:
        h_data = _draw(act, u_data, pm1)
    da = batch.mean(axis=0)
    db = h_data.mean(axis=0)
    dw = batch.T @ h_data / B

    v = v_start
    recon = 0.0
    for k in range(cd_steps):
        h = _draw(v @ w + b, u_h[k], pm1)
        v = _draw(h @ w.T + a, u_v[k], pm1)
        if k == 0:
            recon = float(np.mean(v != batch))

    h_model = _mean_on(v @ w + b, pm1)
    da = da - v.mean(axis=0)
    db = db - h_model.mean(axis=0)
    dw = dw - v.T @ h_model / B
    return da, db, dw, recon


def gibbs_chain(a, b, w, pm1, v0, n_keep, burn_in, thinning, u_h, u_v):
    """Single block-Gibbs chain over (hidden, visible) sweeps.

    Performs burn_in + n_keep * thinning sweeps and records the visible
    state after every thinning-th post-burn-in sweep.
    """
    nv = a.shape[0]
    out = np.empty((n_keep, nv), dtype=np.int8)
    v = np.asarray(v0, dtype=np.float64).copy()
    total = burn_in + n_keep * thinning
    k = 0
    for t in range(total):
        h = _draw(v @ w + b, u_h[t], pm1)
        v = _draw(h @ w.T + a, u_v[t], pm1)
        if t >= burn_in and (t - burn_in + 1) % thinning == 0:
            out[k] = v.astype(np.int8)
            k += 1
    return out


def wht_inplace(f):
    """Unnormalized Walsh-Hadamard transform, in place over length 2**n."""
    n = f.shape[0]
    h = 1
    while h < n:
        view = f.reshape(-1, 2 * h)
        top = view[:, :h] + view[:, h:]
        bot = view[:, :h] - view[:, h:]
        view[:, :h] = top
        view[:, h:] = bot
        h *= 2


def moebius_inplace(f):
    """Subset-lattice inversion in place: f[S] <- sum_{T<=S} (-1)^{|S|-|T|} f[T]."""
    n = f.shape[0]
    step = 1
    while step < n:
        view = f.reshape(-1, 2 * step)
        view[:, step:] -= view[:, :step]
        step *= 2
