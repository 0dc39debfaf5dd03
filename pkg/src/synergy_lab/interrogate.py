"""Effective n-body couplings of an RBM's marginal visible energy.

Marginalizing the hidden layer leaves a visible energy
    H(v) = -sum_i a_i v_i - sum_j log sum_h exp(h (b_j + sum_i w_ij v_i))
with p(v) proportional to exp(-H(v)). For pm1 visibles, H expands over
products of spins and the coefficient of prod_{k in S} v_k is the
sign-basis (parity) coefficient
    I_S = 2**-n sum_v (prod_{k in S} v_k) H(v),
normalization included so that the expansion reconstructs H exactly. Three
routes to the same number are kept deliberately separate: a per-subset
closed form that groups the sum over sign patterns, a fast transform of the
tabulated energy for every subset at once, and a brute-force oracle.

For zero_one visibles the expansion is over monomials instead: coefficients
of the hidden-trace term K come from subset-lattice inversion of K evaluated
at indicator inputs, with independent oracle alongside.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .lattice import PM1, ZERO_ONE, bit_parity, states_to_values
from .rbm import RbmParams, _as_float_rows

SIZE_CAP = 24  # full tables hold 2**n coefficients
_CHUNK = 1 << 16

PM1_PARITY = "pm1_parity"
ZERO_ONE_MOEBIUS = "zero_one_moebius"


class SizeCapError(ValueError):
    """Raised when a full-table operation would exceed the size cap."""


@dataclass
class InteractionTable:
    """All coupling coefficients of one RBM, indexed by subset bitmask.

    The empty subset (constant term) is always present at mask 0.
    """

    n_visible: int
    convention: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (1 << self.n_visible,):
            raise ValueError("coefficient table has the wrong length")
        if self.convention not in (PM1_PARITY, ZERO_ONE_MOEBIUS):
            raise ValueError(f"unknown convention {self.convention!r}")

    def coeff(self, subset: Sequence[int]) -> float:
        mask = 0
        for i in subset:
            i = int(i)
            if not 0 <= i < self.n_visible:
                raise ValueError(f"index {i} out of range")
            if mask & (1 << i):
                raise ValueError("subset has duplicate indices")
            mask |= 1 << i
        return float(self.values[mask])

    def items(self, max_order: int | None = None) -> Iterator[tuple[tuple[int, ...], float]]:
        """(subset, coefficient) pairs sorted by (order, lexicographic subset)."""
        top = self.n_visible if max_order is None else min(max_order, self.n_visible)
        for order in range(top + 1):
            for combo in combinations(range(self.n_visible), order):
                mask = 0
                for i in combo:
                    mask |= 1 << i
                yield combo, float(self.values[mask])

    def max_abs_by_order(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for subset, value in self.items():
            order = len(subset)
            out[order] = max(out.get(order, 0.0), abs(value))
        return out

    def to_json_obj(self, max_order: int | None = None) -> dict:
        return {
            "n": self.n_visible,
            "convention": self.convention,
            "coeffs": [
                {"subset": [i + 1 for i in subset], "value": value}
                for subset, value in self.items(max_order)
            ],
        }


def _log_hidden_trace(act: np.ndarray, domain: str) -> np.ndarray:
    """log sum over one hidden unit's states of exp(state * act), stable."""
    if domain == PM1:
        # log(2 cosh x)
        ax = np.abs(act)
        return ax + np.log1p(np.exp(-2.0 * ax))
    # log(1 + exp x)
    return np.maximum(act, 0.0) + np.log1p(np.exp(-np.abs(act)))


def effective_energy(params: RbmParams, visible) -> float:
    """Marginal visible energy H(v); exp(-H) renormalized is p(v)."""
    v = _as_float_rows(params, visible, params.n_visible, "visible")[0]
    act = params.b + v @ params.w
    return float(-params.a @ v - _log_hidden_trace(act, params.domain).sum())


def _value_block(lo: int, hi: int, n: int, domain: str) -> np.ndarray:
    idx = np.arange(lo, hi, dtype=np.int64)
    states = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return states_to_values(states, domain).astype(np.float64)


def effective_energy_table(params: RbmParams) -> np.ndarray:
    """H(v) for every configuration index, chunked and thread-parallel.

    Chunks land in disjoint slices of one preallocated vector, so the result
    is independent of the worker count.
    """
    n = params.n_visible
    if n > SIZE_CAP:
        raise SizeCapError(f"energy table needs 2**{n} entries; cap is 2**{SIZE_CAP}")
    size = 1 << n
    out = np.empty(size)

    def fill(lo: int, hi: int) -> None:
        vals = _value_block(lo, hi, n, params.domain)
        act = params.b + vals @ params.w
        out[lo:hi] = -(vals @ params.a) - _log_hidden_trace(act, params.domain).sum(axis=1)

    if size <= _CHUNK:
        fill(0, size)
        return out
    bounds = list(range(0, size, _CHUNK)) + [size]
    with ThreadPoolExecutor(max_workers=_kernels.thread_cap()) as pool:
        futures = [pool.submit(fill, lo, hi) for lo, hi in zip(bounds, bounds[1:])]
        for f in futures:
            f.result()
    return out


def _validated_subset(subset, n: int, allow_empty: bool) -> list[int]:
    out = sorted(int(i) for i in subset)
    if not out and not allow_empty:
        raise ValueError("subset must be nonempty; the empty subset is the "
                         "constant term, available from the full table")
    if len(set(out)) != len(out):
        raise ValueError("subset has duplicate indices")
    if out and not 0 <= out[0] <= out[-1] < n:
        raise ValueError("subset index out of range")
    return out


def _require_domain(params: RbmParams, domain: str) -> None:
    if params.domain != domain:
        raise ValueError(f"this operation needs domain {domain!r}, "
                         f"got {params.domain!r}")


def interaction_pm1(params: RbmParams, subset) -> float:
    """Sign-basis coefficient of the subset in H(v), from the parameters.

    Groups the defining sum by sign patterns: the subset spins are swept
    through their 2**r assignments (weighted by the product of signs) and,
    for each, the remaining spins are swept through their sign vectors; the
    hidden trace is evaluated at every resulting activation. Cost grows as
    2**n_visible regardless of the subset, in chunks of bounded memory.
    """
    _require_domain(params, PM1)
    subset = _validated_subset(subset, params.n_visible, allow_empty=True)
    n = params.n_visible
    rest = [i for i in range(n) if i not in subset]
    r = len(subset)
    w_sub = params.w[subset]
    w_rest = params.w[rest]

    total = 0.0
    n_eta = 1 << len(rest)
    for lo in range(0, n_eta, _CHUNK):
        hi = min(lo + _CHUNK, n_eta)
        eta_states = (np.arange(lo, hi, dtype=np.int64)[:, None]
                      >> np.arange(len(rest), dtype=np.int64)) & 1
        eta = 1.0 - 2.0 * eta_states
        base = eta @ w_rest + params.b
        for pattern in range(1 << r):
            eps_states = (pattern >> np.arange(r, dtype=np.int64)) & 1
            eps = 1.0 - 2.0 * eps_states
            chi = float(np.prod(eps)) if r else 1.0
            act = base + eps @ w_sub
            total += chi * _log_hidden_trace(act, PM1).sum()
    coeff = -total / (1 << n)
    if r == 1:
        coeff -= params.a[subset[0]]
    return float(coeff)


def interaction_table_pm1(params: RbmParams, size_cap: int = SIZE_CAP) -> InteractionTable:
    """Every sign-basis coefficient at once via the fast parity transform."""
    _require_domain(params, PM1)
    if params.n_visible > size_cap:
        raise SizeCapError(
            f"full table needs 2**{params.n_visible} coefficients; "
            f"cap is 2**{size_cap}. Use a per-subset query instead.")
    values = effective_energy_table(params)
    _kernels.wht_inplace(values)
    values /= 1 << params.n_visible
    return InteractionTable(params.n_visible, PM1_PARITY, values)


def _k01(params: RbmParams, act_sum: np.ndarray) -> float:
    return float(_log_hidden_trace(params.b + act_sum, ZERO_ONE).sum())


def interaction_zero_one(params: RbmParams, subset) -> float:
    """Monomial coefficient of the subset in the hidden-trace term K.

    Subset-lattice inversion of K over the subset's own lattice:
    sum over T <= S of (-1)^(|S|-|T|) K(sum of the w rows in T).
    """
    _require_domain(params, ZERO_ONE)
    subset = _validated_subset(subset, params.n_visible, allow_empty=False)
    r = len(subset)
    w_sub = params.w[subset]
    total = 0.0
    for t in range(1 << r):
        picked = [(t >> j) & 1 for j in range(r)]
        size = sum(picked)
        act = np.asarray(picked, dtype=np.float64) @ w_sub
        sign = 1.0 if (r - size) % 2 == 0 else -1.0
        total += sign * _k01(params, act)
    return float(total)


def k_indicator_table(params: RbmParams, size_cap: int = SIZE_CAP) -> np.ndarray:
    """Hidden-trace term K evaluated at every subset-indicator input."""
    _require_domain(params, ZERO_ONE)
    n = params.n_visible
    if n > size_cap:
        raise SizeCapError(
            f"indicator table needs 2**{n} entries; cap is 2**{size_cap}.")
    size = 1 << n
    values = np.empty(size)
    for lo in range(0, size, _CHUNK):
        hi = min(lo + _CHUNK, size)
        states = ((np.arange(lo, hi, dtype=np.int64)[:, None]
                   >> np.arange(n, dtype=np.int64)) & 1).astype(np.float64)
        act = params.b + states @ params.w
        values[lo:hi] = _log_hidden_trace(act, ZERO_ONE).sum(axis=1)
    return values


def interaction_table_zero_one(params: RbmParams,
                               size_cap: int = SIZE_CAP) -> InteractionTable:
    """All monomial coefficients of K via the fast subset-lattice transform."""
    values = k_indicator_table(params, size_cap)
    _kernels.moebius_inplace(values)
    return InteractionTable(params.n_visible, ZERO_ONE_MOEBIUS, values)


def oracle_parity_coefficients(values: np.ndarray) -> InteractionTable:
    """Brute-force sign-basis coefficients of an arbitrary table.

    Direct double loop over subsets and configurations; ground truth for the
    fast transform and the closed forms.
    """
    values = np.asarray(values, dtype=np.float64)
    size = values.shape[0]
    n = int(size).bit_length() - 1
    if 1 << n != size:
        raise ValueError("table length must be a power of two")
    idx = np.arange(size, dtype=np.int64)
    out = np.empty(size)
    for mask in range(size):
        signs = 1.0 - 2.0 * bit_parity(idx & mask)
        out[mask] = signs @ values / size
    return InteractionTable(n, PM1_PARITY, out)


def oracle_moebius_coefficients(values: np.ndarray) -> InteractionTable:
    """Brute-force subset-lattice inversion of a table over indicator inputs."""
    values = np.asarray(values, dtype=np.float64)
    size = values.shape[0]
    n = int(size).bit_length() - 1
    if 1 << n != size:
        raise ValueError("table length must be a power of two")
    out = np.empty(size)
    for mask in range(size):
        order = bin(mask).count("1")
        acc = 0.0
        sub = mask
        while True:
            sign = 1.0 if (order - bin(sub).count("1")) % 2 == 0 else -1.0
            acc += sign * values[sub]
            if sub == 0:
                break
            sub = (sub - 1) & mask
        out[mask] = acc
    return InteractionTable(n, ZERO_ONE_MOEBIUS, out)
