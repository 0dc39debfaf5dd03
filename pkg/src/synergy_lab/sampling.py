"""Seeded autoregressive sampling from exact distributions, plus sample files.

Sampling draws each variable in index order from its conditional given the
variables already drawn, so the induced joint law is exactly the source
distribution. The generator is numpy's PCG64, which is a fixed, documented
algorithm: identical (distribution, count, seed) triples give bit-identical
output on every platform. Uniform variates are drawn as one (count, n) block
and consumed column by column.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .lattice import (
    DENSE_LIMIT,
    PM1,
    ZERO_ONE,
    ExactDistribution,
    domain_values,
    index_to_states,
    states_to_index,
    states_to_values,
    values_to_states,
)

_HEADER_RE = re.compile(r"^# n=(\d+) count=(\d+) seed=(\d+) source=(.*)$")


@dataclass(eq=False)
class SampleSet:
    """A block of spin configurations with its generation provenance."""

    num_vars: int
    rows: np.ndarray
    seed: int
    source: str = ""
    domain: str = PM1

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int8)
        if rows.ndim != 2 or rows.shape[1] != self.num_vars:
            raise ValueError(f"rows must have shape (count, {self.num_vars})")
        if rows.shape[0] < 1:
            raise ValueError("a sample set needs at least one row")
        values_to_states(rows, self.domain)  # validates the domain
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.rows = rows
        self.seed = int(self.seed)
        if "\n" in self.source:
            raise ValueError("source label must be a single line")

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SampleSet)
            and self.num_vars == other.num_vars
            and self.seed == other.seed
            and self.source == other.source
            and self.domain == other.domain
            and np.array_equal(self.rows, other.rows)
        )


def _prefix_tables(probs: np.ndarray, n: int) -> list[np.ndarray]:
    """tables[i] = marginal over the first i variables (length 2**i)."""
    tables = [None] * (n + 1)
    tables[n] = probs
    for i in range(n - 1, -1, -1):
        tables[i] = tables[i + 1].reshape(2, 1 << i).sum(axis=0)
    return tables


def sample_autoregressive(dist: ExactDistribution, count: int, seed: int,
                          source: str = "autoregressive") -> SampleSet:
    """Draw ``count`` i.i.d. configurations via the chain of conditionals."""
    if count < 1:
        raise ValueError("count must be >= 1")
    n = dist.num_vars
    rng = np.random.default_rng(seed)
    u = rng.random((count, n))

    if dist.is_dense:
        tables = _prefix_tables(dist.probs, n)
        prefix = np.zeros(count, dtype=np.int64)
        for i in range(n):
            p_zero = tables[i + 1][prefix] / tables[i][prefix]
            bit = (u[:, i] >= p_zero).astype(np.int64)
            prefix |= bit << i
        states = index_to_states(prefix, n)
    else:
        keys = np.array(sorted(dist.probs), dtype=np.int64)
        vals = np.array([dist.probs[int(k)] for k in keys])
        bits = ((keys[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)
        states = np.zeros((count, n), dtype=np.int64)
        for r in range(count):
            alive = np.ones(keys.shape[0], dtype=bool)
            mass = vals.sum()
            for i in range(n):
                zero_here = alive & ~bits[:, i]
                p_zero = vals[zero_here].sum() / mass
                if u[r, i] >= p_zero:
                    states[r, i] = 1
                    alive &= bits[:, i]
                else:
                    alive = zero_here
                mass = vals[alive].sum()

    rows = states_to_values(states, dist.domain)
    return SampleSet(n, rows, seed=seed, source=source, domain=dist.domain)


def chain_conditional(dist: ExactDistribution, var: int,
                      prefix_states: dict[int, int]) -> float:
    """p(state of ``var`` is 0 | states of the variables before it).

    Exposed for tests that compare the sampler's chain conditionals against
    brute-force conditioning of the joint table.
    """
    probs = dist.dense_probs()
    tables = _prefix_tables(probs, dist.num_vars)
    key = 0
    for i, s in prefix_states.items():
        key |= (s & 1) << i
    denom = tables[var][key]
    if denom <= 0:
        raise ValueError("prefix has zero probability")
    return float(tables[var + 1][key] / denom)


def chain_joint_probs(dist: ExactDistribution, order=None) -> np.ndarray:
    """Joint table rebuilt from the chain of conditionals in ``order``.

    Equals the source table for any ordering; used as a property check.
    """
    n = dist.num_vars
    if order is None:
        order = list(range(n))
    inv = [0] * n
    for new, old in enumerate(order):
        inv[old] = new
    view = dist.permuted(order)
    tables = _prefix_tables(view.dense_probs(), n)
    out = np.zeros(1 << n)
    for b in range(1 << n):
        # config index b is in the original variable order
        kb = 0
        for old in range(n):
            kb |= ((b >> old) & 1) << inv[old]
        p = 1.0
        for i in range(n):
            denom = tables[i][kb & ((1 << i) - 1)]
            if denom <= 0:
                p = 0.0
                break
            p *= tables[i + 1][kb & ((1 << (i + 1)) - 1)] / denom
        out[b] = p
    return out


def empirical_distribution(samples: SampleSet) -> ExactDistribution:
    """Relative-frequency table over the observed configurations."""
    n = samples.num_vars
    idx = states_to_index(values_to_states(samples.rows, samples.domain))
    if n <= DENSE_LIMIT:
        counts = np.bincount(idx, minlength=1 << n).astype(np.float64)
        return ExactDistribution(n, counts / samples.count, samples.domain,
                                 n_samples=samples.count)
    acc: dict[int, float] = {}
    for k in idx:
        acc[int(k)] = acc.get(int(k), 0.0) + 1.0
    acc = {k: c / samples.count for k, c in acc.items()}
    return ExactDistribution(n, acc, samples.domain, n_samples=samples.count)


def samples_to_text(samples: SampleSet) -> str:
    """Sample-file text: one header line, then one row per sample."""
    lines = [f"# n={samples.num_vars} count={samples.count} "
             f"seed={samples.seed} source={samples.source}"]
    for row in samples.rows:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_samples(samples: SampleSet, path) -> None:
    """Write the plain-text sample file format."""
    with open(path, "w", newline="\n") as fh:
        fh.write(samples_to_text(samples))


def read_samples(path, domain: str | None = None) -> SampleSet:
    """Parse a sample file; malformed input names the first bad line."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError("line 1: missing header")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise ValueError("line 1: malformed header, expected "
                         "'# n=<N> count=<C> seed=<S> source=<text>'")
    n, count, seed = int(m.group(1)), int(m.group(2)), int(m.group(3))
    source = m.group(4)

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != n:
            raise ValueError(f"line {lineno}: expected {n} values, got {len(tokens)}")
        try:
            rows.append([int(t) for t in tokens])
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer value") from None
    if not rows:
        raise ValueError("no samples")
    if len(rows) != count:
        raise ValueError(f"header says count={count} but found {len(rows)} rows")

    data = np.asarray(rows, dtype=np.int8)
    if domain is None:
        domain = ZERO_ONE if np.any(data == 0) else PM1
    allowed = domain_values(domain)
    ok = np.isin(data, allowed).all(axis=1)
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise ValueError(f"line {bad + 2}: value outside the {domain} domain")
    return SampleSet(n, data, seed=seed, source=source, domain=domain)
