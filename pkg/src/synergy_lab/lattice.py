"""Parity-constrained loop models and exact distributions over binary spins.

Configurations of ``n`` binary variables are indexed by integers in
``[0, 2**n)``: bit ``i`` of the index holds the state of variable ``i``.
The state-to-value map depends on the domain: ``pm1`` uses state 0 -> +1 and
state 1 -> -1 (so the spin product over a set is a popcount parity), while
``zero_one`` uses the state as the value. All indices in this package are
0-based; the command line converts from the 1-based notation it accepts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

PM1 = "pm1"
ZERO_ONE = "zero_one"
DOMAINS = (PM1, ZERO_ONE)

# Dense probability tables up to this many variables, sparse maps beyond.
DENSE_LIMIT = 24


def domain_values(domain: str) -> np.ndarray:
    """Per-domain value of state 0 and state 1, as an int8 pair."""
    if domain == PM1:
        return np.array([1, -1], dtype=np.int8)
    if domain == ZERO_ONE:
        return np.array([0, 1], dtype=np.int8)
    raise ValueError(f"unknown spin domain {domain!r}")


def states_to_values(states, domain: str) -> np.ndarray:
    return domain_values(domain)[np.asarray(states, dtype=np.int64)]


def values_to_states(values, domain: str) -> np.ndarray:
    table = domain_values(domain)
    values = np.asarray(values)
    ok = (values == table[0]) | (values == table[1])
    if not np.all(ok):
        bad = values[~ok].flat[0]
        raise ValueError(f"value {bad} is not in the {domain} domain")
    return (values == table[1]).astype(np.int64)


def states_to_index(states) -> np.ndarray:
    states = np.asarray(states, dtype=np.int64)
    weights = np.int64(1) << np.arange(states.shape[-1], dtype=np.int64)
    return states @ weights


def index_to_states(index, num_vars: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64)
    return (index[..., None] >> np.arange(num_vars, dtype=np.int64)) & 1


def config_to_index(values, domain: str = PM1) -> int:
    return int(states_to_index(values_to_states(values, domain)))


def index_to_config(index, num_vars: int, domain: str = PM1) -> np.ndarray:
    return states_to_values(index_to_states(index, num_vars), domain)


def bit_parity(index) -> np.ndarray:
    """Parity of the popcount: 0 for even, 1 for odd. Vectorized."""
    x = np.asarray(index, dtype=np.uint64).copy()
    for shift in (32, 16, 8, 4, 2, 1):
        x ^= x >> np.uint64(shift)
    return (x & np.uint64(1)).astype(np.int64)


@dataclass(frozen=True)
class LoopModel:
    """A closed loop of binary spins whose product is pinned to ``parity``.

    The basis label records which measurement axis the loop lives on; both
    axes induce the same product-of-spins constraint, so it is metadata here.
    """

    length: int
    parity: int = +1
    basis: str = "z"

    def __post_init__(self):
        if self.length < 3:
            raise ValueError("loop length must be >= 3")
        if self.parity not in (+1, -1):
            raise ValueError("parity must be +1 or -1")
        if self.basis not in ("z", "x"):
            raise ValueError("basis must be 'z' or 'x'")


@dataclass(frozen=True)
class PartitionSpec:
    """Ordered list of disjoint, nonempty variable groups (0-based indices)."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.groups:
            raise ValueError("partition needs at least one group")
        seen: set[int] = set()
        canon = []
        for g in self.groups:
            g = tuple(int(i) for i in g)
            if not g:
                raise ValueError("partition groups must be nonempty")
            if any(i < 0 for i in g):
                raise ValueError("variable indices must be nonnegative")
            if len(set(g)) != len(g) or seen & set(g):
                raise ValueError("partition groups must be disjoint")
            seen.update(g)
            canon.append(tuple(sorted(g)))
        object.__setattr__(self, "groups", tuple(canon))

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    def all_indices(self) -> tuple[int, ...]:
        return tuple(sorted(i for g in self.groups for i in g))

    @classmethod
    def parse(cls, text: str) -> "PartitionSpec":
        """Parse the 1-based mini-grammar: groups split by '|', indices by ','."""
        groups = []
        for chunk in text.split("|"):
            items = [s.strip() for s in chunk.split(",")]
            if any(not s for s in items):
                raise ValueError(f"bad partition spec {text!r}: empty index")
            try:
                idx = [int(s) for s in items]
            except ValueError:
                raise ValueError(f"bad partition spec {text!r}: non-integer index") from None
            if any(i < 1 for i in idx):
                raise ValueError(f"bad partition spec {text!r}: indices are 1-based")
            groups.append(tuple(i - 1 for i in idx))
        return cls(tuple(groups))

    def format(self) -> str:
        """Canonical 1-based text form; parse(format(p)) == p."""
        return "|".join(",".join(str(i + 1) for i in g) for g in self.groups)


class ExactDistribution:
    """Normalized probability table over all ``2**num_vars`` configurations.

    ``probs`` may be a dense vector (length ``2**num_vars``) or a sparse
    ``{index: probability}`` map; construction chooses dense automatically
    below ``DENSE_LIMIT`` variables when given a dict is not required.
    ``n_samples`` records the sample count behind an empirical table and is
    needed by the Miller-Madow entropy correction.
    """

    def __init__(self, num_vars: int, probs, domain: str = PM1,
                 n_samples: int | None = None):
        if num_vars < 1:
            raise ValueError("num_vars must be >= 1")
        if domain not in DOMAINS:
            raise ValueError(f"unknown spin domain {domain!r}")
        self.num_vars = int(num_vars)
        self.domain = domain
        self.n_samples = None if n_samples is None else int(n_samples)

        size = 1 << self.num_vars
        if isinstance(probs, dict):
            cleaned = {}
            for k, p in probs.items():
                k = int(k)
                p = float(p)
                if not 0 <= k < size:
                    raise ValueError(f"configuration index {k} out of range")
                if p < 0:
                    raise ValueError("probabilities must be nonnegative")
                if p > 0:
                    cleaned[k] = p
            total = float(sum(cleaned[k] for k in sorted(cleaned)))
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"probabilities sum to {total}, not 1")
            if total != 1.0:
                cleaned = {k: p / total for k, p in cleaned.items()}
            self.probs: np.ndarray | dict[int, float] = cleaned
        else:
            arr = np.asarray(probs, dtype=np.float64)
            if arr.shape != (size,):
                raise ValueError(f"dense table must have length {size}")
            if np.any(arr < 0):
                raise ValueError("probabilities must be nonnegative")
            total = float(arr.sum())
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"probabilities sum to {total}, not 1")
            if total != 1.0:
                arr = arr / total
            self.probs = arr

    @property
    def is_dense(self) -> bool:
        return not isinstance(self.probs, dict)

    def dense_probs(self) -> np.ndarray:
        if self.is_dense:
            return self.probs
        if self.num_vars > DENSE_LIMIT:
            raise ValueError("table too large to densify")
        out = np.zeros(1 << self.num_vars)
        for k in sorted(self.probs):
            out[k] = self.probs[k]
        return out

    def prob_of_index(self, index: int) -> float:
        if self.is_dense:
            return float(self.probs[index])
        return float(self.probs.get(int(index), 0.0))

    def prob(self, values) -> float:
        return self.prob_of_index(config_to_index(values, self.domain))

    def nonzero_items(self) -> Iterator[tuple[int, float]]:
        if self.is_dense:
            for k in np.flatnonzero(self.probs):
                yield int(k), float(self.probs[k])
        else:
            for k in sorted(self.probs):
                yield k, self.probs[k]

    def _gathered_keys(self, indices: np.ndarray, group: Sequence[int]) -> np.ndarray:
        bits = (indices[:, None] >> np.asarray(group, dtype=np.int64)) & 1
        weights = np.int64(1) << np.arange(len(group), dtype=np.int64)
        return bits @ weights

    def marginal(self, group: Sequence[int]) -> "ExactDistribution":
        """Marginal over ``group``; variable ``j`` of the result is ``group[j]``."""
        group = [int(i) for i in group]
        if not group:
            raise ValueError("marginal group must be nonempty")
        if len(set(group)) != len(group):
            raise ValueError("marginal group has duplicate indices")
        if any(not 0 <= i < self.num_vars for i in group):
            raise ValueError("marginal group index out of range")
        m = len(group)
        if self.is_dense:
            idx = np.arange(1 << self.num_vars, dtype=np.int64)
            keys = self._gathered_keys(idx, group)
            out = np.bincount(keys, weights=self.probs, minlength=1 << m)
            return ExactDistribution(m, out, self.domain, self.n_samples)
        acc: dict[int, float] = {}
        for k in sorted(self.probs):
            key = 0
            for j, i in enumerate(group):
                key |= ((k >> i) & 1) << j
            acc[key] = acc.get(key, 0.0) + self.probs[k]
        return ExactDistribution(m, acc, self.domain, self.n_samples)

    def condition(self, assignments: Mapping[int, int]) -> "ExactDistribution":
        """Renormalized distribution over the unassigned variables.

        The remaining variables keep their relative order. Conditioning on an
        event of zero probability is an error.
        """
        if not assignments:
            raise ValueError("no assignments given")
        fixed: dict[int, int] = {}
        for i, v in assignments.items():
            i = int(i)
            if not 0 <= i < self.num_vars:
                raise ValueError(f"assignment index {i} out of range")
            state = int(values_to_states(np.array([v]), self.domain)[0])
            fixed[i] = state
        if len(fixed) >= self.num_vars:
            raise ValueError("cannot condition away every variable")
        rest = [i for i in range(self.num_vars) if i not in fixed]
        m = len(rest)
        if self.is_dense:
            idx = np.arange(1 << self.num_vars, dtype=np.int64)
            mask = np.ones(idx.shape, dtype=bool)
            for i, s in fixed.items():
                mask &= ((idx >> i) & 1) == s
            weights = np.where(mask, self.probs, 0.0)
            keys = self._gathered_keys(idx, rest)
            out = np.bincount(keys, weights=weights, minlength=1 << m)
            total = float(out.sum())
            if total <= 0.0:
                raise ValueError("conditioning on a zero-probability event")
            samples = None if self.n_samples is None else round(self.n_samples * total)
            return ExactDistribution(m, out / total, self.domain, samples)
        acc: dict[int, float] = {}
        total = 0.0
        for k in sorted(self.probs):
            if any(((k >> i) & 1) != s for i, s in fixed.items()):
                continue
            key = 0
            for j, i in enumerate(rest):
                key |= ((k >> i) & 1) << j
            acc[key] = acc.get(key, 0.0) + self.probs[k]
            total += self.probs[k]
        if total <= 0.0:
            raise ValueError("conditioning on a zero-probability event")
        acc = {k: p / total for k, p in acc.items()}
        samples = None if self.n_samples is None else round(self.n_samples * total)
        return ExactDistribution(m, acc, self.domain, samples)

    def permuted(self, perm: Sequence[int]) -> "ExactDistribution":
        """Reorder variables so that new variable ``j`` is old ``perm[j]``."""
        perm = [int(i) for i in perm]
        if sorted(perm) != list(range(self.num_vars)):
            raise ValueError("perm must be a permutation of all variables")
        if self.is_dense:
            idx = np.arange(1 << self.num_vars, dtype=np.int64)
            keys = self._gathered_keys(idx, perm)
            out = np.zeros(1 << self.num_vars)
            out[keys] = self.probs
            return ExactDistribution(self.num_vars, out, self.domain, self.n_samples)
        acc = {}
        for k in sorted(self.probs):
            key = 0
            for j, i in enumerate(perm):
                key |= ((k >> i) & 1) << j
            acc[key] = self.probs[k]
        return ExactDistribution(self.num_vars, acc, self.domain, self.n_samples)

    def allclose(self, other: "ExactDistribution", atol: float = 1e-12) -> bool:
        if self.num_vars != other.num_vars:
            return False
        a = {k: p for k, p in self.nonzero_items()}
        b = {k: p for k, p in other.nonzero_items()}
        for k in set(a) | set(b):
            if abs(a.get(k, 0.0) - b.get(k, 0.0)) > atol:
                return False
        return True

    def to_json_obj(self) -> dict:
        return {
            "n": self.num_vars,
            "probs": [
                {"config": index_to_config(k, self.num_vars, self.domain).tolist(),
                 "p": p}
                for k, p in self.nonzero_items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict, domain: str | None = None) -> "ExactDistribution":
        n = int(obj["n"])
        entries = obj["probs"]
        if domain is None:
            flat = [v for e in entries for v in e["config"]]
            domain = ZERO_ONE if 0 in flat else PM1
        probs: dict[int, float] = {}
        for e in entries:
            probs[config_to_index(e["config"], domain)] = float(e["p"])
        return cls(n, probs, domain)

    @classmethod
    def from_json(cls, text: str, domain: str | None = None) -> "ExactDistribution":
        return cls.from_json_obj(json.loads(text), domain)


def tc_loop_distribution(model: LoopModel, storage: str = "auto") -> ExactDistribution:
    """Uniform distribution over spin configurations with the model's parity.

    Every configuration whose spin product equals ``model.parity`` carries
    weight ``2**-(L-1)``; all others are impossible.
    """
    L = model.length
    weight = 1.0 / (1 << (L - 1))
    want = 0 if model.parity == +1 else 1
    dense = storage == "dense" or (storage == "auto" and L <= DENSE_LIMIT)
    if dense:
        par = bit_parity(np.arange(1 << L, dtype=np.int64))
        probs = np.where(par == want, weight, 0.0)
        return ExactDistribution(L, probs, PM1)
    probs = {k: weight for k in range(1 << L) if int(bit_parity(k)) == want}
    return ExactDistribution(L, probs, PM1)


def iid_coin_distribution(n: int, storage: str = "auto") -> ExactDistribution:
    """Uniform distribution over all 2**n configurations of n fair spins."""
    if n < 1:
        raise ValueError("need at least one variable")
    weight = 1.0 / (1 << n)
    dense = storage == "dense" or (storage == "auto" and n <= DENSE_LIMIT)
    if dense:
        return ExactDistribution(n, np.full(1 << n, weight), PM1)
    return ExactDistribution(n, {k: weight for k in range(1 << n)}, PM1)


def condition(dist: ExactDistribution, assignments: Mapping[int, int]) -> ExactDistribution:
    """Condition ``dist`` on a partial assignment of variable values."""
    return dist.condition(assignments)
