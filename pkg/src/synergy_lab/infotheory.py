"""Shannon information measures over grouped variables of a distribution.

Everything is computed in nats from marginal tables with the convention
0 log 0 = 0. Mutual information is H(A) + H(B) - H(AB); the conditional
version is H(AC) + H(BC) - H(C) - H(ABC). The n-group interaction
information is the inclusion-exclusion sum
    I_n = sum over nonempty T of (-1)^(|T|+1) H(union of groups in T),
which reduces to mutual information at n = 2 and goes negative when the
groups carry synergy that no pair can account for. An independent recursive
evaluator (peeling one group at a time through conditional forms) is kept
alongside as a cross-check. The three subtraction schemes that cancel
boundary terms in loop models are thin wrappers over the same entropies.

Estimators: ``plug_in`` uses the table as-is; ``miller_madow`` adds the
(m - 1) / (2 N) bias correction per entropy term and therefore requires a
distribution that knows its sample count.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .lattice import ExactDistribution, PartitionSpec

PLUG_IN = "plug_in"
MILLER_MADOW = "miller_madow"
ESTIMATORS = (PLUG_IN, MILLER_MADOW)

LN2 = float(np.log(2.0))


@dataclass
class EntropyReport:
    """One estimated quantity, ready for JSON output."""

    quantity: str
    value: float
    units: str = "nats"
    partition: str = ""
    conditioned_on: str | None = None
    estimator: str = PLUG_IN

    def to_json_obj(self) -> dict:
        obj = {
            "quantity": self.quantity,
            "value": self.value,
            "units": self.units,
            "partition": self.partition,
            "estimator": self.estimator,
        }
        if self.conditioned_on is not None:
            obj["conditioned_on"] = self.conditioned_on
        return obj


def _check_estimator(dist: ExactDistribution, estimator: str) -> None:
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator == MILLER_MADOW and dist.n_samples is None:
        raise ValueError("Miller-Madow needs an empirical distribution "
                         "with a recorded sample count")


def _group(group) -> tuple[int, ...]:
    return tuple(int(i) for i in group)


def _disjoint(*groups) -> None:
    seen: set[int] = set()
    for g in groups:
        if seen & set(g):
            raise ValueError("groups must be disjoint")
        seen.update(g)


def entropy(dist: ExactDistribution, group: Sequence[int] | None = None,
            estimator: str = PLUG_IN) -> float:
    """Shannon entropy of the marginal on ``group`` (all variables if None).

    An empty group has zero entropy by convention.
    """
    _check_estimator(dist, estimator)
    if group is None:
        group = range(dist.num_vars)
    group = _group(group)
    if not group:
        return 0.0
    marg = dist.marginal(group)
    p = np.array([pk for _, pk in marg.nonzero_items()])
    h = float(-(p @ np.log(p)))
    if estimator == MILLER_MADOW:
        h += (len(p) - 1) / (2.0 * dist.n_samples)
    return h


def mutual_information(dist: ExactDistribution, group_a, group_b,
                       estimator: str = PLUG_IN) -> float:
    """I(A:B) = H(A) + H(B) - H(AB)."""
    a, b = _group(group_a), _group(group_b)
    _disjoint(a, b)
    return (entropy(dist, a, estimator) + entropy(dist, b, estimator)
            - entropy(dist, a + b, estimator))


def conditional_mutual_information(dist: ExactDistribution, group_a, group_b,
                                   group_c, estimator: str = PLUG_IN) -> float:
    """I(A:B|C) = H(AC) + H(BC) - H(C) - H(ABC)."""
    a, b, c = _group(group_a), _group(group_b), _group(group_c)
    _disjoint(a, b, c)
    return (entropy(dist, a + c, estimator) + entropy(dist, b + c, estimator)
            - entropy(dist, c, estimator) - entropy(dist, a + b + c, estimator))


def _as_groups(partition) -> tuple[tuple[int, ...], ...]:
    if isinstance(partition, PartitionSpec):
        return partition.groups
    spec = PartitionSpec(tuple(_group(g) for g in partition))
    return spec.groups


def interaction_information(dist: ExactDistribution, partition,
                            estimator: str = PLUG_IN) -> float:
    """I_n over the partition groups, by inclusion-exclusion over entropies."""
    groups = _as_groups(partition)
    n = len(groups)
    if n < 2:
        raise ValueError("interaction information needs at least 2 groups")
    total = 0.0
    for size in range(1, n + 1):
        sign = 1.0 if size % 2 == 1 else -1.0
        for combo in combinations(range(n), size):
            union = tuple(i for g in combo for i in groups[g])
            total += sign * entropy(dist, union, estimator)
    return total


def interaction_information_recursive(dist: ExactDistribution, partition,
                                      estimator: str = PLUG_IN) -> float:
    """Independent evaluator that peels the last group off recursively.

    I_n(P1:...:Pn) = I_{n-1}(P1:...:P_{n-1}) - I_{n-1}(P1:...:P_{n-1}|Pn),
    with the conditional term expanded through unconditional ones:
    I_{n-1}(...|Pn) = I_{n-1}(P1:...:P_{n-1}Pn) - I_{n-1}(P1:...:P_{n-2}:Pn).
    """
    groups = list(_as_groups(partition))

    def eval_groups(gs: list[tuple[int, ...]]) -> float:
        if len(gs) == 2:
            return mutual_information(dist, gs[0], gs[1], estimator)
        head, second_last, last = gs[:-2], gs[-2], gs[-1]
        merged = tuple(second_last) + tuple(last)
        unconditional = eval_groups(head + [second_last])
        conditional = (eval_groups(head + [merged])
                       - eval_groups(head + [last]))
        return unconditional - conditional

    if len(groups) < 2:
        raise ValueError("interaction information needs at least 2 groups")
    return eval_groups(groups)


def s_topo_kitaev_preskill(dist: ExactDistribution, group_a, group_b, group_c,
                           estimator: str = PLUG_IN) -> float:
    """Tripartite subtraction H_A+H_B+H_C-H_AB-H_BC-H_AC+H_ABC."""
    a, b, c = _group(group_a), _group(group_b), _group(group_c)
    _disjoint(a, b, c)
    h = lambda g: entropy(dist, g, estimator)
    return (h(a) + h(b) + h(c)
            - h(a + b) - h(b + c) - h(a + c)
            + h(a + b + c))


def s_topo_levin_wen(dist: ExactDistribution, group_a, group_b, group_c,
                     estimator: str = PLUG_IN) -> float:
    """Annulus subtraction H_ABC - H_AC - H_BC + H_C, equal to -I(A:B|C)."""
    a, b, c = _group(group_a), _group(group_b), _group(group_c)
    _disjoint(a, b, c)
    h = lambda g: entropy(dist, g, estimator)
    return h(a + b + c) - h(a + c) - h(b + c) + h(c)


def s_topo_n(dist: ExactDistribution, partition,
             estimator: str = PLUG_IN) -> float:
    """n-group subtraction sum_i (-1)^(i+n) sum_{|T|=i} H(T); equals
    (-1)^(n-1) times the interaction information on the same partition."""
    groups = _as_groups(partition)
    n = len(groups)
    if n < 2:
        raise ValueError("need at least 2 groups")
    total = 0.0
    for size in range(1, n + 1):
        sign = 1.0 if (size + n) % 2 == 0 else -1.0
        for combo in combinations(range(n), size):
            union = tuple(i for g in combo for i in groups[g])
            total += sign * entropy(dist, union, estimator)
    return total


def nats_to_bits(value: float) -> float:
    return value / LN2
