"""Closed-form co-location probabilities for idealised schedulers.

``n`` is the cluster size, ``alpha`` the attacker's host-creating actions,
``beta`` the victim's placements. Powers of ``(1 - 1/n)`` go through
``exp(alpha * log1p(-1/n))`` so large clusters keep full precision.
"""

from __future__ import annotations

import math


class DomainError(ValueError):
    pass


def _check_n(n):
    if n < 1:
        raise DomainError(f"cluster size must be >= 1, got {n}")


def _check_count(name, x):
    if x < 0:
        raise DomainError(f"{name} must be >= 0, got {x}")


def k_log(n, k):
    """log((1 - 1/n) ** k); ``-inf`` when n == 1 and k > 0."""
    if k == 0:
        return 0.0
    if n == 1:
        return -math.inf
    return k * math.log1p(-1.0 / n)


def e_colocated_random(n, alpha, beta) -> float:
    """Expected number of nodes holding both attacker and victim hosts under uniform placement."""
    _check_n(n)
    _check_count("alpha", alpha)
    _check_count("beta", beta)
    return n * -math.expm1(k_log(n, alpha)) * -math.expm1(k_log(n, beta))


def p_colocate_invocation_locality(n, alpha) -> float:
    """P(co-location) with ``alpha`` distinct attacker functions and one victim host."""
    _check_n(n)
    _check_count("alpha", alpha)
    return -math.expm1(k_log(n, alpha))


def p_colocate_autoscaling(n, alpha, r) -> float:
    """P(co-location) when one attacker function spawns a host every ``r`` invocations."""
    _check_n(n)
    _check_count("alpha", alpha)
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    return -math.expm1(k_log(n, alpha / r))


def p_colocate_config_locality(alpha, p) -> float:
    """P(co-location) with ``alpha`` functions that each land beside the victim with probability ``p``."""
    _check_count("alpha", alpha)
    if not 0.0 < p <= 1.0:
        raise DomainError(f"p must be in (0, 1], got {p}")
    if alpha == 0:
        return 0.0
    if p == 1.0:
        return 1.0
    return -math.expm1(alpha * math.log1p(-p))
