"""Decaying step-size sequences shared by all iteration variants.

Three sequences driven by the iteration counter k >= 1:

    alpha(k) = c_alpha / k                      gradient step size
    beta(k)  = c_beta / k**tau_beta             consensus mixing weight
    gamma(k) = c_gamma / (sqrt(k) * sqrt(max(loglog k, loglog k_guard)))

loglog uses natural logarithms.  The k_guard floor keeps gamma finite and
positive at small k, where loglog is undefined or nonpositive; for
k >= k_guard gamma equals the unguarded formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScheduleSet:
    c_alpha: float = 1.0
    c_beta: float = 0.4
    c_gamma: float = 1.0
    tau_beta: float = 0.25
    k_guard: int = 3

    def __post_init__(self):
        if self.c_alpha <= 0 or self.c_beta <= 0 or self.c_gamma <= 0:
            raise ValueError("schedule constants must be positive")
        if not 0.0 < self.tau_beta < 0.5:
            raise ValueError("tau_beta must lie in (0, 1/2)")
        if int(self.k_guard) != self.k_guard or self.k_guard < 3:
            raise ValueError("k_guard must be an integer >= 3")

    def alpha(self, k: int) -> float:
        _check_k(k)
        return self.c_alpha / k

    def beta(self, k: int) -> float:
        _check_k(k)
        return self.c_beta / k ** self.tau_beta

    def gamma(self, k: int) -> float:
        _check_k(k)
        floor = math.log(math.log(self.k_guard))
        ll = max(math.log(math.log(k)), floor) if k >= 3 else floor
        return self.c_gamma / (math.sqrt(k) * math.sqrt(ll))


def _check_k(k):
    if k < 1:
        raise ValueError(f"iteration index must be >= 1, got {k}")


def schedule_eval(sched: ScheduleSet, k: int, which: str) -> float:
    """Evaluate one of the three sequences at iteration k."""
    try:
        fn = {"alpha": sched.alpha, "beta": sched.beta, "gamma": sched.gamma}[which]
    except KeyError:
        raise ValueError("which must be 'alpha', 'beta', or 'gamma'") from None
    return fn(k)
