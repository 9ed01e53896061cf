"""Exact outcome probabilities for clean and disordered phase estimation.

The phase estimation register holds ``m`` auxiliary qubits.  For a true
phase ``p`` and a measured outcome ``j`` the only quantity that matters
is the offset ``delta = p - j / 2**m``; every probability below is a
function of ``(m, delta)`` plus, in the disordered case, one pair of
gate angles per auxiliary qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

__all__ = [
    "PhaseProblem",
    "AngleSample",
    "NoisyRealization",
    "clean_realization",
    "clean_prob",
    "noisy_prob",
    "noisy_factors",
    "noisy_min_prob",
    "min_offset",
    "verify_min_at_edge",
]

# A single gate factor at or below this value forces the product to
# exact zero (the true product would underflow double precision anyway).
FACTOR_FLOOR = 1e-300

# Products with more than this many factors are accumulated in log space.
LOG_SPACE_THRESHOLD = 50


@dataclass(frozen=True)
class PhaseProblem:
    """One phase estimation instance: register size and phase offset.

    ``delta`` may be any real number; only success-probability queries
    (offset of the best outcome) are restricted to |delta| <= 2**-(m+1).
    """

    m: int
    delta: float

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"need at least one auxiliary qubit, got m={self.m}")


class AngleSample(NamedTuple):
    """Bloch-sphere direction (zenith, azimuth) produced by one faulty gate."""

    theta: float
    phi: float


#: One disorder realization: the angle pair of every auxiliary qubit, index 1..m.
NoisyRealization = Sequence[AngleSample]

CLEAN_ANGLES = AngleSample(math.pi / 2, 0.0)


def clean_realization(m: int) -> list[AngleSample]:
    """Realization in which every gate acts as an ideal Hadamard."""
    return [CLEAN_ANGLES] * m


def min_offset(m: int) -> float:
    """Largest possible offset of the best outcome, 2**-(m+1)."""
    return 0.5 ** (m + 1)


def _reduced_cos(scale: float, delta: float, phi: float) -> float:
    # cos(scale*pi*delta + phi) with the periodic part reduced mod 2 first,
    # so the cosine argument stays small even for huge scale*delta.
    return math.cos(math.pi * math.fmod(scale * delta, 2.0) + phi)


def clean_prob(problem: PhaseProblem) -> float:
    """Probability of the outcome at offset ``delta`` with ideal gates.

    Evaluates the closed form ``(sin(pi 2^m delta) / (2^m sin(pi delta)))**2``,
    algebraically identical to ``2^-2m (1-cos(2 pi 2^m delta))/(1-cos(2 pi delta))``
    but stable for delta as small as 2**-130.  Integer delta (the exact
    eigenphase case) is a removable singularity and returns 1 exactly.
    """
    m, delta = problem.m, problem.delta
    if delta == math.floor(delta):
        return 1.0
    scale = 2.0**m
    num = math.sin(math.pi * math.fmod(scale * delta, 2.0))
    den = scale * math.sin(math.pi * math.fmod(delta, 2.0))
    ratio = num / den
    return ratio * ratio


def noisy_factors(problem: PhaseProblem, realization: NoisyRealization) -> list[float]:
    """Per-qubit factors ``1 + sin(theta_i) cos(2^i pi delta + phi_i)``, i = 1..m."""
    m, delta = problem.m, problem.delta
    if len(realization) != m:
        raise ValueError(
            f"realization has {len(realization)} angle pairs, expected m={m}"
        )
    return [
        1.0 + math.sin(theta) * _reduced_cos(2.0 ** (i + 1), delta, phi)
        for i, (theta, phi) in enumerate(realization)
    ]


def noisy_prob(
    problem: PhaseProblem,
    realization: NoisyRealization,
    method: str = "auto",
) -> float:
    """Outcome probability for one realization of faulty Hadamard gates.

    ``(1/2^m) * prod_i [1 + sin(theta_i) cos(2^i pi delta + phi_i)]``.

    ``method`` selects the accumulation strategy: ``"direct"`` multiplies
    the factors, ``"log"`` sums their logarithms (mandatory for large m,
    where the product can be as small as 2**-125 times underflowing factor
    tails), ``"auto"`` switches to log space above 50 qubits.  Any factor
    at or below 1e-300 short-circuits to an exact 0.
    """
    factors = noisy_factors(problem, realization)
    if method == "auto":
        method = "log" if problem.m > LOG_SPACE_THRESHOLD else "direct"
    if method == "direct":
        prod = 1.0
        for f in factors:
            if f <= FACTOR_FLOOR:
                return 0.0
            prod *= f
        return prod / 2.0**problem.m
    if method == "log":
        log_sum = -problem.m * math.log(2.0)
        for f in factors:
            if f <= FACTOR_FLOOR:
                return 0.0
            log_sum += math.log(f)
        return math.exp(log_sum)
    raise ValueError(f"unknown method {method!r}")


def noisy_min_prob(
    m: int, realization: NoisyRealization, method: str = "auto"
) -> float:
    """Probability of the worst-placed phase, i.e. offset fixed at 2**-(m+1)."""
    return noisy_prob(PhaseProblem(m, min_offset(m)), realization, method=method)


def verify_min_at_edge(m: int, grid_size: int, slack: float = 1e-12) -> bool:
    """Check numerically that the clean probability decreases on (0, 2**-(m+1)].

    Evaluates ``clean_prob`` on a uniform grid of ``grid_size`` offsets and
    returns True iff the sequence is strictly decreasing within ``slack``,
    which places the minimum at the edge offset 2**-(m+1).
    """
    if grid_size < 10:
        raise ValueError(f"grid_size must be at least 10, got {grid_size}")
    edge = min_offset(m)
    probs = [
        clean_prob(PhaseProblem(m, edge * k / grid_size))
        for k in range(1, grid_size + 1)
    ]
    return all(b < a + slack for a, b in zip(probs, probs[1:]))
