"""Deterministic-equivalent trace statistics of compound Wishart models.

For a model W = Z^T D Z with Z a d x n matrix of centered Gaussians of
variance 1/n, the classical cumulants of Tr(W^l) admit a genus expansion
over premaps (see :mod:`fdez.permu`).  This module evaluates that expansion
exactly at finite n, extracts the deterministic-equivalent mean and variance

    mu_l   = n * (chi = 2 terms) + (chi = 1 terms)      over premaps of +-[l]
    var_l  = sum of connecting chi = 2 terms            over premaps of +-[2l]

with weights lambda^(#half cycles) * prod_c m_{|c|}(D), and standardizes an
observed trace power into a Z-score.  Closed forms are provided for levels
1 and 2 and are cross-checked against the enumeration in the test suite:

    mu_1  = n lam m1                  var_1 = 2 lam m2
    mu_2  = n (lam m2 + lam^2 m1^2) + lam m2
    var_2 = 2 (4 lam^3 m1^2 m2 + 2 lam^2 m2^2 + 8 lam^2 m1 m3 + 4 lam m4)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .permu import (
    ParticularPart,
    SignedPermutation,
    block_perm,
    euler_char,
    iter_premaps,
    join_is_full,
    orbit_partition,
    particular_part,
    premap_count,
    signed_blocks,
)
from .wishart import spectral_norm, trace_power

#: Moments m_k = tr(D^k) (normalized trace) of the weight matrix, m_1 first.
MomentVector = Sequence[float]

DEFAULT_MAX_POINTS = 4
HARD_MAX_POINTS = 5


@dataclass(frozen=True)
class FdeStatistics:
    """Deterministic-equivalent mean and variance of Tr(W^level)."""

    level: int
    mean: float
    variance: float
    lam: float
    n: int

    def __post_init__(self) -> None:
        if self.level < 1 or self.n < 1:
            raise ValueError("level and n must be positive")
        if not self.variance > 0:
            raise ValueError("variance must be positive (is the weight matrix zero?)")


def cycle_moment_product(
    moments: MomentVector,
    cycles: SignedPermutation | ParticularPart | Iterable[int],
) -> float:
    """Product over cycles of m_{cycle length}; depends on lengths only.

    ``cycles`` may be a signed permutation (all of its cycles are used), a
    particular part, or a bare iterable of cycle lengths.
    """
    if isinstance(cycles, SignedPermutation):
        lengths = [len(c) for c in cycles.cycles()]
    elif isinstance(cycles, ParticularPart):
        lengths = list(cycles.lengths)
    else:
        lengths = [int(x) for x in cycles]
    out = 1.0
    for ln in lengths:
        if ln < 1 or ln > len(moments):
            raise ValueError(f"moment of order {ln} not available")
        out *= moments[ln - 1]
    return out


@lru_cache(maxsize=None)
def _expansion_terms(r: int, ell: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """(chi, half-cycle lengths) for every connecting premap of +-[r*ell].

    gamma is the r-block cycle permutation (1..ell)(ell+1..2ell)...; a premap
    connects when its orbit partition joins the signed gamma-blocks into one
    block.  Independent of n, lambda and the moments, so cached.
    """
    gamma = block_perm(ell, r)
    blocks = signed_blocks(gamma)
    terms = []
    for pm in iter_premaps(r * ell):
        if not join_is_full(orbit_partition(pm), blocks):
            continue
        part = particular_part(pm)
        terms.append((euler_char(gamma, pm), part.lengths))
    return tuple(terms)


def _check_points(r: int, ell: int, max_points: int) -> None:
    if r < 1 or ell < 1:
        raise ValueError("r and ell must be positive")
    if max_points > HARD_MAX_POINTS:
        raise ValueError(f"max_points capped at {HARD_MAX_POINTS}")
    if r * ell > max_points:
        raise ValueError(
            f"enumeration over premaps of +-[{r * ell}] exceeds the configured "
            f"bound {max_points}; pass max_points={min(r * ell, HARD_MAX_POINTS)} to allow"
        )


def genus_cumulant(
    r: int,
    ell: int,
    n: int,
    lam: float,
    moments: MomentVector,
    max_points: int = DEFAULT_MAX_POINTS,
) -> float:
    """Exact r-th classical cumulant of Tr(W^ell) at finite n.

    Sums n^(chi - r) * lam^(#half cycles) * prod m_{|c|} over connecting
    premaps of +-[r*ell].
    """
    _check_points(r, ell, max_points)
    if n < 1:
        raise ValueError("n must be positive")
    total = 0.0
    for chi, lengths in _expansion_terms(r, ell):
        total += float(n) ** (chi - r) * lam ** len(lengths) * cycle_moment_product(
            moments, lengths
        )
    return total


def fde_mean(
    ell: int,
    n: int,
    lam: float,
    moments: MomentVector,
    method: str = "auto",
) -> float:
    """Deterministic-equivalent mean of Tr(W^ell).

    ``method`` is "closed" (levels 1 and 2), "enumerate" (levels up to 4), or
    "auto" which prefers the closed form and falls back to enumeration.
    """
    if ell < 1 or n < 1:
        raise ValueError("ell and n must be positive")
    if method == "auto":
        method = "closed" if ell <= 2 else "enumerate"
    if method == "closed":
        m = _need(moments, 2 if ell == 2 else 1)
        if ell == 1:
            return n * lam * m[0]
        if ell == 2:
            return n * (lam * m[1] + lam**2 * m[0] ** 2) + lam * m[1]
        raise ValueError("closed-form mean is only available for levels 1 and 2")
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    _check_points(1, ell, max(DEFAULT_MAX_POINTS, 4))
    alpha = 0.0
    beta = 0.0
    for chi, lengths in _expansion_terms(1, ell):
        weight = lam ** len(lengths) * cycle_moment_product(moments, lengths)
        if chi == 2:
            alpha += weight
        elif chi == 1:
            beta += weight
    return n * alpha + beta


def fde_variance(
    ell: int,
    lam: float,
    moments: MomentVector,
    method: str = "auto",
) -> float:
    """Deterministic-equivalent variance of Tr(W^ell); independent of n.

    ``method`` as in :func:`fde_mean`; enumeration is available up to level 3
    (premaps of +-[6]) but must be requested explicitly beyond level 2.
    """
    if ell < 1:
        raise ValueError("ell must be positive")
    if method == "auto":
        if ell > 2:
            raise ValueError(
                "closed-form variance stops at level 2; pass method='enumerate'"
            )
        method = "closed"
    if method == "closed":
        if ell == 1:
            m = _need(moments, 2)
            var = 2.0 * lam * m[1]
        elif ell == 2:
            m = _need(moments, 4)
            var = 2.0 * (
                4.0 * lam**3 * m[0] ** 2 * m[1]
                + 2.0 * lam**2 * m[1] ** 2
                + 8.0 * lam**2 * m[0] * m[2]
                + 4.0 * lam * m[3]
            )
        else:
            raise ValueError("closed-form variance is only available for levels 1 and 2")
    elif method == "enumerate":
        if ell > 3:
            raise ValueError("variance enumeration is capped at level 3")
        var = 0.0
        for chi, lengths in _expansion_terms(2, ell):
            if chi != 2:
                continue
            var += lam ** len(lengths) * cycle_moment_product(moments, lengths)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not var > 0:
        raise ValueError("variance is not positive; the weight matrix must be nonzero")
    return var


def variance_coefficients(ell: int) -> dict[tuple[int, ...], int]:
    """Integer coefficient of lam^k * prod m_j per half-cycle type.

    Keys are sorted cycle-length tuples of the connecting chi = 2 premaps of
    +-[2*ell]; the lambda power equals the tuple length.  Exact integers, for
    symbolic comparison against the closed forms.
    """
    if ell < 1 or 2 * ell > HARD_MAX_POINTS + 1:
        raise ValueError("level out of range")
    counts: dict[tuple[int, ...], int] = {}
    for chi, lengths in _expansion_terms(2, ell):
        if chi == 2:
            counts[lengths] = counts.get(lengths, 0) + 1
    return counts


def mean_coefficients(ell: int) -> tuple[dict[tuple[int, ...], int], dict[tuple[int, ...], int]]:
    """Coefficient tables (chi = 2, chi = 1) for the level-ell mean."""
    alpha: dict[tuple[int, ...], int] = {}
    beta: dict[tuple[int, ...], int] = {}
    for chi, lengths in _expansion_terms(1, ell):
        if chi == 2:
            alpha[lengths] = alpha.get(lengths, 0) + 1
        elif chi == 1:
            beta[lengths] = beta.get(lengths, 0) + 1
    return alpha, beta


def fde_statistics(
    ell: int,
    n: int,
    lam: float,
    moments: MomentVector,
    method: str = "auto",
) -> FdeStatistics:
    """Bundle mean and variance of Tr(W^ell) for Z-scoring."""
    return FdeStatistics(
        level=ell,
        mean=fde_mean(ell, n, lam, moments, method=method),
        variance=fde_variance(ell, lam, moments, method=method),
        lam=lam,
        n=n,
    )


def fde_zscore(observed_trace: float, stats: FdeStatistics) -> float:
    """Standardize an observed Tr(W^level) against its FDE statistics."""
    if not stats.variance > 0:
        raise ValueError("variance must be positive")
    return (observed_trace - stats.mean) / math.sqrt(stats.variance)


def norm_ratio(matrix: np.ndarray) -> float:
    """Spectral norm over root-mean-square eigenvalue, ||D|| / sqrt(tr(D^2)).

    The trace is normalized, so the ratio is >= 1 and scale-invariant.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    rms_sq = trace_power(a, 2) / a.shape[0]
    if rms_sq <= 0.0:
        raise ValueError("zero matrix has no norm ratio")
    return spectral_norm(a, rel_tol=1e-10, max_iter=10_000) / math.sqrt(rms_sq)


def norm_ratio_from_gram(gram: np.ndarray, dim: int) -> float:
    """Norm ratio of a PSD matrix D = B^T B given the Gram matrix B B^T.

    B B^T shares the nonzero spectrum of D, so ||D|| = ||B B^T|| and
    Tr(D^2) = Tr((B B^T)^2); only the trace normalization needs ``dim``,
    the order of D.
    """
    g = np.asarray(gram, dtype=float)
    rms_sq = trace_power(g, 2) / dim
    if rms_sq <= 0.0:
        raise ValueError("zero matrix has no norm ratio")
    return spectral_norm(g, rel_tol=1e-10, max_iter=10_000) / math.sqrt(rms_sq)


def cumulant_bound(r: int, ell: int, n: int, ratio: float) -> float:
    """Diagnostic bound ratio^(r*ell) * (2*r*ell - 1)!! / n^max(r-2, 1).

    Controls |kappa_r| of the Z-score (|kappa_2 - 1| for r = 2); reported
    for context, never used in decisions.
    """
    if r < 1 or ell < 1 or n < 1:
        raise ValueError("r, ell and n must be positive")
    exponent = 1 if r <= 2 else r - 2
    return ratio ** (r * ell) * premap_count(r * ell) / float(n) ** exponent


def _need(moments: MomentVector, k: int) -> Sequence[float]:
    if len(moments) < k:
        raise ValueError(f"need moments up to order {k}, got {len(moments)}")
    return moments
