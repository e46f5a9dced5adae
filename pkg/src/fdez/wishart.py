"""Compound Wishart model: parameters, Gaussian sampling, trace observables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
MAX_TRACE_POWER = 8
MAX_MOMENT_ORDER = 8


@dataclass(frozen=True)
class RngStream:
    """A reproducible Gaussian stream addressed by (master seed, index).

    Distinct (seed, index) pairs give statistically independent streams;
    the same pair always reproduces the same draws.  ``generator`` returns a
    fresh generator each call, so consumers of one stream are pure functions.
    """

    seed: int
    index: int = 0

    def __post_init__(self) -> None:
        if self.seed < 0 or self.index < 0:
            raise ValueError("seed and stream index must be non-negative")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.index,))
        )


def _as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class CompoundWishartParam:
    """Parameter (lambda = d/n, D) of the model W = Z^T D Z.

    D is a d x d symmetric PSD weight matrix (up to small numerical noise),
    Z is d x n with i.i.d. Normal(0, 1/n) entries, and d >= n.
    """

    d: int
    n: int
    weight: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.d < self.n:
            raise ValueError(f"d (= {self.d}) must be >= n (= {self.n})")
        w = np.asarray(self.weight, dtype=float)
        if w.shape != (self.d, self.d):
            raise ValueError(f"weight matrix must be {self.d} x {self.d}")
        scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
        if float(np.max(np.abs(w - w.T))) > SYMMETRY_TOL * scale:
            raise ValueError("weight matrix is not symmetric")
        if float(np.linalg.eigvalsh(w)[0]) < EIGENVALUE_FLOOR * scale:
            raise ValueError("weight matrix is not PSD (up to numerical noise)")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weight", w)

    @property
    def lam(self) -> float:
        return self.d / self.n


def sample(
    theta: CompoundWishartParam, rng: "RngStream | np.random.Generator"
) -> np.ndarray:
    """One realization of W = Z^T D Z, exactly symmetrized.

    Accepts an :class:`RngStream` (pure: the same stream always gives the
    same matrix) or a live generator for sequential protocols.
    """
    g = _as_generator(rng)
    z = g.standard_normal((theta.d, theta.n))
    w = z.T @ (theta.weight @ z)
    return (w + w.T) / (2.0 * theta.n)


def trace_power(mat: np.ndarray, ell: int) -> float:
    """Unnormalized trace of mat^ell by repeated multiplication.

    For ell = 2 uses Tr(M^2) = sum_ij M_ij M_ji directly.
    """
    if ell < 1 or ell > MAX_TRACE_POWER:
        raise ValueError(f"power must be in 1..{MAX_TRACE_POWER}")
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if ell == 1:
        return float(np.trace(a))
    if ell == 2:
        return float(np.sum(a * a.T))
    acc = a
    for _ in range(ell - 1):
        acc = acc @ a
    return float(np.trace(acc))


def matrix_moments(mat: np.ndarray, kmax: int) -> tuple[float, ...]:
    """Normalized trace powers m_k = Tr(D^k) / d for k = 1..kmax."""
    if kmax < 1 or kmax > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order must be in 1..{MAX_MOMENT_ORDER}")
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    d = a.shape[0]
    out = []
    acc = a
    for _ in range(kmax):
        out.append(float(np.trace(acc)) / d)
        acc = acc @ a
    return tuple(out)


def spectral_norm(mat: np.ndarray, rel_tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest absolute eigenvalue of a symmetric matrix by power iteration.

    Starts from the deterministic all-ones vector; the estimate is the norm
    growth factor, which converges even when the extreme eigenvalues come in
    a +-lambda pair.  A deterministic perturbation handles starts that land
    in the kernel, and a shifted iteration is used as fallback on stagnation.
    """
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        raise ValueError("zero matrix")
    est = _power_estimate(a, scale, rel_tol, max_iter)
    if est is not None:
        return est
    # Stagnation: shift to make both spectral edges dominant in turn.
    shift = 1.25 * scale
    eye = shift * np.eye(a.shape[0])
    top = _power_estimate(a + eye, scale + shift, rel_tol, max_iter)
    bot = _power_estimate(eye - a, scale + shift, rel_tol, max_iter)
    if top is None or bot is None:
        raise RuntimeError(f"power iteration did not converge in {max_iter} iterations")
    return max(abs(top - shift), abs(shift - bot))


def _power_estimate(a, scale, rel_tol, max_iter):
    n = a.shape[0]
    v = np.ones(n) / math.sqrt(n)
    prev = math.inf
    perturbed = False
    for _ in range(max_iter):
        w = a @ v
        nw = float(np.linalg.norm(w))
        if nw <= 1e-14 * scale:
            if perturbed:
                return None
            # current vector is (numerically) in the kernel
            v = v + np.arange(1, n + 1) / (n * 10.0)
            v /= float(np.linalg.norm(v))
            perturbed = True
            continue
        v = w / nw
        if abs(nw - prev) <= rel_tol * nw:
            return nw
        prev = nw
    return None
