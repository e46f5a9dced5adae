"""Goodness-of-fit Z-test of 2D MA/ARMA kernels against batched lattice data.

Given an HW x N data matrix X and a hypothesized kernel, the test compares
the empirical trace moments mu_hat_l = Tr[(X^T X / N)^l] for l = 1, 2 with
the deterministic-equivalent mean of the induced compound Wishart model and
standardizes:

    z_l = (mu_hat_l - mu_l) / sqrt(var_l).

Under the hypothesized kernel z_2 is approximately standard normal, and the
decision rejects when |z_2| exceeds the critical value (1.96 by default);
z_1 is reported for diagnostics only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arma2d import (
    ARMAKernelPair,
    MAKernel,
    arma_to_ma,
    ma_filter_matrix,
    norm_ratio_bound,
)
from .fde import fde_mean, fde_variance, norm_ratio_from_gram
from .wishart import trace_power

REPORT_CSV_FIELDS = (
    "z1",
    "z2",
    "mu_hat_1",
    "mu_hat_2",
    "mu_box_1",
    "mu_box_2",
    "var_box_1",
    "var_box_2",
    "lambda",
    "R",
    "bound",
    "decision",
)


@dataclass(frozen=True)
class ModelConstants:
    """Hypothesis-side constants of the test, reusable across realizations."""

    height: int
    width: int
    batch: int
    lam: float
    moments: tuple[float, float, float, float]
    mu_box_1: float
    mu_box_2: float
    var_box_1: float
    var_box_2: float
    ratio: float
    bound: float


@dataclass(frozen=True)
class TestReport:
    """Full outcome of one test; ``decision`` is 'reject' iff |z2| > critical."""

    z1: float
    z2: float
    mu_hat_1: float
    mu_hat_2: float
    mu_box_1: float
    mu_box_2: float
    var_box_1: float
    var_box_2: float
    lam: float
    ratio: float
    bound: float
    decision: str
    critical: float = 1.96

    def to_text(self) -> str:
        pairs = [(name, getattr(self, attr)) for name, attr in _TEXT_FIELDS]
        return "\n".join(f"{name} = {_fmt(value)}" for name, value in pairs) + "\n"

    def csv_row(self) -> list[str]:
        return [_fmt(getattr(self, attr)) for _, attr in _CSV_FIELDS]

    @staticmethod
    def csv_header() -> list[str]:
        return list(REPORT_CSV_FIELDS)


_CSV_FIELDS = tuple(
    zip(
        REPORT_CSV_FIELDS,
        (
            "z1",
            "z2",
            "mu_hat_1",
            "mu_hat_2",
            "mu_box_1",
            "mu_box_2",
            "var_box_1",
            "var_box_2",
            "lam",
            "ratio",
            "bound",
            "decision",
        ),
    )
)
_TEXT_FIELDS = _CSV_FIELDS + (("critical", "critical"),)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def empirical_trace_moments(data: np.ndarray) -> tuple[float, float]:
    """(Tr[S], Tr[S^2]) for S = X^T X / N; invariant under left-orthogonal X."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.size == 0:
        raise ValueError("data must be a non-empty 2D matrix")
    n = x.shape[1]
    s = (x.T @ x) / n
    return trace_power(s, 1), trace_power(s, 2)


def hypothesis_to_ma(
    model: "MAKernel | ARMAKernelPair", max_order: int = 24
) -> MAKernel:
    """Reduce a hypothesis to an MA kernel (ARMA via truncated inversion)."""
    if isinstance(model, MAKernel):
        return model
    return MAKernel(arma_to_ma(model, max_order, max_order))


def model_constants(kernel: MAKernel, height: int, width: int, batch: int) -> ModelConstants:
    """Precompute all hypothesis-side quantities of the test.

    Moments and the norm ratio of D = B^T B are computed from the Gram
    matrix B B^T, which shares its nonzero spectrum with D.
    """
    if batch < 1:
        raise ValueError("batch must be positive")
    b_mat = ma_filter_matrix(kernel, height, width)
    dim = b_mat.shape[1]
    if dim < batch:
        raise ValueError(
            f"extended lattice size {dim} is smaller than the batch {batch}"
        )
    gram = b_mat @ b_mat.T
    lam = dim / batch
    moments = tuple(trace_power(gram, k) / dim for k in range(1, 5))
    var_1 = fde_variance(1, lam, moments)
    var_2 = fde_variance(2, lam, moments)
    return ModelConstants(
        height=height,
        width=width,
        batch=batch,
        lam=lam,
        moments=moments,  # type: ignore[arg-type]
        mu_box_1=fde_mean(1, batch, lam, moments),
        mu_box_2=fde_mean(2, batch, lam, moments),
        var_box_1=var_1,
        var_box_2=var_2,
        ratio=norm_ratio_from_gram(gram, dim),
        bound=norm_ratio_bound(kernel, height, width),
    )


def zscores_from_constants(data: np.ndarray, constants: ModelConstants) -> tuple[float, float]:
    x = np.asarray(data, dtype=float)
    expected = (constants.height * constants.width, constants.batch)
    if x.shape != expected:
        raise ValueError(f"data shape {x.shape} does not match {expected}")
    mu_hat_1, mu_hat_2 = empirical_trace_moments(x)
    z1 = (mu_hat_1 - constants.mu_box_1) / math.sqrt(constants.var_box_1)
    z2 = (mu_hat_2 - constants.mu_box_2) / math.sqrt(constants.var_box_2)
    return z1, z2


def zscores(
    data: np.ndarray, kernel: MAKernel, height: int, width: int, batch: int
) -> tuple[float, float]:
    """(z_1, z_2) of an HW x N data matrix against an MA kernel."""
    return zscores_from_constants(data, model_constants(kernel, height, width, batch))


def decision(z2: float, critical: float = 1.96) -> str:
    """'reject' iff |z2| > critical (strict); NaN is an error, not a decision."""
    if math.isnan(z2):
        raise ValueError("z-score is NaN")
    if not critical > 0:
        raise ValueError("critical value must be positive")
    return "reject" if abs(z2) > critical else "accept"


def kernel_distance(g1: np.ndarray, g2: np.ndarray) -> float:
    """L1 distance of two kernels, zero-padded to a common shape."""
    a = np.atleast_2d(np.asarray(g1, dtype=float))
    b = np.atleast_2d(np.asarray(g2, dtype=float))
    rows = max(a.shape[0], b.shape[0])
    cols = max(a.shape[1], b.shape[1])
    pa = np.zeros((rows, cols))
    pb = np.zeros((rows, cols))
    pa[: a.shape[0], : a.shape[1]] = a
    pb[: b.shape[0], : b.shape[1]] = b
    return float(np.sum(np.abs(pa - pb)))


def run_test(
    data: np.ndarray,
    model: "MAKernel | ARMAKernelPair",
    height: int,
    width: int,
    batch: int,
    critical: float = 1.96,
    max_order: int = 24,
) -> TestReport:
    """Full test of data against a hypothesized kernel, as a report."""
    kernel = hypothesis_to_ma(model, max_order)
    constants = model_constants(kernel, height, width, batch)
    x = np.asarray(data, dtype=float)
    z1, z2 = zscores_from_constants(x, constants)
    mu_hat_1, mu_hat_2 = empirical_trace_moments(x)
    return TestReport(
        z1=z1,
        z2=z2,
        mu_hat_1=mu_hat_1,
        mu_hat_2=mu_hat_2,
        mu_box_1=constants.mu_box_1,
        mu_box_2=constants.mu_box_2,
        var_box_1=constants.var_box_1,
        var_box_2=constants.var_box_2,
        lam=constants.lam,
        ratio=constants.ratio,
        bound=constants.bound,
        decision=decision(z2, critical),
        critical=critical,
    )
