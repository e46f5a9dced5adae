"""2D MA/ARMA kernels and their compound Wishart representation.

A moving-average field on an H x W lattice,

    y[h, w] = sum_{i <= q1, j <= q2} b[i, j] * eps[h - i + 1, w - j + 1],

is a linear image of i.i.d. standard normal noise on the extended lattice of
size H_e x W_e with H_e = H + q1 - 1 and W_e = W + q2 - 1.  Flattening pixels
row-major (r = (h - 1) * W + w), the filter becomes an HW x H_eW_e matrix B,
and batches of N fields give Y^T Y distributed as the compound Wishart model
with parameter (H_eW_e / N, B^T B).

ARMA kernels (a, b) with reversible AR part are reduced to a truncated MA
kernel by inverting the AR polynomial as a power series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .wishart import CompoundWishartParam, RngStream, _as_generator

DEFAULT_MAX_ORDER = 24
DEFAULT_REVERSIBILITY_GRID = 32
DEFAULT_REVERSIBILITY_TOL = 1e-3


class KernelFormatError(ValueError):
    """A kernel file does not follow the text format."""


def _as_kernel_matrix(values, name: str) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(values, dtype=float))
    if mat.ndim != 2 or mat.size == 0:
        raise ValueError(f"{name} kernel must be a non-empty 2D matrix")
    mat = mat.copy()
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True, eq=False)
class MAKernel:
    """Moving-average kernel b with b[1, 1] != 0."""

    b: np.ndarray

    def __post_init__(self) -> None:
        mat = _as_kernel_matrix(self.b, "MA")
        if mat[0, 0] == 0.0:
            raise ValueError("MA kernel must have b[1, 1] != 0")
        object.__setattr__(self, "b", mat)

    @property
    def q1(self) -> int:
        return self.b.shape[0]

    @property
    def q2(self) -> int:
        return self.b.shape[1]


@dataclass(frozen=True, eq=False)
class ARMAKernelPair:
    """AR kernel a (a[1, 1] = 1) and MA kernel b (b[1, 1] != 0)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = _as_kernel_matrix(self.a, "AR")
        b = _as_kernel_matrix(self.b, "MA")
        if a[0, 0] != 1.0:
            raise ValueError("AR kernel must have a[1, 1] = 1")
        if b[0, 0] == 0.0:
            raise ValueError("MA kernel must have b[1, 1] != 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def p1(self) -> int:
        return self.a.shape[0]

    @property
    def p2(self) -> int:
        return self.a.shape[1]

    @property
    def q1(self) -> int:
        return self.b.shape[0]

    @property
    def q2(self) -> int:
        return self.b.shape[1]


@dataclass(frozen=True)
class DataShape:
    """Lattice height/width and batch size of a sample."""

    height: int
    width: int
    batch: int

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1 or self.batch < 1:
            raise ValueError("height, width and batch must be positive")


def extended_dims(kernel: MAKernel, height: int, width: int) -> tuple[int, int]:
    """(H_e, W_e) of the noise lattice feeding an H x W output."""
    return height + kernel.q1 - 1, width + kernel.q2 - 1


def ma_filter_matrix(kernel: MAKernel, height: int, width: int) -> np.ndarray:
    """The HW x H_eW_e matrix realizing the MA filter on flattened noise.

    Entry (r, c) = b[i, j] for r = (h-1)W + w and c = (h+i-2)W_e + j + w - 1
    (1-based); all other entries are zero.  Each row carries each kernel
    entry exactly once, so sum(B^2) = H * W * sum(b^2).
    """
    if height < 1 or width < 1:
        raise ValueError("height and width must be positive")
    he, we = extended_dims(kernel, height, width)
    mat = np.zeros((height * width, he * we))
    hh = np.repeat(np.arange(1, height + 1), width)
    ww = np.tile(np.arange(1, width + 1), height)
    rows = (hh - 1) * width + ww - 1
    for i in range(1, kernel.q1 + 1):
        for j in range(1, kernel.q2 + 1):
            cols = (hh + i - 2) * we + (j + ww - 1) - 1
            if cols.min() < 0 or cols.max() >= he * we:
                raise ValueError("filter index out of range; inconsistent shape")
            mat[rows, cols] = kernel.b[i - 1, j - 1]
    return mat


def ma_to_wishart(kernel: MAKernel, shape: DataShape) -> CompoundWishartParam:
    """Compound Wishart parameter (H_eW_e / N, B^T B) of an MA model."""
    he, we = extended_dims(kernel, shape.height, shape.width)
    d = he * we
    if d < shape.batch:
        raise ValueError(
            f"extended lattice size {d} is smaller than the batch {shape.batch}"
        )
    b_mat = ma_filter_matrix(kernel, shape.height, shape.width)
    weight = b_mat.T @ b_mat
    weight = (weight + weight.T) / 2.0
    return CompoundWishartParam(d=d, n=shape.batch, weight=weight)


def sample_ma_data(
    kernel: MAKernel, shape: DataShape, rng: "RngStream | np.random.Generator"
) -> np.ndarray:
    """N i.i.d. MA fields as an HW x N matrix (row r = (h-1)W + w).

    Direct 2D convolution of standard normal noise on the extended lattice;
    entries are raw (no 1/sqrt(N) normalization).
    """
    g = _as_generator(rng)
    he, we = extended_dims(kernel, shape.height, shape.width)
    eps = g.standard_normal((shape.batch, he, we))
    out = np.zeros((shape.batch, shape.height, shape.width))
    q1, q2 = kernel.q1, kernel.q2
    for i in range(q1):
        for j in range(q2):
            out += kernel.b[i, j] * eps[
                :,
                q1 - 1 - i : q1 - 1 - i + shape.height,
                q2 - 1 - j : q2 - 1 - j + shape.width,
            ]
    return out.reshape(shape.batch, shape.height * shape.width).T.copy()


def arma_to_ma(
    kernels: ARMAKernelPair, o1: int = DEFAULT_MAX_ORDER, o2: int = DEFAULT_MAX_ORDER
) -> np.ndarray:
    """Truncated MA expansion g of an ARMA pair, as an o1 x o2 matrix.

    g solves a * g = b as formal power series:

        g[i, j] = b[i, j] - sum_{(k, l) <= (i, j), (k, l) != (1, 1)}
                  g[i - k + 1, j - l + 1] * a[k, l]

    with out-of-range entries of a and b read as zero.  The recurrence is
    lower-triangular, so enlarging (o1, o2) never changes computed entries.
    """
    if o1 < 1 or o2 < 1:
        raise ValueError("truncation orders must be positive")
    a, b = kernels.a, kernels.b
    p1, p2 = kernels.p1, kernels.p2
    q1, q2 = kernels.q1, kernels.q2
    g = np.zeros((o1, o2))
    for i in range(1, o1 + 1):
        for j in range(1, o2 + 1):
            acc = b[i - 1, j - 1] if (i <= q1 and j <= q2) else 0.0
            for k in range(1, min(i, p1) + 1):
                for l in range(1, min(j, p2) + 1):
                    if k == 1 and l == 1:
                        continue
                    acc -= g[i - k, j - l] * a[k - 1, l - 1]
            g[i - 1, j - 1] = acc
    return g


def ar_polynomial_abs_tail(a: np.ndarray) -> float:
    """sum |a[k, l]| over (k, l) != (1, 1); < 1 guarantees reversibility."""
    return float(np.sum(np.abs(a))) - abs(float(a[0, 0]))


def is_reversible(
    a: np.ndarray,
    grid: int = DEFAULT_REVERSIBILITY_GRID,
    tol: float = DEFAULT_REVERSIBILITY_TOL,
) -> bool:
    """Whether the AR polynomial has no zero in the closed unit ball of C^2.

    Fast path: sum of non-leading absolute coefficients below 1 is
    sufficient.  Otherwise |P| is sampled on grid^4 points of the ball
    {|z1|^2 + |z2|^2 <= 1} in polar form, and the kernel is declared
    non-reversible when the sampled minimum falls below ``tol``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a[0, 0] != 1.0:
        raise ValueError("AR kernel must have a[1, 1] = 1")
    if grid < 2:
        raise ValueError("grid must be >= 2")
    if ar_polynomial_abs_tail(a) < 1.0:
        return True
    rho = np.linspace(0.0, 1.0, grid)
    psi = np.linspace(0.0, math.pi / 2.0, grid)
    phase = np.exp(2j * math.pi * np.arange(grid) / grid)
    r1 = rho[:, None] * np.cos(psi)[None, :]
    r2 = rho[:, None] * np.sin(psi)[None, :]
    z1 = r1[:, :, None] * phase[None, None, :]          # (rho, psi, phi1)
    z2 = r2[:, :, None] * phase[None, None, :]          # (rho, psi, phi2)
    p1, p2 = a.shape
    z1_pow = [np.ones_like(z1)]
    for _ in range(p1 - 1):
        z1_pow.append(z1_pow[-1] * z1)
    z2_pow = [np.ones_like(z2)]
    for _ in range(p2 - 1):
        z2_pow.append(z2_pow[-1] * z2)
    acc = np.zeros((grid, grid, grid, grid), dtype=complex)
    for k in range(p1):
        for l in range(p2):
            if a[k, l] == 0.0:
                continue
            acc += a[k, l] * z1_pow[k][:, :, :, None] * z2_pow[l][:, :, None, :]
    return float(np.min(np.abs(acc))) >= tol


def norm_ratio_bound(kernel: MAKernel, height: int, width: int) -> float:
    """Upper bound sqrt(H_eW_e / HW) * |b|_1^2 / |b|_2^2 on the norm ratio.

    Follows from ||B^T B|| <= |b|_1^2 and Tr((B^T B)^2) >= HW |b|_2^4; a
    diagnostic companion to :func:`fdez.fde.norm_ratio`, never a decision.
    """
    he, we = extended_dims(kernel, height, width)
    l1 = float(np.sum(np.abs(kernel.b)))
    l2sq = float(np.sum(kernel.b**2))
    if l2sq == 0.0:
        raise ValueError("zero kernel")
    return math.sqrt(he * we / (height * width)) * l1**2 / l2sq


def format_kernel_matrix(mat: np.ndarray) -> str:
    """Text form: first line 'rows cols', then one line per row."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    lines = [f"{mat.shape[0]} {mat.shape[1]}"]
    for row in mat:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def format_kernel(model: "MAKernel | ARMAKernelPair") -> str:
    """Text form of a model: one block for MA, AR block + blank line + MA block."""
    if isinstance(model, MAKernel):
        return format_kernel_matrix(model.b)
    return format_kernel_matrix(model.a) + "\n" + format_kernel_matrix(model.b)


def _parse_block(lines: list[str], path: str) -> np.ndarray:
    try:
        r, c = (int(tok) for tok in lines[0].split())
    except Exception as exc:
        raise KernelFormatError(f"{path}: bad kernel header {lines[0]!r}") from exc
    if len(lines) != r + 1:
        raise KernelFormatError(f"{path}: expected {r} kernel rows, got {len(lines) - 1}")
    rows = []
    for line in lines[1:]:
        vals = line.split()
        if len(vals) != c:
            raise KernelFormatError(f"{path}: expected {c} entries per row")
        try:
            rows.append([float(v) for v in vals])
        except ValueError as exc:
            raise KernelFormatError(f"{path}: non-numeric kernel entry") from exc
    return np.array(rows)


def parse_kernel_text(text: str, path: str = "<string>") -> "MAKernel | ARMAKernelPair":
    """Parse kernel text: one block is an MA kernel, two blocks an ARMA pair."""
    blocks: list[list[str]] = [[]]
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            if blocks[-1]:
                blocks.append([])
        else:
            blocks[-1].append(line)
    if blocks and not blocks[-1]:
        blocks.pop()
    if len(blocks) == 1:
        try:
            return MAKernel(_parse_block(blocks[0], path))
        except ValueError as exc:
            raise KernelFormatError(f"{path}: {exc}") from exc
    if len(blocks) == 2:
        try:
            return ARMAKernelPair(_parse_block(blocks[0], path), _parse_block(blocks[1], path))
        except ValueError as exc:
            raise KernelFormatError(f"{path}: {exc}") from exc
    raise KernelFormatError(f"{path}: expected 1 (MA) or 2 (ARMA) kernel blocks")


def load_kernel_file(path: str) -> "MAKernel | ARMAKernelPair":
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kernel_text(fh.read(), path)


def save_kernel_file(path: str, model: "MAKernel | ARMAKernelPair") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_kernel(model))
