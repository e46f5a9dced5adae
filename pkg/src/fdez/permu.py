"""Permutations of a signed ground set and set-partition combinatorics.

Everything in this module lives on the signed ground set
``+-[n] = {-n, ..., -1, 1, ..., n}`` or on the plain set ``[m] = {1, ..., m}``.
Plain permutations of ``[m]`` are passed around as tuples of 1-based images
(entry ``i`` is the image of ``i + 1``); signed permutations get a proper
class because they carry the premap structure that drives the genus-expansion
machinery in :mod:`fdez.fde`.

Cycle notation is canonical throughout: each cycle starts at its element of
minimal absolute value (the positive one on a tie), and cycles are ordered by
the absolute value of their leading element.  The identity renders as "id".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

MAX_PREMAP_ORDER = 8
MAX_PARTITION_ORDER = 12
MAX_CUMULANT_ORDER = 12


def _index(k: int, n: int) -> int:
    """Position of the element k of +-[n] in the flat image table."""
    if k > 0:
        return k - 1
    return n - k - 1


def _ground(n: int) -> list[int]:
    """Elements of +-[n] in canonical order 1, -1, 2, -2, ..."""
    out = []
    for a in range(1, n + 1):
        out.append(a)
        out.append(-a)
    return out


def _layout(n: int) -> list[int]:
    """Elements of +-[n] in image-table order 1, ..., n, -1, ..., -n."""
    return list(range(1, n + 1)) + list(range(-1, -n - 1, -1))


@dataclass(frozen=True)
class SignedPermutation:
    """A bijection of the signed ground set +-[n].

    Images are stored flat: entry ``i`` (0 <= i < n) is the image of ``i + 1``
    and entry ``n + i`` is the image of ``-(i + 1)``.

    >>> s = SignedPermutation.from_cycles(2, [(1, 2), (-1, -2)])
    >>> str(s)
    '(1,2)(-1,-2)'
    >>> s(2), s(-1)
    (1, -2)
    """

    n: int
    images: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("ground set must be +-[n] with n >= 1")
        if len(self.images) != 2 * self.n:
            raise ValueError("image table must have 2n entries")
        if sorted(self.images) != sorted(_ground(self.n)):
            raise ValueError("images are not a bijection of +-[n]")

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        images = tuple(_ground_images_identity(n))
        return cls(n, images)

    @classmethod
    def from_mapping(cls, n: int, mapping: dict[int, int]) -> "SignedPermutation":
        images = list(_ground_images_identity(n))
        for k, v in mapping.items():
            images[_index(k, n)] = v
        return cls(n, tuple(images))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "SignedPermutation":
        """Build from disjoint cycles; elements not mentioned are fixed."""
        images = list(_ground_images_identity(n))
        seen: set[int] = set()
        for cyc in cycles:
            for x in cyc:
                if x == 0 or abs(x) > n:
                    raise ValueError(f"element {x} outside +-[{n}]")
                if x in seen:
                    raise ValueError(f"element {x} repeated across cycles")
                seen.add(x)
            for a, b in zip(cyc, tuple(cyc[1:]) + (cyc[0],)):
                images[_index(a, n)] = b
        return cls(n, tuple(images))

    def __call__(self, k: int) -> int:
        return self.images[_index(k, self.n)]

    def inverse(self) -> "SignedPermutation":
        images = [0] * (2 * self.n)
        for k in _ground(self.n):
            images[_index(self(k), self.n)] = k
        return SignedPermutation(self.n, tuple(images))

    def cycles(self) -> tuple[tuple[int, ...], ...]:
        """Canonical cycle decomposition, fixed points included."""
        return _cycles_of(self.n, self.images)

    def nontrivial_cycles(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c for c in self.cycles() if len(c) > 1)

    def cycle_count(self) -> int:
        return len(self.cycles())

    def is_identity(self) -> bool:
        return all(self(k) == k for k in _ground(self.n))

    def __str__(self) -> str:
        cycles = self.nontrivial_cycles()
        if not cycles:
            return "id"
        return "".join("(" + ",".join(str(x) for x in c) + ")" for c in cycles)


def _ground_images_identity(n: int) -> list[int]:
    out = [0] * (2 * n)
    for k in _ground(n):
        out[_index(k, n)] = k
    return out


def _cycle_leader(cycle: Sequence[int]) -> int:
    return min(cycle, key=lambda x: (abs(x), x < 0))


def _cycles_of(n: int, images: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    seen: set[int] = set()
    cycles = []
    for start in _ground(n):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        x = images[_index(start, n)]
        while x != start:
            cyc.append(x)
            seen.add(x)
            x = images[_index(x, n)]
        lead = cyc.index(_cycle_leader(cyc))
        cyc = cyc[lead:] + cyc[:lead]
        cycles.append(tuple(cyc))
    cycles.sort(key=lambda c: (abs(c[0]), c[0] < 0))
    return tuple(cycles)


def negation(n: int) -> SignedPermutation:
    """The sign-swap involution k <-> -k on +-[n].

    >>> str(negation(2))
    '(1,-1)(2,-2)'
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return SignedPermutation.from_mapping(n, {k: -k for k in _ground(n)})


def compose(s: SignedPermutation, t: SignedPermutation) -> SignedPermutation:
    """Composition s o t, i.e. x -> s(t(x))."""
    if s.n != t.n:
        raise ValueError("cannot compose permutations on different ground sets")
    n = s.n
    images = tuple(s.images[_index(t.images[_index(k, n)], n)] for k in _layout(n))
    return SignedPermutation(n, images)


def is_premap(s: SignedPermutation) -> bool:
    """Whether s(k) = -s^{-1}(-k) holds and no cycle contains both k and -k."""
    n = s.n
    for k in _ground(n):
        if s(-s(k)) != -k:
            return False
    for cyc in s.cycles():
        absvals = {abs(x) for x in cyc}
        if len(absvals) != len(cyc):
            return False
    return True


class Premap(SignedPermutation):
    """A signed permutation satisfying the premap conditions.

    Construction validates both conditions, so every live Premap instance is
    a genuine premap.
    """

    def __post_init__(self) -> None:
        super().__post_init__()
        if not is_premap(self):
            raise ValueError(f"{self} is not a premap")


def iter_premaps(n: int) -> Iterator[Premap]:
    """Yield all premaps on +-[n] in a fixed deterministic order.

    Backtracks over the image of the smallest unassigned element; each
    assignment pi(k) = v forces pi(-v) = -k, and v = -k is pruned because it
    would put k and -k in one cycle.  This visits exactly (2n-1)!! leaves.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_PREMAP_ORDER:
        raise ValueError(
            f"premap enumeration is capped at n = {MAX_PREMAP_ORDER} "
            f"(requested {n}); the count grows like (2n-1)!!"
        )
    order = _ground(n)
    images = [0] * (2 * n)
    assigned = [False] * (2 * n)
    used = [False] * (2 * n)

    def rec(pos: int) -> Iterator[Premap]:
        while pos < 2 * n and assigned[_index(order[pos], n)]:
            pos += 1
        if pos == 2 * n:
            yield Premap(n, tuple(images))
            return
        s = order[pos]
        si = _index(s, n)
        for v in order:
            if v == -s:
                continue
            vi = _index(v, n)
            mvi = _index(-v, n)
            msi = _index(-s, n)
            if used[vi] or used[msi]:
                continue
            if assigned[mvi] and v != s:
                continue
            images[si] = v
            images[mvi] = -s
            assigned[si] = assigned[mvi] = True
            used[vi] = used[msi] = True
            yield from rec(pos + 1)
            assigned[si] = assigned[mvi] = False
            used[vi] = used[msi] = False

    yield from rec(0)


def enumerate_premaps(n: int) -> tuple[Premap, ...]:
    """All premaps on +-[n]; see :func:`iter_premaps` for order and bounds."""
    return tuple(iter_premaps(n))


def premap_count(n: int) -> int:
    """(2n - 1)!!, the number of premaps on +-[n]."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.prod(range(1, 2 * n, 2))


@dataclass(frozen=True)
class ParticularPart:
    """The particular cycles of a premap: one cycle per +- pair.

    A cycle is particular when its element of minimal absolute value is
    positive.  ``cycles`` are in canonical order; ``elements`` is their union.
    """

    elements: frozenset[int]
    cycles: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(sorted(len(c) for c in self.cycles))

    def __str__(self) -> str:
        if not self.cycles:
            return "id"
        return "".join("(" + ",".join(str(x) for x in c) + ")" for c in self.cycles)


def particular_part(s: SignedPermutation) -> ParticularPart:
    """Particular cycles of s (defined whenever no cycle meets both signs)."""
    chosen = []
    for cyc in s.cycles():
        absvals = {abs(x) for x in cyc}
        if len(absvals) != len(cyc):
            raise ValueError(
                f"cycle {cyc} contains both k and -k; particular part undefined"
            )
        if _cycle_leader(cyc) > 0:
            chosen.append(cyc)
    elements = frozenset(x for c in chosen for x in c)
    return ParticularPart(elements, tuple(chosen))


def _check_plain_perm(g: Sequence[int]) -> tuple[int, ...]:
    g = tuple(g)
    if sorted(g) != list(range(1, len(g) + 1)):
        raise ValueError("not a permutation of [m] in 1-based image form")
    return g


def signed_lifts(g: Sequence[int]) -> tuple[SignedPermutation, SignedPermutation]:
    """Lift a permutation g of [m] to +-[m] in the two one-sided ways.

    The plus lift acts as g on positives and fixes negatives; the minus lift
    fixes positives and sends -k to -g(k).
    """
    g = _check_plain_perm(g)
    m = len(g)
    plus = SignedPermutation.from_mapping(m, {k: g[k - 1] for k in range(1, m + 1)})
    minus = SignedPermutation.from_mapping(m, {-k: -g[k - 1] for k in range(1, m + 1)})
    return plus, minus


@lru_cache(maxsize=None)
def _euler_gamma_side(g: tuple[int, ...]):
    plus, minus = signed_lifts(g)
    minus_inv = minus.inverse()
    left_count = particular_part(compose(plus, minus_inv)).count
    return plus, minus_inv, left_count


def euler_char(g: Sequence[int], p: SignedPermutation) -> int:
    """Euler characteristic of a premap p relative to a permutation g of [m].

    Computed as the particular-cycle counts of the two boundary permutations
    and of p itself, minus m.  The convention (composition order and minus-
    lift orientation) is pinned by the fixed test values for m = 2.
    """
    g = _check_plain_perm(g)
    m = len(g)
    if p.n != m:
        raise ValueError("permutation and premap live on different ground sets")
    plus, minus_inv, left_count = _euler_gamma_side(g)
    mixed = compose(minus_inv, compose(p, plus))
    return left_count + particular_part(p).count + particular_part(mixed).count - m


def identity_perm(m: int) -> tuple[int, ...]:
    return tuple(range(1, m + 1))


def perm_from_cycles(m: int, cycles: Iterable[Sequence[int]]) -> tuple[int, ...]:
    """Plain permutation of [m] from disjoint cycles, as a 1-based image tuple."""
    images = list(range(1, m + 1))
    seen: set[int] = set()
    for cyc in cycles:
        for x in cyc:
            if not 1 <= x <= m:
                raise ValueError(f"element {x} outside [{m}]")
            if x in seen:
                raise ValueError(f"element {x} repeated across cycles")
            seen.add(x)
        for a, b in zip(cyc, tuple(cyc[1:]) + (cyc[0],)):
            images[a - 1] = b
    return tuple(images)


def block_perm(ell: int, r: int) -> tuple[int, ...]:
    """The permutation (1..ell)(ell+1..2ell)...((r-1)ell+1..r ell) of [r*ell]."""
    if ell < 1 or r < 1:
        raise ValueError("ell and r must be >= 1")
    cycles = [range(k * ell + 1, (k + 1) * ell + 1) for k in range(r)]
    return perm_from_cycles(ell * r, [tuple(c) for c in cycles])


def perm_orbits(g: Sequence[int]) -> tuple[frozenset[int], ...]:
    """Orbits of a plain permutation of [m], ordered by smallest element."""
    g = _check_plain_perm(g)
    m = len(g)
    seen: set[int] = set()
    orbits = []
    for start in range(1, m + 1):
        if start in seen:
            continue
        orb = {start}
        x = g[start - 1]
        while x != start:
            orb.add(x)
            x = g[x - 1]
        seen |= orb
        orbits.append(frozenset(orb))
    return tuple(orbits)


@dataclass(frozen=True)
class SetPartition:
    """A partition of a finite set of integers into disjoint non-empty blocks."""

    ground: frozenset[int]
    blocks: frozenset[frozenset[int]]

    def __post_init__(self) -> None:
        total = 0
        for block in self.blocks:
            if not block:
                raise ValueError("empty block")
            total += len(block)
        union = frozenset(x for block in self.blocks for x in block)
        if total != len(union) or union != self.ground:
            raise ValueError("blocks must be disjoint and cover the ground set")

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]]) -> "SetPartition":
        fb = frozenset(frozenset(b) for b in blocks)
        ground = frozenset(x for b in fb for x in b)
        return cls(ground, fb)

    def sorted_blocks(self) -> tuple[tuple[int, ...], ...]:
        out = [tuple(sorted(b)) for b in self.blocks]
        out.sort()
        return tuple(out)

    def block_count(self) -> int:
        return len(self.blocks)


def orbit_partition(s: SignedPermutation) -> SetPartition:
    """The partition of +-[n] into the orbits of s."""
    return SetPartition.from_blocks(frozenset(c) for c in s.cycles())


def signed_blocks(g: Sequence[int]) -> SetPartition:
    """The partition of +-[m] into +-V_j for the orbits V_j of g."""
    return SetPartition.from_blocks(
        frozenset(v) | frozenset(-x for x in v) for v in perm_orbits(g)
    )


def join_is_full(p: SetPartition, q: SetPartition) -> bool:
    """Whether the join p v q is the one-block partition (union-find)."""
    if p.ground != q.ground:
        raise ValueError("partitions live on different ground sets")
    if not p.ground:
        raise ValueError("empty ground set")
    parent: dict[int, int] = {x: x for x in p.ground}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for part in (p, q):
        for block in part.blocks:
            it = iter(block)
            first = next(it)
            for other in it:
                union(first, other)
    roots = {find(x) for x in p.ground}
    return len(roots) == 1


def iter_partitions(n: int) -> Iterator[SetPartition]:
    """Yield all partitions of [n] in restricted-growth order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_PARTITION_ORDER:
        raise ValueError(
            f"partition enumeration is capped at n = {MAX_PARTITION_ORDER} "
            f"(requested {n}); the count is the Bell number"
        )
    blocks: list[list[int]] = []

    def rec(k: int) -> Iterator[SetPartition]:
        if k > n:
            yield SetPartition.from_blocks([tuple(b) for b in blocks])
            return
        for b in blocks:
            b.append(k)
            yield from rec(k + 1)
            b.pop()
        blocks.append([k])
        yield from rec(k + 1)
        blocks.pop()

    yield from rec(1)


def enumerate_partitions(n: int) -> tuple[SetPartition, ...]:
    """All Bell(n) partitions of [n]; see :func:`iter_partitions`."""
    return tuple(iter_partitions(n))


def cumulants_from_moments(moments: Sequence[float]) -> tuple[float, ...]:
    """Classical cumulants k_1..k_r from raw moments m_1..m_r.

    Inverts the moment-cumulant relation m_n = sum over partitions of the
    block-wise cumulant products, grouped by the block containing n:

        k_n = m_n - sum_{j=1}^{n-1} C(n-1, j-1) k_j m_{n-j}.
    """
    if len(moments) == 0:
        raise ValueError("need at least one moment")
    if len(moments) > MAX_CUMULANT_ORDER:
        raise ValueError(f"cumulant order capped at {MAX_CUMULANT_ORDER}")
    kappa: list[float] = []
    for n in range(1, len(moments) + 1):
        acc = moments[n - 1]
        for j in range(1, n):
            acc -= math.comb(n - 1, j - 1) * kappa[j - 1] * moments[n - j - 1]
        kappa.append(acc)
    return tuple(kappa)


def moments_from_cumulants(cumulants: Sequence[float]) -> tuple[float, ...]:
    """Raw moments from classical cumulants (inverse of the above)."""
    if len(cumulants) == 0:
        raise ValueError("need at least one cumulant")
    if len(cumulants) > MAX_CUMULANT_ORDER:
        raise ValueError(f"cumulant order capped at {MAX_CUMULANT_ORDER}")
    moments: list[float] = []
    for n in range(1, len(cumulants) + 1):
        acc = cumulants[n - 1]
        for j in range(1, n):
            acc += math.comb(n - 1, j - 1) * cumulants[j - 1] * moments[n - j - 1]
        moments.append(acc)
    return tuple(moments)


def brute_force_premaps(n: int) -> tuple[SignedPermutation, ...]:
    """Premaps on +-[n] by filtering all (2n)! signed permutations.

    Only feasible for n <= 3; used as an independent cross-check of
    :func:`iter_premaps`.
    """
    if n > 3:
        raise ValueError("brute force is only feasible for n <= 3")
    found = []
    ground = _ground(n)
    for images in itertools.permutations(ground):
        table = [0] * (2 * n)
        for k, v in zip(ground, images):
            table[_index(k, n)] = v
        s = SignedPermutation(n, tuple(table))
        if is_premap(s):
            found.append(s)
    return tuple(found)
