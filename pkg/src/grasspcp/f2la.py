"""Linear algebra over F_2 on bit-packed rows, and Grassmann combinatorics.

Vectors of F_2^n are Python ints.  Column ``j`` of a row (equivalently,
coordinate ``j`` of a vector) is stored in bit ``n - 1 - j``, so the binary
string of a row reads left to right as columns ``0 .. n-1`` and integer
order coincides with lexicographic string order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from . import _config
from .errors import DomainError, ResourceError


def bits_to_int(s: str) -> int:
    return int(s, 2) if s else 0


def int_to_bits(v: int, width: int) -> str:
    return format(v, f"0{width}b") if width else ""


def popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class F2Matrix:
    rows: tuple[int, ...]
    n_cols: int

    def __post_init__(self):
        if self.n_cols < 0:
            raise DomainError("n_cols must be non-negative")
        limit = 1 << self.n_cols
        for r in self.rows:
            if r < 0 or r >= limit:
                raise DomainError(f"row {r} does not fit in {self.n_cols} columns")
        object.__setattr__(self, "rows", tuple(self.rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @classmethod
    def from_strings(cls, rows: Sequence[str], n_cols: int | None = None) -> "F2Matrix":
        if n_cols is None:
            n_cols = len(rows[0]) if rows else 0
        for s in rows:
            if len(s) != n_cols:
                raise DomainError(f"row {s!r} does not have {n_cols} columns")
        return cls(tuple(bits_to_int(s) for s in rows), n_cols)

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "F2Matrix":
        return cls((0,) * n_rows, n_cols)

    @classmethod
    def identity(cls, n: int) -> "F2Matrix":
        return cls(tuple(1 << (n - 1 - i) for i in range(n)), n)

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> (self.n_cols - 1 - j)) & 1

    def column(self, j: int) -> int:
        """Column ``j`` as a vector of length n_rows."""
        shift = self.n_cols - 1 - j
        v = 0
        for r in self.rows:
            v = (v << 1) | ((r >> shift) & 1)
        return v

    def transpose(self) -> "F2Matrix":
        return F2Matrix(tuple(self.column(j) for j in range(self.n_cols)), self.n_rows)

    def matmul(self, other: "F2Matrix") -> "F2Matrix":
        if self.n_cols != other.n_rows:
            raise DomainError("shape mismatch in matmul")
        out = []
        for r in self.rows:
            acc = 0
            for i in range(self.n_cols):
                if (r >> (self.n_cols - 1 - i)) & 1:
                    acc ^= other.rows[i]
            out.append(acc)
        return F2Matrix(tuple(out), other.n_cols)

    def to_strings(self) -> list[str]:
        return [int_to_bits(r, self.n_cols) for r in self.rows]

    def flat_index(self) -> int:
        """Row-major bit pattern, first row in the most significant bits."""
        idx = 0
        for r in self.rows:
            idx = (idx << self.n_cols) | r
        return idx

    @classmethod
    def from_flat_index(cls, idx: int, n_rows: int, n_cols: int) -> "F2Matrix":
        mask = (1 << n_cols) - 1
        rows = [(idx >> (n_cols * (n_rows - 1 - i))) & mask for i in range(n_rows)]
        return cls(tuple(rows), n_cols)


def rank(m: F2Matrix | Iterable[int]) -> int:
    """Row rank over F_2."""
    rows = m.rows if isinstance(m, F2Matrix) else m
    pivots: dict[int, int] = {}
    for r in rows:
        r = int(r)
        while r:
            top = r.bit_length() - 1
            if top in pivots:
                r ^= pivots[top]
            else:
                pivots[top] = r
                break
    return len(pivots)


def gaussian_binomial(n: int, l: int) -> int:
    if l < 0 or n < 0 or l > n:
        raise DomainError(f"gaussian_binomial needs 0 <= l <= n, got n={n}, l={l}")
    num = den = 1
    for i in range(l):
        num *= (1 << n) - (1 << i)
        den *= (1 << l) - (1 << i)
    return num // den


qbin = gaussian_binomial


def _rref(rows: Iterable[int]) -> tuple[int, ...]:
    basis: list[tuple[int, int]] = []
    for r in rows:
        for pb, b in basis:
            if (r >> pb) & 1:
                r ^= b
        if r:
            pb = r.bit_length() - 1
            basis = [(p, b ^ r if (b >> pb) & 1 else b) for p, b in basis]
            basis.append((pb, r))
    basis.sort(reverse=True)
    return tuple(b for _, b in basis)


@dataclass(frozen=True)
class F2Subspace:
    """A subspace of F_2^n stored by its reduced row-echelon basis."""

    ambient_dim: int
    basis: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.ambient_dim - len(self.basis)

    @property
    def pivots(self) -> tuple[int, ...]:
        """Pivot bit positions, one per basis row."""
        return tuple(b.bit_length() - 1 for b in self.basis)

    @property
    def matrix(self) -> F2Matrix:
        return F2Matrix(self.basis, self.ambient_dim)

    def reduce(self, v: int) -> int:
        """Reduce ``v`` against the basis; zero iff ``v`` lies in the subspace."""
        for b in self.basis:
            if (v >> (b.bit_length() - 1)) & 1:
                v ^= b
        return v

    def __contains__(self, v: int) -> bool:
        return self.reduce(v) == 0

    def coordinates(self, v: int) -> int:
        """Coordinates of ``v`` in the basis (bit ``dim-1-i`` for row ``i``)."""
        c = 0
        for i, b in enumerate(self.basis):
            if (v >> (b.bit_length() - 1)) & 1:
                v ^= b
                c |= 1 << (self.dim - 1 - i)
        if v:
            raise DomainError("vector is not in the subspace")
        return c

    def combine(self, coeffs: int) -> int:
        """Vector with basis coordinates ``coeffs``."""
        v = 0
        for i, b in enumerate(self.basis):
            if (coeffs >> (self.dim - 1 - i)) & 1:
                v ^= b
        return v

    def vectors(self) -> Iterator[int]:
        for c in range(1 << self.dim):
            yield self.combine(c)

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim,
                "basis": [int_to_bits(b, self.ambient_dim) for b in self.basis]}

    @classmethod
    def from_json(cls, obj: dict) -> "F2Subspace":
        n = int(obj["ambient_dim"])
        return canonicalize(F2Matrix.from_strings(obj["basis"], n), n)

    def __repr__(self):
        inner = ",".join(int_to_bits(b, self.ambient_dim) for b in self.basis)
        return f"F2Subspace(n={self.ambient_dim}, <{inner}>)"


def canonicalize(span_of: F2Matrix | Iterable[int], ambient_dim: int | None = None) -> F2Subspace:
    if isinstance(span_of, F2Matrix):
        if ambient_dim is not None and span_of.n_cols != ambient_dim:
            raise DomainError("matrix width does not match ambient_dim")
        return F2Subspace(span_of.n_cols, _rref(span_of.rows))
    if ambient_dim is None:
        raise DomainError("ambient_dim is required for raw row iterables")
    rows = [int(r) for r in span_of]
    if any(r < 0 or r >> ambient_dim for r in rows):
        raise DomainError("row does not fit in the ambient dimension")
    return F2Subspace(ambient_dim, _rref(rows))


span = canonicalize


def zero_subspace(n: int) -> F2Subspace:
    return F2Subspace(n, ())


def full_space(n: int) -> F2Subspace:
    return F2Subspace(n, tuple(1 << (n - 1 - i) for i in range(n)))


def _same_ambient(a: F2Subspace, b: F2Subspace):
    if a.ambient_dim != b.ambient_dim:
        raise DomainError(f"ambient mismatch: {a.ambient_dim} vs {b.ambient_dim}")


def subspace_sum(a: F2Subspace, b: F2Subspace) -> F2Subspace:
    _same_ambient(a, b)
    return F2Subspace(a.ambient_dim, _rref(a.basis + b.basis))


def subspace_intersect(a: F2Subspace, b: F2Subspace) -> F2Subspace:
    """Zassenhaus: row-reduce [[A, A], [B, 0]]; rows of the form [0, x] span a∩b."""
    _same_ambient(a, b)
    n = a.ambient_dim
    rows = [(x << n) | x for x in a.basis] + [y << n for y in b.basis]
    low = [r for r in _rref(rows) if r >> n == 0]
    return F2Subspace(n, _rref(low))


def contains(a: F2Subspace, b: F2Subspace) -> bool:
    """True iff ``b`` is a subspace of ``a``."""
    _same_ambient(a, b)
    return all(a.reduce(v) == 0 for v in b.basis)


def trivial_intersection(a: F2Subspace, b: F2Subspace) -> bool:
    _same_ambient(a, b)
    return subspace_sum(a, b).dim == a.dim + b.dim


def complement_basis(q: F2Subspace, w: F2Subspace) -> tuple[int, ...]:
    """Vectors of ``w`` completing a basis of ``q`` to one of ``w``."""
    if not contains(w, q):
        raise DomainError("q is not contained in w")
    cur = q
    extra = []
    for v in w.basis:
        if cur.reduce(v):
            extra.append(v)
            cur = F2Subspace(q.ambient_dim, _rref(cur.basis + (v,)))
    return tuple(extra)


@dataclass(frozen=True)
class ZoomPair:
    q: F2Subspace
    w: F2Subspace

    def __post_init__(self):
        if not contains(self.w, self.q):
            raise DomainError("zoom-in must be contained in zoom-out")

    @property
    def ambient_dim(self) -> int:
        return self.q.ambient_dim

    @property
    def size(self) -> int:
        return self.q.dim + self.w.codim

    def zoom_count(self, l: int) -> int:
        return gaussian_binomial(self.w.dim - self.q.dim, l - self.q.dim)

    def admits(self, s: F2Subspace) -> bool:
        return contains(s, self.q) and contains(self.w, s)


def _check_cap(count: int, cap: int | None, what: str):
    cap = _config.ENUM_CAP if cap is None else cap
    if count > cap:
        raise ResourceError(f"{what}: {count} items exceeds cap {cap}")


def _grass_rows(n: int, l: int) -> Iterator[tuple[int, ...]]:
    """RREF bases of all l-dim subspaces of F_2^n, lexicographic order."""
    if l == 0:
        yield ()
        return
    rows: list[int] = []

    def free_below(p: int) -> int:
        # positions below p where every chosen row vanishes
        used = 0
        for r in rows:
            used |= r
        return sum(1 for b in range(p) if not (used >> b) & 1)

    def rec(prev_pivot: int):
        i = len(rows)
        if i == l:
            yield tuple(rows)
            return
        need = l - i - 1
        used = 0
        for r in rows:
            used |= r
        # candidate rows in increasing int order: pivot p ascending, then tail
        for p in range(prev_pivot):
            if (used >> p) & 1:
                continue
            # free positions strictly below p among columns not touched by earlier rows
            avail = [b for b in range(p) if not (used >> b) & 1]
            if len(avail) < need:
                continue
            head = 1 << p
            for tail in range(1 << p):
                v = head | tail
                rows.append(v)
                if free_below(p) >= need:
                    yield from rec(p)
                rows.pop()

    yield from rec(n)


def enumerate_grassmann(n: int, l: int, cap: int | None = None) -> Iterator[F2Subspace]:
    if l < 0 or l > n:
        raise DomainError(f"need 0 <= l <= n, got n={n}, l={l}")
    _check_cap(gaussian_binomial(n, l), cap, f"Grass({n},{l})")
    for rows in _grass_rows(n, l):
        yield F2Subspace(n, rows)


def enumerate_zoom(z: ZoomPair, l: int, cap: int | None = None) -> Iterator[F2Subspace]:
    q, w = z.q, z.w
    if not q.dim <= l <= w.dim:
        raise DomainError(f"need dim(q)={q.dim} <= l={l} <= dim(w)={w.dim}")
    _check_cap(z.zoom_count(l), cap, "zoom")
    comp = complement_basis(q, w)
    t = len(comp)
    for coeff_rows in _grass_rows(t, l - q.dim):
        extra = []
        for c in coeff_rows:
            v = 0
            for i in range(t):
                if (c >> (t - 1 - i)) & 1:
                    v ^= comp[i]
            extra.append(v)
        yield F2Subspace(q.ambient_dim, _rref(q.basis + tuple(extra)))


def enumerate_subspaces_between(q: F2Subspace, w: F2Subspace, cap: int | None = None) -> Iterator[F2Subspace]:
    """All subspaces s with q ⊆ s ⊆ w, by increasing dimension."""
    z = ZoomPair(q, w)
    for l in range(q.dim, w.dim + 1):
        yield from enumerate_zoom(z, l, cap)


def random_vector(rng: random.Random, n: int, within: F2Subspace | None = None) -> int:
    if within is None:
        return rng.getrandbits(n) if n else 0
    return within.combine(rng.getrandbits(within.dim) if within.dim else 0)


def sample_superspace(r: F2Subspace, l: int, rng: random.Random,
                      within: F2Subspace | None = None) -> F2Subspace:
    """Uniform l-dim subspace containing ``r`` (inside ``within`` when given)."""
    if within is not None:
        _same_ambient(r, within)
        if not contains(within, r):
            raise DomainError("r is not inside the sampling space")
        top = within.dim
    else:
        top = r.ambient_dim
    if not r.dim <= l <= top:
        raise DomainError(f"need dim(r)={r.dim} <= l={l} <= {top}")
    cur = r
    while cur.dim < l:
        v = random_vector(rng, r.ambient_dim, within)
        if cur.reduce(v):
            cur = F2Subspace(r.ambient_dim, _rref(cur.basis + (v,)))
    return cur


def sample_subspace(n: int, l: int, rng: random.Random,
                    within: F2Subspace | None = None) -> F2Subspace:
    return sample_superspace(zero_subspace(n), l, rng, within)


def coordinate_subspace(n: int, coords: Iterable[int]) -> F2Subspace:
    """The subspace F_2^S of vectors supported on the coordinate set S."""
    return F2Subspace(n, tuple(sorted((1 << (n - 1 - c) for c in set(coords)), reverse=True)))


def coordinate_mask(n: int, coords: Iterable[int]) -> int:
    m = 0
    for c in coords:
        m |= 1 << (n - 1 - c)
    return m
