"""Fourier analysis on F_2^{n x m}.

A function on matrices is a dense float table indexed by the matrix's
row-major bit pattern (see :meth:`F2Matrix.flat_index`).  Characters are
``chi_S(M) = (-1)^{<S, M>}`` with the entrywise inner product, which on flat
indices is the parity of ``idx(S) & idx(M)``.
"""

from __future__ import annotations

import base64
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import _config
from .errors import DomainError, ResourceError
from .f2la import F2Matrix, popcount


def _check_table(n: int, m: int):
    if n < 0 or m < 0:
        raise DomainError("shape must be non-negative")
    if n * m > _config.TABLE_BITS_CAP:
        raise ResourceError(f"table on F_2^({n}x{m}) exceeds cap of 2^{_config.TABLE_BITS_CAP}")


@dataclass(frozen=True, eq=False)
class BilinearFn:
    n: int
    m: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_table(self.n, self.m)
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.size != 1 << (self.n * self.m):
            raise DomainError(f"table size {vals.size} != 2^{self.n * self.m}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def is_boolean(self) -> bool:
        return bool(np.all((self.values == 0) | (self.values == 1)))

    def __call__(self, mat: F2Matrix) -> float:
        if (mat.n_rows, mat.n_cols) != (self.n, self.m):
            raise DomainError("matrix shape does not match the function")
        return float(self.values[mat.flat_index()])

    def __add__(self, other: "BilinearFn") -> "BilinearFn":
        _same_shape(self, other)
        return BilinearFn(self.n, self.m, self.values + other.values)

    def __sub__(self, other: "BilinearFn") -> "BilinearFn":
        _same_shape(self, other)
        return BilinearFn(self.n, self.m, self.values - other.values)

    def mean(self) -> float:
        return float(self.values.mean())

    def norm_sq(self) -> float:
        return float(np.mean(self.values ** 2))

    def to_json(self) -> dict:
        if self.is_boolean:
            packed = np.packbits(self.values.astype(np.uint8))
            return {"n": self.n, "m": self.m, "encoding": "bits",
                    "values": base64.b64encode(packed.tobytes()).decode()}
        return {"n": self.n, "m": self.m, "encoding": "float", "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "BilinearFn":
        n, m = int(obj["n"]), int(obj["m"])
        if obj.get("encoding") == "bits":
            raw = np.frombuffer(base64.b64decode(obj["values"]), dtype=np.uint8)
            vals = np.unpackbits(raw)[: 1 << (n * m)].astype(np.float64)
        else:
            vals = np.asarray(obj["values"], dtype=np.float64)
        return cls(n, m, vals)


def _same_shape(a, b):
    if (a.n, a.m) != (b.n, b.m):
        raise DomainError("functions live on different matrix spaces")


def inner(a: BilinearFn, b: BilinearFn) -> float:
    _same_shape(a, b)
    return float(np.dot(a.values, b.values) / a.size)


def constant(n: int, m: int, c: float = 1.0) -> BilinearFn:
    _check_table(n, m)
    return BilinearFn(n, m, np.full(1 << (n * m), float(c)))


@lru_cache(maxsize=None)
def _parity_table(bits: int) -> np.ndarray:
    t = np.zeros(1 << bits, dtype=np.uint8)
    for b in range(bits):
        t[1 << b:1 << (b + 1)] = t[: 1 << b] ^ 1
    t.setflags(write=False)
    return t


def _parity(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    out = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        out ^= x & 1
        x = x >> 1
    return out


def character_eval(s: F2Matrix, mat: F2Matrix) -> int:
    if (s.n_rows, s.n_cols) != (mat.n_rows, mat.n_cols):
        raise DomainError("shape mismatch between S and M")
    return -1 if popcount(s.flat_index() & mat.flat_index()) & 1 else 1


def character(s: F2Matrix) -> BilinearFn:
    n, m = s.n_rows, s.n_cols
    _check_table(n, m)
    idx = np.arange(1 << (n * m), dtype=np.int64)
    par = _parity(idx & s.flat_index())
    return BilinearFn(n, m, 1.0 - 2.0 * par)


def _fwht(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    size = a.size
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0, :] + a[:, 1, :], a[:, 0, :] - a[:, 1, :]), axis=1)
        h *= 2
    return a.reshape(size)


@dataclass(frozen=True, eq=False)
class FourierView:
    n: int
    m: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __getitem__(self, s: F2Matrix | int) -> float:
        i = s.flat_index() if isinstance(s, F2Matrix) else int(s)
        return float(self.coeffs[i])

    def energy(self) -> float:
        return float(np.sum(self.coeffs ** 2))


def fourier_transform(f: BilinearFn) -> FourierView:
    return FourierView(f.n, f.m, _fwht(f.values) / f.size)


def inverse_transform(fv: FourierView) -> BilinearFn:
    return BilinearFn(fv.n, fv.m, _fwht(fv.coeffs))


@lru_cache(maxsize=16)
def rank_table(n: int, m: int) -> np.ndarray:
    """rank(S) for every flat index S of F_2^{n x m}."""
    _check_table(n, m)
    idx = np.arange(1 << (n * m), dtype=np.int64)
    mask = (1 << m) - 1
    rows = [(idx >> (m * (n - 1 - i))) & mask for i in range(n)]
    par = _parity_table(m).astype(bool)
    kernel = np.zeros(idx.size, dtype=np.int64)
    for u in range(1 << m):
        in_kernel = np.ones(idx.size, dtype=bool)
        for r in rows:
            in_kernel &= ~par[r & u]
        kernel += in_kernel
    out = m - np.log2(kernel).round().astype(np.int64)
    out.setflags(write=False)
    return out


def level_projection(f: BilinearFn, d: int) -> BilinearFn:
    if not 0 <= d <= min(f.n, f.m):
        raise DomainError(f"level {d} outside 0..{min(f.n, f.m)}")
    fv = fourier_transform(f)
    kept = np.where(rank_table(f.n, f.m) == d, fv.coeffs, 0.0)
    return inverse_transform(FourierView(f.n, f.m, kept))


def level_decomposition(f: BilinearFn) -> list[BilinearFn]:
    fv = fourier_transform(f)
    ranks = rank_table(f.n, f.m)
    return [inverse_transform(FourierView(f.n, f.m, np.where(ranks == d, fv.coeffs, 0.0)))
            for d in range(min(f.n, f.m) + 1)]


def level_weights(f: BilinearFn) -> list[float]:
    """Squared norm of each level, from the Fourier side."""
    fv = fourier_transform(f)
    ranks = rank_table(f.n, f.m)
    return [float(np.sum(fv.coeffs[ranks == d] ** 2)) for d in range(min(f.n, f.m) + 1)]


def apply_T(f: BilinearFn, c: int) -> BilinearFn:
    """Average over all ways of appending ``c`` columns on the right."""
    if not 0 <= c <= f.m:
        raise DomainError(f"cannot drop {c} of {f.m} columns")
    m_bot = f.m - c
    shape = [1 << m_bot, 1 << c] * f.n
    t = f.values.reshape(shape)
    return BilinearFn(f.n, m_bot, t.mean(axis=tuple(range(1, 2 * f.n, 2))).reshape(-1))


def _full_rank_rows(c: int, m: int) -> list[tuple[int, ...]]:
    """All c x m matrices of rank c, as row tuples."""
    out = []
    for rows in itertools.product(range(1 << m), repeat=c):
        pivots: dict[int, int] = {}
        ok = True
        for r in rows:
            while r:
                top = r.bit_length() - 1
                if top in pivots:
                    r ^= pivots[top]
                else:
                    pivots[top] = r
                    break
            else:
                ok = False
                break
        if ok:
            out.append(rows)
    return out


@lru_cache(maxsize=16)
def phi_shift_counts(n: int, m: int, c: int) -> tuple[dict[int, int], int]:
    """Multiplicity of each D = BC over B in F_2^{n x c} and rank-c C in F_2^{c x m}."""
    if not 0 <= c <= m:
        raise DomainError("need 0 <= c <= m")
    cs = _full_rank_rows(c, m)
    counts: dict[int, int] = {}
    for crows in cs:
        # row i of BC is the combination of C's rows selected by row i of B
        comb = [0] * (1 << c)
        for sel in range(1 << c):
            v = 0
            for j in range(c):
                if (sel >> (c - 1 - j)) & 1:
                    v ^= crows[j]
            comb[sel] = v
        for brows in itertools.product(range(1 << c), repeat=n):
            idx = 0
            for b in brows:
                idx = (idx << m) | comb[b]
            counts[idx] = counts.get(idx, 0) + 1
    return counts, len(cs) * (1 << (n * c))


def apply_Phi(f: BilinearFn, c: int) -> BilinearFn:
    """Phi f(M) = E_{B, C}[f(M + BC)] with C of full row rank c."""
    counts, total = phi_shift_counts(f.n, f.m, c)
    idx = np.arange(f.size, dtype=np.int64)
    out = np.zeros(f.size)
    for d, w in counts.items():
        out += w * f.values[idx ^ d]
    return BilinearFn(f.n, f.m, out / total)


def phi_eigenvalues(n: int, m: int, c: int) -> list[Fraction]:
    """Exact eigenvalue of Phi on every character chi_S, by flat index of S."""
    counts, total = phi_shift_counts(n, m, c)
    size = 1 << (n * m)
    a = [0] * size
    for d, w in counts.items():
        a[d] = w
    h = 1
    while h < size:
        for start in range(0, size, 2 * h):
            for i in range(start, start + h):
                x, y = a[i], a[i + h]
                a[i], a[i + h] = x + y, x - y
        h *= 2
    return [Fraction(v, total) for v in a]


def phi_eigen_bound(d: int, c: int, n: int) -> float:
    return 2.0 ** (-d * (c - 1)) + 3.0 * 2.0 ** (d - n)


@dataclass(frozen=True)
class MatrixZoom:
    """Zoom-in pairs (u, v) meaning M u = v, zoom-out pairs (x, y) meaning x M = y.

    ``u`` and ``y`` are m-bit ints, ``v`` and ``x`` are n-bit ints.
    """

    n: int
    m: int
    ins: tuple[tuple[int, int], ...] = ()
    outs: tuple[tuple[int, int], ...] = ()

    @property
    def size(self) -> int:
        return len(self.ins) + len(self.outs)

    @property
    def U(self) -> F2Matrix:
        return F2Matrix(tuple(u for u, _ in self.ins), self.m).transpose() if self.ins \
            else F2Matrix((0,) * self.m, 0)

    @property
    def V(self) -> F2Matrix:
        return F2Matrix(tuple(v for _, v in self.ins), self.n).transpose() if self.ins \
            else F2Matrix((0,) * self.n, 0)

    @property
    def X(self) -> F2Matrix:
        return F2Matrix(tuple(x for x, _ in self.outs), self.n)

    @property
    def Y(self) -> F2Matrix:
        return F2Matrix(tuple(y for _, y in self.outs), self.m)

    def equations(self) -> list[tuple[int, int]]:
        """Linear equations over the nm entry bits, as (mask over flat index, rhs)."""
        n, m = self.n, self.m
        eqs = []
        for u, v in self.ins:
            for i in range(n):
                mask = u << (m * (n - 1 - i))
                eqs.append((mask, (v >> (n - 1 - i)) & 1))
        for x, y in self.outs:
            for j in range(m):
                col_bit = 1 << (m - 1 - j)
                mask = 0
                for i in range(n):
                    if (x >> (n - 1 - i)) & 1:
                        mask |= col_bit << (m * (n - 1 - i))
                eqs.append((mask, (y >> (m - 1 - j)) & 1))
        return eqs

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m,
                "zoom_in": [{"u": format(u, f"0{self.m}b"), "v": format(v, f"0{self.n}b")} for u, v in self.ins],
                "zoom_out": [{"x": format(x, f"0{self.n}b"), "y": format(y, f"0{self.m}b")} for x, y in self.outs]}


def zoom_members(z: MatrixZoom) -> np.ndarray | None:
    """Flat indices of {M : MU = V, XM = Y}, or None when the system is inconsistent."""
    nbits = z.n * z.m
    pivots: dict[int, tuple[int, int]] = {}
    for mask, rhs in z.equations():
        while mask:
            top = mask.bit_length() - 1
            if top in pivots:
                pm, pr = pivots[top]
                mask ^= pm
                rhs ^= pr
            else:
                pivots[top] = (mask, rhs)
                break
        else:
            if rhs:
                return None
    # back-substitute to reduced form
    for top in sorted(pivots):
        pm, pr = pivots[top]
        for other in list(pivots):
            if other != top:
                om, orr = pivots[other]
                if (om >> top) & 1:
                    pivots[other] = (om ^ pm, orr ^ pr)
    particular = 0
    for top, (_, pr) in pivots.items():
        if pr:
            particular |= 1 << top
    free = [b for b in range(nbits) if b not in pivots]
    kernel = []
    for b in free:
        v = 1 << b
        for top, (pm, _) in pivots.items():
            if (pm >> b) & 1:
                v |= 1 << top
        kernel.append(v)
    members = np.zeros(1 << len(kernel), dtype=np.int64)
    members[0] = particular
    filled = 1
    for k in kernel:
        members[filled:2 * filled] = members[:filled] ^ k
        filled *= 2
    return members


@dataclass(frozen=True)
class Restriction:
    zoom: MatrixZoom
    members: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.members.size)

    @property
    def norm_sq(self) -> float:
        return float(np.mean(self.values ** 2))


def restrict(f: BilinearFn, z: MatrixZoom) -> Restriction | None:
    """Restriction of ``f`` to a zoom set; None signals an empty zoom."""
    if (z.n, z.m) != (f.n, f.m):
        raise DomainError("zoom shape does not match the function")
    members = zoom_members(z)
    if members is None:
        return None
    return Restriction(z, members, f.values[members])


def _constraint_masks(n: int, m: int) -> tuple[list[tuple[str, int, int]], np.ndarray]:
    """Every single zoom constraint and its membership indicator over all matrices."""
    idx = np.arange(1 << (n * m), dtype=np.int64)
    mask_m = (1 << m) - 1
    rows = [(idx >> (m * (n - 1 - i))) & mask_m for i in range(n)]
    par_m = _parity_table(m)
    # products M u as n-bit ints
    cons = []
    inds = []
    for u in range(1 << m):
        mu = np.zeros(idx.size, dtype=np.int64)
        for i, r in enumerate(rows):
            mu |= par_m[r & u].astype(np.int64) << (n - 1 - i)
        for v in range(1 << n):
            cons.append(("in", u, v))
            inds.append(mu == v)
    for x in range(1 << n):
        xm = np.zeros(idx.size, dtype=np.int64)
        for i, r in enumerate(rows):
            if (x >> (n - 1 - i)) & 1:
                xm ^= r
        for y in range(1 << m):
            cons.append(("out", x, y))
            inds.append(xm == y)
    return cons, np.array(inds, dtype=np.float64)


def _zoom_from(cons, picks, n, m) -> MatrixZoom:
    ins = tuple((cons[p][1], cons[p][2]) for p in picks if cons[p][0] == "in")
    outs = tuple((cons[p][1], cons[p][2]) for p in picks if cons[p][0] == "out")
    return MatrixZoom(n, m, ins, outs)


def is_pseudorandom(f: BilinearFn, d: int, eps: float = 1.0):
    """Largest restricted squared norm over all zooms of size ``d``.

    Every multiset of ``d`` single constraints is scanned, including ones
    that repeat or imply each other.  Returns ``(eps_max <= eps, witness, eps_max)``.
    """
    if d < 0:
        raise DomainError("zoom size must be non-negative")
    sq = f.values ** 2
    if d == 0:
        z = MatrixZoom(f.n, f.m)
        val = float(sq.mean())
        return val <= eps + 1e-12, z, val
    cons, A = _constraint_masks(f.n, f.m)
    nc = len(cons)
    n_combos = math.comb(nc + d - 1, d)
    if n_combos > _config.ZOOM_CAP:
        raise ResourceError(f"{n_combos} zooms of size {d} exceed cap {_config.ZOOM_CAP}")
    best = -1.0
    best_pick: tuple[int, ...] = ()
    if d == 1:
        sizes = A.sum(axis=1)
        mass = A @ sq
        ok = sizes > 0
        ratio = np.where(ok, mass / np.where(ok, sizes, 1), -1.0)
        i = int(np.argmax(ratio))
        best, best_pick = float(ratio[i]), (i,)
    else:
        for prefix in itertools.combinations_with_replacement(range(nc), d - 2):
            base = np.ones(A.shape[1])
            for p in prefix:
                base = base * A[p]
            lo = prefix[-1] if prefix else 0
            if not base.any():
                continue
            B = A[lo:] * base
            sizes = B @ A[lo:].T
            mass = (B * sq) @ A[lo:].T
            tri = np.triu(np.ones(sizes.shape, dtype=bool))
            ok = (sizes > 0) & tri
            ratio = np.where(ok, mass / np.where(ok, sizes, 1), -1.0)
            i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
            if ratio[i, j] > best + 1e-15:
                best = float(ratio[i, j])
                best_pick = prefix + (lo + int(i), lo + int(j))
    witness = _zoom_from(cons, best_pick, f.n, f.m)
    return best <= eps + 1e-12, witness, best


def _matrix_times(a_rows: tuple[int, ...], m: int) -> np.ndarray:
    """Map r -> r A for all m-bit row vectors r."""
    table = np.zeros(1 << m, dtype=np.int64)
    for r in range(1 << m):
        v = 0
        for i in range(m):
            if (r >> (m - 1 - i)) & 1:
                v ^= a_rows[i]
        table[r] = v
    return table


def right_multiply_index(n: int, m: int, a_rows: tuple[int, ...]) -> np.ndarray:
    """Flat index of M A for every flat index of M."""
    idx = np.arange(1 << (n * m), dtype=np.int64)
    mask = (1 << m) - 1
    table = _matrix_times(a_rows, m)
    out = np.zeros(idx.size, dtype=np.int64)
    for i in range(n):
        shift = m * (n - 1 - i)
        out |= table[(idx >> shift) & mask] << shift
    return out


def is_basis_invariant(f: BilinearFn, tol: float = 0.0) -> bool:
    for a in _full_rank_rows(f.m, f.m):
        perm = right_multiply_index(f.n, f.m, a)
        if np.any(np.abs(f.values[perm] - f.values) > tol):
            return False
    return True


def t_norm(f: BilinearFn, t: float) -> float:
    if t < 1:
        raise DomainError("t must be >= 1")
    return float(np.mean(np.abs(f.values) ** t) ** (1.0 / t))


def spectrum_rows(f: BilinearFn, c: int, tol: float = 1e-12) -> list[dict]:
    """Nonzero Fourier coefficients with rank and Phi eigenvalue."""
    fv = fourier_transform(f)
    ranks = rank_table(f.n, f.m)
    eig = phi_eigenvalues(f.n, f.m, c)
    rows = []
    for s in np.flatnonzero(np.abs(fv.coeffs) > tol):
        s = int(s)
        rows.append({"rank": int(ranks[s]), "S": s, "coefficient": float(fv.coeffs[s]),
                     "eigenvalue": float(eig[s])})
    return rows


def from_predicate(n: int, m: int, pred) -> BilinearFn:
    """Tabulate ``pred(F2Matrix)`` over all n x m matrices."""
    _check_table(n, m)
    vals = np.fromiter((float(pred(F2Matrix.from_flat_index(i, n, m))) for i in range(1 << (n * m))),
                       dtype=np.float64, count=1 << (n * m))
    return BilinearFn(n, m, vals)


def full_column_rank_indicator(n: int, m: int) -> BilinearFn:
    ranks = rank_table(n, m)
    return BilinearFn(n, m, (ranks == m).astype(np.float64))


def random_boolean(n: int, m: int, rng: np.random.Generator, p: float = 0.5) -> BilinearFn:
    return BilinearFn(n, m, (rng.random(1 << (n * m)) < p).astype(np.float64))


def column_span_index(n: int, m: int) -> np.ndarray:
    """For each flat index, the column vectors of M as n-bit ints, shape (N, m)."""
    idx = np.arange(1 << (n * m), dtype=np.int64)
    cols = np.zeros((idx.size, m), dtype=np.int64)
    for i in range(n):
        row = (idx >> (m * (n - 1 - i))) & ((1 << m) - 1)
        for j in range(m):
            cols[:, j] |= ((row >> (m - 1 - j)) & 1) << (n - 1 - i)
    return cols


def iter_all(n: int, m: int) -> Iterable[F2Matrix]:
    for i in range(1 << (n * m)):
        yield F2Matrix.from_flat_index(i, n, m)
