"""The (k+1)-query consistency test on Grassmann tables and its companions."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from . import bilinear
from .errors import DomainError
from .f2la import (F2Matrix, F2Subspace, ZoomPair, canonicalize, complement_basis, contains,
                   enumerate_grassmann, enumerate_zoom, full_space, gaussian_binomial,
                   int_to_bits, bits_to_int, popcount, sample_subspace,
                   sample_superspace, zero_subspace)
from .seeding import check_random_state
from .stats import Estimate, clopper_pearson


def _parity(v: int) -> int:
    return popcount(v) & 1


@dataclass(frozen=True)
class LinearFunctional:
    """A linear map ``domain -> F_2`` stored as x -> <coeff, x>.

    ``coeff`` is supported on the pivot positions of the domain's basis, which
    makes the representation unique.
    """

    domain: F2Subspace
    coeff: int

    @property
    def ambient_dim(self) -> int:
        return self.domain.ambient_dim

    @classmethod
    def from_vector(cls, domain: F2Subspace, s: int) -> "LinearFunctional":
        """The restriction of x -> <s, x> to ``domain``."""
        coeff = 0
        for b in domain.basis:
            if _parity(s & b):
                coeff |= 1 << (b.bit_length() - 1)
        return cls(domain, coeff)

    @classmethod
    def from_basis_values(cls, domain: F2Subspace, values: Iterable[int]) -> "LinearFunctional":
        coeff = 0
        for b, val in zip(domain.basis, values, strict=True):
            if val & 1:
                coeff |= 1 << (b.bit_length() - 1)
        return cls(domain, coeff)

    @classmethod
    def from_spanning_values(cls, domain: F2Subspace, pairs: Iterable[tuple[int, int]]) -> "LinearFunctional":
        """Build from (vector, value) pairs spanning ``domain``.

        Raises DomainError if the values are not consistent with any linear map
        or if the vectors do not span the domain.
        """
        # echelon form over (vector | value) with the value bit appended below
        n = domain.ambient_dim
        rows: dict[int, int] = {}
        for v, val in pairs:
            if domain.reduce(v):
                raise DomainError("vector outside the domain")
            r = (v << 1) | (val & 1)
            while r >> 1:
                top = r.bit_length() - 1
                if top in rows:
                    r ^= rows[top]
                else:
                    rows[top] = r
                    break
            else:
                if r:
                    raise DomainError("inconsistent values: 0 would map to 1")
        if len(rows) != domain.dim:
            raise DomainError("vectors do not span the domain")
        # evaluate on the canonical basis by reducing each basis vector
        vals = []
        for b in domain.basis:
            r = b << 1
            for top in sorted(rows, reverse=True):
                if (r >> top) & 1:
                    r ^= rows[top]
            if r >> 1:
                raise DomainError("vectors do not span the domain")
            vals.append(r & 1)
        del n
        return cls.from_basis_values(domain, vals)

    def __call__(self, x: int) -> int:
        return _parity(self.coeff & x)

    def basis_values(self) -> tuple[int, ...]:
        return tuple(self(b) for b in self.domain.basis)

    def restrict(self, sub: F2Subspace) -> "LinearFunctional":
        if not contains(self.domain, sub):
            raise DomainError("restriction target is not inside the domain")
        return LinearFunctional.from_vector(sub, self.coeff)

    def agrees_on(self, other: "LinearFunctional", sub: F2Subspace) -> bool:
        return all(self(b) == other(b) for b in sub.basis)

    def extend(self, larger: F2Subspace, rng: random.Random | None = None,
               fill: int = 0) -> "LinearFunctional":
        """Extend to ``larger``; new directions get random values (or ``fill``)."""
        if not contains(larger, self.domain):
            raise DomainError("extension target does not contain the domain")
        extra = complement_basis(self.domain, larger)
        pairs = [(b, self(b)) for b in self.domain.basis]
        for v in extra:
            pairs.append((v, rng.getrandbits(1) if rng is not None else fill))
        return LinearFunctional.from_spanning_values(larger, pairs)

    def all_extensions(self, larger: F2Subspace) -> list["LinearFunctional"]:
        extra = complement_basis(self.domain, larger)
        base = [(b, self(b)) for b in self.domain.basis]
        out = []
        for bits in range(1 << len(extra)):
            pairs = base + [(v, (bits >> i) & 1) for i, v in enumerate(extra)]
            out.append(LinearFunctional.from_spanning_values(larger, pairs))
        return out

    def to_json(self) -> dict:
        return {"subspace": self.domain.to_json(),
                "coeff_bits": int_to_bits(self.coeff, self.ambient_dim)}

    @classmethod
    def from_json(cls, obj: dict) -> "LinearFunctional":
        dom = F2Subspace.from_json(obj["subspace"])
        return cls.from_vector(dom, bits_to_int(obj["coeff_bits"]))


def all_functionals(domain: F2Subspace) -> list[LinearFunctional]:
    out = []
    for bits in range(1 << domain.dim):
        vals = [(bits >> (domain.dim - 1 - i)) & 1 for i in range(domain.dim)]
        out.append(LinearFunctional.from_basis_values(domain, vals))
    return out


Table = Mapping[F2Subspace, LinearFunctional]


@dataclass
class TablePair:
    n: int
    dim_top: int
    dim_bot: int
    t1: dict[F2Subspace, LinearFunctional]
    t2: dict[F2Subspace, LinearFunctional]

    def __post_init__(self):
        if not 0 <= self.dim_bot < self.dim_top <= self.n:
            raise DomainError("need dim_bot < dim_top <= n")
        for key, t, d in ((1, self.t1, self.dim_top), (2, self.t2, self.dim_bot)):
            for s, f in t.items():
                if s.dim != d or s.ambient_dim != self.n or f.domain != s:
                    raise DomainError(f"t{key} entry {s} has the wrong shape")

    def validate_complete(self):
        for t, d in ((self.t1, self.dim_top), (self.t2, self.dim_bot)):
            if len(t) != gaussian_binomial(self.n, d):
                raise DomainError("table does not cover its Grassmann stratum")

    @classmethod
    def from_globals(cls, n: int, dim_top: int, dim_bot: int, f: int, g: int | None = None) -> "TablePair":
        """t1 from the global functional <f, .>, t2 from <g, .> (g defaults to f)."""
        g = f if g is None else g
        t1 = {s: LinearFunctional.from_vector(s, f) for s in enumerate_grassmann(n, dim_top)}
        t2 = {s: LinearFunctional.from_vector(s, g) for s in enumerate_grassmann(n, dim_bot)}
        return cls(n, dim_top, dim_bot, t1, t2)

    @classmethod
    def random(cls, n: int, dim_top: int, dim_bot: int, rng) -> "TablePair":
        rng = check_random_state(rng)
        t1 = {s: LinearFunctional.from_vector(s, rng.getrandbits(n)) for s in enumerate_grassmann(n, dim_top)}
        t2 = {s: LinearFunctional.from_vector(s, rng.getrandbits(n)) for s in enumerate_grassmann(n, dim_bot)}
        return cls(n, dim_top, dim_bot, t1, t2)

    def to_json(self) -> dict:
        entries = [{"subspace": [int_to_bits(b, self.n) for b in s.basis],
                    "coeff_bits": int_to_bits(f.coeff, self.n)}
                   for t in (self.t1, self.t2) for s, f in sorted(t.items(), key=lambda kv: (kv[0].dim, kv[0].basis))]
        return {"n": self.n, "dim_top": self.dim_top, "dim_bot": self.dim_bot, "entries": entries}

    @classmethod
    def from_json(cls, obj: dict) -> "TablePair":
        n = int(obj["n"])
        t1, t2 = {}, {}
        for e in obj["entries"]:
            s = canonicalize(F2Matrix.from_strings(e["subspace"], n), n)
            f = LinearFunctional.from_vector(s, bits_to_int(e["coeff_bits"]))
            (t1 if s.dim == int(obj["dim_top"]) else t2)[s] = f
        return cls(n, int(obj["dim_top"]), int(obj["dim_bot"]), t1, t2)


@dataclass(frozen=True)
class SubspaceFamily:
    n: int
    l: int
    members: frozenset[F2Subspace]

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        for s in self.members:
            if s.dim != self.l or s.ambient_dim != self.n:
                raise DomainError(f"member {s} is not in Grass({self.n},{self.l})")

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.members), gaussian_binomial(self.n, self.l))

    def __contains__(self, s: F2Subspace) -> bool:
        return s in self.members

    def __len__(self):
        return len(self.members)

    @classmethod
    def random(cls, n: int, l: int, p: float, rng) -> "SubspaceFamily":
        rng = check_random_state(rng)
        return cls(n, l, frozenset(s for s in enumerate_grassmann(n, l) if rng.random() < p))

    @classmethod
    def full(cls, n: int, l: int) -> "SubspaceFamily":
        return cls(n, l, frozenset(enumerate_grassmann(n, l)))


def _zoom_shapes(n: int, l: int, r: int):
    for qd in range(0, min(r, l) + 1):
        wc = r - qd
        if n - wc >= l:
            yield qd, wc


def family_pseudorandomness(fam: SubspaceFamily, r: int) -> tuple[float, ZoomPair | None]:
    """Max density of ``fam`` inside any zoom with dim(Q) + codim(W) = r."""
    n, l = fam.n, fam.l
    best = Fraction(-1)
    witness = None
    for qd, wc in _zoom_shapes(n, l, r):
        counts: dict[tuple[F2Subspace, F2Subspace], int] = {}
        for s in fam.members:
            subs = list(enumerate_zoom(ZoomPair(zero_subspace(n), s), qd))
            sups = list(enumerate_zoom(ZoomPair(s, full_space(n)), n - wc))
            for q in subs:
                for w in sups:
                    counts[(q, w)] = counts.get((q, w), 0) + 1
        denom = gaussian_binomial(n - wc - qd, l - qd)
        for (q, w), c in counts.items():
            val = Fraction(c, denom)
            if val > best or (val == best and witness is not None and
                              (q.basis, w.basis) < (witness.q.basis, witness.w.basis)):
                best, witness = val, ZoomPair(q, w)
    if witness is None:
        for qd, wc in _zoom_shapes(n, l, r):
            q = next(enumerate_grassmann(n, qd))
            w = next(enumerate_zoom(ZoomPair(q, full_space(n)), n - wc))
            return 0.0, ZoomPair(q, w)
        return 0.0, None
    return float(best), witness


def family_zoom_density(fam: SubspaceFamily, z: ZoomPair) -> Fraction:
    members = list(enumerate_zoom(z, fam.l))
    return Fraction(sum(1 for s in members if s in fam.members), len(members))


def columns_to_index(cols: Iterable[int], n: int) -> int:
    """Flat index of the n x m matrix with the given column vectors."""
    cols = list(cols)
    m = len(cols)
    idx = 0
    for i in range(n):
        row = 0
        for c in cols:
            row = (row << 1) | ((c >> (n - 1 - i)) & 1)
        idx = (idx << m) | row
    return idx


def _ordered_bases(s: F2Subspace) -> Iterable[tuple[int, ...]]:
    vecs = list(s.vectors())

    def rec(chosen: list[int], span_set: set[int]):
        if len(chosen) == s.dim:
            yield tuple(chosen)
            return
        for v in vecs:
            if v not in span_set:
                new_span = span_set | {x ^ v for x in span_set}
                chosen.append(v)
                yield from rec(chosen, new_span)
                chosen.pop()

    yield from rec([], {0})


def lift_indicator(fam: SubspaceFamily) -> bilinear.BilinearFn:
    """F(M) = 1 iff the columns of M are independent and span a member."""
    vals = np.zeros(1 << (fam.n * fam.l))
    for s in fam.members:
        for cols in _ordered_bases(s):
            vals[columns_to_index(cols, fam.n)] = 1.0
    return bilinear.BilinearFn(fam.n, fam.l, vals)


@dataclass(frozen=True)
class TestResult:
    probability: Fraction | None
    estimate: Estimate | None = None

    @property
    def value(self) -> float:
        return float(self.probability) if self.probability is not None else self.estimate.value


def _agreement_count(tp: TablePair, r: F2Subspace) -> tuple[int, int]:
    g = tp.t2.get(r)
    agree = total = 0
    for l in enumerate_zoom(ZoomPair(r, full_space(tp.n)), tp.dim_top):
        total += 1
        f = tp.t1.get(l)
        if g is not None and f is not None and f.agrees_on(g, r):
            agree += 1
    return agree, total


def run_consistency_test(tp: TablePair, k: int, mode: str = "exact", trials: int = 0,
                         seed=None) -> TestResult:
    """Pass probability of: uniform R, k independent uniform L_i ⊇ R, accept iff all agree on R."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if mode == "exact":
        acc = Fraction(0)
        count = 0
        for r in enumerate_grassmann(tp.n, tp.dim_bot):
            a, t = _agreement_count(tp, r)
            acc += Fraction(a, t) ** k
            count += 1
        return TestResult(acc / count)
    if mode != "montecarlo":
        raise DomainError(f"unknown mode {mode!r}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = check_random_state(seed)
    wins = 0
    for _ in range(trials):
        r = sample_subspace(tp.n, tp.dim_bot, rng)
        g = tp.t2.get(r)
        ok = g is not None
        for _ in range(k):
            if not ok:
                break
            l = sample_superspace(r, tp.dim_top, rng)
            f = tp.t1.get(l)
            ok = f is not None and f.agrees_on(g, r)
        wins += ok
    return TestResult(None, clopper_pearson(wins, trials))


def two_query_pass_probability(tp: TablePair) -> Fraction:
    """Fraction of incident pairs R ⊂ L on which the tables agree."""
    agree = total = 0
    for l in enumerate_grassmann(tp.n, tp.dim_top):
        f = tp.t1[l]
        for r in enumerate_zoom(ZoomPair(zero_subspace(tp.n), l), tp.dim_bot):
            total += 1
            agree += f.agrees_on(tp.t2[r], r)
    return Fraction(agree, total)


def prob_all_independent(n: int, dim_top: int, dim_bot: int, k: int) -> Fraction:
    """Probability that a uniform M and k uniform column extensions all have full column rank."""
    base = Fraction(1)
    for i in range(dim_bot):
        base *= 1 - Fraction(1 << i, 1 << n)
    ext = Fraction(1)
    for i in range(dim_bot, dim_top):
        ext *= 1 - Fraction(1 << i, 1 << n)
    return base * ext ** k


@dataclass
class HyperedgeReport:
    probability: Fraction
    inner_product: Fraction
    inner_product_float: float
    pr_independent: Fraction
    union_bound_regime: bool
    inequality_holds: bool
    identity_holds: bool

    @property
    def asserted(self) -> bool:
        return self.union_bound_regime or self.pr_independent >= Fraction(1, 2)


def count_hyperedges(rfam: SubspaceFamily, lfam: SubspaceFamily, k: int) -> HyperedgeReport:
    """Exact Pr[R in rfam, L_1..L_k in lfam] and the matching bilinear inner product."""
    if rfam.n != lfam.n or lfam.l <= rfam.l:
        raise DomainError("need the same ambient space and lfam.l > rfam.l")
    if k < 1:
        raise DomainError("k must be >= 1")
    n, top, bot = lfam.n, lfam.l, rfam.l
    c = top - bot
    n_r = gaussian_binomial(n, bot)
    n_up = gaussian_binomial(n - bot, top - bot)
    acc = Fraction(0)
    for r in rfam.members:
        hits = sum(1 for l in enumerate_zoom(ZoomPair(r, full_space(n)), top) if l in lfam.members)
        acc += Fraction(hits, n_up) ** k
    prob = acc / n_r

    F = lift_indicator(lfam)
    G = lift_indicator(rfam)
    # integer count of good extensions for every M
    shape = [1 << bot, 1 << c] * n
    ext_counts = F.values.reshape(shape).sum(axis=tuple(range(1, 2 * n, 2))).reshape(-1)
    ext_counts = ext_counts.round().astype(np.int64)
    total = 0
    for idx in np.flatnonzero(G.values):
        total += int(ext_counts[idx]) ** k
    inner = Fraction(total, (1 << (n * c * k)) * (1 << (n * bot)))
    inner_float = float(np.dot(bilinear.apply_T(F, c).values ** k, G.values) / G.size)

    pr_ind = prob_all_independent(n, top, bot, k)
    regime = Fraction((top + c * k) * (1 << top), 1 << n) <= Fraction(1, 2)
    return HyperedgeReport(prob, inner, inner_float, pr_ind, regime,
                           prob <= 2 * inner, inner == pr_ind * prob)


@dataclass(frozen=True)
class MaximalPair:
    w: F2Subspace
    g: LinearFunctional
    agreement: Fraction


def agreement_table(t: Table, q: F2Subspace, l: int, max_codim: int) -> dict[F2Subspace, dict[int, Fraction]]:
    """Agreement of every (W ⊇ Q, codim W <= max_codim, g on W) with ``t`` on Zoom[Q, W].

    Functionals g are keyed by their canonical coefficient vector.  Entries of
    the zoom that are missing from ``t`` count as disagreement.
    """
    n = q.ambient_dim
    out: dict[F2Subspace, dict[int, Fraction]] = {}
    lo_dim = max(q.dim, l, n - max_codim)
    for dw in range(n, lo_dim - 1, -1):
        for w in enumerate_zoom(ZoomPair(q, full_space(n)), dw):
            members = list(enumerate_zoom(ZoomPair(q, w), l))
            cands = np.array([f.coeff for f in all_functionals(w)], dtype=np.int64)
            hits = np.zeros(cands.size, dtype=np.int64)
            for s in members:
                f = t.get(s)
                if f is None:
                    continue
                ok = np.ones(cands.size, dtype=bool)
                for b in s.basis:
                    ok &= bilinear._parity(cands & b) == f(b)
                hits += ok
            out[w] = {int(cf): Fraction(int(h), len(members)) for cf, h in zip(cands, hits)}
    return out


def find_maximal_pairs(t: Table, q: F2Subspace, C: float, s: float, max_codim: int,
                       l: int | None = None) -> list[MaximalPair]:
    """All (C, s)-maximal zoom-out/function pairs on Q with codim(W) <= max_codim."""
    if not 0 < s <= 1 or C <= 0:
        raise DomainError("need C > 0 and 0 < s <= 1")
    if l is None:
        l = next(iter(t)).dim
    n = q.ambient_dim
    table = agreement_table(t, q, l, max_codim)
    C_q = Fraction(C).limit_denominator(10**12) if isinstance(C, float) else Fraction(C)
    s_q = Fraction(s).limit_denominator(10**12) if isinstance(s, float) else Fraction(s)
    # larger zoom-outs first: an answer for W only needs strict supersets of W
    by_dim = sorted(table, key=lambda w: (-w.dim, w.basis))
    out = []
    for w in by_dim:
        supers = [w2 for w2 in by_dim if w2.dim > w.dim and contains(w2, w)]
        for coeff, agr in sorted(table[w].items()):
            if agr < C_q:
                continue
            g = LinearFunctional(w, coeff)
            dominated = False
            for w2 in supers:
                for c2, a2 in table[w2].items():
                    if a2 >= s_q * C_q and LinearFunctional.from_vector(w, c2) == g:
                        dominated = True
                        break
                if dominated:
                    break
            if not dominated:
                out.append(MaximalPair(w, g, agr))
    del n
    return out


@dataclass
class BksReport:
    samples: int
    exhaustive: bool
    mean_SL: float
    mean_SR: float
    mean_Ek: float
    mean_mu_SR: Fraction | float
    expected_mu_SR: Fraction
    mu_SR_stderr: float
    mu_SR_matches: bool
    per_sample: list[dict] = field(default_factory=list)


def bks_experiment(tp: TablePair, k: int, samples: int = 0, seed=None, exhaustive: bool = False) -> BksReport:
    """Random global functional f; agreement sets S_L, S_R and their k-hyperedges."""
    n = tp.n
    if exhaustive:
        fs = list(range(1 << n))
    else:
        if samples < 1:
            raise DomainError("samples must be >= 1")
        rng = check_random_state(seed)
        fs = [rng.getrandbits(n) for _ in range(samples)]
    n_r = gaussian_binomial(n, tp.dim_bot)
    upsets = {r: list(enumerate_zoom(ZoomPair(r, full_space(n)), tp.dim_top)) for r in tp.t2}
    rows = []
    for f in fs:
        s_l = {l for l, fn in tp.t1.items() if fn.coeff == LinearFunctional.from_vector(l, f).coeff}
        s_r = {r for r, fn in tp.t2.items() if fn.coeff == LinearFunctional.from_vector(r, f).coeff}
        e_k = sum(sum(1 for l in upsets[r] if l in s_l) ** k for r in s_r)
        rows.append({"f": f, "S_L": len(s_l), "S_R": len(s_r), "E_k": e_k,
                     "mu_S_R": Fraction(len(s_r), n_r)})
    mus = [row["mu_S_R"] for row in rows]
    expected = Fraction(1, 1 << tp.dim_bot)
    if exhaustive:
        mean_mu: Fraction | float = sum(mus, Fraction(0)) / len(mus)
        stderr = 0.0
        matches = mean_mu == expected
    else:
        arr = np.array([float(x) for x in mus])
        mean_mu = float(arr.mean())
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else float("inf")
        matches = abs(mean_mu - float(expected)) <= 3 * stderr + 1e-12
    return BksReport(len(fs), exhaustive,
                     float(np.mean([r["S_L"] for r in rows])),
                     float(np.mean([r["S_R"] for r in rows])),
                     float(np.mean([r["E_k"] for r in rows])),
                     mean_mu, expected, stderr, matches, rows)
