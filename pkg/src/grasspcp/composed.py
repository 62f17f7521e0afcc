"""The composed (k+1)-CSP built from a 3Lin instance: vertices, cliques, sampler and provers.

Everything lives in F_2^X with variable j at bit ``n_vars - 1 - j``.  A left
vertex is a pair (question id, S) where S = L + H_U is stored canonically; the
canonical L of a vertex is the complement basis of H_U inside S.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import _config
from .csp import CspInstance, Edge
from .errors import DomainError, ResourceError
from .f2la import (F2Subspace, ZoomPair, canonicalize, complement_basis, contains, coordinate_mask,
                   coordinate_subspace, enumerate_grassmann, enumerate_zoom, full_space, gaussian_binomial,
                   rank, sample_subspace, sample_superspace, subspace_intersect, subspace_sum,
                   trivial_intersection)
from .grasstest import LinearFunctional, all_functionals, find_maximal_pairs
from .outerpcp import Gap3LinInstance, ProverStrategy, gen_3lin
from .seeding import child_seed
from .stats import clopper_pearson


@dataclass(frozen=True)
class ComposedConfig:
    J: int
    ell2: int
    ellbot: int
    k: int
    r: int = 0
    C: float | None = None

    def __post_init__(self):
        if self.J < 1 or self.k < 1 or self.r < 0:
            raise DomainError("need J >= 1, k >= 1, r >= 0")
        if not 0 <= self.ellbot < self.ell2 <= 2 * self.J:
            raise DomainError("need 0 <= ellbot < ell2 <= 2J")

    @property
    def threshold(self) -> float:
        return self.C if self.C is not None else 2.0 ** -self.ell2 / 5

    def to_json(self) -> dict:
        return {"J": self.J, "ell2": self.ell2, "ellbot": self.ellbot, "k": self.k, "r": self.r,
                "C": self.threshold}


def admissible(inst: Gap3LinInstance, eqs: Sequence[int]) -> bool:
    """Distinct, variable-disjoint equations with no cross pair sharing an equation."""
    if len(set(eqs)) != len(eqs):
        return False
    vsets = [set(inst.equations[e][0]) for e in eqs]
    seen: set[int] = set()
    for vs in vsets:
        if seen & vs:
            return False
        seen |= vs
    pairs = set()
    for vs, _ in inst.equations:
        pairs.update(itertools.combinations(vs, 2))
    for a, b in itertools.combinations(range(len(eqs)), 2):
        for x in vsets[a]:
            for y in vsets[b]:
                if (min(x, y), max(x, y)) in pairs:
                    return False
    return True


def enumerate_questions(inst: Gap3LinInstance, J: int, cap: int | None = None
                        ) -> tuple[list[tuple[int, ...]], float]:
    """All admissible ordered J-tuples of equations and the fraction dropped."""
    total = inst.n_eqs ** J
    cap = _config.ENUM_CAP if cap is None else cap
    if total > cap:
        raise ResourceError(f"{total} question tuples exceed cap {cap}")
    out = [u for u in itertools.product(range(inst.n_eqs), repeat=J) if admissible(inst, u)]
    return out, 1 - len(out) / total if total else 0.0


@dataclass(frozen=True)
class SideCondition:
    u_id: int
    equations: tuple[int, ...]
    coords: tuple[int, ...]
    space: F2Subspace
    H: F2Subspace
    psi: LinearFunctional
    gens: tuple[tuple[int, int], ...]

    @property
    def var_mask(self) -> int:
        return self.space.combine((1 << self.space.dim) - 1)

    def honors(self, f: LinearFunctional) -> bool:
        return all(f(x) == b for x, b in self.gens)


@dataclass(frozen=True, order=True)
class VertexA:
    u: int
    S: F2Subspace = field(compare=False)
    key: tuple[int, ...] = field(default=(), repr=False)

    @staticmethod
    def of(u: int, S: F2Subspace) -> "VertexA":
        return VertexA(u, S, S.basis)

    def __hash__(self):
        return hash((self.u, self.key))

    def __eq__(self, other):
        return isinstance(other, VertexA) and self.u == other.u and self.key == other.key


class ComposedModel:
    """Vertex sets, side conditions and the clique relation for one instance."""

    def __init__(self, inst: Gap3LinInstance, cfg: ComposedConfig,
                 questions: Sequence[tuple[int, ...]] | None = None):
        self.inst = inst
        self.cfg = cfg
        self.n = inst.n_vars
        if questions is None:
            questions, self.dropped_fraction = enumerate_questions(inst, cfg.J)
        else:
            self.dropped_fraction = None
        if not questions:
            raise DomainError("no admissible questions")
        self.questions = [tuple(u) for u in questions]
        self.index = {u: i for i, u in enumerate(self.questions)}
        self.sides = [self._side(i, u) for i, u in enumerate(self.questions)]
        masks = [s.var_mask for s in self.sides]
        self.neighbors = [[j for j, m in enumerate(masks) if m & masks[i]] for i in range(len(masks))]
        self._cliques: dict[VertexA, tuple[VertexA, ...]] = {}
        self._vertices: dict[int, list[VertexA]] = {}

    def _side(self, i: int, u: tuple[int, ...]) -> SideCondition:
        if not admissible(self.inst, u) or len(u) != self.cfg.J:
            raise DomainError(f"question {u} is not admissible")
        coords = tuple(sorted(x for e in u for x in self.inst.equations[e][0]))
        space = coordinate_subspace(self.n, coords)
        gens = tuple((coordinate_mask(self.n, self.inst.equations[e][0]), self.inst.equations[e][1]) for e in u)
        H = canonicalize([g for g, _ in gens], self.n)
        psi = LinearFunctional.from_spanning_values(H, gens)
        return SideCondition(i, u, coords, space, H, psi, gens)

    # vertices -----------------------------------------------------------

    @property
    def dim_S(self) -> int:
        return self.cfg.ell2 + self.cfg.J

    def vertices_of(self, u: int) -> list[VertexA]:
        if u not in self._vertices:
            side = self.sides[u]
            self._vertices[u] = [VertexA.of(u, s) for s in
                                 enumerate_zoom(ZoomPair(side.H, side.space), self.dim_S)]
        return self._vertices[u]

    def all_vertices_a(self, cap: int | None = None) -> list[VertexA]:
        cap = _config.ENUM_CAP if cap is None else cap
        count = len(self.questions) * gaussian_binomial(2 * self.cfg.J, self.cfg.ell2)
        if count > cap:
            raise ResourceError(f"{count} left vertices exceed cap {cap}")
        return [a for u in range(len(self.questions)) for a in self.vertices_of(u)]

    def all_vertices_b(self, cap: int | None = None) -> list[F2Subspace]:
        cap = _config.ENUM_CAP if cap is None else cap
        count = len(self.questions) * gaussian_binomial(3 * self.cfg.J, self.cfg.ellbot)
        if count > cap:
            raise ResourceError(f"{count} right vertices exceed cap {cap}")
        seen = {}
        for side in self.sides:
            for r in enumerate_zoom(ZoomPair(canonicalize([], self.n), side.space), self.cfg.ellbot):
                seen.setdefault(r.basis, r)
        return [seen[k] for k in sorted(seen)]

    def canonical_L(self, a: VertexA) -> F2Subspace:
        return canonicalize(complement_basis(self.sides[a.u].H, a.S), self.n)

    def vertex_from_L(self, u: int, L: F2Subspace) -> VertexA:
        side = self.sides[u]
        if L.dim != self.cfg.ell2 or not contains(side.space, L) or not trivial_intersection(L, side.H):
            raise DomainError("L must be an ell2-space of F_2^U meeting H_U trivially")
        return VertexA.of(u, subspace_sum(L, side.H))

    # alphabets ----------------------------------------------------------

    def sigma1(self, a: VertexA) -> list[LinearFunctional]:
        """Functionals on S honoring the side conditions, indexed by their bits on canonical L."""
        side = self.sides[a.u]
        L = complement_basis(side.H, a.S)
        base = [(h, side.psi(h)) for h in side.H.basis]
        out = []
        for bits in range(1 << len(L)):
            vals = [(v, (bits >> (len(L) - 1 - i)) & 1) for i, v in enumerate(L)]
            out.append(LinearFunctional.from_spanning_values(a.S, base + vals))
        return out

    def label_a(self, a: VertexA, f: LinearFunctional) -> int:
        L = complement_basis(self.sides[a.u].H, a.S)
        lab = 0
        for v in L:
            lab = (lab << 1) | f(v)
        return lab

    @staticmethod
    def label_b(R: F2Subspace, f: LinearFunctional) -> int:
        lab = 0
        for b in R.basis:
            lab = (lab << 1) | f(b)
        return lab

    # cliques ------------------------------------------------------------

    def related(self, a: VertexA, b: VertexA) -> bool:
        ha, hb = self.sides[a.u].H, self.sides[b.u].H
        return subspace_sum(a.S, hb) == subspace_sum(b.S, ha)

    def clique_of(self, a: VertexA) -> tuple[VertexA, ...]:
        """All vertices related to ``a``, sorted."""
        if a in self._cliques:
            return self._cliques[a]
        side = self.sides[a.u]
        members = []
        for j in self.neighbors[a.u]:
            other = self.sides[j]
            only = side.var_mask & ~other.var_mask
            # projection onto coordinates outside U' must collapse to that of H_U
            if only and rank([b & only for b in a.S.basis]) != rank([g & only for g, _ in side.gens]):
                continue
            K = subspace_sum(a.S, other.H)
            top = subspace_intersect(K, other.space)
            if top.dim < self.dim_S:
                continue
            for s in enumerate_zoom(ZoomPair(other.H, top), self.dim_S):
                if subspace_sum(s, side.H) == K:
                    members.append(VertexA.of(j, s))
        members.sort(key=lambda v: (v.u, v.key))
        out = tuple(members)
        for m in out:
            self._cliques.setdefault(m, out)
        return out

    def clique_id(self, a: VertexA) -> tuple:
        first = self.clique_of(a)[0]
        return (first.u, first.key)

    def clique_extend(self, f: LinearFunctional, source: VertexA, target: VertexA) -> LinearFunctional:
        src, tgt = self.sides[source.u], self.sides[target.u]
        if f.domain != source.S:
            raise DomainError("functional does not live on the source vertex")
        if not src.honors(f):
            raise DomainError("functional violates the source side conditions")
        if source == target:
            return f
        if not self.related(source, target):
            raise DomainError("source and target are not in the same clique")
        space = subspace_sum(source.S, tgt.H)
        g = LinearFunctional.from_spanning_values(space, [(b, f(b)) for b in source.S.basis] + list(tgt.gens))
        return g.restrict(target.S)

    def to_json(self) -> dict:
        return {"cfg": self.cfg.to_json(), "questions": [list(u) for u in self.questions]}


def same_clique(model: ComposedModel, a: VertexA, b: VertexA) -> bool:
    return model.related(a, b)


def clique_of(model: ComposedModel, a: VertexA) -> tuple:
    return model.clique_id(a)


def clique_extend(model: ComposedModel, f: LinearFunctional, source: VertexA, target: VertexA) -> LinearFunctional:
    return model.clique_extend(f, source, target)


# constraint sampler ---------------------------------------------------------

@dataclass(frozen=True)
class ConstraintSample:
    u: int
    R: F2Subspace
    anchors: tuple[VertexA, ...]
    members: tuple[VertexA, ...]


def sample_constraint(model: ComposedModel, rng: random.Random) -> ConstraintSample:
    cfg = model.cfg
    u = rng.randrange(len(model.questions))
    side = model.sides[u]
    while True:
        R = sample_subspace(model.n, cfg.ellbot, rng, side.space)
        if trivial_intersection(R, side.H):
            break
    base = subspace_sum(R, side.H)
    anchors = tuple(VertexA.of(u, sample_superspace(base, model.dim_S, rng, side.space)) for _ in range(cfg.k))
    members = tuple(rng.choice(model.clique_of(a)) for a in anchors)
    return ConstraintSample(u, R, anchors, members)


def constraint_passes(model: ComposedModel, c: ConstraintSample, t1, t2) -> bool:
    g = t2[c.R]
    for anchor, member in zip(c.anchors, c.members):
        f = model.clique_extend(t1[member], member, anchor)
        if not f.agrees_on(g, c.R):
            return False
    return True


class _LazyTable:
    def __init__(self, fn):
        self.fn = fn
        self.cache = {}

    def __getitem__(self, key):
        if key not in self.cache:
            self.cache[key] = self.fn(key)
        return self.cache[key]


def sigma_vector(n: int, sigma: Sequence[int]) -> int:
    return sum(1 << (n - 1 - j) for j, bit in enumerate(sigma) if bit)


def planted_tables(model: ComposedModel, sigma: Sequence[int]):
    """Honest tables from a global assignment.

    On questions whose equations sigma satisfies, T1 is sigma restricted; on
    the rest it follows the side conditions on H_U and sigma on canonical L.
    T2 is sigma restricted.
    """
    s = sigma_vector(model.n, sigma)
    sat = [all(f(x) == b for x, b in side.gens) for side in model.sides
           for f in [LinearFunctional.from_vector(side.H, s)]]

    def t1(a: VertexA) -> LinearFunctional:
        if sat[a.u]:
            return LinearFunctional.from_vector(a.S, s)
        side = model.sides[a.u]
        L = complement_basis(side.H, a.S)
        pairs = list(side.gens) + [(v, _par(v & s)) for v in L]
        return LinearFunctional.from_spanning_values(a.S, pairs)

    def t2(R: F2Subspace) -> LinearFunctional:
        return LinearFunctional.from_vector(R, s)

    return _LazyTable(t1), _LazyTable(t2), sat


def _par(x: int) -> int:
    return bin(x).count("1") & 1


def slot_unsat_marginals(inst: Gap3LinInstance, questions: Sequence[tuple[int, ...]],
                         sigma: Sequence[int]) -> list[float]:
    """Per position i, the fraction of questions whose i-th equation sigma violates."""
    ok = inst.satisfied(sigma)
    J = len(questions[0])
    return [sum(not ok[u[i]] for u in questions) / len(questions) for i in range(J)]


def completeness_experiment(inst: Gap3LinInstance, cfg: ComposedConfig, sigma: Sequence[int], trials: int,
                            seed, model: ComposedModel | None = None, level: float = 0.99) -> dict:
    """Pass rate of honest tables built from sigma.

    Two bounds are reported: 1 - J*eps1 with eps1 the violated-equation
    fraction, and the same union bound taken over the admissible questions
    actually sampled (1 - sum of per-position violation rates).  The second
    is the one asserted; they coincide when admissibility drops nothing.
    """
    model = model or ComposedModel(inst, cfg)
    t1, t2, sat = planted_tables(model, sigma)
    rng = random.Random(child_seed(seed, "completeness"))
    wins = sum(constraint_passes(model, sample_constraint(model, rng), t1, t2) for _ in range(trials))
    est = clopper_pearson(wins, trials, level)
    eps1 = 1 - inst.value_of(sigma)
    slots = slot_unsat_marginals(inst, model.questions, sigma)
    bound = 1 - cfg.J * eps1
    bound_q = 1 - sum(slots)
    return {**est.to_dict(), "eps1": eps1, "bound": bound, "slot_unsat": slots,
            "bound_questions": bound_q, "sat_question_fraction": sum(sat) / len(sat),
            "asserted": True, "holds": est.ci_high >= bound_q,
            "holds_equation_bound": est.ci_high >= bound}


# exact consistency and clique repair -----------------------------------------

def _anchor_law(model: ComposedModel, u: int, R: F2Subspace) -> list[VertexA]:
    side = model.sides[u]
    return [VertexA.of(u, s) for s in enumerate_zoom(ZoomPair(subspace_sum(R, side.H), side.space), model.dim_S)]


def _bottoms(model: ComposedModel, u: int) -> list[F2Subspace]:
    side = model.sides[u]
    return [R for R in enumerate_zoom(ZoomPair(canonicalize([], model.n), side.space), model.cfg.ellbot)
            if trivial_intersection(R, side.H)]


def exact_consistency(model: ComposedModel, t1, t2) -> tuple[Fraction, list[Fraction]]:
    """Exact pass probability of the sampler, overall and conditioned on each question."""
    k = model.cfg.k
    per_u = []
    for u in range(len(model.questions)):
        acc = Fraction(0)
        Rs = _bottoms(model, u)
        for R in Rs:
            g = t2[R]
            anchors = _anchor_law(model, u, R)
            q = Fraction(0)
            for a in anchors:
                cl = model.clique_of(a)
                good = sum(model.clique_extend(t1[m], m, a).agrees_on(g, R) for m in cl)
                q += Fraction(good, len(cl))
            acc += (q / len(anchors)) ** k
        per_u.append(acc / len(Rs))
    return sum(per_u, Fraction(0)) / len(per_u), per_u


def collision_probability(model: ComposedModel) -> Fraction:
    """Exact probability that two of the k sampled anchors share a clique."""
    k = model.cfg.k
    acc = Fraction(0)
    for u in range(len(model.questions)):
        Rs = _bottoms(model, u)
        sub = Fraction(0)
        for R in Rs:
            ids = [model.clique_id(a) for a in _anchor_law(model, u, R)]
            m = len(ids)
            distinct = sum(1 for t in itertools.product(ids, repeat=k) if len(set(t)) == k)
            sub += 1 - Fraction(distinct, m ** k)
        acc += sub / len(Rs)
    return acc / len(model.questions)


def is_clique_consistent(model: ComposedModel, t1) -> bool:
    for a in model.all_vertices_a():
        for b in model.clique_of(a):
            if model.clique_extend(t1[a], a, b) != t1[b]:
                return False
    return True


def make_clique_consistent(model: ComposedModel, t1, seed) -> dict:
    """Pick a uniform representative per clique and propagate its value."""
    rng = random.Random(child_seed(seed, "clique_repair"))
    out: dict[VertexA, LinearFunctional] = {}
    for a in model.all_vertices_a():
        if a in out:
            continue
        cl = model.clique_of(a)
        rep = cl[rng.randrange(len(cl))]
        for b in cl:
            out[b] = model.clique_extend(t1[rep], rep, b)
    return out


def random_table_a(model: ComposedModel, seed) -> dict:
    """Uniformly random side-condition-honoring T1."""
    rng = random.Random(child_seed(seed, "random_t1"))
    out = {}
    for a in model.all_vertices_a():
        opts = model.sigma1(a)
        out[a] = opts[rng.randrange(len(opts))]
    return out


def random_table_b(model: ComposedModel, seed) -> dict:
    rng = random.Random(child_seed(seed, "random_t2"))
    return {R: LinearFunctional.from_vector(R, rng.getrandbits(model.n)) for R in model.all_vertices_b()}


# materialized CSP ------------------------------------------------------------

def _name_a(model: ComposedModel, a: VertexA) -> str:
    return "A" + str(a.u) + ":" + ",".join(format(b, "x") for b in a.S.basis)


def _name_b(R: F2Subspace) -> str:
    return "B:" + ",".join(format(b, "x") for b in R.basis)


def build_composed_csp(inst: Gap3LinInstance, cfg: ComposedConfig, seed, n_constraint_samples: int,
                       model: ComposedModel | None = None) -> tuple[CspInstance, dict]:
    """Materialize the (k+1)-CSP with empirical constraint weights and a sidecar description."""
    model = model or ComposedModel(inst, cfg)
    A = model.all_vertices_a()
    B = model.all_vertices_b()
    names = [_name_a(model, a) for a in A] + [_name_b(R) for R in B]
    alph = [1 << cfg.ell2] * len(A) + [1 << cfg.ellbot] * len(B)
    idx_a = {a: i for i, a in enumerate(A)}
    idx_b = {R.basis: len(A) + i for i, R in enumerate(B)}
    rng = random.Random(child_seed(seed, "build_composed"))
    groups: dict[tuple, int] = {}
    for _ in range(n_constraint_samples):
        c = sample_constraint(model, rng)
        verts = tuple(idx_a[m] for m in c.members) + (idx_b[c.R.basis],)
        # label tuples (f'_1..f'_k, h) that pass
        per_i = []
        for anchor, member in zip(c.anchors, c.members):
            table = {}
            for lab, f in enumerate(model.sigma1(member)):
                ext = model.clique_extend(f, member, anchor).restrict(c.R)
                table.setdefault(model.label_b(c.R, ext), []).append(lab)
            per_i.append(table)
        sat = []
        for h in range(1 << cfg.ellbot):
            for labs in itertools.product(*(t.get(h, []) for t in per_i)):
                sat.append(tuple(labs) + (h,))
        key = (verts, frozenset(sat))
        groups[key] = groups.get(key, 0) + 1
    edges = tuple(Edge(v, Fraction(w), s) for (v, s), w in sorted(groups.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]))))
    out = CspInstance(cfg.k + 1, tuple(names), tuple(alph), edges, None, allow_repeated_vertices=True)
    sidecar = {"cfg": cfg.to_json(), "seed": seed, "n_constraint_samples": n_constraint_samples,
               "questions": [list(u) for u in model.questions],
               "clique_index": {_name_a(model, a): _name_a(model, model.clique_of(a)[0]) for a in A}}
    return out, sidecar


# prover strategies ------------------------------------------------------------

def _local_to_global(v: int, coords: Sequence[int], n: int) -> int:
    m = len(coords)
    return sum(1 << (n - 1 - x) for j, x in enumerate(coords) if v >> (m - 1 - j) & 1)


def _global_to_local(v: int, coords: Sequence[int], n: int) -> int:
    m = len(coords)
    return sum(1 << (m - 1 - j) for j, x in enumerate(coords) if v >> (n - 1 - x) & 1)


def _question_rng(seed, tag: str, parts) -> random.Random:
    return random.Random(child_seed(seed, tag + repr(parts)))


class FirstProver(ProverStrategy):
    """Decodes a zoom-out function pair around the shared advice and answers its random extension."""

    def __init__(self, model: ComposedModel, t1, good: set[int], seed, max_codim: int | None = None):
        self.model = model
        self.t1 = t1
        self.good = good
        self.seed = seed
        self.max_codim = model.cfg.r if max_codim is None else max_codim
        self._cache: dict = {}

    def decode(self, u: int, Q: F2Subspace):
        key = (u, Q.basis)
        if key in self._cache:
            return self._cache[key]
        m, side = self.model, self.model.sides[u]
        best = None
        if trivial_intersection(Q, side.H):
            base = subspace_sum(Q, side.H)
            for dw in range(side.space.dim, max(base.dim, side.space.dim - self.max_codim) - 1, -1):
                for W in enumerate_zoom(ZoomPair(base, side.space), dw):
                    counts: dict[tuple, list] = {}
                    total = 0
                    for L in enumerate_zoom(ZoomPair(Q, W), m.cfg.ell2):
                        total += 1
                        if trivial_intersection(L, side.H):
                            a = VertexA.of(u, subspace_sum(L, side.H))
                            counts.setdefault(a.key, [a, 0])[1] += 1
                    if total == 0:
                        continue
                    for g in all_functionals(W):
                        if not side.honors(g):
                            continue
                        hit = sum(c for a, c in counts.values() if g.restrict(a.S) == self.t1[a])
                        cand = (Fraction(hit, total), W.dim, -g.coeff)
                        if best is None or cand > best[0]:
                            best = (cand, g)
        out = None
        if best is not None and best[0][0] >= Fraction(m.cfg.threshold).limit_denominator(10**12):
            out = best[1]
        self._cache[key] = out
        return out

    def first(self, equations, U, advice):
        u = self.model.index.get(tuple(equations))
        if u is None or u not in self.good:
            return None
        side = self.model.sides[u]
        rng = _question_rng(self.seed, "first", (equations, advice))
        r1 = rng.randint(0, len(advice))
        n = self.model.n
        Q = canonicalize([_local_to_global(v, side.coords, n) for v in advice[:r1]], n)
        g = self.decode(u, Q)
        if g is None:
            return None
        ext = g.extend(side.space, rng)
        return {x: ext(1 << (n - 1 - x)) for x in U}


class SecondProver(ProverStrategy):
    """Builds the induced table on F_2^V and answers a maximal zoom-out pair's random extension."""

    def __init__(self, model: ComposedModel, t1, seed, selection: str = "best",
                 max_codim: int | None = None):
        if selection not in ("random", "best"):
            raise DomainError("selection must be 'random' or 'best'")
        self.model = model
        self.t1 = t1
        self.seed = seed
        self.selection = selection
        self.max_codim = model.cfg.r if max_codim is None else max_codim
        self._tables: dict = {}
        self._pairs: dict = {}

    def induced_table(self, V: tuple[int, ...]) -> dict:
        """Local-coordinate table L -> T1[L + H_U] restricted to L, for some admissible U containing V."""
        if V in self._tables:
            return self._tables[V]
        m = self.model
        n, nv = m.n, len(V)
        vmask = coordinate_mask(n, V)
        hosts = [u for u, side in enumerate(m.sides) if vmask & ~side.var_mask == 0]
        table = {}
        if nv >= m.cfg.ell2 and hosts:
            for L in enumerate_grassmann(nv, m.cfg.ell2):
                Lg = canonicalize([_local_to_global(b, V, n) for b in L.basis], n)
                for u in hosts:
                    if trivial_intersection(Lg, m.sides[u].H):
                        a = VertexA.of(u, subspace_sum(Lg, m.sides[u].H))
                        f = self.t1[a].restrict(Lg)
                        table[L] = LinearFunctional.from_basis_values(L, [f(_local_to_global(b, V, n)) for b in L.basis])
                        break
        self._tables[V] = table
        return table

    def second(self, V, advice):
        m = self.model
        rng = _question_rng(self.seed, "second", (V, advice))
        r1 = rng.randint(0, len(advice))
        table = self.induced_table(tuple(V))
        if not table:
            return None
        Q = canonicalize(list(advice[:r1]), len(V))
        key = (tuple(V), Q.basis)
        if key not in self._pairs:
            C = m.cfg.threshold / (8 * 5 ** m.cfg.r)
            self._pairs[key] = find_maximal_pairs(table, Q, C, 1 / 5, self.max_codim, m.cfg.ell2)
        pairs = self._pairs[key]
        if not pairs:
            return None
        if self.selection == "best":
            pick = max(pairs, key=lambda p: (p.agreement, p.w.dim, -p.g.coeff))
        else:
            pick = pairs[rng.randrange(len(pairs))]
        ext = pick.g.extend(full_space(len(V)), rng)
        return {x: ext(1 << (len(V) - 1 - j)) for j, x in enumerate(V)}


def extract_prover_strategies(model: ComposedModel, t1, t2, seed, selection: str = "best"
                              ) -> tuple[FirstProver, SecondProver, dict]:
    """Outer-game provers from clique-consistent composed tables."""
    eps, per_u = exact_consistency(model, t1, t2)
    good = {u for u, p in enumerate(per_u) if p > 0 and p >= eps / 2}
    info = {"consistency": float(eps), "good_questions": sorted(good),
            "good_fraction": len(good) / len(per_u), "p": [float(p) for p in per_u]}
    return (FirstProver(model, t1, good, child_seed(seed, "first")),
            SecondProver(model, t1, child_seed(seed, "second"), selection), info)


def toy_instance(n_vars: int, n_eqs: int, J: int, min_questions: int, eta: float, seed, tries: int = 200,
                 balanced: bool = False):
    """A random 3Lin instance with at least ``min_questions`` admissible questions.

    With ``balanced`` the planted assignment must also violate each question
    position at rate at most ``eta``, so the equation-level union bound
    carries over to the admissible questions.
    """
    for t in range(tries):
        inst, sigma = gen_3lin(n_vars, n_eqs, eta, child_seed(seed, f"toy{t}"))
        qs, _ = enumerate_questions(inst, J)
        if len(qs) < min_questions:
            continue
        if balanced and max(slot_unsat_marginals(inst, qs, sigma)) > eta:
            continue
        return inst, sigma, qs
    raise ResourceError("no instance with enough admissible questions")
