"""3Lin instances, the smooth parallel-repetition game with advice, and covering experiments."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import _config
from .errors import DomainError, ResourceError, ValidationError
from .f2la import (F2Subspace, ZoomPair, contains, coordinate_mask, coordinate_subspace,
                   enumerate_grassmann, enumerate_zoom, gaussian_binomial, sample_superspace,
                   sample_subspace, subspace_intersect)
from .seeding import check_random_state, child_seed
from .stats import clopper_pearson, mcdiarmid_half_width

MAX_VAR_DEGREE = 10


@dataclass(frozen=True)
class Gap3LinInstance:
    n_vars: int
    equations: tuple[tuple[tuple[int, int, int], int], ...]

    def __post_init__(self):
        deg = [0] * self.n_vars
        seen: dict[tuple[int, int], int] = {}
        for idx, (vs, rhs) in enumerate(self.equations):
            if len(vs) != 3 or len(set(vs)) != 3 or tuple(sorted(vs)) != tuple(vs):
                raise ValidationError(f"equation {idx} needs three sorted distinct variables")
            if any(not 0 <= v < self.n_vars for v in vs):
                raise ValidationError(f"equation {idx} references a missing variable")
            if rhs not in (0, 1):
                raise ValidationError("right-hand sides must be bits")
            for v in vs:
                deg[v] += 1
                if deg[v] > MAX_VAR_DEGREE:
                    raise ValidationError(f"variable {v} is in more than {MAX_VAR_DEGREE} equations")
            for pair in itertools.combinations(vs, 2):
                if pair in seen:
                    raise ValidationError(f"equations {seen[pair]} and {idx} share two variables")
                seen[pair] = idx

    @property
    def n_eqs(self) -> int:
        return len(self.equations)

    def satisfied(self, sigma: Sequence[int]) -> list[bool]:
        return [(sigma[a] ^ sigma[b] ^ sigma[c]) == rhs for (a, b, c), rhs in self.equations]

    def value_of(self, sigma: Sequence[int]) -> float:
        ok = self.satisfied(sigma)
        return sum(ok) / len(ok)

    def to_json(self) -> dict:
        return {"n_vars": self.n_vars,
                "equations": [{"vars": list(vs), "rhs": rhs} for vs, rhs in self.equations]}

    @classmethod
    def from_json(cls, obj: dict) -> "Gap3LinInstance":
        eqs = tuple((tuple(int(v) for v in e["vars"]), int(e["rhs"])) for e in obj["equations"])
        return cls(int(obj["n_vars"]), eqs)


def gen_3lin(n_vars: int, n_eqs: int, eta: float, seed, max_attempts: int = 10000
             ) -> tuple[Gap3LinInstance, tuple[int, ...]]:
    """Random 3Lin consistent with a planted assignment, then exactly round(eta*n_eqs) rhs flipped."""
    if not 0 <= eta <= 1:
        raise DomainError("eta must lie in [0, 1]")
    if n_vars < 3:
        raise DomainError("need at least three variables")
    rng = random.Random(child_seed(seed, "gen_3lin"))
    sigma = tuple(rng.getrandbits(1) for _ in range(n_vars))
    deg = [0] * n_vars
    pairs: set[tuple[int, int]] = set()
    triples = []
    attempts = 0
    while len(triples) < n_eqs:
        attempts += 1
        if attempts > max_attempts:
            raise ResourceError("could not place equations under the degree and overlap limits")
        vs = tuple(sorted(rng.sample(range(n_vars), 3)))
        if any(deg[v] >= MAX_VAR_DEGREE for v in vs):
            continue
        ps = list(itertools.combinations(vs, 2))
        if any(p in pairs for p in ps):
            continue
        pairs.update(ps)
        for v in vs:
            deg[v] += 1
        triples.append(vs)
    n_flip = round(eta * n_eqs)
    flips = set(rng.sample(range(n_eqs), n_flip))
    eqs = tuple((vs, (sigma[vs[0]] ^ sigma[vs[1]] ^ sigma[vs[2]]) ^ (i in flips))
                for i, vs in enumerate(triples))
    return Gap3LinInstance(n_vars, eqs), sigma


@dataclass(frozen=True)
class OuterConfig:
    J: int
    beta: float
    r: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.J < 1:
            raise DomainError("J must be >= 1")
        if not 0 <= self.beta <= 1:
            raise DomainError("beta must lie in [0, 1]")
        if self.r < 0:
            raise DomainError("r must be >= 0")


@dataclass(frozen=True)
class QuestionPair:
    """One round of the game.

    Advice vectors are ints over the coordinate lists ``U`` and ``V``
    (first coordinate is the most significant bit).
    """

    equations: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]
    v_blocks: tuple[tuple[int, ...], ...]
    U: tuple[int, ...]
    V: tuple[int, ...]
    advice_u: tuple[int, ...]
    advice_v: tuple[int, ...]

    def check(self):
        for ub, vb in zip(self.blocks, self.v_blocks):
            if not (vb == ub or (len(vb) == 1 and vb[0] in ub)):
                raise ValidationError("bad question block")
        for u, v in zip(self.advice_u, self.advice_v):
            if lift(v, self.V, self.U) != u:
                raise ValidationError("advice lift mismatch")


def lift(v: int, V: Sequence[int], U: Sequence[int]) -> int:
    """Zero-fill a vector over coordinates V to coordinates U."""
    pos = {x: i for i, x in enumerate(U)}
    nv, nu = len(V), len(U)
    out = 0
    for j, x in enumerate(V):
        if v >> (nv - 1 - j) & 1:
            out |= 1 << (nu - 1 - pos[x])
    return out


def restrict_vector(u: int, U: Sequence[int], V: Sequence[int]) -> int:
    pos = {x: i for i, x in enumerate(U)}
    nv, nu = len(V), len(U)
    out = 0
    for j, x in enumerate(V):
        if u >> (nu - 1 - pos[x]) & 1:
            out |= 1 << (nv - 1 - j)
    return out


def sample_v_blocks(blocks, beta: float, rng: random.Random) -> tuple[tuple[int, ...], ...]:
    return tuple(b if rng.random() >= beta else (rng.choice(b),) for b in blocks)


def sample_question(inst: Gap3LinInstance, cfg: OuterConfig, rng) -> QuestionPair:
    rng = check_random_state(rng)
    eqs = tuple(rng.randrange(inst.n_eqs) for _ in range(cfg.J))
    blocks = tuple(inst.equations[e][0] for e in eqs)
    v_blocks = sample_v_blocks(blocks, cfg.beta, rng)
    U = tuple(sorted({x for b in blocks for x in b}))
    V = tuple(sorted({x for b in v_blocks for x in b}))
    adv_v = tuple(rng.getrandbits(len(V)) for _ in range(cfg.r))
    adv_u = tuple(lift(v, V, U) for v in adv_v)
    return QuestionPair(eqs, blocks, v_blocks, U, V, adv_u, adv_v)


class ProverStrategy:
    """Answers are dicts variable -> bit over the variables of the question."""

    def first(self, equations: tuple[int, ...], U: tuple[int, ...], advice: tuple[int, ...]) -> dict:
        raise NotImplementedError

    def second(self, V: tuple[int, ...], advice: tuple[int, ...]) -> dict:
        raise NotImplementedError


class PlantedProver(ProverStrategy):
    def __init__(self, sigma: Sequence[int]):
        self.sigma = tuple(sigma)

    def first(self, equations, U, advice):
        return {x: self.sigma[x] for x in U}

    def second(self, V, advice):
        return {x: self.sigma[x] for x in V}


class ComplementProver(PlantedProver):
    def first(self, equations, U, advice):
        return {x: 1 - self.sigma[x] for x in U}

    def second(self, V, advice):
        return {x: 1 - self.sigma[x] for x in V}


def referee(inst: Gap3LinInstance, q: QuestionPair, a1: dict | None, a2: dict | None) -> bool:
    """Accept iff the answers agree on V and the first satisfies the question's equations.

    ``None`` is the give-up answer and always loses.
    """
    if a1 is None or a2 is None:
        return False
    if set(a1) != set(q.U) or set(a2) != set(q.V):
        raise DomainError("prover answer does not cover its question")
    if any(a1[x] != a2[x] for x in q.V):
        return False
    for e in q.equations:
        (a, b, c), rhs = inst.equations[e]
        if a1[a] ^ a1[b] ^ a1[c] != rhs:
            return False
    return True


def play_game(inst: Gap3LinInstance, cfg: OuterConfig, s1: ProverStrategy, s2: ProverStrategy,
              trials: int, seed, level: float = 0.99):
    """Monte-Carlo win rate with a Clopper-Pearson interval."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = random.Random(child_seed(seed, "play_game"))
    wins = 0
    for _ in range(trials):
        q = sample_question(inst, cfg, rng)
        wins += referee(inst, q, s1.first(q.equations, q.U, q.advice_u), s2.second(q.V, q.advice_v))
    return clopper_pearson(wins, trials, level)


def assignment_strategy_search(inst: Gap3LinInstance, J: int, candidates: int, seed) -> dict:
    """Best value (sat fraction)^J of a global-assignment strategy over random starts plus hill climbing."""
    rng = random.Random(child_seed(seed, "strategy_search"))
    occurs: list[list[int]] = [[] for _ in range(inst.n_vars)]
    for i, (vs, _) in enumerate(inst.equations):
        for v in vs:
            occurs[v].append(i)
    best = 0.0
    for _ in range(candidates):
        sigma = [rng.getrandbits(1) for _ in range(inst.n_vars)]
        ok = inst.satisfied(sigma)
        improved = True
        while improved:
            improved = False
            for v in range(inst.n_vars):
                gain = sum(-1 if ok[i] else 1 for i in occurs[v])
                if gain > 0:
                    sigma[v] ^= 1
                    for i in occurs[v]:
                        ok[i] = not ok[i]
                    improved = True
        best = max(best, sum(ok) / len(ok))
    return {"best_sat_fraction": best, "best_game_value": best ** J}


# covering experiments ------------------------------------------------------

def _coords(blocks) -> tuple[int, ...]:
    return tuple(sorted({x for b in blocks for x in b}))


def v_distribution(blocks, beta: float) -> list[tuple[Fraction, tuple[int, ...]]]:
    """All outcomes of the smooth V sampler over a fixed U, with exact probabilities."""
    beta = Fraction(beta)
    per_block = []
    for b in blocks:
        opts = [(1 - beta, tuple(b))] if beta < 1 else []
        if beta > 0:
            opts += [(beta / len(b), (x,)) for x in b]
        per_block.append(opts)
    out: dict[tuple[int, ...], Fraction] = {}
    for combo in itertools.product(*per_block):
        p = math.prod((c[0] for c in combo), start=Fraction(1))
        V = tuple(sorted({x for c in combo for x in c[1]}))
        out[V] = out.get(V, Fraction(0)) + p
    return sorted(((p, V) for V, p in out.items()), key=lambda t: t[1])


def _support(s: F2Subspace) -> int:
    m = 0
    for b in s.basis:
        m |= b
    return m


@dataclass
class CoveringReport:
    estimate: float
    ci_low: float
    ci_high: float
    exact: float | None
    bound: float
    asserted: bool
    holds: bool
    samples: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _finish(vals: list[float], exact, bound, level, assert_when) -> CoveringReport:
    n = len(vals)
    est = sum(vals) / n
    h = mcdiarmid_half_width(n, level)
    lo, hi = max(0.0, est - h), min(1.0, est + h)
    asserted = assert_when
    holds = lo <= bound and (exact is None or exact <= bound + 1e-12)
    return CoveringReport(est, lo, hi, exact, bound, asserted, holds, n)


def covering_sd_advice(U, r1: int, beta: float, samples: int, seed, level: float = 0.99,
                       exact: bool = True) -> CoveringReport:
    """Distance between a uniform r1-dim subspace of F_2^U and one lifted from F_2^V.

    ``U`` is the list of equation variable blocks.  The lifted density of a
    subspace only depends on its support, which gives both the exact value
    (when Grass(|U|, r1) is enumerable) and the unbiased sample statistic
    E_{Q~D'}[(1 - D(Q)/D'(Q))^+].
    """
    coords = _coords(U)
    n = len(coords)
    J = len(U)
    if not 0 <= r1 <= J:
        raise DomainError("need 0 <= r1 <= J so every V can host an r1-space")
    vdist = v_distribution(U, beta)
    masks = [(p, coordinate_mask(n, [coords.index(x) for x in V]), len(V)) for p, V in vdist]
    d_uniform = Fraction(1, gaussian_binomial(n, r1))

    @lru_cache(maxsize=None)
    def d_lift(supp: int) -> Fraction:
        return sum((p / gaussian_binomial(k, r1) for p, m, k in masks if supp & ~m == 0), Fraction(0))

    ex = None
    if exact:
        total = gaussian_binomial(n, r1)
        if total <= _config.ENUM_CAP:
            ex = float(sum((abs(d_uniform - d_lift(_support(q))) for q in enumerate_grassmann(n, r1)),
                           Fraction(0)) / 2)
    rng = random.Random(child_seed(seed, "covering_advice"))
    vals = []
    for _ in range(samples):
        Vb = sample_v_blocks(U, beta, rng)
        V = _coords(Vb)
        q = sample_subspace(n, r1, rng, coordinate_subspace(n, [coords.index(x) for x in V]))
        dl = d_lift(_support(q))
        vals.append(float(max(Fraction(0), 1 - d_uniform / dl)))
    bound = beta * math.sqrt(J) * 2 ** (r1 + 4)
    return _finish(vals, ex, bound, level, True)


def _zoom_lift_weights(U, q: F2Subspace, w: F2Subspace, l2: int, beta: float):
    coords = _coords(U)
    n = len(coords)
    r = q.dim
    out = []
    for p, V in v_distribution(U, beta):
        m = coordinate_mask(n, [coords.index(x) for x in V])
        if _support(q) & ~m:
            continue
        if len(V) < l2:
            continue
        out.append((p / gaussian_binomial(len(V) - r, l2 - r), m))
    return out


def covering_sd_zoom(U, Q: F2Subspace, W: F2Subspace, beta: float, l2: int, samples: int, seed,
                     level: float = 0.99) -> CoveringReport:
    """Distance between uniform L in Zoom[Q, W] and L lifted from F_2^V conditioned on Q <= L <= W.

    ``l2`` is the dimension of L.  Needs Zoom[Q, W] enumerable to normalize
    the conditioned lifted law.
    """
    if not contains(W, Q):
        raise DomainError("Q must lie inside W")
    z = ZoomPair(Q, W)
    total = z.zoom_count(l2)
    if total == 0:
        raise DomainError("no subspace of that dimension between Q and W")
    if total > _config.ZOOM_CAP:
        raise ResourceError(f"{total} zoom members exceed cap {_config.ZOOM_CAP}")
    weights = _zoom_lift_weights(U, Q, W, l2, beta)

    def raw(L: F2Subspace) -> Fraction:
        s = _support(L)
        return sum((p for p, m in weights if s & ~m == 0), Fraction(0))

    members = list(enumerate_zoom(z, l2))
    raws = {L.basis: raw(L) for L in members}
    Z = sum(raws.values())
    if Z == 0:
        raise DomainError("lifted law never lands in the zoom")
    d_uniform = Fraction(1, total)
    ex = float(sum((abs(d_uniform - v / Z) for v in raws.values()), Fraction(0)) / 2)

    coords = _coords(U)
    n = len(coords)
    rng = random.Random(child_seed(seed, "covering_zoom"))
    vals = []
    attempts = 0
    while len(vals) < samples:
        attempts += 1
        if attempts > 1000 * samples:
            raise ResourceError("rejection sampling of the lifted zoom law stalled")
        V = _coords(sample_v_blocks(U, beta, rng))
        fv = coordinate_subspace(n, [coords.index(x) for x in V])
        if not contains(fv, Q) or fv.dim < l2:
            continue
        L = sample_superspace(Q, l2, rng, fv)
        if not contains(W, L):
            continue
        vals.append(float(max(Fraction(0), 1 - d_uniform * Z / raws[L.basis])))
    J = len(U)
    rp = W.codim
    bound = math.sqrt(beta) * J ** 0.25 * 2 ** (l2 + 5) * 2 ** (rp * (l2 - Q.dim) + 5)
    rep = _finish(vals, ex, bound, level, bound < 1)
    rep.extra = {"zoom_size": total, "codim_W": rp, "dim_Q": Q.dim}
    return rep


def covering_zoom_fraction(U, r: int, rprime: int, l2: int, beta: float, n_q: int, w_per_q: int,
                           samples: int, seed, level: float = 0.99) -> dict:
    """Fraction of sampled r-dim Q whose sampled codim-r' zoom-outs all meet the bound."""
    coords = _coords(U)
    n = len(coords)
    rng = random.Random(child_seed(seed, "zoom_fraction"))
    good = 0
    for qi in range(n_q):
        Q = sample_subspace(n, r, rng)
        ok = True
        for wi in range(w_per_q):
            W = sample_superspace(Q, n - rprime, rng)
            rep = covering_sd_zoom(U, Q, W, beta, l2, samples, child_seed(seed, f"q{qi}w{wi}"), level)
            ok &= rep.exact <= rep.bound
        good += ok
    est = clopper_pearson(good, n_q, level)
    target = 1 - math.sqrt(beta) * len(U) ** 0.25
    return {**est.to_dict(), "target": target, "holds": est.ci_high >= target}


def retain_codim_experiment(U, W: F2Subspace, beta: float, samples: int, seed, level: float = 0.99) -> dict:
    """Rate at which dim(W n F_2^V) differs from |V| - codim(W)."""
    coords = _coords(U)
    n = len(coords)
    if W.ambient_dim != n:
        raise DomainError("W must live in F_2^U")
    s = W.codim

    def fails(V) -> bool:
        fv = coordinate_subspace(n, [coords.index(x) for x in V])
        return subspace_intersect(W, fv).dim != len(V) - s

    exact = float(sum((p for p, V in v_distribution(U, beta) if fails(V)), Fraction(0)))
    rng = random.Random(child_seed(seed, "retain_codim"))
    bad = sum(fails(_coords(sample_v_blocks(U, beta, rng))) for _ in range(samples))
    est = clopper_pearson(bad, samples, level)
    bound = 2 ** (s + 3) * beta ** 2 * len(U)
    return {**est.to_dict(), "exact": exact, "bound": bound, "asserted": True,
            "holds": est.ci_low <= bound}


def random_codim_subspace(n: int, s: int, rng) -> F2Subspace:
    rng = check_random_state(rng)
    return sample_subspace(n, n - s, rng)
