"""Transformations that make a CSP k-partite, partwise-regular and fully regular."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .csp import CspInstance, Edge, structural_report
from .errors import DomainError
from .seeding import check_random_state, child_seed


def k_partitize(inst: CspInstance) -> CspInstance:
    """Copy every vertex k times and spread each constraint over all k! part orders."""
    k = inst.k
    names = tuple(f"{n}#{i}" for n in inst.names for i in range(k))
    alph = tuple(a for a in inst.alphabets for _ in range(k))
    parts = tuple(tuple(v * k + i for v in range(inst.n_vertices)) for i in range(k))
    edges = []
    for e in inst.edges:
        for perm in itertools.permutations(range(k)):
            edges.append(Edge(tuple(v * k + i for v, i in zip(e.verts, perm)), e.weight, e.sat))
    return CspInstance(k, names, alph, tuple(edges), parts)


def duplicate_constraints(inst: CspInstance, d: int) -> CspInstance:
    if d < 1:
        raise DomainError("d must be >= 1")
    edges = tuple(e for e in inst.edges for _ in range(d))
    return CspInstance(inst.k, inst.names, inst.alphabets, edges, inst.parts,
                       inst.allow_repeated_vertices)


@dataclass(frozen=True)
class BipartiteGraph:
    n_left: int
    n_right: int
    degree: int
    adjacency: tuple[tuple[int, int], ...]

    def biadjacency(self) -> np.ndarray:
        a = np.zeros((self.n_left, self.n_right))
        for x, y in self.adjacency:
            a[x, y] += 1
        return a

    def is_regular(self) -> bool:
        left = [0] * self.n_left
        right = [0] * self.n_right
        for x, y in self.adjacency:
            left[x] += 1
            right[y] += 1
        return set(left) <= {self.degree} and set(right) <= {self.degree}

    def has_parallel_edges(self) -> bool:
        return len(set(self.adjacency)) != len(self.adjacency)


@dataclass(frozen=True)
class SpectralReport:
    top_singular: float
    second_singular: float
    method: str
    iterations: int
    residual: float


def second_singular_value(a: np.ndarray, max_iter: int = 20000, tol: float = 1e-12,
                          seed: int = 0) -> SpectralReport:
    """Second singular value of a biregular biadjacency matrix.

    Power iteration on A^T A restricted to the complement of the all-ones
    vector (the top right singular vector of a regular bipartite graph).
    Falls back to a dense symmetric eigensolver if the iteration has not
    converged.
    """
    n = a.shape[1]
    top = float(np.linalg.norm(a @ np.ones(n)) / math.sqrt(n)) if n else 0.0
    if n <= 1:
        return SpectralReport(top, 0.0, "trivial", 0, 0.0)
    b = a.T @ a
    ones = np.ones(n) / math.sqrt(n)
    gen = np.random.default_rng(seed)
    x = gen.standard_normal(n)
    x -= ones * (ones @ x)
    nx = np.linalg.norm(x)
    if nx == 0:
        return SpectralReport(top, 0.0, "power", 0, 0.0)
    x /= nx
    lam = 0.0
    residual = float("inf")
    it = 0
    for it in range(1, max_iter + 1):
        y = b @ x
        y -= ones * (ones @ y)
        lam_new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny < 1e-300:
            lam, residual = 0.0, 0.0
            break
        residual = float(np.linalg.norm(y - lam_new * x))
        x = y / ny
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)) and residual < 1e-10:
            lam = lam_new
            break
        lam = lam_new
    if residual < 1e-8:
        return SpectralReport(top, math.sqrt(max(lam, 0.0)), "power", it, residual)
    p = np.eye(n) - np.outer(ones, ones)
    lam = float(np.linalg.eigvalsh(p @ b @ p)[-1])
    return SpectralReport(top, math.sqrt(max(lam, 0.0)), "eigh-fallback", it, 0.0)


def _random_regular(n: int, d: int, rng) -> BipartiteGraph | None:
    used: set[tuple[int, int]] = set()
    adj = []
    for _ in range(d):
        for _attempt in range(200):
            perm = list(range(n))
            rng.shuffle(perm)
            pairs = [(x, perm[x]) for x in range(n)]
            if not any(p in used for p in pairs):
                break
        else:
            return None
        used.update(pairs)
        adj.extend(pairs)
    return BipartiteGraph(n, n, d, tuple(sorted(adj)))


def build_bipartite_expander(n: int, d: int, seed, candidates: int = 8) -> tuple[BipartiteGraph, SpectralReport]:
    """A d-regular bipartite graph on n + n vertices with small second singular value."""
    if not 1 <= d <= n:
        raise DomainError(f"need 1 <= d <= n, got n={n}, d={d}")
    if d == n:
        g = BipartiteGraph(n, n, d, tuple((x, y) for x in range(n) for y in range(n)))
        return g, SpectralReport(float(n), 0.0, "complete", 0, 0.0)
    rng = check_random_state(seed)
    best = None
    for _ in range(candidates):
        g = _random_regular(n, d, rng)
        if g is None:
            continue
        rep = second_singular_value(g.biadjacency())
        if best is None or rep.second_singular < best[1].second_singular - 1e-12:
            best = (g, rep)
    if best is None:
        # union of cyclic shifts is always simple
        adj = tuple(sorted((x, (x + s) % n) for s in range(d) for x in range(n)))
        g = BipartiteGraph(n, n, d, adj)
        best = (g, second_singular_value(g.biadjacency()))
    return best


@dataclass
class ReductionReport:
    operation: str
    input_digest: str
    output_digest: str
    input_vertices: int
    output_vertices: int
    input_edges: int
    output_edges: int
    checks: dict = field(default_factory=dict)
    lambda_max: float | None = None
    soundness_slack: float | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def partwise_regularize(inst: CspInstance, d: int, i: int, seed) -> tuple[CspInstance, ReductionReport]:
    """Replace each part-i vertex v by a cloud of deg(v) copies wired through an expander.

    Every part-i copy ends with degree d, other degrees are multiplied by d
    and the edge count by d.
    """
    if inst.parts is None or not structural_report(inst).is_k_partite:
        raise DomainError("input must be k-partite")
    if not 0 <= i < inst.k:
        raise DomainError("part index out of range")
    deg = inst.degrees()
    part = inst.part_of()
    incident: dict[int, list[int]] = {v: [] for v in inst.parts[i]}
    for idx, e in enumerate(inst.edges):
        for pos, v in enumerate(e.verts):
            if part[v] == i:
                incident[v].append(idx)
    for v in inst.parts[i]:
        # isolated vertices constrain nothing and get an empty cloud
        if 0 < deg[v] < d:
            raise DomainError(f"vertex {inst.names[v]} has degree {deg[v]} < {d}")

    names: list[str] = []
    alph: list[int] = []
    remap: dict[int, int] = {}
    clouds: dict[int, list[int]] = {}
    for v in range(inst.n_vertices):
        if part[v] == i:
            clouds[v] = []
            for u in range(deg[v]):
                clouds[v].append(len(names))
                names.append(f"{inst.names[v]}@{u}")
                alph.append(inst.alphabets[v])
        else:
            remap[v] = len(names)
            names.append(inst.names[v])
            alph.append(inst.alphabets[v])
    new_parts = []
    for j, p in enumerate(inst.parts):
        if j == i:
            new_parts.append(tuple(c for v in p for c in clouds[v]))
        else:
            new_parts.append(tuple(remap[v] for v in p))

    lam_max = 0.0
    edges = []
    for v in inst.parts[i]:
        if deg[v] == 0:
            continue
        g, rep = build_bipartite_expander(deg[v], d, child_seed(_seed_int(seed), f"H:{inst.names[v]}"))
        lam_max = max(lam_max, rep.second_singular)
        for a, u in g.adjacency:
            e = inst.edges[incident[v][a]]
            verts = tuple(clouds[v][u] if w == v else remap[w] for w in e.verts)
            edges.append(Edge(verts, e.weight, e.sat))
    out = CspInstance(inst.k, tuple(names), tuple(alph), tuple(edges), tuple(new_parts))

    new_deg = out.degrees()
    out_part = out.part_of()
    checks = {
        "part_i_degree_d": all(new_deg[c] == d for v in inst.parts[i] for c in clouds[v]),
        "other_degrees_times_d": all(new_deg[remap[v]] == d * deg[v] for v in remap),
        "edges_times_d": len(out.edges) == d * len(inst.edges),
        "k_partite": structural_report(out).is_k_partite,
    }
    del out_part
    uniform = len({e.weight for e in inst.edges}) <= 1
    R = inst.max_alphabet()
    slack = lam_max * math.sqrt(R ** (inst.k - 1)) / d if uniform else None
    report = ReductionReport("partwise_regularize", inst.digest(), out.digest(), inst.n_vertices,
                             out.n_vertices, len(inst.edges), len(out.edges), checks, lam_max, slack)
    return out, report


def _seed_int(seed) -> int:
    if isinstance(seed, int):
        return seed
    return check_random_state(seed).getrandbits(64)


def fully_regularize(inst: CspInstance, c: Sequence[int]) -> tuple[CspInstance, ReductionReport]:
    """Blow each part-j vertex into d_j * c_j copies and take every combination of copies."""
    rep = structural_report(inst)
    if not rep.is_partwise_regular:
        raise DomainError("input must be partwise-regular and k-partite")
    if len(c) != inst.k or any(x < 1 for x in c):
        raise DomainError("need k multipliers, each >= 1")
    d = [pd[0] if pd else 0 for pd in rep.part_degrees]
    part = inst.part_of()
    names: list[str] = []
    alph: list[int] = []
    cloud: dict[int, list[int]] = {}
    for v in range(inst.n_vertices):
        j = part[v]
        cloud[v] = []
        for a in range(d[j]):
            for b in range(c[j]):
                cloud[v].append(len(names))
                names.append(f"{inst.names[v]}:{a}:{b}")
                alph.append(inst.alphabets[v])
    parts = tuple(tuple(x for v in p for x in cloud[v]) for p in inst.parts)
    edges = []
    for e in inst.edges:
        for combo in itertools.product(*(cloud[v] for v in e.verts)):
            edges.append(Edge(tuple(combo), e.weight, e.sat))
    out = CspInstance(inst.k, tuple(names), tuple(alph), tuple(edges), parts)
    prod = math.prod(cj * dj for cj, dj in zip(c, d))
    new_deg = out.degrees()
    out_part = out.part_of()
    checks = {
        "degree_formula": all(new_deg[x] == prod // c[out_part[x]] for x in range(out.n_vertices)),
        "k_partite": structural_report(out).is_k_partite,
    }
    return out, ReductionReport("fully_regularize", inst.digest(), out.digest(), inst.n_vertices,
                                out.n_vertices, len(inst.edges), len(out.edges), checks)


def random_partwise_regular(part_sizes: Sequence[int], degrees: Sequence[int], R: int, rng,
                            density: float = 0.5) -> CspInstance:
    """k-partite instance where every part-j vertex has degree degrees[j].

    Requires part_sizes[j] * degrees[j] to be the same for every part.
    """
    rng = check_random_state(rng)
    k = len(part_sizes)
    totals = {s * dg for s, dg in zip(part_sizes, degrees)}
    if len(totals) != 1:
        raise DomainError("part_size * degree must agree across parts")
    n_edges = totals.pop()
    offsets = [sum(part_sizes[:j]) for j in range(k)]
    slots = []
    for j in range(k):
        col = [offsets[j] + v for v in range(part_sizes[j]) for _ in range(degrees[j])]
        rng.shuffle(col)
        slots.append(col)
    all_tuples = list(itertools.product(range(R), repeat=k))
    edges = []
    for t in range(n_edges):
        sat = frozenset(x for x in all_tuples if rng.random() < density) or frozenset([all_tuples[0]])
        edges.append(Edge(tuple(slots[j][t] for j in range(k)), Fraction(1), sat))
    nv = sum(part_sizes)
    parts = tuple(tuple(range(offsets[j], offsets[j] + part_sizes[j])) for j in range(k))
    return CspInstance(k, tuple(f"p{j}_{v - offsets[j]}" for j in range(k)
                                for v in range(offsets[j], offsets[j] + part_sizes[j])),
                       tuple([R] * nv), tuple(edges), parts)
