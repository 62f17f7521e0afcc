"""Weighted k-ary CSPs with explicit constraint tables, and k-dimensional matching."""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _config
from .errors import DomainError, ResourceError, ValidationError
from .seeding import check_random_state


@dataclass(frozen=True)
class Edge:
    verts: tuple[int, ...]
    weight: Fraction
    sat: frozenset[tuple[int, ...]]


@dataclass(frozen=True)
class CspInstance:
    """A weighted k-CSP.

    ``names`` and ``alphabets`` are per vertex; edges refer to vertices by
    index.  ``parts`` (optional) is a partition of the vertex indices into k
    groups.
    """

    k: int
    names: tuple[str, ...]
    alphabets: tuple[int, ...]
    edges: tuple[Edge, ...]
    parts: tuple[tuple[int, ...], ...] | None = None
    allow_repeated_vertices: bool = False
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("arity must be >= 1")
        if len(self.names) != len(self.alphabets):
            raise ValidationError("names and alphabets differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("duplicate vertex names")
        if any(a < 1 for a in self.alphabets):
            raise ValidationError("alphabets must be non-empty")
        nv = len(self.names)
        for e in self.edges:
            if len(e.verts) != self.k:
                raise ValidationError(f"edge {e.verts} does not have arity {self.k}")
            if any(not 0 <= v < nv for v in e.verts):
                raise ValidationError(f"edge {e.verts} references a missing vertex")
            if not self.allow_repeated_vertices and len(set(e.verts)) != self.k:
                raise ValidationError(f"edge {e.verts} repeats a vertex")
            if e.weight < 0:
                raise ValidationError("weights must be non-negative")
            for t in e.sat:
                if len(t) != self.k or any(not 0 <= x < self.alphabets[v] for x, v in zip(t, e.verts)):
                    raise ValidationError(f"satisfying tuple {t} is out of range")
        if self.parts is not None:
            if len(self.parts) != self.k:
                raise ValidationError("parts must have exactly k groups")
            flat = [v for p in self.parts for v in p]
            if sorted(flat) != list(range(nv)):
                raise ValidationError("parts must partition the vertex set")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @property
    def n_vertices(self) -> int:
        return len(self.names)

    @property
    def total_weight(self) -> Fraction:
        return sum((e.weight for e in self.edges), Fraction(0))

    def index(self, name: str) -> int:
        return self._index[name]

    def max_alphabet(self) -> int:
        return max(self.alphabets) if self.alphabets else 0

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for e in self.edges:
            for v in e.verts:
                deg[v] += 1
        return deg

    def part_of(self) -> list[int]:
        if self.parts is None:
            raise DomainError("instance has no parts")
        out = [0] * self.n_vertices
        for i, p in enumerate(self.parts):
            for v in p:
                out[v] = i
        return out

    def to_json(self) -> dict:
        obj = {"k": self.k,
               "vertices": [{"name": n, "alphabet": a} for n, a in zip(self.names, self.alphabets)]}
        if self.parts is not None:
            obj["parts"] = [[self.names[v] for v in p] for p in self.parts]
        obj["edges"] = [{"verts": [self.names[v] for v in e.verts],
                         "weight": {"num": e.weight.numerator, "den": e.weight.denominator},
                         "sat": [list(t) for t in sorted(e.sat)]} for e in self.edges]
        if self.allow_repeated_vertices:
            obj["allow_repeated_vertices"] = True
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "CspInstance":
        names = tuple(str(v["name"]) for v in obj["vertices"])
        alph = tuple(int(v["alphabet"]) for v in obj["vertices"])
        index = {n: i for i, n in enumerate(names)}
        try:
            edges = tuple(Edge(tuple(index[n] for n in e["verts"]),
                               _parse_weight(e.get("weight", 1)),
                               frozenset(tuple(int(x) for x in t) for t in e["sat"]))
                          for e in obj["edges"])
            parts = None
            if obj.get("parts") is not None:
                parts = tuple(tuple(index[n] for n in p) for p in obj["parts"])
        except KeyError as exc:
            raise ValidationError(f"unknown vertex {exc}") from None
        return cls(int(obj["k"]), names, alph, edges, parts, bool(obj.get("allow_repeated_vertices", False)))

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_weight(w) -> Fraction:
    if isinstance(w, dict):
        return Fraction(int(w["num"]), int(w["den"]))
    return Fraction(w)


def make_instance(k: int, alphabets: Sequence[int] | dict, edges: Iterable, parts=None,
                  names: Sequence[str] | None = None, **kw) -> CspInstance:
    """Convenience constructor; edges are (verts, sat) or (verts, sat, weight)."""
    if isinstance(alphabets, dict):
        names = tuple(alphabets)
        alphabets = tuple(alphabets.values())
    if names is None:
        names = tuple(f"v{i}" for i in range(len(alphabets)))
    idx = {n: i for i, n in enumerate(names)}
    out = []
    for e in edges:
        verts, sat = e[0], e[1]
        w = Fraction(e[2]) if len(e) > 2 else Fraction(1)
        verts = tuple(idx[v] if isinstance(v, str) else int(v) for v in verts)
        out.append(Edge(verts, w, frozenset(tuple(t) for t in sat)))
    if parts is not None:
        parts = tuple(tuple(idx[v] if isinstance(v, str) else int(v) for v in p) for p in parts)
    return CspInstance(k, tuple(names), tuple(alphabets), tuple(out), parts, **kw)


@dataclass(frozen=True)
class Assignment:
    labels: tuple[int, ...]

    def check(self, inst: CspInstance):
        if len(self.labels) != inst.n_vertices:
            raise DomainError("assignment is not total")
        if any(not 0 <= x < a for x, a in zip(self.labels, inst.alphabets)):
            raise DomainError("label out of range")


def _integer_weights(inst: CspInstance) -> tuple[list[int], int]:
    lcd = 1
    for e in inst.edges:
        lcd = lcd * e.weight.denominator // math.gcd(lcd, e.weight.denominator)
    return [int(e.weight * lcd) for e in inst.edges], lcd


def assignment_value(inst: CspInstance, a: Assignment | Sequence[int]) -> Fraction:
    labels = a.labels if isinstance(a, Assignment) else tuple(a)
    tot = inst.total_weight
    if tot == 0:
        raise DomainError("instance has zero total weight")
    good = sum((e.weight for e in inst.edges if tuple(labels[v] for v in e.verts) in e.sat), Fraction(0))
    return good / tot


def _sat_table(e: Edge, alph: Sequence[int]) -> np.ndarray:
    sizes = [alph[v] for v in e.verts]
    table = np.zeros(int(np.prod(sizes)), dtype=bool)
    for t in e.sat:
        code = 0
        for x, s in zip(t, sizes):
            code = code * s + x
        table[code] = True
    return table


def csp_value_exact(inst: CspInstance, chunk: int = 1 << 16) -> tuple[Fraction, Assignment]:
    """Exact maximum weighted fraction of satisfied constraints, with an arg-max."""
    if not inst.edges:
        raise DomainError("value of an instance without constraints is undefined")
    tot = inst.total_weight
    if tot == 0:
        raise DomainError("instance has zero total weight")
    n_assign = math.prod(inst.alphabets)
    if n_assign > _config.CSP_CAP:
        raise ResourceError(f"{n_assign} assignments exceed cap {_config.CSP_CAP}")
    weights, lcd = _integer_weights(inst)
    tables = [_sat_table(e, inst.alphabets) for e in inst.edges]
    alph = inst.alphabets
    nv = inst.n_vertices
    # vertex 0 is the most significant digit
    strides = [0] * nv
    s = 1
    for v in range(nv - 1, -1, -1):
        strides[v] = s
        s *= alph[v]
    best_val, best_id = -1, 0
    for start in range(0, n_assign, chunk):
        ids = np.arange(start, min(start + chunk, n_assign), dtype=np.int64)
        labels = [(ids // strides[v]) % alph[v] for v in range(nv)]
        score = np.zeros(ids.size, dtype=np.int64)
        for e, w, tab in zip(inst.edges, weights, tables):
            if w == 0:
                continue
            code = np.zeros(ids.size, dtype=np.int64)
            for v in e.verts:
                code = code * alph[v] + labels[v]
            score += w * tab[code]
        i = int(np.argmax(score))
        if score[i] > best_val:
            best_val, best_id = int(score[i]), int(ids[i])
    labels = tuple((best_id // strides[v]) % alph[v] for v in range(nv))
    return Fraction(best_val, lcd) / tot, Assignment(labels)


def csp_value_random_baseline(inst: CspInstance) -> Fraction:
    """Expected value of a uniformly random assignment."""
    tot = inst.total_weight
    if tot == 0:
        raise DomainError("instance has zero total weight")
    acc = Fraction(0)
    for e in inst.edges:
        if len(set(e.verts)) == len(e.verts):
            space = math.prod(inst.alphabets[v] for v in e.verts)
            acc += e.weight * Fraction(len(e.sat), space)
        else:
            uniq = sorted(set(e.verts))
            space = math.prod(inst.alphabets[v] for v in uniq)
            good = sum(1 for t in e.sat if _consistent_repeat(t, e.verts))
            acc += e.weight * Fraction(good, space)
    return acc / tot


def _consistent_repeat(t, verts) -> bool:
    seen = {}
    for x, v in zip(t, verts):
        if seen.setdefault(v, x) != x:
            return False
    return True


def csp_value_local_search(inst: CspInstance, restarts: int = 10, seed=None,
                           max_rounds: int = 1000) -> tuple[Fraction, Assignment]:
    """Best single-vertex hill climbing over several random starts."""
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    if not inst.edges:
        raise DomainError("value of an instance without constraints is undefined")
    rng = check_random_state(seed)
    weights, lcd = _integer_weights(inst)
    incident: list[list[int]] = [[] for _ in range(inst.n_vertices)]
    for i, e in enumerate(inst.edges):
        for v in set(e.verts):
            incident[v].append(i)

    def edge_ok(i, labels):
        e = inst.edges[i]
        return tuple(labels[v] for v in e.verts) in e.sat

    best_score, best_labels = -1, None
    for _ in range(restarts):
        labels = [rng.randrange(a) for a in inst.alphabets]
        for _ in range(max_rounds):
            improved = False
            for v in range(inst.n_vertices):
                cur = labels[v]
                base = sum(weights[i] for i in incident[v] if edge_ok(i, labels))
                best_x, best_gain = cur, 0
                for x in range(inst.alphabets[v]):
                    if x == cur:
                        continue
                    labels[v] = x
                    gain = sum(weights[i] for i in incident[v] if edge_ok(i, labels)) - base
                    if gain > best_gain:
                        best_x, best_gain = x, gain
                labels[v] = best_x
                improved |= best_x != cur
            if not improved:
                break
        score = sum(w for i, w in enumerate(weights) if edge_ok(i, labels))
        if score > best_score:
            best_score, best_labels = score, tuple(labels)
    return Fraction(best_score, lcd) / inst.total_weight, Assignment(best_labels)


def unweight(inst: CspInstance) -> CspInstance:
    """Scale weights to coprime integers and replace each edge by that many unit copies."""
    weights, _ = _integer_weights(inst)
    g = 0
    for w in weights:
        g = math.gcd(g, w)
    g = g or 1
    edges = []
    for e, w in zip(inst.edges, weights):
        edges.extend([Edge(e.verts, Fraction(1), e.sat)] * (w // g))
    return CspInstance(inst.k, inst.names, inst.alphabets, tuple(edges), inst.parts,
                       inst.allow_repeated_vertices)


@dataclass
class StructuralReport:
    is_k_partite: bool
    part_degrees: list[list[int]] | None
    is_partwise_regular: bool
    is_fully_regular: bool
    max_degree: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def structural_report(inst: CspInstance) -> StructuralReport:
    deg = inst.degrees()
    fully = len(set(deg)) <= 1
    if inst.parts is None:
        return StructuralReport(False, None, False, fully, max(deg, default=0))
    part = inst.part_of()
    kpart = all(sorted(part[v] for v in e.verts) == list(range(inst.k)) for e in inst.edges)
    pdeg = [sorted(deg[v] for v in p) for p in inst.parts]
    partwise = kpart and all(len(set(d)) <= 1 for d in pdeg)
    return StructuralReport(kpart, pdeg, partwise, kpart and fully, max(deg, default=0))


def random_instance(n_vertices: int, n_edges: int, k: int, R: int, rng, density: float = 0.5,
                    parts: bool = False) -> CspInstance:
    """Uniform random k-CSP; each constraint keeps each tuple with prob ``density``."""
    rng = check_random_state(rng)
    if n_vertices < k:
        raise DomainError("need at least k vertices")
    alph = tuple([R] * n_vertices)
    all_tuples = [tuple(t) for t in np.ndindex(*([R] * k))]
    edges = []
    part_sets = None
    if parts:
        assign = [i % k for i in range(n_vertices)]
        part_sets = tuple(tuple(v for v in range(n_vertices) if assign[v] == i) for i in range(k))
    for _ in range(n_edges):
        if part_sets:
            verts = tuple(rng.choice(p) for p in part_sets)
        else:
            verts = tuple(rng.sample(range(n_vertices), k))
        sat = frozenset(t for t in all_tuples if rng.random() < density)
        if not sat:
            sat = frozenset([all_tuples[rng.randrange(len(all_tuples))]])
        edges.append(Edge(verts, Fraction(1), sat))
    return CspInstance(k, tuple(f"v{i}" for i in range(n_vertices)), alph, tuple(edges), part_sets)


@dataclass(frozen=True)
class MatchingInstance:
    k: int
    parts: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.parts) != self.k:
            raise ValidationError("need exactly k parts")
        owner = {}
        for i, p in enumerate(self.parts):
            for v in p:
                if v in owner:
                    raise ValidationError(f"vertex {v} is in two parts")
                owner[v] = i
        for e in self.edges:
            if not 1 <= len(e) <= self.k:
                raise ValidationError(f"hyperedge {e} has bad size")
            try:
                touched = [owner[v] for v in e]
            except KeyError as exc:
                raise ValidationError(f"unknown vertex {exc}") from None
            if len(set(touched)) != len(touched):
                raise ValidationError(f"hyperedge {e} touches a part twice")

    def to_json(self) -> dict:
        return {"k": self.k, "parts": [list(p) for p in self.parts], "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj: dict) -> "MatchingInstance":
        return cls(int(obj["k"]), tuple(tuple(map(str, p)) for p in obj["parts"]),
                   tuple(tuple(map(str, e)) for e in obj["edges"]))


def matching_value_exact(m: MatchingInstance) -> int:
    """Maximum number of pairwise disjoint hyperedges, by branch and bound."""
    if len(m.edges) > _config.MATCHING_CAP:
        raise ResourceError(f"{len(m.edges)} hyperedges exceed cap {_config.MATCHING_CAP}")
    edges = sorted((frozenset(e) for e in m.edges), key=len)
    # greedy lower bound
    used: set = set()
    best = 0
    for e in edges:
        if not e & used:
            used |= e
            best += 1

    def rec(i: int, used: frozenset, size: int):
        nonlocal best
        if size + (len(edges) - i) <= best:
            return
        if i == len(edges):
            best = max(best, size)
            return
        e = edges[i]
        if not e & used:
            rec(i + 1, used | e, size + 1)
        rec(i + 1, used, size)

    rec(0, frozenset(), 0)
    return best


def degree_counter(inst: CspInstance) -> Counter:
    return Counter(inst.degrees())
