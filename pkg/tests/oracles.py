"""Brute-force reference checks shared by the unit and acceptance tests."""

import random
from fractions import Fraction

from grasspcp.f2la import ZoomPair, contains, enumerate_zoom, full_space, sample_subspace, sample_superspace
from grasspcp.grasstest import LinearFunctional


def zoom_agreement(t, q, w, g, l):
    members = list(enumerate_zoom(ZoomPair(q, w), l))
    hits = sum(1 for s in members if s in t and t[s] == g.restrict(s))
    return Fraction(hits, len(members))


def maximal_clauses_hold(t, q, pair, C, s, max_codim, l):
    """Both defining clauses of a maximal pair, rechecked from scratch."""
    C, s = Fraction(C), Fraction(s)
    if zoom_agreement(t, q, pair.w, pair.g, l) < C:
        return False
    n = q.ambient_dim
    for dim in range(pair.w.dim + 1, n + 1):
        if n - dim > max_codim:
            continue
        for w2 in enumerate_zoom(ZoomPair(pair.w, full_space(n)), dim):
            for g2 in pair.g.all_extensions(w2):
                if zoom_agreement(t, q, w2, g2, l) >= s * C:
                    return False
    return True


def planted_zoom_table(n, l, q_dim, w_dim, seed):
    """Random table on Grass(n, l) that equals a global functional on Zoom[Q, W0]."""
    rng = random.Random(seed)
    q = sample_subspace(n, q_dim, rng)
    w0 = sample_superspace(q, w_dim, rng)
    f = rng.getrandbits(n)
    t = {}
    for s in enumerate_zoom(ZoomPair(q, full_space(n)), l):
        if contains(w0, s):
            t[s] = LinearFunctional.from_vector(s, f)
        else:
            t[s] = LinearFunctional.from_vector(s, rng.getrandbits(n))
    return t, q, w0, LinearFunctional.from_vector(w0, f)


def clique_relation_report(model):
    """Exhaustive reflexive/symmetric/transitive check of the clique relation."""
    A = model.all_vertices_a()
    out = {"reflexive": True, "symmetric": True, "transitive": True, "ids_match": True, "vertices": len(A)}
    for a in A:
        out["reflexive"] &= model.related(a, a)
        cl = set(model.clique_of(a))
        for b in A:
            r = model.related(a, b)
            out["symmetric"] &= r == model.related(b, a)
            out["ids_match"] &= r == (model.clique_id(a) == model.clique_id(b))
            out["ids_match"] &= r == (b in cl)
        for b in cl:
            for c in model.clique_of(b):
                out["transitive"] &= model.related(a, c)
    return out


def extension_uniqueness(model):
    """clique_extend gives the only target functional sharing an extension with the source."""
    from grasspcp.errors import DomainError
    from grasspcp.f2la import subspace_sum
    from grasspcp.grasstest import LinearFunctional

    checked = 0
    for a in model.all_vertices_a():
        for b in model.clique_of(a):
            both = subspace_sum(a.S, b.S)
            for f in model.sigma1(a):
                g = model.clique_extend(f, a, b)
                if not model.sides[b.u].honors(g):
                    return False, checked
                ok = []
                for cand in model.sigma1(b):
                    try:
                        LinearFunctional.from_spanning_values(
                            both, [(v, f(v)) for v in a.S.basis] + [(v, cand(v)) for v in b.S.basis])
                    except DomainError:
                        continue
                    ok.append(cand)
                if ok != [g]:
                    return False, checked
                checked += 1
    return True, checked


ACCEPTANCE_LINES = []


def criterion(number, ok, detail=""):
    """Record and print one acceptance line, then fail the test if ``ok`` is false."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    assert ok, line
