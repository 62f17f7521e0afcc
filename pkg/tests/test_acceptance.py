"""Acceptance criteria 1-13, one printed pass/fail line each."""

import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from oracles import (clique_relation_report, criterion, extension_uniqueness, maximal_clauses_hold,
                     planted_zoom_table)
from grasspcp import bilinear, cli, composed, grasstest, outerpcp, reduce
from grasspcp.csp import MatchingInstance, csp_value_exact, make_instance, random_instance, structural_report
from grasspcp.f2la import (F2Matrix, ZoomPair, enumerate_grassmann, enumerate_zoom, full_space,
                           gaussian_binomial, sample_subspace, sample_superspace)
from grasspcp.grasstest import LinearFunctional, SubspaceFamily, TablePair


def test_criterion_01_grassmann_counts():
    ok = True
    for n in range(7):
        for l in range(n + 1):
            ok &= sum(1 for _ in enumerate_grassmann(n, l)) == gaussian_binomial(n, l)
    rng = random.Random(1)
    zooms = 0
    for _ in range(40):
        q = sample_subspace(6, rng.randint(0, 3), rng)
        w = sample_superspace(q, rng.randint(q.dim, 6), rng)
        for l in range(q.dim, w.dim + 1):
            ok &= sum(1 for _ in enumerate_zoom(ZoomPair(q, w), l)) == gaussian_binomial(w.dim - q.dim, l - q.dim)
            zooms += 1
    criterion(1, ok, f"Grass(n,l) for n<=6 and {zooms} zoom strata match the q-binomials")


def test_criterion_02_test_completeness():
    f = 0b101101
    probs = {k: grasstest.run_consistency_test(TablePair.from_globals(6, 2, 1, f), k).probability
             for k in (1, 2, 3)}
    mism = grasstest.run_consistency_test(TablePair.from_globals(6, 2, 1, f, f ^ 0b000100), 1).probability
    want = Fraction(gaussian_binomial(5, 1), gaussian_binomial(6, 1))
    ok = all(p == 1 for p in probs.values()) and mism == want == Fraction(31, 63)
    criterion(2, ok, f"global tables pass {sorted(set(map(str, probs.values())))} for k=1..3, mismatched pass {mism}")


def test_criterion_03_hyperedges_vs_inner_product():
    rng = random.Random(3)
    ok = True
    worst = Fraction(0)
    for _ in range(50):
        rfam = SubspaceFamily.random(6, 1, rng.uniform(0.1, 0.9), rng)
        lfam = SubspaceFamily.random(6, 2, rng.uniform(0.1, 0.9), rng)
        rep = grasstest.count_hyperedges(rfam, lfam, 2)
        ok &= rep.asserted and rep.inequality_holds and rep.identity_holds
        if rep.inner_product:
            worst = max(worst, rep.probability / (2 * rep.inner_product))
    full = grasstest.count_hyperedges(SubspaceFamily.full(6, 1), SubspaceFamily.full(6, 2), 2)
    empty = grasstest.count_hyperedges(SubspaceFamily(6, 1, frozenset()), SubspaceFamily(6, 2, frozenset()), 2)
    ok &= full.inequality_holds and full.probability == 1
    ok &= empty.probability == 0 == empty.inner_product
    criterion(3, ok, f"50 random pairs + extremes, max edges/(2<TF^k,G>) = {float(worst):.4f}")


def test_criterion_04_lift_preserves_pseudorandomness():
    rng = random.Random(4)
    ok = True
    checked = 0
    for _ in range(30):
        fam = SubspaceFamily.random(5, 2, rng.uniform(0.05, 0.6), rng)
        lifted = grasstest.lift_indicator(fam)
        for r in (1, 2):
            eps, _ = grasstest.family_pseudorandomness(fam, r)
            good, _, _ = bilinear.is_pseudorandom(lifted, r, 2 * eps)
            ok &= good
            checked += 1
    criterion(4, ok, f"{checked} (family, r) pairs lifted to (r, 2eps)-pseudorandom")


def _span_invariant(n, m, seed):
    rng = random.Random(seed)
    labels = {}

    def pred(mat):
        from grasspcp.f2la import canonicalize
        s = canonicalize([mat.column(j) for j in range(m)], n)
        if s not in labels:
            labels[s] = rng.random() < 0.5
        return labels[s]
    return bilinear.from_predicate(n, m, pred)


def test_criterion_05_operator_spectra():
    ok = True
    m = 2
    worst_ratio = 0.0
    for n in (4, 5):
        ranks = bilinear.rank_table(n, m)
        for c in (1, 2):
            eig = bilinear.phi_eigenvalues(n, m, c)
            for s in range(1 << (n * m)):
                chi = bilinear.character(F2Matrix.from_flat_index(s, n, m))
                ok &= bool(np.allclose(bilinear.apply_Phi(chi, c).values, float(eig[s]) * chi.values,
                                       rtol=0, atol=1e-12))
                bound = bilinear.phi_eigen_bound(int(ranks[s]), c, n)
                ok &= abs(float(eig[s])) <= bound
                worst_ratio = max(worst_ratio, abs(float(eig[s])) / bound)
    max_cross = 0.0
    for seed in range(20):
        n = 4 + seed % 2
        f = _span_invariant(n, m, seed)
        ok &= bilinear.is_basis_invariant(f)
        parts = bilinear.level_decomposition(f)
        tp = [bilinear.apply_T(p, 1) for p in parts]
        for i in range(len(parts)):
            for j in range(i):
                max_cross = max(max_cross, abs(bilinear.inner(tp[i], tp[j])))
            ok &= tp[i].norm_sq() <= bilinear.phi_eigen_bound(i, 1, n) * parts[i].norm_sq() + 1e-12
    ok &= max_cross <= 1e-9
    criterion(5, ok, f"eigen-identity exact, max |lambda|/bound = {worst_ratio:.3f}, "
                     f"max cross term {max_cross:.1e}")


def test_criterion_06_parseval():
    rng = np.random.default_rng(6)
    ok = True
    worst = 0.0
    for n, m in [(1, 1), (2, 2), (3, 2), (2, 4), (3, 3), (4, 3), (3, 4), (6, 2), (2, 6), (4, 2)]:
        for _ in range(3):
            f = bilinear.BilinearFn(n, m, rng.normal(size=1 << (n * m)))
            parts = bilinear.level_decomposition(f)
            e1 = abs(sum(p.norm_sq() for p in parts) - f.norm_sq())
            e2 = float(np.max(np.abs(sum(p.values for p in parts) - f.values)))
            worst = max(worst, e1, e2)
    ok = worst <= 1e-9
    criterion(6, ok, f"max deviation {worst:.1e} over shapes up to 12 bits")


@pytest.fixture(scope="module")
def toy_model():
    inst, sigma, qs = composed.toy_instance(12, 5, 2, 6, 0.0, 1)
    return inst, sigma, composed.ComposedModel(inst, composed.ComposedConfig(2, 2, 1, 2), qs)


def test_criterion_07_clique_structure(toy_model):
    _, _, model = toy_model
    rep = clique_relation_report(model)
    uniq, checked = extension_uniqueness(model)
    ok = len(model.questions) >= 6 and all(rep[k] for k in ("reflexive", "symmetric", "transitive", "ids_match"))
    ok &= uniq
    criterion(7, ok, f"{len(model.questions)} questions, {rep['vertices']} vertices, "
                     f"{checked} unique extensions")


def test_criterion_08_composed_completeness(toy_model):
    cfg = composed.ComposedConfig(2, 2, 1, 2)
    inst0, sigma0, model0 = toy_model
    r0 = composed.completeness_experiment(inst0, cfg, sigma0, 10000, 8, model0)
    inst1, sigma1, qs1 = composed.toy_instance(40, 30, 2, 50, 0.1, 1, balanced=True)
    r1 = composed.completeness_experiment(inst1, cfg, sigma1, 10000, 8, composed.ComposedModel(inst1, cfg, qs1))
    ok = True
    for r in (r0, r1):
        ok &= r["level"] == 0.99 and r["ci_high"] >= r["bound"] and r["holds"]
    criterion(8, ok, f"eps1=0: {r0['estimate']:.4f} >= {r0['bound']:.2f}; "
                     f"eps1={r1['eps1']:.2f}: {r1['estimate']:.4f} (ci_high {r1['ci_high']:.4f}) >= {r1['bound']:.2f}")


def test_criterion_09_outer_completeness():
    inst, sigma = outerpcp.gen_3lin(200, 200, 0.05, 9)
    eps = 1 - inst.value_of(sigma)
    ok = abs(eps - 0.05) < 1e-12
    parts = []
    for J in (2, 4):
        cfg = outerpcp.OuterConfig(J, 0.1, seed=9)
        est = outerpcp.play_game(inst, cfg, outerpcp.PlantedProver(sigma), outerpcp.PlantedProver(sigma),
                                 100000, 9)
        ok &= est.ci_high >= 1 - J * eps
        parts.append(f"J={J}: {est.value:.4f} >= {1 - J * eps:.2f}")
    criterion(9, ok, "; ".join(parts))


def test_criterion_10_covering_bounds():
    ok = True
    runs = 0
    zero_exact = True
    for J in (2, 3):
        U = [tuple(range(3 * i, 3 * i + 3)) for i in range(J)]
        for beta in (0.0, 0.1, 0.2):
            for r1 in (0, 1):
                rep = outerpcp.covering_sd_advice(U, r1, beta, 5000, 10 + r1)
                ok &= rep.ci_low <= rep.bound and rep.exact <= rep.bound
                if beta == 0:
                    zero_exact &= rep.exact == 0 and rep.estimate == 0
                runs += 1
            for s in (0, 1):
                W = outerpcp.random_codim_subspace(3 * J, s, random.Random(J * 10 + s))
                res = outerpcp.retain_codim_experiment(U, W, beta, 5000, 20 + s)
                ok &= res["ci_low"] <= res["bound"]
                if beta == 0:
                    zero_exact &= res["exact"] == 0 and res["successes"] == 0
                runs += 1
    criterion(10, ok and zero_exact, f"{runs} covering runs below their bounds, beta=0 exactly 0")


def _corpus():
    rng = random.Random(11)
    out = []
    for i in range(30):
        k = 2 if i < 15 else 3
        R = 2 if i % 2 == 0 else 3
        # keep R^(n k) small so the k-partitized output stays enumerable
        n = {(2, 2): 6, (2, 3): 5, (3, 2): 5, (3, 3): 4}[(k, R)]
        out.append((random_instance(n, rng.randint(2, 4), k, R, rng),
                    random_instance(max(n, 2 * k), rng.randint(2, 3), k, R, rng, parts=True)))
    return out


def test_criterion_11_reduction_laws():
    ok = True
    rng = random.Random(12)
    for idx, (inst, kp) in enumerate(_corpus()):
        k = inst.k
        v = csp_value_exact(inst)[0]
        vk = csp_value_exact(reduce.k_partitize(inst))[0]
        ok &= v <= vk <= Fraction(k ** k, math.factorial(k)) * v
        ok &= csp_value_exact(reduce.duplicate_constraints(inst, 3))[0] == v

        d = 2
        dup = reduce.duplicate_constraints(kp, d)
        v_in = csp_value_exact(dup)[0]
        for i in range(k):
            out, rep = reduce.partwise_regularize(dup, d, i, idx)
            v_out = csp_value_exact(out)[0]
            ok &= all(rep.checks.values()) and len(out.edges) == d * len(dup.edges)
            ok &= v_out >= v_in and float(v_in) >= float(v_out) - rep.soundness_slack - 1e-12

        R = inst.alphabets[0]
        if k == 2:
            pr = reduce.random_partwise_regular([2, 2], [2, 2], R, rng)
        else:
            pr = reduce.random_partwise_regular([1, 1, 2], [2, 2, 1], R, rng)
        c = [1] * k if R == 3 else [rng.randint(1, 2) for _ in range(k)]
        full, rep = reduce.fully_regularize(pr, c)
        degs = [p[0] for p in structural_report(pr).part_degrees]
        prod = math.prod(ci * di for ci, di in zip(c, degs))
        ok &= all(rep.checks.values())
        ok &= all(full.degrees()[u] == prod // c[p] for u, p in enumerate(full.part_of()))
        ok &= csp_value_exact(full)[0] == csp_value_exact(pr)[0]
    criterion(11, ok, "30-instance corpus: sandwich, duplication, partwise and full regularization laws")


def test_criterion_12_maximal_pairs():
    ok = True
    returned = 0
    for seed in range(8):
        t, q, w0, g0 = planted_zoom_table(5, 2, 0, 3, seed)
        pairs = grasstest.find_maximal_pairs(t, q, 1.0, 0.8, 2, 2)
        ok &= any(p.w == w0 and p.g == g0 for p in pairs)
        ok &= all(maximal_clauses_hold(t, q, p, 1.0, 0.8, 2, 2) for p in pairs)
        returned += len(pairs)
    rng = random.Random(12)
    for _ in range(6):
        t = {s: LinearFunctional.from_vector(s, rng.getrandbits(5)) for s in enumerate_grassmann(5, 2)}
        q = sample_subspace(5, 1, rng)
        pairs = grasstest.find_maximal_pairs(t, q, 0.5, 0.5, 2, 2)
        ok &= all(maximal_clauses_hold(t, q, p, 0.5, 0.5, 2, 2) for p in pairs)
        returned += len(pairs)
    criterion(12, ok, f"{returned} returned pairs re-verified, 8 planted zoom-outs recovered")


def _cli_commands(tmp):
    inst = make_instance(2, {"x": 2, "y": 2}, [(("x", "y"), [(0, 0), (1, 1)]), (("x", "y"), [(0, 1), (1, 0)])])
    (tmp / "eq.json").write_text(json.dumps(inst.to_json()))
    gen = random_instance(4, 4, 2, 2, random.Random(1))
    (tmp / "r.json").write_text(json.dumps(gen.to_json()))
    kp = random_instance(4, 3, 2, 2, random.Random(2), parts=True)
    (tmp / "kp.json").write_text(json.dumps(kp.to_json()))
    pr = reduce.random_partwise_regular([2, 3], [3, 2], 2, random.Random(3))
    (tmp / "pr.json").write_text(json.dumps(pr.to_json()))
    m = MatchingInstance(2, (("a", "b"), ("c", "d")), (("a", "c"), ("b", "c"), ("b", "d")))
    (tmp / "m.json").write_text(json.dumps(m.to_json()))
    t = str(tmp)
    return [
        ["gen-3lin", "--vars", "30", "--eqs", "40", "--eta", "0", "--seed", "7"],
        ["csp-value", "--in", f"{t}/r.json", "--method", "all", "--seed", "2"],
        ["reduce-kpartite", "--in", f"{t}/r.json", "--values"],
        ["reduce-regularize", "--in", f"{t}/kp.json", "--d", "2", "--duplicate", "2", "--seed", "4", "--values"],
        ["reduce-fullreg", "--in", f"{t}/pr.json", "--c", "1,2", "--values"],
        ["grassmann-test", "--n", "5", "--ltop", "2", "--lbot", "1", "--k", "2", "--tables", "random",
         "--mode", "montecarlo", "--trials", "500", "--seed", "5"],
        ["counting-lemma", "--n", "6", "--ltop", "2", "--lbot", "1", "--k", "2", "--seed", "1"],
        ["bilinear-spectrum", "--n", "4", "--m", "2", "--c", "1"],
        ["covering", "--kind", "retain", "--J", "2", "--beta", "0.1", "--s", "1", "--samples", "2000", "--seed", "6"],
        ["outer-game", "--J", "2", "--trials", "2000", "--seed", "8"],
        ["composed-build", "--samples", "100", "--seed", "9"],
        ["composed-completeness", "--trials", "300", "--seed", "10"],
        ["extract-strategies", "--trials", "50", "--seed", "11"],
        ["matching-value", "--in", f"{t}/m.json"],
    ]


def test_criterion_13_cli_determinism(tmp_path, capsys):
    ok = True
    commands = _cli_commands(tmp_path)
    names = set()
    for argv in commands:
        outs = []
        for _ in range(2):
            code = cli.main(argv)
            text = capsys.readouterr().out
            rec = json.loads(text)
            rec.pop("wall_time")
            outs.append(json.dumps(rec, sort_keys=True))
            ok &= code == 0
        ok &= outs[0] == outs[1]
        names.add(argv[0])
    ok &= len(names) == 14
    criterion(13, ok, f"{len(names)} commands produce identical reports on repeat")
