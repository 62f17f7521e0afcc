"""Command-line entry point.

Every command prints one JSON record::

    {"command", "parameters", "result", "assertions", "wall_time"}

Exit status is 0 when every asserted check passes, 2 when a check fails and 1
on usage or domain errors.  All randomness is derived from ``--seed`` through
``seeding.child_seed`` (BLAKE2b-64 of ``"<seed>:<label>"``).  Only the
enumeration caps can be changed through the environment (``GRASSPCP_*``).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import random
import sys
import time
from fractions import Fraction

import numpy as np

from . import bilinear, composed, csp, grasstest, outerpcp, reduce
from .errors import DomainError, ResourceError
from .f2la import F2Subspace, gaussian_binomial, sample_subspace, sample_superspace
from .seeding import child_seed
from .stats import fraction_dict


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(x):
    if isinstance(x, Fraction):
        return fraction_dict(x)
    if isinstance(x, F2Subspace):
        return x.to_json()
    if isinstance(x, grasstest.LinearFunctional):
        return x.to_json()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in x]
        return sorted(items, key=json.dumps) if isinstance(x, (set, frozenset)) else items
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: _jsonable(getattr(x, f.name)) for f in dataclasses.fields(x)}
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def check(name: str, lhs, rhs, relation: str, asserted: bool = True) -> dict:
    """One named inequality with both numeric sides."""
    ops = {"<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b, "==": lambda a, b: a == b}
    ok = bool(ops[relation](lhs, rhs))
    status = ("pass" if ok else "fail") if asserted else "vacuous"
    return {"name": name, "lhs": _jsonable(lhs), "relation": relation, "rhs": _jsonable(rhs), "status": status}


def _load(path):
    with open(path) as fh:
        return json.load(fh)


def _dump_file(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _value_text(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator} ({float(q)})"


# commands ----------------------------------------------------------------

def cmd_gen_3lin(a):
    inst, sigma = outerpcp.gen_3lin(a.vars, a.eqs, a.eta, a.seed)
    out = {"instance": inst.to_json(), "planted": list(sigma)}
    if a.out:
        _dump_file(a.out, out)
    val = inst.value_of(sigma)
    flipped = round(a.eta * a.eqs)
    res = {"n_vars": inst.n_vars, "n_eqs": inst.n_eqs, "planted_value": val, "flipped": flipped}
    if not a.out:
        res["output"] = out
    return res, [check("planted_value_exact", inst.n_eqs - sum(inst.satisfied(sigma)), flipped, "==")]


def cmd_csp_value(a):
    inst = csp.CspInstance.from_json(_load(a.inp))
    base = csp.csp_value_random_baseline(inst)
    res = {"baseline": base, "baseline_text": _value_text(base)}
    checks = []
    if a.method in ("exact", "all"):
        val, asg = csp.csp_value_exact(inst)
        res.update(value=val, value_text=_value_text(val), argmax=list(asg.labels))
        checks.append(check("baseline_le_value", base, val, "<="))
    if a.method in ("local", "all"):
        ls, _ = csp.csp_value_local_search(inst, a.restarts, child_seed(a.seed, "local"))
        res.update(local_search=ls, local_search_text=_value_text(ls))
        if "value" in res:
            checks.append(check("local_le_value", ls, res["value"], "<="))
    res["structure"] = csp.structural_report(inst)
    return res, checks


def _reduction_output(a, out, report, extra=None):
    if a.out:
        _dump_file(a.out, out.to_json())
    res = {"report": report.to_json() if report else None, "structure": csp.structural_report(out),
           "output_digest": out.digest()}
    if not a.out:
        res["output"] = out.to_json()
    if extra:
        res.update(extra)
    return res


def _maybe_values(a, inp, out):
    if not a.values:
        return {}, None
    v_in, _ = csp.csp_value_exact(inp)
    v_out, _ = csp.csp_value_exact(out)
    return {"value_in": v_in, "value_out": v_out}, (v_in, v_out)


def cmd_reduce_kpartite(a):
    inp = csp.CspInstance.from_json(_load(a.inp))
    out = reduce.k_partitize(inp)
    vals, pair = _maybe_values(a, inp, out)
    checks = [check("edge_count", len(out.edges), math.factorial(inp.k) * len(inp.edges), "=="),
              check("k_partite", csp.structural_report(out).is_k_partite, True, "==")]
    if pair:
        v_in, v_out = pair
        checks += [check("value_not_decreased", v_out, v_in, ">="),
                   check("value_sandwich", v_out, Fraction(inp.k ** inp.k, math.factorial(inp.k)) * v_in, "<=")]
    return _reduction_output(a, out, None, vals), checks


def cmd_reduce_regularize(a):
    inp = csp.CspInstance.from_json(_load(a.inp))
    if a.duplicate > 1:
        inp = reduce.duplicate_constraints(inp, a.duplicate)
    out, rep = reduce.partwise_regularize(inp, a.d, a.part, child_seed(a.seed, "partwise"))
    vals, pair = _maybe_values(a, inp, out)
    checks = [check(k, v, True, "==") for k, v in rep.checks.items()]
    if pair:
        v_in, v_out = pair
        checks.append(check("value_not_decreased", v_out, v_in, ">="))
        if rep.soundness_slack is not None:
            checks.append(check("mixing_soundness", float(v_in), float(v_out) - rep.soundness_slack, ">="))
    return _reduction_output(a, out, rep, vals), checks


def cmd_reduce_fullreg(a):
    inp = csp.CspInstance.from_json(_load(a.inp))
    c = [int(x) for x in a.c.split(",")]
    out, rep = reduce.fully_regularize(inp, c)
    vals, pair = _maybe_values(a, inp, out)
    checks = [check(k, v, True, "==") for k, v in rep.checks.items()]
    if pair:
        checks.append(check("value_equal", pair[1], pair[0], "=="))
    return _reduction_output(a, out, rep, vals), checks


def cmd_grassmann_test(a):
    rng = random.Random(child_seed(a.seed, "tables"))
    if a.tables == "global":
        f = rng.getrandbits(a.n)
        tp = grasstest.TablePair.from_globals(a.n, a.ltop, a.lbot, f)
    elif a.tables == "mismatch":
        f = rng.getrandbits(a.n)
        g = f ^ (1 << rng.randrange(a.n))
        tp = grasstest.TablePair.from_globals(a.n, a.ltop, a.lbot, f, g)
    else:
        tp = grasstest.TablePair.random(a.n, a.ltop, a.lbot, rng)
    tr = grasstest.run_consistency_test(tp, a.k, a.mode, a.trials, child_seed(a.seed, "test"))
    res = {"probability": tr.probability, "estimate": tr.estimate.to_dict() if tr.estimate else None,
           "value": tr.value}
    checks = []
    if a.tables == "global":
        if tr.probability is not None:
            checks.append(check("completeness", tr.probability, Fraction(1), "=="))
        else:
            checks.append(check("completeness", tr.estimate.successes, tr.estimate.trials, "=="))
    elif a.tables == "mismatch" and a.k == 1 and tr.probability is not None:
        # f - g is a nonzero functional; R passes iff it lies in the kernel
        want = Fraction(gaussian_binomial(a.n - 1, a.lbot), gaussian_binomial(a.n, a.lbot))
        checks.append(check("mismatch_pass_probability", tr.probability, want, "=="))
    return res, checks


def cmd_counting_lemma(a):
    rng = random.Random(child_seed(a.seed, "families"))
    rfam = grasstest.SubspaceFamily.random(a.n, a.lbot, a.density, rng)
    lfam = grasstest.SubspaceFamily.random(a.n, a.ltop, a.density, rng)
    rep = grasstest.count_hyperedges(rfam, lfam, a.k)
    res = {"report": rep, "density_r": rfam.density, "density_l": lfam.density}
    checks = [check("edges_vs_inner_product", rep.probability, 2 * rep.inner_product, "<=", rep.asserted),
              check("independence_identity", rep.inner_product, rep.pr_independent * rep.probability, "==")]
    return res, checks


def cmd_bilinear_spectrum(a):
    eig = bilinear.phi_eigenvalues(a.n, a.m, a.c)
    ranks = bilinear.rank_table(a.n, a.m)
    by_rank: dict[int, list] = {}
    for s, lam in enumerate(eig):
        by_rank.setdefault(int(ranks[s]), []).append(lam)
    rows = []
    checks = []
    for d in sorted(by_rank):
        worst = max(abs(x) for x in by_rank[d])
        bound = bilinear.phi_eigen_bound(d, a.c, a.n)
        rows.append({"rank": d, "count": len(by_rank[d]), "max_abs_eigenvalue": worst,
                     "distinct": sorted(set(by_rank[d])), "bound": bound})
        checks.append(check(f"eigen_bound_rank_{d}", float(worst), bound, "<="))
    return {"levels": rows}, checks


def _blocks(J: int):
    return [tuple(range(3 * i, 3 * i + 3)) for i in range(J)]


def cmd_covering(a):
    U = _blocks(a.J)
    n = 3 * a.J
    if a.kind == "advice":
        rep = outerpcp.covering_sd_advice(U, a.r1, a.beta, a.samples, a.seed)
        res = rep.to_json()
        checks = [check("covering_advice", rep.ci_low, rep.bound, "<=")]
        if rep.exact is not None:
            checks.append(check("covering_advice_exact", rep.exact, rep.bound, "<="))
    elif a.kind == "zoom":
        rng = random.Random(child_seed(a.seed, "QW"))
        Q = sample_subspace(n, a.r1, rng)
        W = sample_superspace(Q, n - a.s, rng)
        rep = outerpcp.covering_sd_zoom(U, Q, W, a.beta, a.l2, a.samples, a.seed)
        res = {**rep.to_json(), "Q": Q, "W": W}
        checks = [check("covering_zoom", rep.ci_low, rep.bound, "<=", rep.asserted)]
    else:
        rng = random.Random(child_seed(a.seed, "W"))
        W = sample_subspace(n, n - a.s, rng)
        res = outerpcp.retain_codim_experiment(U, W, a.beta, a.samples, a.seed)
        res["W"] = W
        checks = [check("retain_codim", res["ci_low"], res["bound"], "<=")]
    return res, checks


def _instance_from_args(a):
    if getattr(a, "inp", None):
        obj = _load(a.inp)
        inst = outerpcp.Gap3LinInstance.from_json(obj["instance"] if "instance" in obj else obj)
        sigma = obj.get("planted")
        return inst, sigma
    return outerpcp.gen_3lin(a.vars, a.eqs, a.eta, a.seed)


def cmd_outer_game(a):
    inst, sigma = _instance_from_args(a)
    if sigma is None:
        raise DomainError("outer-game needs a planted assignment in the input")
    cfg = outerpcp.OuterConfig(a.J, a.beta, a.r, a.seed)
    s1 = outerpcp.PlantedProver(sigma)
    s2 = outerpcp.ComplementProver(sigma) if a.strategy == "complement" else outerpcp.PlantedProver(sigma)
    est = outerpcp.play_game(inst, cfg, s1, s2, a.trials, a.seed)
    eps = 1 - inst.value_of(sigma)
    res = {**est.to_dict(), "eps": eps, "bound": 1 - a.J * eps,
           "search": outerpcp.assignment_strategy_search(inst, a.J, 4, a.seed)}
    checks = []
    if a.strategy == "planted":
        checks.append(check("outer_completeness", est.ci_high, 1 - a.J * eps, ">="))
    return res, checks


def _composed_setup(a):
    cfg = composed.ComposedConfig(a.J, a.ell2, a.ellbot, a.k, a.r)
    inst, sigma, qs = composed.toy_instance(a.vars, a.eqs, a.J, a.min_questions, a.eta, a.seed,
                                            balanced=a.balanced)
    return cfg, inst, sigma, composed.ComposedModel(inst, cfg, qs)


def cmd_composed_build(a):
    cfg, inst, sigma, model = _composed_setup(a)
    out, sidecar = composed.build_composed_csp(inst, cfg, child_seed(a.seed, "build"), a.samples, model)
    if a.out:
        _dump_file(a.out, out.to_json())
        _dump_file(a.out + ".sidecar.json", sidecar)
    res = {"questions": len(model.questions), "vertices": out.n_vertices, "edges": len(out.edges),
           "digest": out.digest(), "cliques": len(set(sidecar["clique_index"].values()))}
    arity_ok = all(len(e.verts) == cfg.k + 1 for e in out.edges)
    alph_ok = all(x == 1 << (cfg.ellbot if name.startswith("B:") else cfg.ell2)
                  for name, x in zip(out.names, out.alphabets))
    return res, [check("arity", arity_ok, True, "=="), check("alphabet_sizes", alph_ok, True, "==")]


def cmd_composed_completeness(a):
    cfg, inst, sigma, model = _composed_setup(a)
    res = composed.completeness_experiment(inst, cfg, sigma, a.trials, a.seed, model)
    return res, [check("composed_completeness", res["ci_high"], res["bound_questions"], ">="),
                 check("composed_completeness_equation_bound", res["ci_high"], res["bound"], ">=")]


def cmd_extract_strategies(a):
    cfg, inst, sigma, model = _composed_setup(a)
    t1, t2, _ = composed.planted_tables(model, sigma)
    f1, f2, info = composed.extract_prover_strategies(model, t1, t2, a.seed, a.selection)
    ocfg = outerpcp.OuterConfig(a.J, a.beta, a.r, a.seed)
    est = outerpcp.play_game(inst, ocfg, f1, f2, a.trials, a.seed)
    return {**info, "win_rate": est.to_dict()}, []


def cmd_matching_value(a):
    m = csp.MatchingInstance.from_json(_load(a.inp))
    return {"value": csp.matching_value_exact(m)}, []


# parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="grasspcp", description="Toy-scale PCP experiments over F_2.")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--threads", type=int, default=1, help="worker cap (runs are single-threaded)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, seed=True):
        sp = sub.add_parser(name)
        sp.set_defaults(fn=fn)
        if seed:
            sp.add_argument("--seed", type=int, required=True)
        return sp

    sp = add("gen-3lin", cmd_gen_3lin)
    sp.add_argument("--vars", type=int, required=True)
    sp.add_argument("--eqs", type=int, required=True)
    sp.add_argument("--eta", type=float, default=0.0)
    sp.add_argument("--out")

    sp = add("csp-value", cmd_csp_value, seed=False)
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--method", choices=["exact", "local", "all"], default="exact")
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("reduce-kpartite", cmd_reduce_kpartite, seed=False)
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--out")
    sp.add_argument("--values", action="store_true", help="compute exact values of input and output")

    sp = add("reduce-regularize", cmd_reduce_regularize)
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--part", type=int, default=0)
    sp.add_argument("--duplicate", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--values", action="store_true")

    sp = add("reduce-fullreg", cmd_reduce_fullreg, seed=False)
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--c", required=True, help="comma-separated multipliers")
    sp.add_argument("--out")
    sp.add_argument("--values", action="store_true")

    sp = add("grassmann-test", cmd_grassmann_test)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--ltop", type=int, required=True)
    sp.add_argument("--lbot", type=int, required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--tables", choices=["global", "mismatch", "random"], default="global")
    sp.add_argument("--mode", choices=["exact", "montecarlo"], default="exact")
    sp.add_argument("--trials", type=int, default=0)

    sp = add("counting-lemma", cmd_counting_lemma)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--ltop", type=int, required=True)
    sp.add_argument("--lbot", type=int, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--density", type=float, default=0.5)

    sp = add("bilinear-spectrum", cmd_bilinear_spectrum, seed=False)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--c", type=int, required=True)

    sp = add("covering", cmd_covering)
    sp.add_argument("--kind", choices=["advice", "zoom", "retain"], required=True)
    sp.add_argument("--J", type=int, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--r1", type=int, default=0)
    sp.add_argument("--s", type=int, default=0)
    sp.add_argument("--l2", type=int, default=2)
    sp.add_argument("--samples", type=int, default=10000)

    sp = add("outer-game", cmd_outer_game)
    sp.add_argument("--in", dest="inp")
    sp.add_argument("--vars", type=int, default=60)
    sp.add_argument("--eqs", type=int, default=100)
    sp.add_argument("--eta", type=float, default=0.05)
    sp.add_argument("--J", type=int, required=True)
    sp.add_argument("--beta", type=float, default=0.1)
    sp.add_argument("--r", type=int, default=0)
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--strategy", choices=["planted", "complement"], default="planted")

    for name, fn in (("composed-build", cmd_composed_build),
                     ("composed-completeness", cmd_composed_completeness),
                     ("extract-strategies", cmd_extract_strategies)):
        sp = add(name, fn)
        sp.add_argument("--vars", type=int, default=12)
        sp.add_argument("--eqs", type=int, default=5)
        sp.add_argument("--eta", type=float, default=0.0)
        sp.add_argument("--J", type=int, default=2)
        sp.add_argument("--ell2", type=int, default=2)
        sp.add_argument("--ellbot", type=int, default=1)
        sp.add_argument("--k", type=int, default=2)
        sp.add_argument("--r", type=int, default=0)
        sp.add_argument("--min-questions", dest="min_questions", type=int, default=6)
        sp.add_argument("--balanced", action="store_true")
        if name == "composed-build":
            sp.add_argument("--samples", type=int, default=500)
            sp.add_argument("--out")
        elif name == "composed-completeness":
            sp.add_argument("--trials", type=int, default=2000)
        else:
            sp.add_argument("--trials", type=int, default=200)
            sp.add_argument("--beta", type=float, default=0.0)
            sp.add_argument("--selection", choices=["best", "random"], default="best")

    sp = add("matching-value", cmd_matching_value, seed=False)
    sp.add_argument("--in", dest="inp", required=True)
    return p


def _params(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k not in ("fn", "threads", "format")}


def _flatten(prefix, x, rows):
    if isinstance(x, dict) and set(x) == {"num", "den", "float"}:
        rows.append((prefix, x["float"]))
    elif isinstance(x, dict):
        for k in sorted(x):
            _flatten(f"{prefix}.{k}" if prefix else str(k), x[k], rows)
    elif isinstance(x, list):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, x))


def render(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, sort_keys=True, indent=2)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    rows: list = []
    _flatten("", record, rows)
    for k, v in rows:
        w.writerow([k, v])
    return buf.getvalue().rstrip("\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    start = time.perf_counter()
    try:
        result, checks = a.fn(a)
    except (DomainError, ResourceError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    record = {"command": a.command, "parameters": _jsonable(_params(a)), "result": _jsonable(result),
              "assertions": checks, "wall_time": round(time.perf_counter() - start, 6)}
    print(render(record, a.format))
    failed = [c for c in checks if c["status"] == "fail"]
    for c in failed:
        print(f"check failed: {c['name']}: {c['lhs']} {c['relation']} {c['rhs']}", file=sys.stderr)
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
