"""Self-check report used by ``incitensor verify``."""

from __future__ import annotations

import math

import numpy as np

from . import algebra, oracle
from .equimap import apply_term, bell_identity_check, enumerate_terms, tau
from .tensors import FaceVector


def orbit_count_cases(max_n: int, max_m: int) -> list[dict]:
    cases = []
    for m in range(1, max_m + 1):
        for n in range(1, max_m + 1):
            for nodes in range(max(m, n), max_n + 1):
                row = oracle.orbit_count_formula_check(m, n, nodes)
                if row["resolved"]:
                    row["status"] = "pass" if row["match"] else "fail"
                    if row["match"] and nodes <= 5:
                        orbits = oracle.enumerate_orbits_bruteforce(m, n, nodes)
                        if not oracle.check_orbit_closure(orbits, m, n, nodes):
                            row["status"] = "fail"
                else:
                    # too few nodes to realize every pattern: an undercount is expected
                    row["status"] = "expected-undercount" if row["orbit_count"] < row["tau"] else "fail"
                cases.append({"check": "orbit_count", **row})
    return cases


def equivalence_cases(max_n: int, max_m: int, seed: int, repeats: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    cases = []
    for m in range(1, max_m + 1):
        for n in range(1, max_m + 1):
            if max_n < m + n:
                continue
            orbits = oracle.enumerate_orbits_bruteforce(m, n, max_n)
            terms = enumerate_terms(m, n)
            worst = 0
            for _ in range(repeats):
                tw = rng.integers(-5, 6, size=(len(terms), 2, 2))
                x = FaceVector(max_n, m, True, rng.integers(-9, 10, size=(math.perm(max_n, m), 2)))
                fast = sum(apply_term(t, x).values @ tw[i] for i, t in enumerate(terms))
                slow = oracle.oracle_apply(oracle.term_weights_to_orbit_weights(tw, orbits, m, n), x, orbits, n)
                worst = max(worst, int(np.max(np.abs(fast - slow.values))))
            cases.append({"check": "oracle_equivalence", "M": m, "M_prime": n, "N": max_n,
                          "orbit_count": len(orbits), "tau": tau(m, n),
                          "match": worst == 0, "max_abs_diff": worst,
                          "status": "pass" if worst == 0 else "fail"})
    return cases


def bell_cases(max_order: int = 4) -> list[dict]:
    cases = []
    for order in range(1, max_order + 1):
        lhs, rhs = bell_identity_check(order)
        cases.append({"check": "bell_identity", "D": order, "lhs": lhs, "rhs": rhs,
                      "match": lhs == rhs, "status": "pass" if lhs == rhs else "fail"})
    return cases


def algebra_cases(n_nodes: int = 5) -> list[dict]:
    worst = max(algebra.compose_check(a, b, n_nodes).residual for a, b in algebra.legal_compositions())
    dims = algebra.two_layer_span_check(n_nodes)
    ok = worst < 1e-9 and dims[1] < dims[0] == dims[2]
    return [{"check": "graph_algebra", "N": n_nodes, "max_residual": worst,
             "span_dims": list(dims), "match": ok, "status": "pass" if ok else "fail"}]


def run(max_n: int = 5, max_m: int = 3, seed: int = 0, repeats: int = 5) -> dict:
    cases = orbit_count_cases(max_n, max_m)
    cases += equivalence_cases(max_n, max_m, seed, repeats)
    cases += bell_cases()
    if max_n >= 5:
        cases += algebra_cases(5)
    failed = [c for c in cases if c["status"] == "fail"]
    return {"max_n": max_n, "max_m": max_m, "seed": seed,
            "passed": not failed, "n_cases": len(cases), "n_failed": len(failed), "cases": cases}
