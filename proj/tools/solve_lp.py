#!/usr/bin/env python3
"""Reference external MILP solver: reads an LP file produced by `export-lp`,
solves it with scipy's HiGHS-backed MILP interface, and writes a solution
file of `name value` lines.

Usage: solve_lp.py <model.lp> <solution.out>

The parser targets this project's deterministic LP dialect: sections
Maximize / Subject To / Bounds / Binary / End, one row per line, terms as
`+ coef name` or `- coef name`.
"""

import sys
import warnings

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp


def parse_terms(tokens):
    """[+, c, x, -, d, y, ...] -> [(coef, name), ...]"""
    terms = []
    i = 0
    while i < len(tokens):
        sign = 1.0
        if tokens[i] in ("+", "-"):
            sign = -1.0 if tokens[i] == "-" else 1.0
            i += 1
        coef = sign * float(tokens[i])
        name = tokens[i + 1]
        terms.append((coef, name))
        i += 2
    return terms


def parse_lp(path):
    objective = None
    rows = []  # (terms, sense, rhs)
    bounds = {}  # name -> (lo, hi)
    binaries = set()
    section = None
    with open(path) as handle:
        for raw in handle:
            line = raw.strip()
            if not line or line.startswith("\\"):
                continue
            if line in ("Maximize", "Subject To", "Bounds", "Binary", "End"):
                section = line
                continue
            if section == "Maximize":
                _, expr = line.split(":", 1)
                terms = parse_terms(expr.split())
                if len(terms) != 1 or terms[0][0] != 1.0:
                    raise ValueError("expected a single-variable objective")
                objective = terms[0][1]
            elif section == "Subject To":
                _, expr = line.split(":", 1)
                tokens = expr.split()
                if "<=" in tokens:
                    k = tokens.index("<=")
                    sense = "<="
                elif ">=" in tokens:
                    k = tokens.index(">=")
                    sense = ">="
                else:
                    k = tokens.index("=")
                    sense = "="
                rows.append((parse_terms(tokens[:k]), sense, float(tokens[k + 1])))
            elif section == "Bounds":
                tokens = line.split()
                if len(tokens) == 3 and tokens[1] == "=":
                    bounds[tokens[0]] = (float(tokens[2]), float(tokens[2]))
                elif len(tokens) == 5 and tokens[1] == "<=" and tokens[3] == "<=":
                    bounds[tokens[2]] = (float(tokens[0]), float(tokens[4]))
                else:
                    raise ValueError(f"unrecognized bounds line: {line}")
            elif section == "Binary":
                binaries.add(line)
    if objective is None:
        raise ValueError("no objective found")
    return objective, rows, bounds, binaries


def main():
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    lp_path, out_path = sys.argv[1], sys.argv[2]
    objective, rows, bounds, binaries = parse_lp(lp_path)

    names = []
    index = {}

    def var(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    var(objective)
    for terms, _, _ in rows:
        for _, name in terms:
            var(name)
    for name in list(bounds) + sorted(binaries):
        var(name)

    n = len(names)
    c = np.zeros(n)
    c[index[objective]] = -1.0  # scipy minimizes

    data, ri, ci, lo, hi = [], [], [], [], []
    for r, (terms, sense, rhs) in enumerate(rows):
        for coef, name in terms:
            data.append(coef)
            ri.append(r)
            ci.append(index[name])
        if sense == "<=":
            lo.append(-np.inf)
            hi.append(rhs)
        elif sense == ">=":
            lo.append(rhs)
            hi.append(np.inf)
        else:
            lo.append(rhs)
            hi.append(rhs)
    matrix = sparse.csc_matrix((data, (ri, ci)), shape=(len(rows), n))

    lower = np.zeros(n)
    upper = np.ones(n)
    for name, (blo, bhi) in bounds.items():
        lower[index[name]] = blo
        upper[index[name]] = bhi
    integrality = np.zeros(n)
    for name in binaries:
        integrality[index[name]] = 1

    with warnings.catch_warnings():
        # The tolerance options below are deliberately passed through to
        # HiGHS; scipy flags them as unrecognized.
        warnings.simplefilter("ignore", RuntimeWarning)
        result = milp(
            c,
            constraints=LinearConstraint(matrix, lo, hi),
            bounds=Bounds(lower, upper),
            integrality=integrality,
            options={
                "mip_rel_gap": 0.0,
                # Tight feasibility: the maximized objective otherwise rides
                # the default 1e-6 constraint slack.
                "primal_feasibility_tolerance": 1e-9,
                "mip_feasibility_tolerance": 1e-9,
            },
        )
    if not result.success:
        print(f"solver failed: {result.message}", file=sys.stderr)
        return 1
    with open(out_path, "w") as handle:
        handle.write(f"# objective {-result.fun:.17g}\n")
        for i, name in enumerate(names):
            handle.write(f"{name} {result.x[i]:.17g}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
