"""Straight-line reference evaluator for the 18 constrained benchmark functions.

This module exists purely for cross-checking: every function is written as a
direct transcription of the published problem definitions using plain ``math``
loops, with no shared helpers, no vectorization and no reuse of the production
evaluator.  ``oracle-check`` and the test suite compare the production
implementation against these routines point by point.

Each function takes the raw decision vector plus the instance data (shift
vector ``o`` and rotation matrices) and returns ``(f, g_list, h_list)``.
Rotation convention throughout the suite: ``rotate(M, v)[i] = sum_j M[i][j] v[j]``.
"""

from __future__ import annotations

import math


def _rotate(mat, v):
    n = len(v)
    out = [0.0] * n
    for i in range(n):
        acc = 0.0
        row = mat[i]
        for j in range(n):
            acc += row[j] * v[j]
        out[i] = acc
    return out


def _shift(x, o):
    return [x[i] - o[i] for i in range(len(x))]


def _rosenbrock(z):
    total = 0.0
    for i in range(len(z) - 1):
        total += 100.0 * (z[i] * z[i] - z[i + 1]) ** 2 + (z[i] - 1.0) ** 2
    return total


def c01(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    sum_cos4 = 0.0
    prod_cos2 = 1.0
    sum_iz2 = 0.0
    for i in range(d):
        c = math.cos(z[i])
        sum_cos4 += c ** 4
        prod_cos2 *= c ** 2
        sum_iz2 += (i + 1) * z[i] * z[i]
    f = -abs((sum_cos4 - 2.0 * prod_cos2) / math.sqrt(sum_iz2))
    prod_z = 1.0
    sum_z = 0.0
    for i in range(d):
        prod_z *= z[i]
        sum_z += z[i]
    g = [0.75 - prod_z, sum_z - 7.5 * d]
    return f, g, []


def c02(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = max(z)
    rast_z = 0.0
    rast_y = 0.0
    for i in range(d):
        rast_z += z[i] * z[i] - 10.0 * math.cos(2.0 * math.pi * z[i]) + 10.0
        y = z[i] - 0.5
        rast_y += y * y - 10.0 * math.cos(2.0 * math.pi * y) + 10.0
    g = [10.0 - rast_z / d, rast_z / d - 15.0]
    h = [rast_y / d - 20.0]
    return f, g, h


def c03(x, o, mats):
    z = _shift(x, o)
    f = _rosenbrock(z)
    acc = 0.0
    for i in range(len(z) - 1):
        acc += (z[i] - z[i + 1]) ** 2
    return f, [], [acc]


def c04(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = max(z)
    h1 = 0.0
    for i in range(d):
        h1 += z[i] * math.cos(math.sqrt(abs(z[i])))
    h1 /= d
    half = d // 2
    h2 = 0.0
    for i in range(half - 1):
        h2 += (z[i] - z[i + 1]) ** 2
    h3 = 0.0
    for i in range(half, d - 1):
        h3 += (z[i] * z[i] - z[i + 1]) ** 2
    h4 = 0.0
    for i in range(d):
        h4 += z[i]
    return f, [], [h1, h2, h3, h4]


def c05(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = max(z)
    h1 = 0.0
    h2 = 0.0
    for i in range(d):
        h1 += -z[i] * math.sin(math.sqrt(abs(z[i])))
        h2 += -z[i] * math.cos(0.5 * math.sqrt(abs(z[i])))
    return f, [], [h1 / d, h2 / d]


C06_OFFSET = 483.6106156535


def c06(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = max(z)
    w = [z[i] + C06_OFFSET for i in range(d)]
    y = _rotate(mats[0], w)
    y = [y[i] - C06_OFFSET for i in range(d)]
    h1 = 0.0
    h2 = 0.0
    for i in range(d):
        h1 += -y[i] * math.sin(math.sqrt(abs(y[i])))
        h2 += -y[i] * math.cos(0.5 * math.sqrt(abs(y[i])))
    return f, [], [h1 / d, h2 / d]


def _c07_c08_constraint(y):
    d = len(y)
    sum_y2 = 0.0
    sum_cos = 0.0
    for i in range(d):
        sum_y2 += y[i] * y[i]
        sum_cos += math.cos(0.1 * y[i])
    return (
        0.5
        - math.exp(-0.1 * math.sqrt(sum_y2 / d))
        - 3.0 * math.exp(sum_cos / d)
        + math.exp(1.0)
    )


def c07(x, o, mats):
    d = len(x)
    z = [x[i] + 1.0 - o[i] for i in range(d)]
    f = _rosenbrock(z)
    y = _shift(x, o)
    return f, [_c07_c08_constraint(y)], []


def c08(x, o, mats):
    d = len(x)
    z = [x[i] + 1.0 - o[i] for i in range(d)]
    f = _rosenbrock(z)
    y = _rotate(mats[0], _shift(x, o))
    return f, [_c07_c08_constraint(y)], []


def _schwefel_sum(y):
    acc = 0.0
    for v in y:
        acc += v * math.sin(math.sqrt(abs(v)))
    return acc


def c09(x, o, mats):
    d = len(x)
    z = [x[i] + 1.0 - o[i] for i in range(d)]
    f = _rosenbrock(z)
    y = _shift(x, o)
    return f, [], [_schwefel_sum(y)]


def c10(x, o, mats):
    d = len(x)
    z = [x[i] + 1.0 - o[i] for i in range(d)]
    f = _rosenbrock(z)
    y = _rotate(mats[0], _shift(x, o))
    return f, [], [_schwefel_sum(y)]


def c11(x, o, mats):
    d = len(x)
    z = _rotate(mats[0], _shift(x, o))
    f = 0.0
    for i in range(d):
        f += -z[i] * math.cos(2.0 * math.sqrt(abs(z[i])))
    f /= d
    y = [x[i] + 1.0 - o[i] for i in range(d)]
    return f, [], [_rosenbrock(y)]


def c12(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = 0.0
    for i in range(d):
        f += z[i] * math.sin(math.sqrt(abs(z[i])))
    h1 = 0.0
    for i in range(d - 1):
        h1 += (z[i] * z[i] - z[i + 1]) ** 2
    g1 = 0.0
    for i in range(d):
        g1 += z[i] - 100.0 * math.cos(0.1 * z[i]) + 10.0
    return f, [g1], [h1]


def c13(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = 0.0
    for i in range(d):
        f += -z[i] * math.sin(math.sqrt(abs(z[i])))
    f /= d
    sum_z2 = 0.0
    sum_sin = 0.0
    for i in range(d):
        sum_z2 += z[i] * z[i]
        sum_sin += math.sin(math.pi * z[i] / 50.0)
    griewank = 0.0
    prod_cos = 1.0
    for i in range(d):
        griewank += z[i] * z[i] / 4000.0
        prod_cos *= math.cos(z[i] / math.sqrt(i + 1.0))
    griewank = griewank - prod_cos + 1.0
    g = [
        -50.0 + sum_z2 / (100.0 * d),
        50.0 / d * sum_sin,
        75.0 - 50.0 * griewank,
    ]
    return f, g, []


def _c14_c15_constraints(y):
    d = len(y)
    g1 = 0.0
    g2 = 0.0
    g3 = 0.0
    for i in range(d):
        r = math.sqrt(abs(y[i]))
        g1 += -y[i] * math.cos(r)
        g2 += y[i] * math.cos(r)
        g3 += y[i] * math.sin(0.1 * r)
    return [g1 - d, g2 - d, g3 - 10.0 * d]


def c14(x, o, mats):
    d = len(x)
    z = [x[i] + 1.0 - o[i] for i in range(d)]
    f = _rosenbrock(z)
    y = _shift(x, o)
    return f, _c14_c15_constraints(y), []


def c15(x, o, mats):
    d = len(x)
    z = [x[i] + 1.0 - o[i] for i in range(d)]
    f = _rosenbrock(z)
    y = _rotate(mats[0], _shift(x, o))
    return f, _c14_c15_constraints(y), []


def c16(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = 0.0
    prod_cos = 1.0
    for i in range(d):
        f += z[i] * z[i] / 4000.0
        prod_cos *= math.cos(z[i] / math.sqrt(i + 1.0))
    f = f - prod_cos + 1.0
    g1 = 0.0
    prod_z = 1.0
    h1 = 0.0
    h2 = 0.0
    for i in range(d):
        g1 += z[i] * z[i] - 100.0 * math.cos(math.pi * z[i]) + 10.0
        prod_z *= z[i]
        h1 += z[i] * math.sin(math.sqrt(abs(z[i])))
        h2 += -z[i] * math.cos(0.5 * math.sqrt(abs(z[i])))
    return f, [g1, prod_z], [h1, h2]


def c17(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = 0.0
    for i in range(d - 1):
        f += (z[i] - z[i + 1]) ** 2
    prod_z = 1.0
    for i in range(d):
        prod_z *= z[i]
    g2 = 0.0
    for i in range(d - 1):
        g2 += z[i] * z[i + 1]
    h1 = 0.0
    for i in range(d):
        h1 += z[i] * math.sin(4.0 * math.sqrt(abs(z[i])))
    return f, [prod_z, g2], [h1]


def c18(x, o, mats):
    z = _shift(x, o)
    d = len(z)
    f = 0.0
    for i in range(d - 1):
        f += (z[i] - z[i + 1]) ** 2
    g1 = 0.0
    h1 = 0.0
    for i in range(d):
        r = math.sqrt(abs(z[i]))
        g1 += -z[i] * math.sin(0.1 * r)
        h1 += z[i] * math.sin(0.25 * r)
    return f, [g1 / d], [h1 / d]


REFERENCE_FUNCTIONS = {
    "C01": c01,
    "C02": c02,
    "C03": c03,
    "C04": c04,
    "C05": c05,
    "C06": c06,
    "C07": c07,
    "C08": c08,
    "C09": c09,
    "C10": c10,
    "C11": c11,
    "C12": c12,
    "C13": c13,
    "C14": c14,
    "C15": c15,
    "C16": c16,
    "C17": c17,
    "C18": c18,
}


def reference_evaluate(problem_id: str, x, o, mats):
    """Evaluate one point with the reference routine for ``problem_id``.

    ``x``, ``o`` are sequences of D floats; ``mats`` a list of DxD row-major
    matrices (empty for unrotated instances).  Returns ``(f, g, h)`` as plain
    Python floats/lists.
    """
    fn = REFERENCE_FUNCTIONS[problem_id]
    return fn([float(v) for v in x], [float(v) for v in o], mats)
