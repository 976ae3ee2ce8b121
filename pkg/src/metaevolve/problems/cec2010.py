"""Vectorized evaluator for the 18 constrained benchmark instances C01-C18.

Instances are shifted by a vector ``o`` and, where the manifest says so,
rotated by an orthonormal matrix ``M`` with the convention
``z = M @ (x - o)`` (applied row-wise to evaluation batches via einsum, which
keeps results bit-stable across batch shapes).

Non-finite objective values (e.g. the C01 objective exactly at its shift
point) are returned as-is; the engine maps them to the maximally-infeasible
sentinel.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .base import ConfigurationError, Problem, ProblemData, ProblemSpec
from .datafiles import resolve_problem_data

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_EMPTY = np.zeros((0,))

C06_OFFSET = 483.6106156535


def _rotate(mat: np.ndarray, vs: np.ndarray) -> np.ndarray:
    # einsum instead of matmul: deterministic loop order independent of BLAS
    return np.einsum("ij,nj->ni", mat, vs)


def _rosenbrock(z: np.ndarray) -> np.ndarray:
    a, b = z[:, :-1], z[:, 1:]
    return (100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2).sum(axis=1)


def _none(n: int) -> np.ndarray:
    return np.zeros((n, 0))


def _eval_c01(x, o, mats):
    z = x - o
    d = z.shape[1]
    c = np.cos(z)
    num = (c ** 4).sum(axis=1) - 2.0 * (c ** 2).prod(axis=1)
    den = np.sqrt((np.arange(1, d + 1) * z * z).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        f = -np.abs(num / den)
    g = np.column_stack([0.75 - z.prod(axis=1), z.sum(axis=1) - 7.5 * d])
    return f, g, _none(len(x))


def _rastrigin_mean(z: np.ndarray) -> np.ndarray:
    return (z * z - 10.0 * np.cos(2.0 * np.pi * z) + 10.0).sum(axis=1) / z.shape[1]


def _eval_c02(x, o, mats):
    z = x - o
    f = z.max(axis=1)
    rz = _rastrigin_mean(z)
    ry = _rastrigin_mean(z - 0.5)
    g = np.column_stack([10.0 - rz, rz - 15.0])
    h = (ry - 20.0)[:, None]
    return f, g, h


def _eval_c03(x, o, mats):
    z = x - o
    f = _rosenbrock(z)
    h = (((z[:, :-1] - z[:, 1:]) ** 2).sum(axis=1))[:, None]
    return f, _none(len(x)), h


def _eval_c04(x, o, mats):
    z = x - o
    d = z.shape[1]
    half = d // 2
    f = z.max(axis=1)
    h1 = (z * np.cos(np.sqrt(np.abs(z)))).sum(axis=1) / d
    zh = z[:, :half]
    h2 = ((zh[:, :-1] - zh[:, 1:]) ** 2).sum(axis=1)
    zt = z[:, half:]
    h3 = ((zt[:, :-1] ** 2 - zt[:, 1:]) ** 2).sum(axis=1)
    h4 = z.sum(axis=1)
    return f, _none(len(x)), np.column_stack([h1, h2, h3, h4])


def _schwefel_pair(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.sqrt(np.abs(y))
    h1 = (-y * np.sin(r)).sum(axis=1) / y.shape[1]
    h2 = (-y * np.cos(0.5 * r)).sum(axis=1) / y.shape[1]
    return h1, h2


def _eval_c05(x, o, mats):
    z = x - o
    f = z.max(axis=1)
    h1, h2 = _schwefel_pair(z)
    return f, _none(len(x)), np.column_stack([h1, h2])


def _eval_c06(x, o, mats):
    z = x - o
    f = z.max(axis=1)
    y = _rotate(mats[0], z + C06_OFFSET) - C06_OFFSET
    h1, h2 = _schwefel_pair(y)
    return f, _none(len(x)), np.column_stack([h1, h2])


def _ackley_band(y: np.ndarray) -> np.ndarray:
    d = y.shape[1]
    rms = np.sqrt((y * y).sum(axis=1) / d)
    mc = np.cos(0.1 * y).sum(axis=1) / d
    return 0.5 - np.exp(-0.1 * rms) - 3.0 * np.exp(mc) + np.e


def _eval_c07(x, o, mats):
    f = _rosenbrock(x + 1.0 - o)
    g = _ackley_band(x - o)[:, None]
    return f, g, _none(len(x))


def _eval_c08(x, o, mats):
    f = _rosenbrock(x + 1.0 - o)
    g = _ackley_band(_rotate(mats[0], x - o))[:, None]
    return f, g, _none(len(x))


def _schwefel_sum(y: np.ndarray) -> np.ndarray:
    return (y * np.sin(np.sqrt(np.abs(y)))).sum(axis=1)


def _eval_c09(x, o, mats):
    f = _rosenbrock(x + 1.0 - o)
    h = _schwefel_sum(x - o)[:, None]
    return f, _none(len(x)), h


def _eval_c10(x, o, mats):
    f = _rosenbrock(x + 1.0 - o)
    h = _schwefel_sum(_rotate(mats[0], x - o))[:, None]
    return f, _none(len(x)), h


def _eval_c11(x, o, mats):
    z = _rotate(mats[0], x - o)
    f = (-z * np.cos(2.0 * np.sqrt(np.abs(z)))).sum(axis=1) / z.shape[1]
    h = _rosenbrock(x + 1.0 - o)[:, None]
    return f, _none(len(x)), h


def _eval_c12(x, o, mats):
    z = x - o
    f = _schwefel_sum(z)
    h = (((z[:, :-1] ** 2 - z[:, 1:]) ** 2).sum(axis=1))[:, None]
    g = ((z - 100.0 * np.cos(0.1 * z) + 10.0).sum(axis=1))[:, None]
    return f, g, h


def _griewank(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    return (z * z).sum(axis=1) / 4000.0 - np.cos(z / np.sqrt(np.arange(1.0, d + 1))).prod(axis=1) + 1.0


def _eval_c13(x, o, mats):
    z = x - o
    d = z.shape[1]
    f = (-z * np.sin(np.sqrt(np.abs(z)))).sum(axis=1) / d
    g1 = -50.0 + (z * z).sum(axis=1) / (100.0 * d)
    g2 = 50.0 / d * np.sin(np.pi * z / 50.0).sum(axis=1)
    g3 = 75.0 - 50.0 * _griewank(z)
    return f, np.column_stack([g1, g2, g3]), _none(len(x))


def _weighted_sin_cos_band(y: np.ndarray) -> np.ndarray:
    d = y.shape[1]
    r = np.sqrt(np.abs(y))
    g1 = (-y * np.cos(r)).sum(axis=1) - d
    g2 = (y * np.cos(r)).sum(axis=1) - d
    g3 = (y * np.sin(0.1 * r)).sum(axis=1) - 10.0 * d
    return np.column_stack([g1, g2, g3])


def _eval_c14(x, o, mats):
    f = _rosenbrock(x + 1.0 - o)
    return f, _weighted_sin_cos_band(x - o), _none(len(x))


def _eval_c15(x, o, mats):
    f = _rosenbrock(x + 1.0 - o)
    return f, _weighted_sin_cos_band(_rotate(mats[0], x - o)), _none(len(x))


def _eval_c16(x, o, mats):
    z = x - o
    f = _griewank(z)
    g1 = (z * z - 100.0 * np.cos(np.pi * z) + 10.0).sum(axis=1)
    g2 = z.prod(axis=1)
    r = np.sqrt(np.abs(z))
    h1 = (z * np.sin(r)).sum(axis=1)
    h2 = (-z * np.cos(0.5 * r)).sum(axis=1)
    return f, np.column_stack([g1, g2]), np.column_stack([h1, h2])


def _eval_c17(x, o, mats):
    z = x - o
    f = ((z[:, :-1] - z[:, 1:]) ** 2).sum(axis=1)
    g1 = z.prod(axis=1)
    g2 = (z[:, :-1] * z[:, 1:]).sum(axis=1)
    h1 = (z * np.sin(4.0 * np.sqrt(np.abs(z)))).sum(axis=1)
    return f, np.column_stack([g1, g2]), h1[:, None]


def _eval_c18(x, o, mats):
    z = x - o
    d = z.shape[1]
    f = ((z[:, :-1] - z[:, 1:]) ** 2).sum(axis=1)
    r = np.sqrt(np.abs(z))
    g1 = (-z * np.sin(0.1 * r)).sum(axis=1) / d
    h1 = (z * np.sin(0.25 * r)).sum(axis=1) / d
    return f, g1[:, None], h1[:, None]


_EVALUATORS = {
    "C01": _eval_c01,
    "C02": _eval_c02,
    "C03": _eval_c03,
    "C04": _eval_c04,
    "C05": _eval_c05,
    "C06": _eval_c06,
    "C07": _eval_c07,
    "C08": _eval_c08,
    "C09": _eval_c09,
    "C10": _eval_c10,
    "C11": _eval_c11,
    "C12": _eval_c12,
    "C13": _eval_c13,
    "C14": _eval_c14,
    "C15": _eval_c15,
    "C16": _eval_c16,
    "C17": _eval_c17,
    "C18": _eval_c18,
}


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    index: int
    n_ineq: int
    n_eq: int
    lower: float
    upper: float
    rotations: int


def load_manifest() -> dict[str, ManifestEntry]:
    raw = resources.files(__package__).joinpath("cec2010_manifest.toml").read_bytes()
    doc = tomllib.loads(raw.decode("utf-8"))
    entries = {}
    for idx, prob in enumerate(doc["problem"]):
        entries[prob["id"]] = ManifestEntry(
            id=prob["id"],
            index=idx,
            n_ineq=int(prob["n_ineq"]),
            n_eq=int(prob["n_eq"]),
            lower=float(prob["lower"]),
            upper=float(prob["upper"]),
            rotations=int(prob["rotations"]),
        )
    return entries


def manifest_equality_eps() -> float:
    raw = resources.files(__package__).joinpath("cec2010_manifest.toml").read_bytes()
    return float(tomllib.loads(raw.decode("utf-8"))["suite"]["equality_eps"])


CEC2010_IDS = tuple(f"C{i:02d}" for i in range(1, 19))


class Cec2010Problem(Problem):
    def __init__(self, spec: ProblemSpec, data: ProblemData):
        data.validate(spec)
        self.spec = spec
        self.data = data
        self._eval = _EVALUATORS[spec.id]
        self._shift = data.shift
        self._mats = data.rotations

    def evaluate_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.spec.dim:
            raise ValueError(
                f"{self.spec.id}: batch has shape {xs.shape}, expected (n, {self.spec.dim})"
            )
        return self._eval(xs, self._shift, self._mats)


def make_cec2010_problem(
    problem_id: str,
    dim: int,
    data_dir: Path | str | None = None,
    eps: float | None = None,
) -> Cec2010Problem:
    """Build one benchmark instance, loading official data when available."""
    manifest = load_manifest()
    if problem_id not in manifest:
        raise ConfigurationError(f"unknown benchmark problem id: {problem_id!r}")
    entry = manifest[problem_id]
    spec = ProblemSpec(
        id=problem_id,
        dim=dim,
        n_ineq=entry.n_ineq,
        n_total=entry.n_ineq + entry.n_eq,
        lower=np.full(dim, entry.lower),
        upper=np.full(dim, entry.upper),
        eps=manifest_equality_eps() if eps is None else eps,
    )
    data = resolve_problem_data(spec, entry.index, entry.rotations, data_dir)
    return Cec2010Problem(spec, data)
