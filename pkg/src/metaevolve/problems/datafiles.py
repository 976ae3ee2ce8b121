"""Reading and synthesis of per-instance shift/rotation data.

Official data files are plain whitespace-separated decimal text: one line of
D values for a shift, D lines of D values for a rotation matrix.  When a file
is absent the instance falls back to seeded synthetic data (random orthonormal
rotation via QR of a Gaussian matrix, shift uniform in the middle 80% of the
bounds) so the suite builds and tests without redistributing third-party data.
Reports must display the resulting source tag.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .base import ORTHONORMALITY_TOL, ConfigurationError, ProblemData, ProblemSpec


class DataFileError(ConfigurationError):
    """Malformed shift/rotation data file."""


# Salt mixed into every synthetic-data seed so instance data is stable across
# releases without colliding with user-chosen run seeds.
_SYNTHETIC_DATA_SALT = 0x2010C


def shift_filename(problem_id: str, dim: int) -> str:
    return f"{problem_id}_shift_D{dim}.txt"


def rotation_filename(problem_id: str, dim: int, k: int) -> str:
    return f"{problem_id}_rot_D{dim}_{k}.txt"


def _parse_rows(path: Path, expected_cols: int) -> list[list[float]]:
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            values = []
            for tok in tokens:
                try:
                    values.append(float(tok))
                except ValueError:
                    raise DataFileError(
                        f"{path}:{lineno}: cannot parse {tok!r} as a decimal number"
                    ) from None
            if len(values) != expected_cols:
                raise DataFileError(
                    f"{path}:{lineno}: expected {expected_cols} values, found {len(values)}"
                )
            rows.append(values)
    return rows


def read_shift_file(path: Path, dim: int) -> np.ndarray:
    rows = _parse_rows(path, dim)
    if len(rows) != 1:
        raise DataFileError(f"{path}: expected a single line of {dim} values, found {len(rows)} lines")
    return np.asarray(rows[0], dtype=np.float64)


def read_rotation_file(path: Path, dim: int) -> np.ndarray:
    rows = _parse_rows(path, dim)
    if len(rows) != dim:
        raise DataFileError(f"{path}: expected {dim} matrix rows, found {len(rows)}")
    mat = np.asarray(rows, dtype=np.float64)
    err = np.abs(mat.T @ mat - np.eye(dim)).max()
    if err > ORTHONORMALITY_TOL:
        raise DataFileError(f"{path}: matrix is not orthonormal (max |M'M - I| = {err:.2e})")
    return mat


def load_problem_data(data_dir: Path | str, problem_id: str, dim: int, n_rotations: int) -> ProblemData:
    """Load official shift/rotation files for one instance.

    Raises :class:`ConfigurationError` naming the first missing file, and
    :class:`DataFileError` with line numbers for malformed content.
    """
    data_dir = Path(data_dir)
    shift_path = data_dir / shift_filename(problem_id, dim)
    if not shift_path.exists():
        raise ConfigurationError(f"{problem_id}: missing data file {shift_path}")
    shift = read_shift_file(shift_path, dim)
    rotations = []
    for k in range(n_rotations):
        rot_path = data_dir / rotation_filename(problem_id, dim, k)
        if not rot_path.exists():
            raise ConfigurationError(f"{problem_id}: missing data file {rot_path}")
        rotations.append(read_rotation_file(rot_path, dim))
    return ProblemData(shift=shift, rotations=tuple(rotations), source="official-file")


def random_orthonormal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random orthonormal matrix via QR of a Gaussian matrix, sign-fixed so the
    factorization is unique."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def synthesize_problem_data(
    problem_id: str,
    problem_index: int,
    dim: int,
    lower: np.ndarray,
    upper: np.ndarray,
    n_rotations: int,
) -> ProblemData:
    """Deterministic synthetic stand-in for the official data of one instance."""
    seed = np.random.SeedSequence([_SYNTHETIC_DATA_SALT, problem_index, dim])
    rng = np.random.Generator(np.random.Philox(seed))
    span = upper - lower
    shift = lower + 0.1 * span + rng.random(dim) * 0.8 * span
    rotations = tuple(random_orthonormal(dim, rng) for _ in range(n_rotations))
    return ProblemData(shift=shift, rotations=rotations, source="synthetic-seeded")


def resolve_problem_data(
    spec: ProblemSpec,
    problem_index: int,
    n_rotations: int,
    data_dir: Path | str | None,
) -> ProblemData:
    """Official files when all are present, synthetic fallback otherwise."""
    if data_dir is not None:
        data_dir = Path(data_dir)
        wanted = [data_dir / shift_filename(spec.id, spec.dim)]
        wanted += [
            data_dir / rotation_filename(spec.id, spec.dim, k) for k in range(n_rotations)
        ]
        if all(p.exists() for p in wanted):
            data = load_problem_data(data_dir, spec.id, spec.dim, n_rotations)
            data.validate(spec)
            return data
    data = synthesize_problem_data(
        spec.id, problem_index, spec.dim, spec.lower, spec.upper, n_rotations
    )
    data.validate(spec)
    return data
