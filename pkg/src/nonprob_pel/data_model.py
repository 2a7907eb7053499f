"""Domain types for the two-sample setting plus CSV ingestion and validation.

Files are plain comma-separated text with a header row, '.' decimal marks and
case-sensitive column names. The intercept is never stored in files; it is
appended internally when a model spec asks for it.
"""

import csv
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files or inconsistent samples."""


@dataclass(frozen=True)
class NonProbSample:
    """The non-probability sample: covariate rows and the study variable."""

    x: np.ndarray  # (n_A, q)
    y: np.ndarray  # (n_A,)

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float)).ravel()
        if x.ndim != 2:
            raise DataError("x must be a 2-D array")
        if x.shape[0] != y.size:
            raise DataError(
                f"x has {x.shape[0]} rows but y has {y.size} entries")
        if y.size < 2:
            raise DataError("need at least 2 rows")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise DataError("non-finite value in sample")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def q(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ProbSample:
    """The reference probability sample: covariates and survey weights."""

    x: np.ndarray  # (n_B, q)
    d: np.ndarray  # (n_B,)

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=float))
        d = np.ascontiguousarray(np.asarray(self.d, dtype=float)).ravel()
        if x.ndim != 2:
            raise DataError("x must be a 2-D array")
        if x.shape[0] != d.size:
            raise DataError(
                f"x has {x.shape[0]} rows but d has {d.size} entries")
        if d.size < 2:
            raise DataError("need at least 2 rows")
        if not (np.isfinite(x).all() and np.isfinite(d).all()):
            raise DataError("non-finite value in sample")
        if (d <= 0).any():
            i = int(np.argmax(d <= 0))
            raise DataError(f"non-positive survey weight at row {i + 1}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.size

    @property
    def q(self) -> int:
        return self.x.shape[1]

    @property
    def N_hat(self) -> float:
        return float(self.d.sum())


@dataclass(frozen=True)
class PopulationFrame:
    """A full finite population; used by the simulation harness and oracles."""

    x: np.ndarray  # (N, q)
    y: np.ndarray  # (N,)

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.x, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float)).ravel()
        if x.ndim != 2 or x.shape[0] != y.size or y.size < 1:
            raise DataError("inconsistent population arrays")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return self.y.size

    @property
    def mu_y(self) -> float:
        return float(self.y.mean())


@dataclass(frozen=True)
class ModelSpec:
    """Which covariate columns and link a working model uses.

    columns=None means all available covariates. Dropping a column is how the
    simulation harness encodes model misspecification.
    """

    link: str = "logit"  # "logit" or "identity"
    include_intercept: bool = True
    columns: tuple = None  # tuple of int column indices, or None
    variance_function: str = "constant"

    def __post_init__(self):
        if self.link not in ("logit", "identity"):
            raise ValueError(f"unknown link {self.link!r}")
        if self.variance_function != "constant":
            raise ValueError("only the constant variance function is supported")
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(int(c) for c in self.columns))

    def resolve_columns(self, q: int) -> tuple:
        cols = tuple(range(q)) if self.columns is None else self.columns
        for c in cols:
            if not 0 <= c < q:
                raise ValueError(f"column index {c} out of range for q={q}")
        return cols


def _read_table(path, needed):
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for name in needed:
            if name not in header:
                raise DataError(f"{path}: missing column {name!r}")
        pos = {name: header.index(name) for name in needed}
        data = {name: [] for name in needed}
        for rownum, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            for name, j in pos.items():
                if j >= len(row) or row[j].strip() == "":
                    raise DataError(
                        f"{path}: row {rownum}: blank value in column {name!r}")
                try:
                    data[name].append(float(row[j]))
                except ValueError:
                    raise DataError(
                        f"{path}: row {rownum}: non-numeric value "
                        f"{row[j]!r} in column {name!r}") from None
    if not data[needed[0]]:
        raise DataError(f"{path}: no data rows")
    return data


def load_nonprob_sample(path, y_column, x_columns) -> NonProbSample:
    """Read the non-probability sample from a headed CSV file."""
    x_columns = list(x_columns)
    data = _read_table(path, [y_column] + x_columns)
    x = np.column_stack([data[c] for c in x_columns])
    return NonProbSample(x=x, y=np.asarray(data[y_column]))


def load_prob_sample(path, weight_column, x_columns) -> ProbSample:
    """Read the reference probability sample from a headed CSV file."""
    x_columns = list(x_columns)
    data = _read_table(path, [weight_column] + x_columns)
    x = np.column_stack([data[c] for c in x_columns])
    return ProbSample(x=x, d=np.asarray(data[weight_column]))


def _write_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{float(v):.17g}" for v in row])


def write_nonprob_sample(sample: NonProbSample, path, y_column="y",
                         x_columns=None) -> None:
    """Emit a sample as CSV; values round-trip exactly through load()."""
    q = sample.q
    if x_columns is None:
        x_columns = [f"x{j + 1}" for j in range(q)]
    cols = [sample.y] + [sample.x[:, j] for j in range(q)]
    _write_csv(path, [y_column] + list(x_columns), cols)


def write_prob_sample(sample: ProbSample, path, weight_column="d",
                      x_columns=None) -> None:
    q = sample.q
    if x_columns is None:
        x_columns = [f"x{j + 1}" for j in range(q)]
    cols = [sample.d] + [sample.x[:, j] for j in range(q)]
    _write_csv(path, [weight_column] + list(x_columns), cols)


def validate_pair(a: NonProbSample, b: ProbSample) -> None:
    """Check that the two samples share a covariate dimension."""
    if a.q != b.q:
        raise DataError(
            f"covariate dimension mismatch: non-probability sample has q={a.q}, "
            f"probability sample has q={b.q}")
