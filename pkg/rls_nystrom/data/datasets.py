"""
Dataset loading, validation and preprocessing.

Supports comma-separated files (optional header, optional label column,
categorical columns encoded to integer codes) and the sparse LIBSVM text
format, densified on load. Preprocessing expands categorical columns into 0/1
indicators, then mean-centers and scales every column to unit population
variance.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np
from sklearn.preprocessing import OneHotEncoder, StandardScaler

from rls_nystrom.core.exceptions import ArgumentError, DataFormatError, DataParseError

logger = logging.getLogger(__name__)

VARIANCE_CONVENTION = "population"


@dataclass
class Dataset:
    """An n x d real feature matrix with optional labels."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Optional[List[str]] = None
    # feature column -> ordered category strings, for columns loaded as codes
    categories: Dict[int, List[str]] = field(default_factory=dict)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise ArgumentError(f"features must be a 2-D matrix, got shape {features.shape}")
        if features.shape[0] < 1:
            raise ArgumentError("a dataset needs at least one row")
        if not np.all(np.isfinite(features)):
            raise ArgumentError("features contain non-finite entries")
        self.features = features

        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=float).ravel()
            if labels.shape[0] != features.shape[0]:
                raise ArgumentError(
                    f"labels have length {labels.shape[0]} but there are {features.shape[0]} rows"
                )
            self.labels = labels

        if self.feature_names is not None and len(self.feature_names) != features.shape[1]:
            raise ArgumentError(
                f"{len(self.feature_names)} feature names for {features.shape[1]} columns"
            )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Rows selected by index, labels carried along."""
        indices = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else self.labels[indices]
        return Dataset(self.features[indices], labels, self.feature_names, dict(self.categories))


@dataclass
class PreprocessReport:
    """Fitted scaler and encoder of a preprocessing pass, reusable on new data."""

    scaler: StandardScaler
    encoder: Optional[OneHotEncoder]
    categorical_columns: List[int]
    input_columns: int
    variance_convention: str = VARIANCE_CONVENTION

    @property
    def means(self) -> np.ndarray:
        return self.scaler.mean_

    @property
    def scales(self) -> np.ndarray:
        return self.scaler.scale_

    @property
    def category_values(self) -> Dict[int, List[float]]:
        if self.encoder is None:
            return {}
        return {column: levels.tolist()
                for column, levels in zip(self.categorical_columns, self.encoder.categories_)}

    @property
    def expanded_categoricals(self) -> List[Tuple[int, int]]:
        return [(column, len(levels)) for column, levels in self.category_values.items()]

    def to_dict(self) -> Dict:
        return {
            "means": self.means.tolist(),
            "scales": self.scales.tolist(),
            "expanded_categoricals": [list(item) for item in self.expanded_categoricals],
            "category_values": {str(k): v for k, v in self.category_values.items()},
            "variance_convention": self.variance_convention,
        }


class DatasetInfo(NamedTuple):
    """Static metadata of a benchmark dataset."""

    name: str
    n: int
    d: int
    task: str
    source: str


DATASET_REGISTRY: Dict[str, DatasetInfo] = {
    "yearpredictionmsd": DatasetInfo(
        "YearPredictionMSD", 515345, 90, "regression",
        "https://archive.ics.uci.edu/ml/datasets/yearpredictionmsd"),
    "covertype": DatasetInfo(
        "Covertype", 581012, 54, "classification",
        "https://archive.ics.uci.edu/ml/datasets/covertype"),
    "cod-rna": DatasetInfo(
        "Cod-RNA", 331152, 8, "classification",
        "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/"),
    "adult": DatasetInfo(
        "Adult", 48842, 110, "classification",
        "https://archive.ics.uci.edu/ml/datasets/adult"),
}


def describe_dataset(name: str) -> DatasetInfo:
    """Look up a benchmark dataset by (case-insensitive) name.

    Raises:
        ArgumentError: If the name is not registered
    """
    key = name.strip().lower()
    if key not in DATASET_REGISTRY:
        known = ", ".join(info.name for info in DATASET_REGISTRY.values())
        raise ArgumentError(f"unknown dataset '{name}', known datasets: {known}")
    return DATASET_REGISTRY[key]


def _parse_float(token: str, row: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataParseError(f"cannot parse '{token}' as a number", row=row) from None
    if not np.isfinite(value):
        raise DataParseError(f"non-finite value '{token}'", row=row)
    return value


def _is_numeric(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_csv(
    path: str,
    label_column: Optional[int] = None,
    categorical_columns: Optional[Iterable[int]] = None
) -> Dataset:
    """Load a comma-separated file into a Dataset.

    A first row containing any non-numeric cell is treated as a header. Cells
    of categorical columns may hold arbitrary strings; they are replaced by
    integer codes in sorted order of the distinct strings.

    Args:
        path: File path (UTF-8)
        label_column: Index of the file column holding labels (optional)
        categorical_columns: File column indices loaded as category codes

    Returns:
        Dataset

    Raises:
        DataFormatError: Ragged rows (with the 1-based row number)
        DataParseError: Non-numeric cell in a numeric column
    """
    categorical = set(categorical_columns or [])

    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [(number, row) for number, row in enumerate(csv.reader(f), start=1)
                if row and any(cell.strip() for cell in row)]

    if not rows:
        raise DataFormatError(f"{path} contains no data rows")

    header = None
    first_number, first_row = rows[0]
    if not all(_is_numeric(cell) for i, cell in enumerate(first_row) if i not in categorical):
        header = [cell.strip() for cell in first_row]
        rows = rows[1:]
        if not rows:
            raise DataFormatError(f"{path} contains a header but no data rows")

    width = len(header) if header is not None else len(rows[0][1])
    if label_column is not None and not 0 <= label_column < width:
        raise ArgumentError(f"label column {label_column} out of range for {width} columns")

    for number, row in rows:
        if len(row) != width:
            raise DataFormatError(f"expected {width} fields, found {len(row)}", row=number)

    columns = [c for c in range(width) if c != label_column]
    values = np.empty((len(rows), len(columns)))
    labels = np.empty(len(rows)) if label_column is not None else None
    categories: Dict[int, List[str]] = {}

    for j, column in enumerate(columns):
        cells = [row[column].strip() for _, row in rows]
        if column in categorical:
            levels = sorted(set(cells))
            codes = {level: code for code, level in enumerate(levels)}
            values[:, j] = [codes[cell] for cell in cells]
            categories[j] = levels
        else:
            values[:, j] = [_parse_float(cell, number) for cell, (number, _) in zip(cells, rows)]

    if label_column is not None:
        labels[:] = [_parse_float(row[label_column].strip(), number) for number, row in rows]

    feature_names = None
    if header is not None:
        feature_names = [header[c] for c in columns]

    logger.info(f"Loaded {len(rows)} rows x {len(columns)} features from {path}")
    return Dataset(values, labels, feature_names, categories)


def save_csv(data: Dataset, path: str, include_labels: bool = True) -> None:
    """Write a Dataset as CSV; labels, when present, go in the last column."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        if data.feature_names is not None:
            names = list(data.feature_names)
            if include_labels and data.labels is not None:
                names.append("label")
            writer.writerow(names)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.features[i]]
            if include_labels and data.labels is not None:
                row.append(repr(float(data.labels[i])))
            writer.writerow(row)
    logger.info(f"Wrote {data.n} rows to {path}")


def load_libsvm(path: str) -> Dataset:
    """Load a LIBSVM-format file (`<label> <idx>:<val> ...`) as a dense Dataset.

    Indices are 1-based and strictly increasing within a line; absent indices
    are zero and d is the largest index seen.

    Raises:
        DataFormatError: Non-increasing index within a line
        DataParseError: Unparsable label, index or value
    """
    labels: List[float] = []
    entries: List[List[Tuple[int, float]]] = []
    max_index = 0

    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_parse_float(tokens[0], number))

            row: List[Tuple[int, float]] = []
            previous = 0
            for token in tokens[1:]:
                index_text, sep, value_text = token.partition(":")
                if not sep:
                    raise DataParseError(f"malformed feature token '{token}'", row=number)
                try:
                    index = int(index_text)
                except ValueError:
                    raise DataParseError(f"malformed feature index '{index_text}'", row=number) from None
                if index < 1:
                    raise DataFormatError(f"feature index {index} is not 1-based", row=number)
                if index <= previous:
                    raise DataFormatError(
                        f"feature index {index} does not increase (previous {previous})", row=number
                    )
                previous = index
                row.append((index, _parse_float(value_text, number)))
            max_index = max(max_index, previous)
            entries.append(row)

    if not entries:
        raise DataFormatError(f"{path} contains no data rows")

    features = np.zeros((len(entries), max(max_index, 1)))
    for i, row in enumerate(entries):
        for index, value in row:
            features[i, index - 1] = value

    logger.info(f"Loaded {len(entries)} rows x {features.shape[1]} features from {path}")
    return Dataset(features, np.asarray(labels))


def save_libsvm(data: Dataset, path: str) -> None:
    """Write a Dataset in LIBSVM format, omitting zero entries.

    Rows without labels are written with label 0. Values use repr() so a
    reload reproduces the dense matrix exactly. The first row always carries
    column d, as an explicit zero if need be, so the reload keeps d.
    """
    labels = data.labels if data.labels is not None else np.zeros(data.n)
    with open(path, "w", encoding="utf-8") as f:
        for i in range(data.n):
            parts = [repr(float(labels[i]))]
            for j in np.flatnonzero(data.features[i]):
                parts.append(f"{j + 1}:{float(data.features[i, j])!r}")
            if i == 0 and data.features[0, -1] == 0:
                parts.append(f"{data.d}:0.0")
            f.write(" ".join(parts) + "\n")
    logger.info(f"Wrote {data.n} rows to {path}")


def load_dataset(path: str, fmt: Optional[str] = None, label_column: Optional[int] = None,
                 categorical_columns: Optional[Iterable[int]] = None) -> Dataset:
    """Load a dataset, choosing the reader from fmt or the file extension.

    Args:
        path: File path
        fmt: "csv" or "libsvm"; inferred from the extension when omitted
        label_column: CSV label column
        categorical_columns: CSV categorical columns

    Returns:
        Dataset
    """
    if fmt is None:
        fmt = "csv" if path.lower().endswith((".csv", ".txt.csv")) else "libsvm"
    if fmt == "csv":
        return load_csv(path, label_column, categorical_columns)
    if fmt == "libsvm":
        return load_libsvm(path)
    raise ArgumentError(f"unknown dataset format '{fmt}'")


def _expand(features: np.ndarray, columns: List[int], encoder: Optional[OneHotEncoder]) -> np.ndarray:
    """Replace each categorical column, in place, by its block of indicators."""
    if encoder is None:
        return features
    indicators = encoder.transform(features[:, columns])
    blocks: Dict[int, np.ndarray] = {}
    start = 0
    for column, levels in zip(columns, encoder.categories_):
        blocks[column] = indicators[:, start:start + len(levels)]
        start += len(levels)
    return np.hstack([blocks[j] if j in blocks else features[:, [j]] for j in range(features.shape[1])])


def preprocess(data: Dataset, categorical_columns: Optional[Set[int]] = None) -> Tuple[Dataset, PreprocessReport]:
    """Expand categoricals into indicators, then center and scale every column.

    Each categorical column is replaced in place by one 0/1 indicator per
    distinct value (sorted). Columns are then centered and divided by their
    population standard deviation; constant columns keep scale 1.

    Args:
        data: Input dataset
        categorical_columns: Feature column indices to expand

    Returns:
        (preprocessed Dataset, PreprocessReport)
    """
    columns = sorted(set(categorical_columns or []))
    for column in columns:
        if not 0 <= column < data.d:
            raise ArgumentError(f"categorical column {column} out of range for d={data.d}")

    encoder = None
    if columns:
        encoder = OneHotEncoder(handle_unknown="ignore", sparse_output=False, dtype=float)
        encoder.fit(data.features[:, columns])
    matrix = _expand(data.features, columns, encoder)

    scaler = StandardScaler()
    matrix = scaler.fit_transform(matrix)

    constant_count = int(np.count_nonzero(scaler.var_ <= (data.n * np.finfo(float).eps * scaler.mean_) ** 2))
    if constant_count:
        logger.warning(f"{constant_count} constant column(s) kept with scale 1")

    report = PreprocessReport(scaler, encoder, columns, data.d)
    names = None
    if data.feature_names is not None:
        names = []
        levels_of = dict(zip(columns, encoder.categories_)) if encoder is not None else {}
        for j, name in enumerate(data.feature_names):
            if j not in levels_of:
                names.append(name)
                continue
            labels = data.categories.get(j)
            for level in levels_of[j]:
                suffix = labels[int(level)] if labels is not None else f"{level:g}"
                names.append(f"{name}={suffix}")

    result = Dataset(matrix, data.labels, names)
    logger.debug(f"Preprocessed {data.d} columns into {result.d} ({len(columns)} categorical expanded)")
    return result, report


def apply_preprocess(data: Dataset, report: PreprocessReport) -> Dataset:
    """Apply a recorded preprocessing pass to new data (e.g. a test split).

    Categorical values unseen during preprocessing produce all-zero
    indicators before centering.
    """
    if data.d != report.input_columns:
        raise ArgumentError(f"data has {data.d} columns but the report was fit on {report.input_columns}")
    matrix = _expand(data.features, report.categorical_columns, report.encoder)
    return Dataset(report.scaler.transform(matrix), data.labels)

def one_vs_rest(labels: np.ndarray, positive: float) -> np.ndarray:
    """Map a label vector to +1 for `positive` and -1 for every other class."""
    labels = np.asarray(labels, dtype=float)
    return np.where(labels == positive, 1.0, -1.0)
