"""Reading and writing MEKA-style multi-label ARFF streams.

MEKA stores the label count in the relation name: ``-C 14`` means the
first 14 attributes are the labels, ``-C -3`` means the last 3 are. Data
rows may be dense (``1,0,3.5``) or sparse (``{0 1,2 3.5}``); values omitted
from a sparse row are 0.
"""
from __future__ import annotations

import csv
import gzip
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence, TextIO

import numpy as np

from .core import MISSING, FeatureSchema, Instance


class ArffError(ValueError):
    """Malformed ARFF input. ``line`` is the 1-based line number, if known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Attribute:
    name: str
    categories: Optional[tuple[str, ...]] = None  # None for numeric

    @property
    def is_nominal(self) -> bool:
        return self.categories is not None


@dataclass(frozen=True)
class StreamHeader:
    relation_name: str
    label_count: int
    labels_at_front: bool
    attributes: tuple[Attribute, ...]

    @property
    def n_features(self) -> int:
        return len(self.attributes) - self.label_count

    @property
    def label_indices(self) -> range:
        if self.labels_at_front:
            return range(self.label_count)
        return range(len(self.attributes) - self.label_count, len(self.attributes))

    @property
    def feature_indices(self) -> range:
        if self.labels_at_front:
            return range(self.label_count, len(self.attributes))
        return range(self.n_features)

    @property
    def feature_attributes(self) -> tuple[Attribute, ...]:
        return tuple(self.attributes[i] for i in self.feature_indices)

    @property
    def feature_schema(self) -> FeatureSchema:
        return FeatureSchema(tuple(len(a.categories) if a.is_nominal else 0
                                   for a in self.feature_attributes))


_LABEL_OPTION = re.compile(r"(?:^|[\s'\":])-C\s+(-?\d+)")
_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _split_name(rest: str) -> tuple[str, str]:
    rest = rest.strip()
    if rest[:1] in ("'", '"'):
        quote = rest[0]
        end = rest.find(quote, 1)
        if end < 0:
            raise ArffError(f"unterminated quoted name: {rest!r}")
        return rest[1:end], rest[end + 1:].strip()
    parts = rest.split(None, 1)
    if len(parts) < 2:
        raise ArffError(f"attribute declaration without a type: {rest!r}")
    return parts[0], parts[1].strip()


def _parse_categories(spec: str) -> tuple[str, ...]:
    inner = spec.strip()[1:-1]
    row = next(csv.reader([inner], skipinitialspace=True, quotechar="'"))
    return tuple(c.strip().strip('"') for c in row)


def _parse_attribute(rest: str) -> Attribute:
    name, kind = _split_name(rest)
    if kind.startswith("{"):
        if not kind.endswith("}"):
            raise ArffError(f"unterminated nominal declaration for {name!r}")
        return Attribute(name, _parse_categories(kind))
    if kind.lower() in _NUMERIC_TYPES:
        return Attribute(name)
    raise ArffError(f"unsupported attribute type {kind!r} for {name!r}")


def parse_header(text: str) -> StreamHeader:
    """Parse the header section (everything up to ``@data``) of an ARFF file."""
    relation = None
    attributes = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        keyword, _, rest = line.partition(" ")
        keyword = keyword.lower()
        if keyword == "@relation":
            relation = rest.strip()
        elif keyword == "@attribute":
            attributes.append(_parse_attribute(rest))
        elif keyword == "@data":
            break
        elif relation is None:
            raise ArffError("header must begin with an @relation line")
    if relation is None:
        raise ArffError("header must begin with an @relation line")

    match = _LABEL_OPTION.search(relation)
    if match is None:
        raise ArffError("label count undeclared (no -C option in @relation)")
    c = int(match.group(1))
    if c == 0:
        raise ArffError("label count undeclared (-C 0)")
    if len(attributes) <= abs(c):
        raise ArffError(f"{len(attributes)} attributes cannot hold {abs(c)} labels plus features")
    name = relation.strip("'\"")
    name = name.split(":", 1)[0].strip() if ":" in name else name.split()[0]
    header = StreamHeader(name, abs(c), c > 0, tuple(attributes))
    for i in header.label_indices:
        attr = header.attributes[i]
        if attr.is_nominal and not set(attr.categories) <= {"0", "1"}:
            raise ArffError(f"label attribute {attr.name!r} is not binary: {attr.categories}")
    return header


def _feature_value(attr: Attribute, token: Optional[str]) -> float:
    if token is None:  # omitted from a sparse row
        return 0.0
    token = token.strip()
    if token == "?":
        return MISSING
    if attr.is_nominal:
        token = token.strip("'\"")
        try:
            return float(attr.categories.index(token))
        except ValueError:
            return float(len(attr.categories))  # reserved unknown index
    return float(token)


def _label_value(attr: Attribute, token: Optional[str]) -> int:
    if token is None:
        return 0
    token = token.strip().strip("'\"")
    if token == "?":
        raise ValueError(f"missing value for label {attr.name!r}")
    value = float(token)
    if value not in (0.0, 1.0):
        raise ValueError(f"label {attr.name!r} has value {token!r}, expected 0 or 1")
    return int(value)


def read_instance(header: StreamHeader, line: str, line_no: Optional[int] = None) -> Instance:
    """Parse one dense or sparse ``@data`` row."""
    n_attr = len(header.attributes)
    text = line.strip()
    try:
        if text.startswith("{"):
            if not text.endswith("}"):
                raise ValueError("unterminated sparse row")
            tokens = [None] * n_attr
            body = text[1:-1].strip()
            if body:
                for pair in body.split(","):
                    index, _, value = pair.strip().partition(" ")
                    index = int(index)
                    if not 0 <= index < n_attr:
                        raise ValueError(f"sparse index {index} out of range")
                    tokens[index] = value.strip()
        else:
            tokens = next(csv.reader([text], quotechar="'", skipinitialspace=True))
            if len(tokens) != n_attr:
                raise ValueError(f"expected {n_attr} values, found {len(tokens)}")
        attrs = header.attributes
        labels = np.array([_label_value(attrs[i], tokens[i]) for i in header.label_indices],
                          dtype=np.int8)
        features = np.array([_feature_value(attrs[i], tokens[i]) for i in header.feature_indices],
                            dtype=np.float64)
    except ValueError as exc:
        raise ArffError(str(exc), line_no) from None
    return Instance(features, labels)


def _open_text(path) -> TextIO:
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


class ArffStream:
    """Lazily iterate the instances of an ARFF file.

    The header is parsed on construction; iterating reopens the file and
    yields one :class:`Instance` per data row without holding the file in
    memory.
    """

    def __init__(self, path):
        self.path = Path(path)
        lines = []
        with _open_text(self.path) as fh:
            for line in fh:
                lines.append(line)
                if line.strip().lower().startswith("@data"):
                    break
            else:
                raise ArffError(f"{self.path}: no @data section")
        self._data_line = len(lines)
        try:
            self.header = parse_header("".join(lines))
        except ArffError as exc:
            raise ArffError(f"{self.path}: {exc}") from None

    def __iter__(self) -> Iterator[Instance]:
        with _open_text(self.path) as fh:
            for line_no, line in enumerate(fh, start=1):
                if line_no <= self._data_line:
                    continue
                stripped = line.strip()
                if not stripped or stripped.startswith("%"):
                    continue
                try:
                    yield read_instance(self.header, stripped, line_no)
                except ArffError as exc:
                    raise ArffError(f"{self.path}: {exc}") from None


def _format_number(value: float) -> str:
    if math.isnan(value):
        return "?"
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def format_instance(header: StreamHeader, instance: Instance) -> str:
    """Serialize an instance as a dense data row."""
    values = [""] * len(header.attributes)
    for i, bit in zip(header.label_indices, instance.labels):
        values[i] = str(int(bit))
    for i, x in zip(header.feature_indices, instance.features):
        attr = header.attributes[i]
        if attr.is_nominal and not math.isnan(x):
            values[i] = attr.categories[int(x)] if int(x) < len(attr.categories) else "?"
        else:
            values[i] = _format_number(x)
    return ",".join(values)


def format_header(header: StreamHeader, comments: Sequence[str] = ()) -> str:
    c = header.label_count if header.labels_at_front else -header.label_count
    out = [f"% {c}" for c in comments]
    out.append(f"@relation '{header.relation_name}: -C {c}'")
    out.append("")
    for attr in header.attributes:
        if attr.is_nominal:
            out.append(f"@attribute {attr.name} {{{','.join(attr.categories)}}}")
        else:
            out.append(f"@attribute {attr.name} numeric")
    out.append("")
    out.append("@data")
    return "\n".join(out) + "\n"


def write_arff(path, header: StreamHeader, instances, comments: Sequence[str] = ()) -> int:
    """Write a dense MEKA ARFF file; returns the number of rows written."""
    path = Path(path)
    opener = gzip.open(path, "wt", encoding="utf-8") if path.suffix == ".gz" else \
        open(path, "w", encoding="utf-8")
    count = 0
    with opener as fh:
        fh.write(format_header(header, comments))
        for instance in instances:
            fh.write(format_instance(header, instance))
            fh.write("\n")
            count += 1
    return count


# -- synthetic streams ------------------------------------------------------

@dataclass(frozen=True)
class SyntheticStreamConfig:
    """A stream whose features are noisy sums of per-label prototypes.

    Each label is relevant with probability ``label_density``; with
    probability ``correlation`` label ``j`` instead copies label ``j-1``.
    From ``drift_point`` on every feature mean moves by ``drift_shift`` and,
    if ``swap_labels`` is set, the label-to-prototype assignment is reversed.
    """

    n_labels: int = 4
    n_features: int = 8
    n_instances: int = 1000
    seed: int = 0
    drift_point: Optional[int] = None
    drift_shift: float = 1.0
    swap_labels: bool = False
    label_density: float = 0.3
    correlation: float = 0.0
    separation: float = 2.0
    noise: float = 1.0
    binary_features: bool = False

    def __post_init__(self):
        if self.n_labels < 1 or self.n_features < 1 or self.n_instances < 0:
            raise ValueError("synthetic stream needs L >= 1, M >= 1, N >= 0")
        if self.drift_point is not None and not 0 <= self.drift_point < self.n_instances:
            raise ValueError("drift_point must lie inside the stream")
        if not 0.0 <= self.label_density <= 1.0 or not 0.0 <= self.correlation <= 1.0:
            raise ValueError("label_density and correlation are probabilities")


def synthetic_header(config: SyntheticStreamConfig, name: str = "synthetic") -> StreamHeader:
    labels = tuple(Attribute(f"label{j}", ("0", "1")) for j in range(config.n_labels))
    if config.binary_features:
        feats = tuple(Attribute(f"x{i}", ("0", "1")) for i in range(config.n_features))
    else:
        feats = tuple(Attribute(f"x{i}") for i in range(config.n_features))
    return StreamHeader(name, config.n_labels, True, labels + feats)


def generate_synthetic(config: SyntheticStreamConfig) -> Iterator[Instance]:
    """Yield a deterministic labeled stream for ``config``."""
    rng = np.random.default_rng(config.seed)
    L, M = config.n_labels, config.n_features
    prototypes = rng.normal(0.0, config.separation, size=(L, M))
    swapped = prototypes[::-1].copy()
    offset = -config.label_density * prototypes.sum(axis=0)  # centre the pre-drift mean
    for t in range(config.n_instances):
        y = (rng.random(L) < config.label_density).astype(np.int8)
        if config.correlation > 0.0:
            copy = rng.random(L) < config.correlation
            for j in range(1, L):
                if copy[j]:
                    y[j] = y[j - 1]
        drifted = config.drift_point is not None and t >= config.drift_point
        protos = swapped if drifted and config.swap_labels else prototypes
        x = offset + y @ protos + rng.normal(0.0, config.noise, size=M)
        if drifted:
            x = x + config.drift_shift
        if config.binary_features:
            x = (x > 0).astype(np.float64)
        yield Instance(x, y)
