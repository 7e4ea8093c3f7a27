"""Dataset ingestion, normalization, splitting, presets, and synthetic data.

Files are plain delimited numeric text, one record per line, no quoting.
Normalization records are JSON-serializable dicts that reproduce the exact
affine map on held-out data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "SplitSpec",
    "load_delimited",
    "normalize",
    "apply_normalization",
    "denormalize",
    "split",
    "synthetic_sinc",
    "uci_preset",
    "PRESETS",
    "dump_dataset",
    "write_normalization_record",
    "read_normalization_record",
]


@dataclass(frozen=True)
class Dataset:
    """Immutable (inputs, targets) pair with optional provenance.

    ``normalization`` records the per-feature affine map already applied,
    or None for raw data.
    """

    inputs: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] | None = None
    normalization: dict | None = None

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    train_size: int
    seed: int


# width, train size, test size, feature count for the six benchmark sets
PRESETS = {
    "ABA": (0.1, 2000, 2177, 7),
    "ASN": (0.5, 751, 752, 5),
    "HOUSING": (2.0, 400, 106, 13),
    "CON": (0.5, 500, 530, 9),
    "ENERGY": (0.5, 600, 168, 7),
    "WQW": (1.0, 2000, 2898, 12),
}


def uci_preset(name: str) -> tuple[float, int, int, int]:
    """(kernel width, train size, test size, feature count) for a known set."""
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise ValueError(
            f"unknown dataset preset {name!r}; known: {sorted(PRESETS)}"
        ) from None


def load_delimited(path, delimiter: str | None = None, target_column: int = -1,
                   header: bool = False) -> Dataset:
    """Parse a delimited numeric text file into a Dataset.

    delimiter None means any whitespace.  Every field must parse as a finite
    real; the first offending row/column aborts the load.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not lines:
        raise ValueError(f"{path}: no data rows")

    names = None
    if header:
        _, head = lines[0]
        names = tuple(t.strip() for t in head.split(delimiter))
        lines = lines[1:]
        if not lines:
            raise ValueError(f"{path}: header but no data rows")

    rows = []
    width = None
    for lineno, ln in lines:
        toks = ln.split(delimiter)
        if width is None:
            width = len(toks)
            if width < 2:
                raise ValueError(f"{path}: row {lineno}: need at least 2 columns")
        elif len(toks) != width:
            raise ValueError(
                f"{path}: row {lineno}: expected {width} columns, got {len(toks)}"
            )
        vals = []
        for col, tok in enumerate(toks):
            try:
                v = float(tok)
            except ValueError:
                raise ValueError(
                    f"{path}: row {lineno}, column {col + 1}: "
                    f"cannot parse {tok!r}"
                ) from None
            if not math.isfinite(v):
                raise ValueError(
                    f"{path}: row {lineno}, column {col + 1}: "
                    f"non-finite value {tok!r}"
                )
            vals.append(v)
        rows.append(vals)

    data = np.asarray(rows, dtype=np.float64)
    tcol = target_column if target_column >= 0 else data.shape[1] + target_column
    if not 0 <= tcol < data.shape[1]:
        raise ValueError(
            f"target column {target_column} out of range for {data.shape[1]} columns"
        )
    feat_cols = [j for j in range(data.shape[1]) if j != tcol]
    feat_names = None
    if names is not None:
        feat_names = tuple(names[j] for j in feat_cols)
    return Dataset(
        inputs=data[:, feat_cols],
        targets=data[:, tcol],
        feature_names=feat_names,
    )


def normalize(ds: Dataset, scheme: str = "minmax01") -> tuple[Dataset, dict]:
    """Rescale features (targets stay raw); returns the new dataset and a
    record sufficient to reproduce the map on held-out data.

    minmax01 maps each feature to [0, 1] and rejects constant features;
    zscore centers and scales by the standard deviation; none is identity.
    """
    x = ds.inputs
    if scheme == "none":
        record = {"scheme": "none"}
        return apply_normalization(ds, record), record
    if scheme == "minmax01":
        lo = x.min(axis=0)
        hi = x.max(axis=0)
        flat = np.flatnonzero(hi <= lo)
        if flat.size:
            raise ValueError(
                f"minmax01 normalization: constant feature(s) at column(s) "
                f"{flat.tolist()}"
            )
        record = {"scheme": "minmax01", "offset": lo.tolist(),
                  "scale": (hi - lo).tolist()}
    elif scheme == "zscore":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        flat = np.flatnonzero(std <= 0.0)
        if flat.size:
            raise ValueError(
                f"zscore normalization: constant feature(s) at column(s) "
                f"{flat.tolist()}"
            )
        record = {"scheme": "zscore", "offset": mean.tolist(), "scale": std.tolist()}
    else:
        raise ValueError(f"unknown normalization scheme {scheme!r}")
    return apply_normalization(ds, record), record


def apply_normalization(ds: Dataset, record: dict) -> Dataset:
    """Apply a stored normalization record: x -> (x - offset) / scale."""
    if record["scheme"] == "none":
        return Dataset(inputs=ds.inputs.copy(), targets=ds.targets.copy(),
                       feature_names=ds.feature_names, normalization=record)
    offset = np.asarray(record["offset"], dtype=np.float64)
    scale = np.asarray(record["scale"], dtype=np.float64)
    if offset.shape[0] != ds.n_features:
        raise ValueError(
            f"record covers {offset.shape[0]} features, dataset has {ds.n_features}"
        )
    return Dataset(
        inputs=(ds.inputs - offset) / scale,
        targets=ds.targets.copy(),
        feature_names=ds.feature_names,
        normalization=record,
    )


def denormalize(ds: Dataset, record: dict) -> Dataset:
    """Invert :func:`apply_normalization`."""
    if record["scheme"] == "none":
        return Dataset(inputs=ds.inputs.copy(), targets=ds.targets.copy(),
                       feature_names=ds.feature_names)
    offset = np.asarray(record["offset"], dtype=np.float64)
    scale = np.asarray(record["scale"], dtype=np.float64)
    return Dataset(
        inputs=ds.inputs * scale + offset,
        targets=ds.targets.copy(),
        feature_names=ds.feature_names,
    )


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded uniform random split: first ``train_size`` rows of a random
    permutation go to train, the rest to test."""
    n = ds.n_samples
    if not 0 < spec.train_size < n:
        raise ValueError(
            f"train_size must lie in (0, {n}), got {spec.train_size}"
        )
    perm = np.random.default_rng(spec.seed).permutation(n)
    tr, te = perm[:spec.train_size], perm[spec.train_size:]
    return (
        Dataset(ds.inputs[tr], ds.targets[tr], ds.feature_names, ds.normalization),
        Dataset(ds.inputs[te], ds.targets[te], ds.feature_names, ds.normalization),
    )


def synthetic_sinc(n: int, noise_std: float = 0.0, seed: int = 0,
                   grid: bool = False) -> Dataset:
    """sin(x)/x on [-5, 5] (value 1 at x = 0) plus Gaussian target noise.

    grid=True uses an evenly spaced grid instead of uniform random inputs;
    an odd n then includes x = 0 exactly.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if noise_std < 0.0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    rng = np.random.default_rng(seed)
    if grid:
        x = np.linspace(-5.0, 5.0, n)
    else:
        x = rng.uniform(-5.0, 5.0, size=n)
    y = np.sinc(x / np.pi)
    if noise_std > 0.0:
        y = y + rng.normal(0.0, noise_std, size=n)
    return Dataset(inputs=x.reshape(-1, 1), targets=y)


def dump_dataset(ds: Dataset, path, delimiter: str = " "):
    """Write features plus target (last column) in loadable delimited form."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(ds.n_samples):
            fields = [repr(float(v)) for v in ds.inputs[i]]
            fields.append(repr(float(ds.targets[i])))
            fh.write(delimiter.join(fields) + "\n")


def write_normalization_record(record: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)


def read_normalization_record(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
