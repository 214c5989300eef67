"""Dataset manifests and CSV layouts.

A manifest is a JSON document::

    {
      "space": {"kind": "wasserstein", "grid_size": 200, "support": [0, 110]},
      "id_column": "id",
      "response": {"path": "y.csv", "format": "quantiles"},
      "predictors": [{"path": "x1.csv", "format": "samples"}, ...]
    }

Paths are relative to the manifest.  Every CSV has a header and its first
column holds the observation id; observations are aligned by id in the
order of the response file (or of the first predictor when there is no
response).  Layouts:

``samples``    long: ``id,value``; one row per sampled value (wasserstein)
``quantiles``  wide: ``id,q1..qM``; the quantile grid (wasserstein)
``densities``  wide: ``id,f1..fK``; density on equal cells of the support
               (wasserstein) or on the cells of the sphere grid, row-major
``pairs``      long: ``id,x1..xk``; samples binned on the sphere grid
``vectors``    wide: ``id,x1..xd``; coordinates (euclidean, plain sphere)
``matrices``   wide: ``id,m11,m12,..,mmm``; SPD matrix entries, row-major
"""

from __future__ import annotations

import csv
import json
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import GeodesicSpace, SpaceDescriptor, make_space
from .errors import IngestionError
from .wasserstein import density_from_quantiles, levels

FORMATS = {
    "wasserstein": ("samples", "quantiles", "densities"),
    "sphere": ("vectors", "densities", "pairs"),
    "spd": ("matrices",),
    "euclidean": ("vectors",),
}


@dataclass(frozen=True)
class FileSpec:
    path: str
    format: str
    name: str = ""


@dataclass
class DatasetManifest:
    space: dict
    predictors: list
    response: Optional[FileSpec] = None
    id_column: str = "id"
    base_dir: str = "."

    def descriptor(self, grid_size=None) -> SpaceDescriptor:
        """Space descriptor, optionally overriding the quantile grid size."""
        spec = dict(self.space)
        kind = spec.get("kind")
        try:
            if kind == "wasserstein":
                dim = grid_size or spec.get("grid_size", 200)
                return SpaceDescriptor("wasserstein", dim, support=tuple(spec["support"]))
            if kind == "sphere":
                grid = spec.get("grid")
                dim = spec.get("dim") if grid is None else int(np.prod([g[2] for g in grid]))
                return SpaceDescriptor("sphere", dim, grid=grid, orthant=bool(spec.get("orthant", False)))
            if kind == "spd":
                return SpaceDescriptor("spd", spec.get("size", 2))
            if kind == "euclidean":
                return SpaceDescriptor("euclidean", spec.get("dim", 1), support=spec.get("bounds"))
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"invalid space block in manifest: {exc}") from exc
        raise IngestionError(f"unknown space kind {kind!r} in manifest")

    def build_space(self, grid_size=None) -> GeodesicSpace:
        return make_space(self.descriptor(grid_size))

    def resolve(self, spec: FileSpec):
        return os.path.join(self.base_dir, spec.path)


def _file_spec(entry, idx):
    if not isinstance(entry, dict) or "path" not in entry or "format" not in entry:
        raise IngestionError(f"file entry {idx} needs 'path' and 'format'")
    name = entry.get("name") or os.path.splitext(os.path.basename(entry["path"]))[0]
    return FileSpec(entry["path"], entry["format"], name)


def load_manifest(path, require_response=True) -> DatasetManifest:
    """Read and check a manifest (files exist, formats fit the space)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise IngestionError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IngestionError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "space" not in data:
        raise IngestionError("manifest needs a 'space' block")
    preds = data.get("predictors") or []
    if not preds:
        raise IngestionError("manifest needs at least one predictor")
    response = data.get("response")
    if response is None and require_response:
        raise IngestionError("manifest needs a response file")
    manifest = DatasetManifest(
        space=data["space"],
        predictors=[_file_spec(e, i) for i, e in enumerate(preds)],
        response=_file_spec(response, "response") if response is not None else None,
        id_column=data.get("id_column", "id"),
        base_dir=os.path.dirname(os.path.abspath(path)),
    )
    kind = manifest.descriptor().kind
    specs = manifest.predictors + ([manifest.response] if manifest.response else [])
    for spec in specs:
        if spec.format not in FORMATS[kind]:
            raise IngestionError(f"format {spec.format!r} does not fit a {kind} space (use one of {FORMATS[kind]})")
        if not os.path.isfile(manifest.resolve(spec)):
            raise IngestionError(f"missing data file {manifest.resolve(spec)}")
    return manifest


# ---------------------------------------------------------------------------
# reading


def _read_rows(path, id_column):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = [r for r in reader if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if not header:
        raise IngestionError(f"{path} is empty")
    if header[0].strip() != id_column:
        raise IngestionError(f"{path}: first column must be {id_column!r}, found {header[0]!r}")
    return header, rows


def _float_rows(path, rows, width=None):
    out = []
    for lineno, row in enumerate(rows, start=2):
        try:
            values = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise IngestionError(f"{path}:{lineno}: non-numeric value ({exc})") from exc
        if width is not None and len(values) != width:
            raise IngestionError(f"{path}:{lineno}: expected {width} values, got {len(values)}")
        out.append(values)
    return out


def _grouped(path, rows, width):
    groups: OrderedDict = OrderedDict()
    for key, values in zip((r[0] for r in rows), _float_rows(path, rows, width)):
        groups.setdefault(key, []).append(values)
    return OrderedDict((k, np.asarray(v, dtype=float)) for k, v in groups.items())


def quantiles_from_density(density, support, grid_size):
    """Quantile grid of a histogram density on equal cells of ``support``.

    Mass is spread uniformly within each cell, so the CDF is piecewise
    linear through the cell edges.
    """
    f = np.asarray(density, dtype=float)
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise IngestionError("density values must be finite and non-negative")
    edges = np.linspace(support[0], support[1], len(f) + 1)
    mass = np.concatenate([[0.0], np.cumsum(f * np.diff(edges))])
    if mass[-1] <= 0:
        raise IngestionError("density is identically zero")
    if abs(mass[-1] - 1.0) > 0.01:
        raise IngestionError(f"density integrates to {mass[-1]:.4g}, expected 1 within 1%")
    cdf = mass / mass[-1]
    u = levels(grid_size)
    # first edge where the CDF reaches u, then linear within the cell
    k = np.clip(np.searchsorted(cdf, u, side="left"), 1, len(f))
    lo, hi = cdf[k - 1], cdf[k]
    frac = np.where(hi > lo, (u - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
    return edges[k - 1] + frac * (edges[k] - edges[k - 1])


def read_points(path, fmt, space: GeodesicSpace, id_column="id"):
    """Read one CSV into ``(ids, points)``; points are validated members."""
    header, rows = _read_rows(path, id_column)
    kind = space.kind
    if fmt in ("samples", "pairs"):
        width = len(header) - 1
        groups = _grouped(path, rows, width)
        ids = list(groups)
        if fmt == "samples":
            if width != 1:
                raise IngestionError(f"{path}: samples layout has exactly one value column")
            pts = [space.from_samples(v[:, 0]) for v in groups.values()]
        else:
            grid = space.descriptor.grid
            if grid is None or width != len(grid):
                raise IngestionError(f"{path}: pairs layout needs a sphere grid with {width} axes")
            from .sphere import histogram_density

            pts = [space.embed_density(histogram_density(v, grid)) for v in groups.values()]
        points = np.stack(pts) if pts else np.zeros((0, space.point_dim))
    else:
        ids = [r[0] for r in rows]
        if len(set(ids)) != len(ids):
            raise IngestionError(f"{path}: duplicate observation ids")
        values = np.asarray(_float_rows(path, rows, len(header) - 1), dtype=float)
        if values.size == 0:
            raise IngestionError(f"{path} has no observations")
        if fmt == "quantiles":
            if values.shape[1] != space.point_dim:
                raise IngestionError(f"{path}: expected {space.point_dim} quantile columns, got {values.shape[1]}")
            points = values
        elif fmt == "densities" and kind == "wasserstein":
            points = np.stack([quantiles_from_density(f, space.support, space.point_dim) for f in values])
        elif fmt == "densities":
            if values.shape[1] != space.point_dim:
                raise IngestionError(f"{path}: expected {space.point_dim} density cells, got {values.shape[1]}")
            points = np.stack([space.embed_density(f) for f in values])
        elif fmt == "vectors":
            if values.shape[1] != space.point_dim:
                raise IngestionError(f"{path}: expected {space.point_dim} coordinates, got {values.shape[1]}")
            points = values
        elif fmt == "matrices":
            m = space.size
            if values.shape[1] != m * m:
                raise IngestionError(f"{path}: expected {m * m} matrix entries, got {values.shape[1]}")
            points = np.stack([space.from_matrix(v.reshape(m, m)) for v in values])
        else:
            raise IngestionError(f"unknown format {fmt!r}")
    if len(ids) == 0:
        raise IngestionError(f"{path} has no observations")
    return ids, space.validate(points)


@dataclass
class Dataset:
    ids: list
    X: np.ndarray
    Y: Optional[np.ndarray]
    predictor_names: list = field(default_factory=list)


def load_dataset(manifest: DatasetManifest, space: GeodesicSpace) -> Dataset:
    """Read every file of a manifest and align observations by id."""
    tables = []
    for spec in manifest.predictors:
        tables.append(read_points(manifest.resolve(spec), spec.format, space, manifest.id_column))
    Y = None
    if manifest.response is not None:
        ids, Y = read_points(manifest.resolve(manifest.response), manifest.response.format, space, manifest.id_column)
    else:
        ids = tables[0][0]
    X = np.empty((len(ids), len(tables), space.point_dim))
    for j, (pids, pts) in enumerate(tables):
        index = {k: i for i, k in enumerate(pids)}
        if set(index) != set(ids):
            missing = sorted(set(ids) ^ set(index))[:5]
            raise IngestionError(
                f"predictor {manifest.predictors[j].path}: ids do not match the response (e.g. {missing})"
            )
        X[:, j] = pts[[index[k] for k in ids]]
    return Dataset(list(ids), X, Y, [s.name for s in manifest.predictors])


# ---------------------------------------------------------------------------
# writing


def exact(x):
    """Shortest text that reads back to the same double."""
    return repr(float(x))


def native_format(space: GeodesicSpace):
    if space.kind == "wasserstein":
        return "quantiles"
    if space.kind == "spd":
        return "matrices"
    if space.kind == "sphere" and space.descriptor.grid is not None:
        return "densities"
    return "vectors"


def write_points(path, space: GeodesicSpace, ids, points, id_column="id"):
    """Write points in the space's native layout (values round-trip exactly)."""
    points = np.asarray(points, dtype=float)
    fmt = native_format(space)
    if fmt == "quantiles":
        cols = [f"q{k + 1}" for k in range(space.point_dim)]
        rows = points
    elif fmt == "matrices":
        m = space.size
        cols = [f"m{r + 1}{c + 1}" for r in range(m) for c in range(m)]
        rows = space.to_matrix(points).reshape(len(points), m * m)
    elif fmt == "densities":
        cols = [f"f{k + 1}" for k in range(space.point_dim)]
        rows = space.density(points)
    else:
        cols = [f"x{k + 1}" for k in range(space.point_dim)]
        rows = points
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_column] + cols)
        for key, row in zip(ids, rows):
            writer.writerow([key] + [exact(v) for v in row])
    return fmt


def write_plot_data(path, space: GeodesicSpace, ids, points, n_cells=200):
    """Long-format plotting table: density curves, grid densities or matrix entries."""
    points = np.asarray(points, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if space.kind == "wasserstein":
            writer.writerow(["id", "x", "density"])
            for key, q in zip(ids, points):
                x, f = density_from_quantiles(q, space.support, n_cells)
                for a, b in zip(x, f):
                    writer.writerow([key, exact(a), exact(b)])
        elif space.kind == "sphere" and space.descriptor.grid is not None:
            from .sphere import grid_centers

            centers = [c.ravel() for c in grid_centers(space.descriptor.grid)]
            writer.writerow(["id"] + [f"c{k + 1}" for k in range(len(centers))] + ["density"])
            for key, g in zip(ids, points):
                dens = space.density(g)
                for k in range(len(dens)):
                    writer.writerow([key] + [exact(c[k]) for c in centers] + [exact(dens[k])])
        elif space.kind == "spd":
            m = space.size
            writer.writerow(["id", "row", "col", "value"])
            for key, S in zip(ids, space.to_matrix(points)):
                for r in range(m):
                    for c in range(m):
                        writer.writerow([key, r + 1, c + 1, exact(S[r, c])])
        else:
            writer.writerow(["id", "coordinate", "value"])
            for key, v in zip(ids, points):
                for k, val in enumerate(v):
                    writer.writerow([key, k + 1, exact(val)])
