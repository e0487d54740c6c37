"""File formats: HSC1 cubes, label/weight CSVs, training CSVs and JSON."""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core import GridGeometry, HyperCube, LabelMap, WeightField
from .errors import FormatError
from .learn import ClassModel, TrainingSet

MAGIC = b"HSC1"
_HEADER = struct.Struct("<4sIII")


def cube_to_bytes(cube: HyperCube) -> bytes:
    header = _HEADER.pack(MAGIC, cube.geom.d, cube.geom.side, cube.p)
    return header + cube.data.astype("<f4").tobytes()


def cube_from_bytes(raw: bytes) -> HyperCube:
    if len(raw) < _HEADER.size:
        raise FormatError("file too short for an HSC1 header")
    magic, d, side, p = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    geom = GridGeometry(d, side)
    body = raw[_HEADER.size:]
    if len(body) != 4 * geom.N * p:
        raise FormatError(f"expected {geom.N * p} float32 values, found {len(body) / 4:g}")
    data = np.frombuffer(body, dtype="<f4").astype(np.float64)
    return HyperCube(geom, p, data)


def write_cube(path, cube: HyperCube) -> None:
    Path(path).write_bytes(cube_to_bytes(cube))


def read_cube(path) -> HyperCube:
    return cube_from_bytes(Path(path).read_bytes())


def write_labels(path, lm: LabelMap) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pixel", "label"])
        w.writerows(zip(range(lm.geom.N), lm.labels.tolist()))


def _read_rows(path, header_prefix):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:len(header_prefix)] != header_prefix:
        raise FormatError(f"{path}: expected header starting with {','.join(header_prefix)}")
    body = rows[1:]
    for i, row in enumerate(body):
        if int(row[0]) != i:
            raise FormatError(f"{path}: rows must be in pixel order, row {i} has pixel {row[0]}")
    return rows[0], body


def read_labels(path, geom: GridGeometry | None = None, K: int | None = None) -> LabelMap:
    """Read a label CSV. Without ``geom`` the pixels are treated as a 1-d strip."""
    _, body = _read_rows(path, ["pixel", "label"])
    labels = np.array([int(r[1]) for r in body], dtype=np.int64)
    if geom is None:
        geom = GridGeometry(1, labels.size)
    if K is None:
        K = max(2, int(labels.max()) + 1 if labels.size else 2)
    return LabelMap(geom, K, labels)


def write_weights(path, wf: WeightField) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pixel"] + [f"w{k}" for k in range(wf.K)])
        for i, row in enumerate(wf.weights.tolist()):
            w.writerow([i] + [repr(x) for x in row])


def read_weights(path, geom: GridGeometry | None = None) -> WeightField:
    header, body = _read_rows(path, ["pixel"])
    K = len(header) - 1
    weights = np.array([[float(x) for x in r[1:]] for r in body], dtype=np.float64).reshape(-1, K)
    if geom is None:
        geom = GridGeometry(1, weights.shape[0])
    return WeightField(geom, K, weights)


def write_training_set(path, ts: TrainingSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class"] + [f"b{j}" for j in range(ts.p)])
        for k, row in zip(ts.labels.tolist(), ts.spectra.tolist()):
            w.writerow([k] + [repr(x) for x in row])


def read_training_set(path, K: int | None = None) -> TrainingSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["class"]:
        raise FormatError(f"{path}: expected header starting with 'class'")
    try:
        labels = np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)
        spectra = np.array([[float(x) for x in r[1:]] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if K is None:
        K = int(labels.max()) + 1
    return TrainingSet(K, labels, spectra.reshape(labels.size, len(rows[0]) - 1))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_model(path, model: ClassModel) -> None:
    write_json(path, model.to_dict())


def read_model(path) -> ClassModel:
    try:
        return ClassModel.from_dict(read_json(path))
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc
