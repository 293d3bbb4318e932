"""JSON files for jets, normals and reports."""
from __future__ import annotations

import json

import numpy as np

from .jets import JetDataset, JetError


class FileFormatError(ValueError):
    """A file does not follow the expected schema."""


def dataset_to_dict(ds: JetDataset) -> dict:
    return {"dim": ds.dim,
            "jets": [{"x": x.tolist(), "f": float(f), "g": g.tolist()}
                     for x, f, g in zip(ds.X, ds.F, ds.G)]}


def normals_to_dict(X, N) -> dict:
    X = np.atleast_2d(X)
    return {"dim": int(X.shape[1]),
            "jets": [{"x": x.tolist(), "n": n.tolist()} for x, n in zip(X, np.atleast_2d(N))]}


def _records(d: dict, vec_key: str, need_f: bool):
    if not isinstance(d, dict) or "jets" not in d or not isinstance(d["jets"], list):
        raise FileFormatError("expected an object with a 'jets' list")
    dim = d.get("dim")
    xs, fs, vs = [], [], []
    for i, rec in enumerate(d["jets"]):
        try:
            x = np.asarray(rec["x"], float)
            v = np.asarray(rec[vec_key], float)
            f = float(rec["f"]) if need_f else 0.0
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"record {i}: {exc!r}") from None
        if x.ndim != 1 or v.shape != x.shape or (dim is not None and x.size != dim):
            raise FileFormatError(f"record {i}: dimension mismatch")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v)) and np.isfinite(f)):
            raise FileFormatError(f"record {i}: non-finite entry")
        xs.append(x)
        fs.append(f)
        vs.append(v)
    if not xs:
        raise FileFormatError("no records")
    return np.array(xs), np.array(fs), np.array(vs)


def dataset_from_dict(d: dict) -> JetDataset:
    X, F, G = _records(d, "g", True)
    try:
        return JetDataset(X, F, G)
    except JetError as exc:
        raise FileFormatError(str(exc)) from None


def normals_from_dict(d: dict):
    X, _, N = _records(d, "n", False)
    return X, N


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from None


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_dataset(path) -> JetDataset:
    return dataset_from_dict(read_json(path))


def save_dataset(ds: JetDataset, path) -> None:
    write_json(dataset_to_dict(ds), path)


def load_normals(path):
    return normals_from_dict(read_json(path))


def save_normals(X, N, path) -> None:
    write_json(normals_to_dict(X, N), path)
