"""File formats: RGM binary matrices, CSV result tables, JSON manifests.

RGM layout (little-endian)::

    offset  size  field
    0       4     magic b"RGM1"
    4       1     dtype code: 0 = float32, 1 = float64
    5       8     rows (uint64)
    13      8     cols (uint64)
    21      ...   row-major payload, rows * cols * width bytes

All writes go to a temporary file in the destination directory and are
renamed into place.
"""
import csv
import io as _io
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadMagic, ContractError, ManifestError, NonFiniteValue, TruncatedPayload

MAGIC = b"RGM1"
HEADER = struct.Struct("<4sBQQ")
DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
DTYPE_CODES = {"f4": 0, "float32": 0, "f8": 1, "float64": 1, 0: 0, 1: 1}


def atomic_write_bytes(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def encode_matrix(M, dtype="f8"):
    M = np.asarray(M)
    if M.ndim != 2:
        raise ContractError(f"RGM stores 2-D matrices, got shape {M.shape}")
    try:
        code = DTYPE_CODES[dtype]
    except KeyError:
        raise ContractError(f"unknown dtype {dtype!r}; use 'f4' or 'f8'") from None
    payload = np.ascontiguousarray(M, dtype=DTYPES[code]).tobytes()
    return HEADER.pack(MAGIC, code, M.shape[0], M.shape[1]) + payload


def decode_matrix(buf, allow_nan=False, source="<bytes>"):
    if len(buf) < HEADER.size:
        raise TruncatedPayload(f"{source}: {len(buf)} bytes is shorter than the 21-byte header")
    magic, code, rows, cols = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"{source}: magic {magic!r} is not {MAGIC!r}")
    if code not in DTYPES:
        raise BadMagic(f"{source}: unknown dtype code {code}")
    dt = DTYPES[code]
    need = rows * cols * dt.itemsize
    have = len(buf) - HEADER.size
    if have < need:
        raise TruncatedPayload(f"{source}: payload has {have} bytes, header promises {need}")
    if have > need:
        raise TruncatedPayload(f"{source}: {have - need} trailing bytes after payload")
    M = np.frombuffer(buf, dtype=dt, count=rows * cols, offset=HEADER.size)
    M = M.reshape(rows, cols).astype(np.float64)
    bad = np.isinf(M) if allow_nan else ~np.isfinite(M)
    if np.any(bad):
        r, c = np.argwhere(bad)[0]
        raise NonFiniteValue(f"{source}: non-finite value at row {r}, column {c}")
    return M


def write_matrix(M, path, dtype="f8"):
    atomic_write_bytes(path, encode_matrix(M, dtype))


def read_matrix(path, allow_nan=False):
    """Load an RGM file, or a headerless numeric CSV if the suffix is ``.csv``.

    ``allow_nan`` admits NaN entries (missing trials) but never infinities.
    Values are always returned as float64.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        M = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        bad = np.isinf(M) if allow_nan else ~np.isfinite(M)
        if np.any(bad):
            r, c = np.argwhere(bad)[0]
            raise NonFiniteValue(f"{path}: non-finite value at row {r}, column {c}")
        return M
    return decode_matrix(path.read_bytes(), allow_nan=allow_nan, source=str(path))


# ------------------------------------------------------------------ tables


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def format_table(columns, rows):
    if len(set(columns)) != len(columns):
        raise ContractError("table header names must be unique")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ContractError("table rows must match the header width")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, rows):
    atomic_write_text(path, format_table(columns, rows))


def _as_float(s):
    try:
        return float(s)
    except ValueError:
        return None


def read_table(path):
    """Rows of a CSV table as dicts; all-numeric columns become floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractError(f"{path}: empty table") from None
        body = [r for r in reader if r]
    if len(set(header)) != len(header):
        raise ContractError(f"{path}: duplicate header names")
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise ContractError(f"{path}: row {i + 1} has {len(r)} fields, header has {len(header)}")
    numeric = [all(_as_float(r[j]) is not None for r in body) for j in range(len(header))]
    return [{h: (float(r[j]) if numeric[j] else r[j]) for j, h in enumerate(header)} for r in body]


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# --------------------------------------------------------------- manifests


@dataclass
class ManifestEntry:
    name: str
    family: str = ""
    accuracy: float | None = None
    embedding_path: Path | None = None
    params_m: float | None = None
    pretrain_dataset: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class ModelManifest:
    entries: list
    path: Path | None = None

    def accuracies(self):
        return {e.name: e.accuracy for e in self.entries}

    def names(self):
        return [e.name for e in self.entries]


_KNOWN = {"name", "family", "accuracy", "embedding_path", "params_m", "pretrain_dataset"}


def parse_manifest(obj, base_dir=Path("."), check_files=True):
    entries_in = obj.get("models") if isinstance(obj, dict) else obj
    if not isinstance(entries_in, list):
        raise ManifestError("manifest must be a list of models or an object with a 'models' list")
    seen = set()
    entries = []
    for i, raw in enumerate(entries_in):
        if not isinstance(raw, dict):
            raise ManifestError(f"entry {i}: not an object")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            raise ManifestError(f"entry {i}: field 'name' missing or empty")
        if name in seen:
            raise ManifestError(f"entry {name!r}: duplicate name")
        seen.add(name)
        acc = raw.get("accuracy")
        if acc is not None:
            try:
                acc = float(acc)
            except (TypeError, ValueError):
                raise ManifestError(f"entry {name!r}: field 'accuracy' is not a number") from None
            if acc > 1:
                acc /= 100.0
            if not 0 <= acc <= 1:
                raise ManifestError(f"entry {name!r}: field 'accuracy' out of range")
        emb = raw.get("embedding_path")
        if emb is not None:
            emb = Path(emb)
            if not emb.is_absolute():
                emb = Path(base_dir) / emb
            if check_files and not emb.exists():
                raise ManifestError(f"entry {name!r}: field 'embedding_path' file {emb} not found")
        params = raw.get("params_m")
        entries.append(ManifestEntry(
            name=name,
            family=str(raw.get("family", "")),
            accuracy=acc,
            embedding_path=emb,
            params_m=None if params is None else float(params),
            pretrain_dataset=raw.get("pretrain_dataset"),
            extra={k: v for k, v in raw.items() if k not in _KNOWN},
        ))
    return ModelManifest(entries=entries)


def load_manifest(path, check_files=True):
    """Read and validate a JSON model manifest.

    Accuracies above 1 are read as percentages. Relative embedding paths are
    resolved against the manifest's directory.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    m = parse_manifest(obj, base_dir=path.parent, check_files=check_files)
    m.path = path
    return m


def manifest_to_json(entries, base_dir=None):
    out = []
    for e in entries:
        d = {"name": e.name, "family": e.family, "accuracy": e.accuracy}
        if e.embedding_path is not None:
            p = Path(e.embedding_path)
            d["embedding_path"] = str(p.relative_to(base_dir) if base_dir else p)
        if e.params_m is not None:
            d["params_m"] = e.params_m
        if e.pretrain_dataset is not None:
            d["pretrain_dataset"] = e.pretrain_dataset
        d.update(e.extra)
        out.append(d)
    return {"models": out}
