"""Artifact files: CSV tables, raw field dumps and the ground-state cache.

Every data file ``X`` has a JSON sidecar ``X.json`` holding the format
version, the sha256 of ``X`` and caller metadata (config echo, code
version).  Writes go to a temporary file in the same directory followed by
``os.replace`` so readers never see a partial artifact.
"""
from __future__ import annotations

import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import ArtifactIOError, CacheMismatch, ChecksumMismatch, FormatVersionMismatch
from .radial import GroundState, RadialGrid

__all__ = [
    "FORMAT_VERSION", "atomic_write", "write_table", "read_table", "write_json", "read_json",
    "write_field", "read_field", "save_ground_state", "load_ground_state", "sidecar_path",
]

FORMAT_VERSION = 1

_GS_COLUMNS = ("rho", "U", "dU", "Psi", "dPsi")
_GS_SCALARS = ("lam", "A1", "A2", "lambda0", "lambda1", "sigma0", "tail_c", "tail_sigma",
               "nehari_residual", "phi0_star", "rho_match")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def atomic_write(path, data: bytes) -> Path:
    """Write ``data`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc}") from exc
    return path


def write_json(path, payload: dict) -> Path:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    return atomic_write(path, text.encode())


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ArtifactIOError(f"missing file {path}") from exc
    except (OSError, ValueError) as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc


def _write_with_sidecar(path, data: bytes, kind: str, metadata: dict | None) -> Path:
    path = atomic_write(path, data)
    side = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "sha256": hashlib.sha256(data).hexdigest(),
        "bytes": len(data),
        "code_version": __version__,
        "metadata": metadata or {},
    }
    write_json(sidecar_path(path), side)
    return path


def _read_verified(path, kind: str) -> tuple[bytes, dict]:
    path = Path(path)
    side = read_json(sidecar_path(path))
    if side.get("format_version") != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"{path}: format version {side.get('format_version')!r}, this build reads {FORMAT_VERSION}")
    if side.get("kind") != kind:
        raise ArtifactIOError(f"{path}: expected a {kind} artifact, found {side.get('kind')!r}")
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc}") from exc
    digest = hashlib.sha256(data).hexdigest()
    if digest != side.get("sha256"):
        raise ChecksumMismatch(f"{path}: sha256 {digest[:12]}... does not match the sidecar")
    return data, side


# tables ---------------------------------------------------------------------
def _table_bytes(columns, rows) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for c in columns:
            v = row[c]
            if isinstance(v, (bool, np.bool_)):
                cells.append(str(bool(v)).lower())
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif isinstance(v, (float, np.floating)):
                cells.append("%.17g" % float(v))
            else:
                cells.append(str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue().encode()


def write_table(path, rows, columns=None, metadata: dict | None = None, footer=()) -> Path:
    """CSV with ``%.17g`` floats; ``footer`` lines are appended as ``# ...`` comments."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    data = _table_bytes(columns, rows)
    if footer:
        data += "".join(f"# {line}\n" for line in footer).encode()
    return _write_with_sidecar(path, data, "table", metadata)


def _parse_cell(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text in ("true", "false"):
        return text == "true"
    return text


def read_table(path) -> tuple[list, dict]:
    data, side = _read_verified(path, "table")
    lines = [ln for ln in data.decode().splitlines() if ln and not ln.startswith("#")]
    if not lines:
        return [], side
    cols = lines[0].split(",")
    rows = [dict(zip(cols, map(_parse_cell, ln.split(",")))) for ln in lines[1:]]
    return rows, side


# fields ---------------------------------------------------------------------
def write_field(path, values: np.ndarray, metadata: dict) -> Path:
    """Raw little-endian float64 with the first index fastest.

    ``metadata`` must carry ``n1, n2, n3, h1, h2, h3, origin, symmetry_s``.
    """
    values = np.asarray(values, dtype=float)
    missing = [k for k in ("n1", "n2", "n3", "h1", "h2", "h3", "origin", "symmetry_s") if k not in metadata]
    if missing:
        raise ArtifactIOError(f"field metadata lacks {missing}")
    if values.shape != (metadata["n1"], metadata["n2"], metadata["n3"]):
        raise ArtifactIOError(f"field shape {values.shape} disagrees with metadata")
    data = values.astype("<f8").tobytes(order="F")
    return _write_with_sidecar(path, data, "field", metadata)


def read_field(path) -> tuple[np.ndarray, dict]:
    data, side = _read_verified(path, "field")
    meta = side["metadata"]
    shape = (int(meta["n1"]), int(meta["n2"]), int(meta["n3"]))
    if len(data) != 8 * shape[0] * shape[1] * shape[2]:
        raise ChecksumMismatch(f"{path}: byte count does not match shape {shape}")
    arr = np.frombuffer(data, dtype="<f8").reshape(shape, order="F")
    return np.array(arr, dtype=float), meta


# ground-state cache ---------------------------------------------------------
def save_ground_state(gs: GroundState, path, metadata: dict | None = None) -> Path:
    rows_arr = np.column_stack([gs.rho, gs.U, gs.dU, gs.Psi, gs.dPsi])
    buf = io.StringIO()
    buf.write(",".join(_GS_COLUMNS) + "\n")
    np.savetxt(buf, rows_arr, fmt="%.17g", delimiter=",")
    scalars = {k: getattr(gs, k) for k in _GS_SCALARS}
    meta = {"grid_h": gs.grid.h, "grid_n": gs.grid.n, "scalars": scalars,
            "solver_version": gs.solver_version, **(metadata or {})}
    return _write_with_sidecar(path, buf.getvalue().encode(), "ground_state", meta)


def load_ground_state(path, *, max_h: float | None = None) -> GroundState:
    """Load a cached ground state.

    ``max_h`` is the coarsest radial step the caller accepts; a cache
    computed on a coarser grid is refused rather than silently reused.
    """
    data, side = _read_verified(path, "ground_state")
    meta = side["metadata"]
    h = float(meta["grid_h"])
    if max_h is not None and h > max_h * (1.0 + 1e-12):
        raise CacheMismatch(
            f"{path} was computed with radial step h = {h:g} but h <= {max_h:g} is required; "
            f"recompute with `snbump ground-state --grid-h {max_h:g}` or delete the cache")
    arr = np.loadtxt(io.StringIO(data.decode()), delimiter=",", skiprows=1, ndmin=2)
    grid = RadialGrid(h=h, n=int(meta["grid_n"]))
    if arr.shape != (grid.n, len(_GS_COLUMNS)):
        raise ChecksumMismatch(f"{path}: table shape {arr.shape} does not match the grid")
    sc = {k: float(v) for k, v in meta["scalars"].items()}
    cols = {c: np.ascontiguousarray(arr[:, j]) for j, c in enumerate(_GS_COLUMNS)}
    return GroundState(grid=grid, U=cols["U"], dU=cols["dU"], Psi=cols["Psi"], dPsi=cols["dPsi"],
                       solver_version=meta.get("solver_version", __version__), **sc)
