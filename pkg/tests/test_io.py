from __future__ import annotations

import json

import numpy as np
import pytest

from snbump.exceptions import ArtifactIOError, CacheMismatch, ChecksumMismatch, FormatVersionMismatch
from snbump.io import (
    load_ground_state,
    read_field,
    read_table,
    save_ground_state,
    sidecar_path,
    write_field,
    write_table,
)


@pytest.fixture(scope="module")
def cached(gs, tmp_path_factory):
    path = tmp_path_factory.mktemp("cache") / "gs.csv"
    save_ground_state(gs, path, metadata={"note": "test"})
    return path


def test_ground_state_roundtrip_is_exact(gs, cached):
    back = load_ground_state(cached)
    for name in ("U", "dU", "Psi", "dPsi"):
        a, b = getattr(gs, name), getattr(back, name)
        assert np.max(np.abs(a - b)) <= 1e-15 * np.max(np.abs(a))
    assert back.constants() == gs.constants()
    assert back.grid == gs.grid


def test_truncated_cache_is_rejected(cached, tmp_path):
    bad = tmp_path / "gs.csv"
    data = cached.read_bytes()
    bad.write_bytes(data[: len(data) // 2])
    sidecar_path(bad).write_bytes(sidecar_path(cached).read_bytes())
    with pytest.raises(ChecksumMismatch):
        load_ground_state(bad)


def test_format_version_is_checked(cached, tmp_path):
    bad = tmp_path / "gs.csv"
    bad.write_bytes(cached.read_bytes())
    side = json.loads(sidecar_path(cached).read_text())
    side["format_version"] = 99
    sidecar_path(bad).write_text(json.dumps(side))
    with pytest.raises(FormatVersionMismatch):
        load_ground_state(bad)


def test_coarse_cache_is_refused_with_hint(cached):
    with pytest.raises(CacheMismatch, match="recompute"):
        load_ground_state(cached, max_h=5e-4)
    assert load_ground_state(cached, max_h=1e-3).grid.h == 1e-3


def test_field_dump_layout(tmp_path, rng):
    u = rng.standard_normal((4, 3, 2))
    meta = {"n1": 4, "n2": 3, "n3": 2, "h1": 0.5, "h2": 0.5, "h3": 0.5, "origin": [0, 0, 0], "symmetry_s": 1}
    path = write_field(tmp_path / "u.bin", u, meta)
    raw = np.fromfile(path, dtype="<f8")
    assert raw[1] == u[1, 0, 0]  # first index fastest
    back, m = read_field(path)
    assert np.array_equal(back, u) and m["n1"] == 4
    with pytest.raises(ArtifactIOError):
        write_field(tmp_path / "v.bin", u, {"n1": 4})


def test_table_roundtrip_and_no_leftover_temp_files(tmp_path):
    rows = [{"s": 4, "x": 1 / 3, "ok": True}, {"s": 6, "x": 2.5e-300, "ok": False}]
    path = write_table(tmp_path / "t.csv", rows, metadata={"config": {"a": 1}}, footer=["flag line"])
    back, side = read_table(path)
    assert back == rows
    assert side["metadata"]["config"] == {"a": 1}
    assert path.read_text().endswith("# flag line\n")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["t.csv", "t.csv.json"]


def test_missing_sidecar(tmp_path):
    (tmp_path / "x.csv").write_text("a\n1\n")
    with pytest.raises(ArtifactIOError):
        read_table(tmp_path / "x.csv")
