"""Unit tests for random streams, the worker pool and artifact files."""

import json
import threading
import time

import numpy as np
import pytest

from app.core.config import settings
from app.domain import ExperimentConfig
from app.infrastructure.artifacts import (
    ArtifactWriter,
    canonical_json,
    check_writable,
    config_hash,
    format_cell,
    render_csv,
    to_jsonable,
    write_atomic,
)
from app.infrastructure.parallel import ordered_map, resolve_threads
from app.infrastructure.rng import StreamPurpose, generator_for, seed_lineage, stream


class TestStreams:
    """Counter-based stream addressing."""

    def test_same_address_same_draws(self):
        a = generator_for(stream(5, StreamPurpose.TRIALS, 17)).random(8)
        b = generator_for(stream(5, StreamPurpose.TRIALS, 17)).random(8)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize(
        "other",
        [
            stream(5, StreamPurpose.TRIALS, 18),
            stream(6, StreamPurpose.TRIALS, 17),
            stream(5, StreamPurpose.PILOT, 17),
        ],
    )
    def test_different_addresses_differ(self, other):
        base = generator_for(stream(5, StreamPurpose.TRIALS, 17)).random(8)
        assert not np.array_equal(base, generator_for(other).random(8))

    def test_full_width_seed(self):
        gen = generator_for(stream(2**64 - 1, StreamPurpose.MOMENTS, 2**40))
        assert 0.0 <= gen.random() < 1.0

    def test_seed_lineage(self):
        lineage = seed_lineage(9, StreamPurpose.TRIALS, StreamPurpose.PILOT)
        assert lineage == {"master_seed": 9, "purpose_trials": 0, "purpose_pilot": 1}


class TestPool:
    """Ordered map over worker threads."""

    def test_order_is_preserved(self):
        def slow_square(x: int) -> int:
            time.sleep(0.001 * ((7 * x) % 5))
            return x * x

        assert list(ordered_map(slow_square, range(40), threads=4)) == [x * x for x in range(40)]

    def test_serial_path(self):
        seen = []
        result = list(ordered_map(lambda x: seen.append(threading.current_thread()) or x, [1, 2], 1))
        assert result == [1, 2]
        assert all(t is threading.main_thread() for t in seen)

    def test_errors_propagate(self):
        def fail_on_three(x: int) -> int:
            if x == 3:
                raise ValueError("three")
            return x

        with pytest.raises(ValueError, match="three"):
            list(ordered_map(fail_on_three, range(10), threads=3))

    def test_resolve_threads(self, monkeypatch):
        assert resolve_threads(3) == 3
        assert resolve_threads(0) == 1
        monkeypatch.setattr(settings, "DEFAULT_THREADS", 2)
        assert resolve_threads(None) == 2


class TestCells:
    """Locale-independent formatting."""

    @pytest.mark.parametrize(
        ("value", "text"),
        [
            (None, ""),
            (True, "true"),
            (np.bool_(False), "false"),
            (np.int64(3), "3"),
            (0.1, "0.1"),
            (np.float64(2.5), "2.5"),
            (1e-20, "1e-20"),
            ("x0-x1", "x0-x1"),
        ],
    )
    def test_format_cell(self, value, text):
        assert format_cell(value) == text

    def test_render_csv(self):
        text = render_csv((["n", "prob"], [[10, 0.5], [20, None]]))
        assert text == "n,prob\n10,0.5\n20,\n"

    def test_to_jsonable(self):
        payload = to_jsonable({"a": (1, 2), "b": np.arange(2), "c": float("inf"), 3: np.float64(0.5)})
        assert payload == {"a": [1, 2], "b": [0, 1], "c": "inf", "3": 0.5}

    def test_canonical_json_sorts_keys(self):
        assert canonical_json({"b": 1, "a": 2}).index('"a"') < canonical_json({"b": 1, "a": 2}).index('"b"')


class TestFiles:
    """Atomic writes and the artifact writer."""

    def test_write_atomic(self, tmp_path):
        target = tmp_path / "nested" / "out.csv"
        write_atomic(target, "a,b\n")
        write_atomic(target, "c,d\n")
        assert target.read_text() == "c,d\n"
        assert [p.name for p in target.parent.iterdir()] == ["out.csv"]

    def test_check_writable(self, tmp_path):
        path = check_writable(tmp_path / "x" / "y")
        assert path.is_dir()
        assert list(path.iterdir()) == []

    def test_config_hash(self):
        base = ExperimentConfig()
        assert config_hash(base) == config_hash(ExperimentConfig())
        assert config_hash(base) != config_hash(ExperimentConfig(master_seed=1))
        assert len(config_hash(base)) == 64

    def test_config_hash_ignores_runtime_fields(self):
        assert config_hash(ExperimentConfig(threads=1)) == config_hash(
            ExperimentConfig(threads=16, out_dir="elsewhere")
        )

    @pytest.mark.parametrize(
        ("fmt", "names"),
        [
            ("both", ["run.json", "a.csv", "b.csv"]),
            ("json", ["run.json"]),
            ("csv", ["a.csv", "b.csv"]),
        ],
    )
    def test_writer_formats(self, tmp_path, fmt, names):
        config = ExperimentConfig(out_dir=str(tmp_path), format=fmt)
        writer = ArtifactWriter(config, "run", {"master_seed": 0})
        tables = {"b": (["x"], [[1]]), "a": (["y"], [[2.0]])}
        paths = writer.write({"value": np.float64(1.5)}, tables)
        assert [p.name for p in paths] == names
        if fmt != "csv":
            envelope = json.loads((tmp_path / "run.json").read_text())
            assert envelope["command"] == "run"
            assert envelope["config_hash"] == config_hash(config)
            assert envelope["seed_lineage"] == {"master_seed": 0}
            assert envelope["result"] == {"value": 1.5}
            assert "out_dir" not in envelope["config"]
            echoed = {**envelope["config"], "out_dir": str(tmp_path)}
            assert ExperimentConfig.model_validate(echoed) == config
