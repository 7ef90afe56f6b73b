import os

import numpy as np
import pytest

from proxproj import FormatError
from proxproj.io import (
    MATRIX_MAGIC,
    file_sha256,
    metrics_csv_hash,
    read_manifest,
    read_matrix,
    read_metrics_csv,
    read_pgm,
    read_vector,
    write_manifest,
    write_matrix,
    write_matrix_csv,
    write_metrics_csv,
    write_pgm,
    write_vector,
    write_vector_csv,
)
from proxproj.metrics import IterateLog, MetricRow


class TestBinaryFormat:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-6, 6, (7, 3))
        path = tmp_path / "a.ppmat"
        write_matrix(path, a)
        again = read_matrix(path)
        assert np.array_equal(a, again)
        write_matrix(tmp_path / "b.ppmat", again)
        assert file_sha256(path) == file_sha256(tmp_path / "b.ppmat")

    def test_identity_file_is_56_bytes(self, tmp_path):
        path = tmp_path / "eye.ppmat"
        write_matrix(path, np.eye(2))
        assert os.path.getsize(path) == 56

    def test_vector_round_trip(self, tmp_path):
        v = np.array([1.5, -2.25, 1e-300, 0.0])
        path = tmp_path / "v.ppvec"
        write_vector(path, v)
        assert np.array_equal(read_vector(path), v)

    def test_bad_magic_reports_offset(self, tmp_path):
        path = tmp_path / "bad.ppmat"
        path.write_bytes(b"NOTMAG\x00" + b"\x00" * 49)
        with pytest.raises(FormatError) as err:
            read_matrix(path)
        assert err.value.offset == 0

    def test_truncation_reports_offset(self, tmp_path):
        path = tmp_path / "trunc.ppmat"
        write_matrix(path, np.eye(2))
        blob = path.read_bytes()
        path.write_bytes(blob[:40])
        with pytest.raises(FormatError, match="truncated"):
            read_matrix(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "extra.ppmat"
        write_matrix(path, np.eye(2))
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(FormatError, match="trailing"):
            read_matrix(path)

    def test_magic_prefix(self, tmp_path):
        path = tmp_path / "m.ppmat"
        write_matrix(path, np.zeros((1, 1)))
        assert path.read_bytes()[:7] == MATRIX_MAGIC


class TestCsvFormat:
    def test_csv_and_binary_agree_exactly(self, tmp_path):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 5)) * 10.0 ** rng.integers(-8, 8, (4, 5))
        write_matrix(tmp_path / "a.ppmat", a)
        write_matrix_csv(tmp_path / "a.csv", a)
        bin_load = read_matrix(tmp_path / "a.ppmat")
        csv_load = read_matrix(tmp_path / "a.csv")
        assert np.array_equal(bin_load, csv_load)

    def test_vector_csv(self, tmp_path):
        v = np.array([0.1, 0.2, -3.0])
        write_vector_csv(tmp_path / "v.csv", v)
        assert np.array_equal(read_vector(tmp_path / "v.csv"), v)

    def test_ragged_rows_rejected(self, tmp_path):
        (tmp_path / "r.csv").write_text("1.0,2.0\n3.0\n")
        with pytest.raises(FormatError, match="cells"):
            read_matrix(tmp_path / "r.csv")

    def test_non_numeric_rejected(self, tmp_path):
        (tmp_path / "r.csv").write_text("1.0,abc\n")
        with pytest.raises(FormatError):
            read_matrix(tmp_path / "r.csv")


class TestPgm:
    def test_ascii_example(self, tmp_path):
        (tmp_path / "t.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 255\n")
        img = read_pgm(tmp_path / "t.pgm")
        assert np.array_equal(img, [[0.0, 0.0], [0.0, 1.0]])

    def test_p2_and_p5_load_identically(self, tmp_path):
        rng = np.random.default_rng(2)
        img = np.round(rng.random((5, 7)) * 255) / 255
        write_pgm(tmp_path / "a.pgm", img, binary=False)
        write_pgm(tmp_path / "b.pgm", img, binary=True)
        a = read_pgm(tmp_path / "a.pgm")
        b = read_pgm(tmp_path / "b.pgm")
        assert np.array_equal(a, b)
        assert np.allclose(a, img)

    def test_sixteen_bit_scaled(self, tmp_path):
        write_pgm(tmp_path / "w.pgm", np.array([[1.0, 0.5]]), maxval=65535)
        img = read_pgm(tmp_path / "w.pgm")
        assert img.max() <= 1.0
        assert np.isclose(img[0, 0], 1.0)

    def test_sixteen_bit_ascii_and_binary_agree(self, tmp_path):
        rng = np.random.default_rng(3)
        img = np.round(rng.random((3, 4)) * 65535) / 65535
        write_pgm(tmp_path / "wide2.pgm", img, maxval=65535, binary=False)
        write_pgm(tmp_path / "wide5.pgm", img, maxval=65535, binary=True)
        assert np.array_equal(read_pgm(tmp_path / "wide2.pgm"),
                              read_pgm(tmp_path / "wide5.pgm"))

    def test_comments_in_header(self, tmp_path):
        (tmp_path / "c.pgm").write_bytes(b"P2\n# a comment\n2 1\n255\n7 255\n")
        img = read_pgm(tmp_path / "c.pgm")
        assert img.shape == (1, 2)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.pgm").write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(FormatError, match="P2/P5"):
            read_pgm(tmp_path / "x.pgm")

    def test_truncated_p5(self, tmp_path):
        (tmp_path / "t.pgm").write_bytes(b"P5\n4 4\n255\n\x00\x00")
        with pytest.raises(FormatError, match="truncated"):
            read_pgm(tmp_path / "t.pgm")


def sample_log():
    log = IterateLog()
    log.append(MetricRow(iter=1, violation=0.5, objective=2.0,
                         residual=float("inf"), wall_ms=0.8))
    log.append(MetricRow(iter=2, violation=0.25, objective=1.5,
                         residual=0.5, wall_ms=0.7))
    return log


class TestMetricsCsv:
    def test_round_trip(self, tmp_path):
        log = sample_log()
        write_metrics_csv(tmp_path / "m.csv", log)
        again = read_metrics_csv(tmp_path / "m.csv")
        assert [r.iter for r in again] == [1, 2]
        assert again.rows[0].residual == float("inf")
        assert again.content_hash() == log.content_hash()

    def test_hash_ignores_wall_time(self, tmp_path):
        log1 = sample_log()
        log2 = IterateLog()
        for r in log1:
            log2.append(MetricRow(r.iter, r.violation, r.objective, r.residual,
                                  r.wall_ms * 7.7 + 0.1))
        write_metrics_csv(tmp_path / "a.csv", log1)
        write_metrics_csv(tmp_path / "b.csv", log2)
        assert metrics_csv_hash(tmp_path / "a.csv") == \
            metrics_csv_hash(tmp_path / "b.csv")
        assert file_sha256(tmp_path / "a.csv") != file_sha256(tmp_path / "b.csv")

    def test_header_enforced(self, tmp_path):
        (tmp_path / "h.csv").write_text("nope\n1,2,3,4,5\n")
        with pytest.raises(FormatError, match="header"):
            read_metrics_csv(tmp_path / "h.csv")


class TestManifest:
    def test_sorted_round_trip(self, tmp_path):
        entries = {"zzz": "1", "aaa": "two", "mid": "3.5"}
        write_manifest(tmp_path / "r.manifest", entries)
        text = (tmp_path / "r.manifest").read_text()
        assert text.splitlines()[0].startswith("aaa")
        assert read_manifest(tmp_path / "r.manifest") == {
            "zzz": "1", "aaa": "two", "mid": "3.5"
        }

    def test_malformed_line(self, tmp_path):
        (tmp_path / "bad.manifest").write_text("no separator here\n")
        with pytest.raises(FormatError):
            read_manifest(tmp_path / "bad.manifest")
