import numpy as np
import pytest

from birange.records import (
    TransferRecord,
    read_record_binary,
    read_record_text,
    uniform_grid,
    write_record_binary,
    write_record_text,
)


@pytest.fixture()
def record(rng):
    f = uniform_grid(2e9, 4e9, 10e6)
    v = rng.normal(size=f.size) + 1j * rng.normal(size=f.size)
    return TransferRecord(f, v, constellation_tag="t", pol_pair="thetatheta")


class TestRecordFiles:
    def test_text_round_trip_full_precision(self, record, tmp_path):
        p = tmp_path / "r.rec.txt"
        write_record_text(record, p)
        back = read_record_text(p)
        assert np.array_equal(back.freqs_hz, record.freqs_hz)
        assert np.array_equal(back.values, record.values)

    def test_binary_round_trip_and_header(self, record, tmp_path):
        p = tmp_path / "r.rec"
        write_record_binary(record, p)
        blob = p.read_bytes()
        assert blob[:8] == b"BIRAREC1"
        assert len(blob) == 12 + 24 * record.n
        back = read_record_binary(p)
        assert np.array_equal(back.freqs_hz, record.freqs_hz)
        assert np.array_equal(back.values, record.values)

    def test_binary_rejects_garbage(self, tmp_path):
        p = tmp_path / "nope.rec"
        p.write_bytes(b"NOTMAGIC" + b"\0" * 16)
        with pytest.raises(ValueError):
            read_record_binary(p)


class TestRecordValidation:
    def test_descending_grid_rejected(self):
        with pytest.raises(ValueError):
            TransferRecord(np.array([2e9, 1e9]), np.array([1j, 2j]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            TransferRecord(np.array([1e9, 2e9]), np.array([np.nan + 0j, 1j]))

    def test_grid_divisibility(self):
        with pytest.raises(ValueError):
            uniform_grid(2e9, 3e9, 7e6)
