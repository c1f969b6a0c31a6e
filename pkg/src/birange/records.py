"""Complex transfer records over a frequency grid, with file round-trip.

The columnar text format is ``frequency_Hz re im`` rows with ``#`` comments;
the binary twin is magic ``BIRAREC1``, u32 point count, then per point
three little-endian float64 (frequency_Hz, re, im).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

C0 = 299792458.0  # vacuum speed of light, m/s

RECORD_MAGIC = b"BIRAREC1"


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TransferRecord:
    """Complex transmission coefficient sampled on an ascending grid."""

    freqs_hz: np.ndarray
    values: np.ndarray
    constellation_tag: str = ""
    pol_pair: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if f.shape != v.shape or f.ndim != 1:
            raise ValueError("freqs and values must be 1-D and equal length")
        if len(f) > 1 and not np.all(np.diff(f) > 0):
            raise ValueError("frequency grid must be ascending")
        if not np.all(np.isfinite(v.view(float))):
            raise ValueError("non-finite values in record")
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.freqs_hz.size)

    @property
    def f_step(self) -> float:
        return float(self.freqs_hz[1] - self.freqs_hz[0])

    def same_grid(self, other: "TransferRecord") -> bool:
        return self.n == other.n and np.allclose(
            self.freqs_hz, other.freqs_hz, rtol=0, atol=1e-3
        )

    def require_same_grid(self, other: "TransferRecord") -> None:
        if not self.same_grid(other):
            raise GridMismatchError("frequency grids differ")
        if (
            self.constellation_tag
            and other.constellation_tag
            and self.constellation_tag != other.constellation_tag
        ):
            raise GridMismatchError(
                f"constellation tags differ: {self.constellation_tag!r} vs "
                f"{other.constellation_tag!r}"
            )

    def with_values(self, values: np.ndarray) -> "TransferRecord":
        return replace(self, values=np.asarray(values, dtype=complex))


def uniform_grid(f_start: float, f_stop: float, f_step: float) -> np.ndarray:
    if f_stop <= f_start:
        raise ValueError("f_stop must exceed f_start")
    n_steps = (f_stop - f_start) / f_step
    if abs(n_steps - round(n_steps)) > 1e-6:
        raise ValueError("f_step must divide the span")
    return f_start + f_step * np.arange(int(round(n_steps)) + 1)


def write_record_text(rec: TransferRecord, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# frequency_Hz re im\n")
        if rec.constellation_tag:
            fh.write(f"# constellation: {rec.constellation_tag}\n")
        if rec.pol_pair:
            fh.write(f"# pol: {rec.pol_pair}\n")
        for f, v in zip(rec.freqs_hz, rec.values):
            fh.write(f"{float(f)!r} {float(v.real)!r} {float(v.imag)!r}\n")


def read_record_text(path) -> TransferRecord:
    freqs, vals = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            f, re_, im = line.split()
            freqs.append(float(f))
            vals.append(complex(float(re_), float(im)))
    return TransferRecord(np.array(freqs), np.array(vals))


def write_record_binary(rec: TransferRecord, path) -> None:
    with open(path, "wb") as fh:
        fh.write(RECORD_MAGIC)
        fh.write(struct.pack("<I", rec.n))
        data = np.empty((rec.n, 3))
        data[:, 0] = rec.freqs_hz
        data[:, 1] = rec.values.real
        data[:, 2] = rec.values.imag
        fh.write(data.astype("<f8").tobytes())


def read_record_binary(path) -> TransferRecord:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != RECORD_MAGIC:
        raise ValueError("not a record file")
    (n,) = struct.unpack("<I", blob[8:12])
    data = np.frombuffer(blob[12 : 12 + 24 * n], dtype="<f8").reshape(n, 3)
    return TransferRecord(data[:, 0].copy(), data[:, 1] + 1j * data[:, 2])
