"""Sweep synthesis, the calibrated-RCS pipeline, time gating, antenna
deconvolution, and range-Doppler processing.

Impulse responses live on a circular path-length axis of span c/f_step
(bin c/(N*f_step)); the frequency grid offset only contributes a common
phase ramp and is kept out of the magnitude picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .geometry import BistaticConstellation
from .records import C0, GridMismatchError, TransferRecord, uniform_grid
from .scattering import Scene, scene_response


class GateError(ValueError):
    pass


class CalibrationHoleError(ValueError):
    def __init__(self, freqs_hz: np.ndarray):
        self.freqs_hz = np.asarray(freqs_hz)
        shown = ", ".join(f"{f/1e9:.3f} GHz" for f in self.freqs_hz[:8])
        more = "" if self.freqs_hz.size <= 8 else f" (+{self.freqs_hz.size - 8} more)"
        super().__init__(f"reference level too low at: {shown}{more}")


@dataclass(frozen=True)
class SweepConfig:
    f_start_hz: float
    f_stop_hz: float
    f_step_hz: float
    window: str = "hann"
    noise_floor_db: Optional[float] = None  # amplitude std per point, dB

    def __post_init__(self):
        if self.f_stop_hz <= self.f_start_hz:
            raise ValueError("f_stop must exceed f_start")
        uniform_grid(self.f_start_hz, self.f_stop_hz, self.f_step_hz)

    @property
    def freqs_hz(self) -> np.ndarray:
        return uniform_grid(self.f_start_hz, self.f_stop_hz, self.f_step_hz)

    @property
    def unambiguous_span_m(self) -> float:
        return C0 / self.f_step_hz

    @property
    def n_points(self) -> int:
        return self.freqs_hz.size

    @property
    def range_bin_m(self) -> float:
        return C0 / (self.n_points * self.f_step_hz)


@dataclass(frozen=True)
class InstrumentModel:
    """Multiplicative antenna multipath kernel, additive background paths,
    and the receiver noise floor.  Echo/background entries are
    (extra path m, amplitude dB)."""

    echoes: tuple[tuple[float, float], ...] = ((0.28, -17.0), (1.27, -28.0), (12.0, -40.0))
    background_paths: tuple[tuple[float, float], ...] = ()
    seed: int = 0

    @classmethod
    def ideal(cls) -> "InstrumentModel":
        return cls(echoes=(), background_paths=())

    def antenna_transfer(self, f: np.ndarray) -> np.ndarray:
        h = np.ones(f.shape, dtype=complex)
        for extra_m, amp_db in self.echoes:
            h += 10.0 ** (amp_db / 20.0) * np.exp(-2j * math.pi * f * extra_m / C0)
        return h

    def background(self, f: np.ndarray) -> np.ndarray:
        b = np.zeros(f.shape, dtype=complex)
        for path_m, amp_db in self.background_paths:
            b += 10.0 ** (amp_db / 20.0) * np.exp(-2j * math.pi * f * path_m / C0)
        return b


def synthesize_sweep(
    scene: Optional[Scene],
    constellation: BistaticConstellation,
    sweep: SweepConfig,
    instrument: Optional[InstrumentModel] = None,
    t: float = 0.0,
    pol: str = "theta",
    rng: Optional[np.random.Generator] = None,
) -> TransferRecord:
    """Scene response through the instrument: antenna kernel, additive
    background, and complex white noise at the configured floor.  A None
    scene gives the background-only (no-target) record."""
    instrument = instrument or InstrumentModel.ideal()
    f = sweep.freqs_hz
    if scene is not None:
        rec = scene_response(scene, constellation, f, t=t, pol=pol)
        vals = rec.values * instrument.antenna_transfer(f)
        tag = rec.constellation_tag
    else:
        vals = np.zeros(f.shape, dtype=complex)
        tag = ""
    vals = vals + instrument.background(f)
    if sweep.noise_floor_db is not None:
        rng = rng or np.random.default_rng(instrument.seed)
        sd = 10.0 ** (sweep.noise_floor_db / 20.0) / math.sqrt(2.0)
        vals = vals + rng.normal(0, sd, f.size) + 1j * rng.normal(0, sd, f.size)
    return TransferRecord(f, vals, constellation_tag=tag, pol_pair=f"{pol}{pol}")


def background_subtract(s_dut: TransferRecord, s_bg: TransferRecord) -> TransferRecord:
    s_dut.require_same_grid(s_bg)
    return s_dut.with_values(s_dut.values - s_bg.values)


@dataclass(frozen=True)
class ImpulseResponse:
    taps: np.ndarray  # complex, length N
    path_m: np.ndarray  # circular axis, 0 .. span
    bin_m: float
    span_m: float
    window: str
    f_start_hz: float
    f_step_hz: float
    reference_offset_m: float = 0.0

    @property
    def path_rel_m(self) -> np.ndarray:
        """Axis wrapped to [-span/2, span/2) around the reference offset."""
        rel = (self.path_m - self.reference_offset_m + self.span_m / 2) % self.span_m
        return rel - self.span_m / 2

    def magnitude_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.taps) + 1e-300)


def _window(name: str, n: int) -> np.ndarray:
    if name == "rect":
        return np.ones(n)
    if name == "hann":
        return np.hanning(n)
    if name == "hamming":
        return np.hamming(n)
    raise ValueError(f"unknown window {name!r}")


def to_impulse_response(
    rec: TransferRecord,
    window: str = "rect",
    reference_offset_m: float = 0.0,
    oversample: int = 1,
) -> ImpulseResponse:
    """Windowed inverse DFT onto the circular path-length axis.

    ``oversample`` zero-pads the spectrum to interpolate the response (the
    axis keeps the physical span, the bin shrinks accordingly).
    """
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    n = rec.n
    w = _window(window, n)
    x = rec.values * w
    if oversample > 1:
        x = np.concatenate([x, np.zeros((oversample - 1) * n, dtype=complex)])
    taps = np.fft.ifft(x)
    step = rec.f_step
    span = C0 / step
    m = taps.size
    path = np.arange(m) * span / m
    return ImpulseResponse(
        taps=taps,
        path_m=path,
        bin_m=span / n,
        span_m=span,
        window=window,
        f_start_hz=float(rec.freqs_hz[0]),
        f_step_hz=step,
        reference_offset_m=reference_offset_m,
    )


def from_impulse_response(ir: ImpulseResponse) -> TransferRecord:
    if ir.window != "rect":
        raise ValueError("inverse transform defined for the rect window only")
    n = ir.taps.size
    vals = np.fft.fft(ir.taps)
    freqs = ir.f_start_hz + ir.f_step_hz * np.arange(n)
    return TransferRecord(freqs, vals)


def time_gate(
    rec: TransferRecord,
    gate_center_m: float,
    gate_width_m: float,
    window: str = "raised-cosine",
    edge_m: float = 0.2,
    analysis_window: str = "hamming",
) -> TransferRecord:
    """Isolate a path-length interval: transform, mask, transform back.

    The mask is 1 inside the gate with raised-cosine edges rolling off over
    ``edge_m`` (``window='rect'`` gives hard edges).  The transform runs
    under a compensated analysis window (Hamming by default) so that
    out-of-gate paths leak far less than the bare-rect sinc sidelobes
    would; the window is divided back out afterwards, which is exact
    because it never reaches zero.  The gate is circular on the
    unambiguous span.

    Caveat inherent to gating on sampled spectra: the outermost ~10% of
    frequency points on each band edge carry elevated truncation
    artifacts; quantitative use of gated data should discard or distrust
    those edges.
    """
    aw = _window(analysis_window, rec.n)
    if np.any(aw <= 0):
        raise ValueError("analysis window must be strictly positive")
    ir = to_impulse_response(rec.with_values(rec.values * aw), window="rect")
    span = ir.span_m
    if gate_width_m > span or gate_width_m <= 0:
        raise GateError(f"gate width {gate_width_m} outside (0, {span:.3f}] m")
    delta = (ir.path_m - gate_center_m + span / 2) % span - span / 2
    half = gate_width_m / 2.0
    if window == "rect":
        mask = (np.abs(delta) <= half).astype(float)
    elif window == "raised-cosine":
        edge = min(edge_m, half)
        a = np.abs(delta)
        mask = np.zeros(ir.taps.size)
        mask[a <= half - edge] = 1.0
        ramp = (a > half - edge) & (a <= half)
        if edge > 0:
            mask[ramp] = 0.5 * (1 + np.cos(math.pi * (a[ramp] - (half - edge)) / edge))
    else:
        raise ValueError(f"unknown gate window {window!r}")
    vals = np.fft.fft(ir.taps * mask) / aw
    return rec.with_values(vals)


@dataclass(frozen=True)
class RcsResult:
    freqs_hz: np.ndarray
    sigma_m2: np.ndarray
    reflectivity: np.ndarray  # |S21_dut|^2 after gating

    @property
    def sigma_dbsm(self) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.sigma_m2, 1e-300))


def calibrate_rcs(
    s_dut_gated: TransferRecord,
    s_cal_gated: TransferRecord,
    sigma_cal: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    min_cal_rel_db: float = -40.0,
) -> RcsResult:
    """Reference-object calibration: sigma_dut = |S_dut|^2/|S_cal|^2 * sigma_cal.

    Frequencies where the reference level falls ``min_cal_rel_db`` below its
    median make the quotient ill-conditioned and raise
    :class:`CalibrationHoleError` listing them.
    """
    s_dut_gated.require_same_grid(s_cal_gated)
    f = s_dut_gated.freqs_hz
    sc = sigma_cal(f) if callable(sigma_cal) else np.asarray(sigma_cal, dtype=float)
    if sc.shape != f.shape:
        raise ValueError("sigma_cal must match the frequency grid")
    mag = np.abs(s_cal_gated.values)
    floor = np.median(mag) * 10.0 ** (min_cal_rel_db / 20.0)
    holes = mag < floor
    if holes.any():
        raise CalibrationHoleError(f[holes])
    sigma = (np.abs(s_dut_gated.values) ** 2 / mag**2) * sc
    return RcsResult(f, sigma, np.abs(s_dut_gated.values) ** 2)


@dataclass(frozen=True)
class AntennaKernel:
    record: TransferRecord
    gate_center_m: float
    gate_width_m: float


def extract_antenna_response(
    s_thru_cal: TransferRecord,
    gate_halfwidth_m: float = 2.5,
    window: str = "raised-cosine",
) -> AntennaKernel:
    """Gate the main-lobe response around the line-of-sight delay of an
    anti-parallel no-target calibration record."""
    ir = to_impulse_response(s_thru_cal, window="rect")
    center = float(ir.path_m[int(np.argmax(np.abs(ir.taps)))])
    gated = time_gate(s_thru_cal, center, 2 * gate_halfwidth_m, window=window)
    return AntennaKernel(gated, center, 2 * gate_halfwidth_m)


def deconvolve_antenna(
    rec: TransferRecord, kernel: AntennaKernel, epsilon: float = 1e-6
) -> TransferRecord:
    """Regularized spectral division by the antenna kernel.

    ``epsilon`` is relative to the kernel's peak power.  The kernel's
    line-of-sight delay is re-applied after the division so the record
    keeps its physical path axis.  Frequencies where the kernel is so weak
    that regularization dominates are listed in the result's
    ``meta['deconvolution_warnings']``.
    """
    rec.require_same_grid(kernel.record)
    k = kernel.record.values
    p = np.abs(k) ** 2
    reg = epsilon * float(p.max())
    out = rec.values * np.conj(k) / (p + reg)
    out = out * np.exp(-2j * math.pi * rec.freqs_hz * kernel.gate_center_m / C0)
    weak = p < reg
    result = rec.with_values(out)
    if weak.any():
        result.meta["deconvolution_warnings"] = [
            f"kernel below regularization floor at {w/1e9:.3f} GHz"
            for w in rec.freqs_hz[weak][:16]
        ]
    return result


@dataclass(frozen=True)
class RangeDopplerMap:
    magnitude: np.ndarray  # (n_range, n_rate)
    path_m: np.ndarray
    rate_mps: np.ndarray
    range_bin_m: float
    rate_bin_mps: float
    timestamp_s: float
    meta: dict = field(default_factory=dict)


def range_doppler(
    slow_time_records: Sequence[TransferRecord],
    f_c_hz: float,
    cpi_s: float,
    timestamps_s: Optional[Sequence[float]] = None,
    range_window: str = "hann",
    doppler_window: str = "hann",
) -> RangeDopplerMap:
    """Range profile per record, then DFT across slow time per range bin.

    The Doppler axis is converted to bistatic path-length rate via the
    carrier wavelength: rate bin = lambda_c / CPI, range bin = c / B.
    """
    recs = list(slow_time_records)
    m = len(recs)
    if m < 2:
        raise ValueError("need at least 2 slow-time records")
    for r in recs[1:]:
        recs[0].require_same_grid(r)
    if timestamps_s is not None:
        ts = np.asarray(timestamps_s, dtype=float)
        d = np.diff(ts)
        if not np.allclose(d, d[0], rtol=1e-6, atol=1e-12):
            raise ValueError("slow-time records are not uniformly spaced")
        rep = float(d[0])
        if abs(rep * m - cpi_s) > 1e-6 * cpi_s:
            raise ValueError("timestamps inconsistent with the CPI")
        t0 = float(ts[0])
    else:
        rep = cpi_s / m
        t0 = 0.0

    n = recs[0].n
    rw = _window(range_window, n)
    profiles = np.stack([np.fft.ifft(r.values * rw) for r in recs])  # (m, n)
    dw = _window(doppler_window, m)
    dop = np.fft.fftshift(np.fft.fft(profiles * dw[:, None], axis=0), axes=0)

    lam = C0 / f_c_hz
    f_d = np.fft.fftshift(np.fft.fftfreq(m, d=rep))
    rate = -lam * f_d
    order = np.argsort(rate)
    mag = np.abs(dop[order]).T  # (n_range, n_rate)

    step = recs[0].f_step
    span = C0 / step
    path = np.arange(n) * span / n
    return RangeDopplerMap(
        magnitude=mag,
        path_m=path,
        rate_mps=rate[order],
        range_bin_m=span / n,
        rate_bin_mps=lam / cpi_s,
        timestamp_s=t0 + cpi_s / 2.0,
        meta={"f_c_hz": f_c_hz, "cpi_s": cpi_s, "n_slow": m},
    )


# ---------------------------------------------------------------------------
# OFDM channel estimation


@dataclass(frozen=True)
class OfdmParams:
    n_subcarriers: int = 256
    cp_len: int = 64
    sample_rate_hz: float = 2.0e9
    f_center_hz: float = 12.0e9

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.sample_rate_hz / self.n_subcarriers

    @property
    def period_s(self) -> float:
        return (self.n_subcarriers + self.cp_len) / self.sample_rate_hz

    def freqs_hz(self) -> np.ndarray:
        """Physical subcarrier frequencies, ascending."""
        base = np.fft.fftshift(np.fft.fftfreq(self.n_subcarriers, 1.0 / self.sample_rate_hz))
        return self.f_center_hz + base

    def fft_order(self) -> np.ndarray:
        """Indices mapping fft-bin order to the ascending physical grid."""
        return np.argsort(np.fft.fftfreq(self.n_subcarriers))


def ofdm_modulate(tx_symbols: np.ndarray, params: OfdmParams, n_periods: int = 1) -> np.ndarray:
    """Baseband sample stream of repeated CP-OFDM symbols."""
    x = np.asarray(tx_symbols, dtype=complex)
    if x.size != params.n_subcarriers:
        raise ValueError("tx_symbols length must equal n_subcarriers")
    td = np.fft.ifft(x)
    sym = np.concatenate([td[-params.cp_len :], td])
    return np.tile(sym, n_periods)


def apply_channel(
    tx_symbols: np.ndarray,
    channel_values: np.ndarray,
    params: OfdmParams,
    rng: Optional[np.random.Generator] = None,
    noise_std: float = 0.0,
) -> np.ndarray:
    """One received CP-OFDM period for a per-subcarrier channel (physical
    ascending order), exact under the cyclic-prefix assumption."""
    x = np.asarray(tx_symbols, dtype=complex)
    h_phys = np.asarray(channel_values, dtype=complex)
    inv = np.empty(params.n_subcarriers, dtype=complex)
    inv[params.fft_order()] = h_phys
    y = np.fft.ifft(x * inv)
    out = np.concatenate([y[-params.cp_len :], y])
    if noise_std > 0:
        rng = rng or np.random.default_rng(0)
        out = out + rng.normal(0, noise_std / math.sqrt(2), out.size) + 1j * rng.normal(
            0, noise_std / math.sqrt(2), out.size
        )
    return out


def ofdm_channel_estimate(
    tx_symbols: np.ndarray,
    rx_samples: np.ndarray,
    params: OfdmParams,
    start_time_s: float = 0.0,
) -> list[tuple[float, TransferRecord]]:
    """Per-period least-squares channel estimates, (timestamp, record).

    The pilot grid is the full subcarrier set.  Excess impulse-response
    energy beyond the cyclic prefix raises a warning entry in the record
    meta rather than an error.
    """
    x = np.asarray(tx_symbols, dtype=complex)
    if np.any(np.abs(x) == 0):
        raise ValueError("pilot symbols must be nonzero on every subcarrier")
    n, cp = params.n_subcarriers, params.cp_len
    plen = n + cp
    rx = np.asarray(rx_samples, dtype=complex)
    n_periods = rx.size // plen
    if n_periods == 0:
        raise ValueError("rx shorter than one OFDM period")
    order = params.fft_order()
    freqs = params.freqs_hz()
    out = []
    for p in range(n_periods):
        seg = rx[p * plen + cp : (p + 1) * plen]
        h_fft = np.fft.fft(seg) / x
        h = h_fft[order]
        rec = TransferRecord(freqs, h, pol_pair="ofdm")
        ir = np.fft.ifft(h_fft)
        head = np.abs(ir[:cp]) ** 2
        tail = np.abs(ir[cp:]) ** 2
        if tail.sum() > 0.05 * (head.sum() + tail.sum()) and head.sum() > 0:
            rec.meta["cp_warning"] = (
                "impulse-response energy beyond the cyclic prefix"
            )
        out.append((start_time_s + p * params.period_s, rec))
    return out
