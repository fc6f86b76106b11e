"""Time-domain IM-DD PAM-4 simulator used to check CD tolerance figures.

Pipeline: Gray-mapped PAM-4 power levels -> chirp-free field -> all-pass CD
filter -> square-law detection with an electrical low-pass -> data-aided eye
and BER metrics. All filters act on the whole block in the frequency domain
(cyclic convolution); metrics skip ``guard_symbols`` at both block edges.

Units: frequencies in GHz (baseband offsets), time in ps via 1/THz, power in
mW, dispersion in ps/nm, wavelength in nm.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .budget import DEFAULT_CONSTANTS, PhysicalConstants

C_NM_PER_PS = 299_792.458

EYE_CLOSED = math.inf

SHAPES = ("nrz", "nrz-gaussian", "raised-cosine")

# level index -> (msb, lsb); adjacent levels differ in one bit
GRAY_BITS = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.int8)
_BITS_TO_LEVEL = {(0, 0): 0, (0, 1): 1, (1, 1): 2, (1, 0): 3}
# bit errors between transmitted level (row) and decided level (column)
_BIT_ERRORS = np.array(
    [[int(np.sum(GRAY_BITS[i] != GRAY_BITS[j])) for j in range(4)] for i in range(4)]
)


class CriterionUnreachable(RuntimeError):
    pass


@dataclass(frozen=True)
class WaveformConfig:
    baud: float = 56.0  # GBd
    samples_per_symbol: int = 16
    symbol_count: int = 4096
    pulse_shaping: str = "nrz-gaussian"
    tx_bandwidth: float | None = None  # GHz, Gaussian 3 dB; None -> 0.75 * baud
    rolloff: float = 0.1  # raised-cosine only
    rx_bandwidth: float | None = None  # GHz; None -> 0.75 * baud
    rx_order: int = 4
    center_wavelength: float = 1550.0  # nm
    peak_power: float = 1.0  # mW
    guard_symbols: int = 16
    rng_seed: int = 1

    def __post_init__(self):
        if self.pulse_shaping not in SHAPES:
            raise ValueError(f"pulse_shaping must be one of {SHAPES}, got {self.pulse_shaping!r}")
        if not self.baud > 0:
            raise ValueError("baud must be > 0")
        if self.samples_per_symbol < 4:
            raise ValueError("samples_per_symbol must be >= 4")
        if self.symbol_count < 256:
            raise ValueError("symbol_count must be >= 256")
        if not 0 <= self.rolloff <= 1:
            raise ValueError("rolloff must be in [0, 1]")
        if self.rx_order < 1:
            raise ValueError("rx_order must be >= 1")
        if not 0 <= 2 * self.guard_symbols < self.symbol_count:
            raise ValueError("guard_symbols leaves no symbols to evaluate")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")

    @property
    def sample_rate(self) -> float:
        """GHz."""
        return self.baud * self.samples_per_symbol

    @property
    def tx_bw(self) -> float:
        return 0.75 * self.baud if self.tx_bandwidth is None else self.tx_bandwidth

    @property
    def rx_bw(self) -> float:
        return 0.75 * self.baud if self.rx_bandwidth is None else self.rx_bandwidth


@dataclass(frozen=True, eq=False)
class OpticalField:
    samples: np.ndarray  # complex, sqrt(mW)
    sample_rate: float  # GHz
    center_wavelength: float = 1550.0  # nm

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if not np.all(np.isfinite(samples)):
            raise ValueError("field samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        """Sum |a|^2 / sample_rate, in mW/GHz (= pJ)."""
        return float(np.sum(self.power) / self.sample_rate)

    def frequencies(self) -> np.ndarray:
        """Baseband offset of every FFT bin, GHz."""
        return np.fft.fftfreq(self.samples.size, d=1.0 / self.sample_rate)

    def with_samples(self, samples: np.ndarray) -> "OpticalField":
        return OpticalField(samples, self.sample_rate, self.center_wavelength)


@dataclass(frozen=True)
class EyeMetrics:
    openings: tuple  # three eyes, low to high, mW
    phase: int  # sampling offset within the symbol
    penalties_db: tuple
    worst_penalty_db: float  # EYE_CLOSED when any eye is shut
    ber: float

    @property
    def closed(self) -> bool:
        return math.isinf(self.worst_penalty_db)


# ------------------------------------------------------------------ signal

def gray_levels(bits: np.ndarray) -> np.ndarray:
    """Map an (n, 2) bit array to PAM-4 level indices 0..3."""
    bits = np.asarray(bits, dtype=np.int8).reshape(-1, 2)
    return np.array([_BITS_TO_LEVEL[tuple(b)] for b in bits], dtype=np.int8)


def _gaussian_lowpass(f: np.ndarray, bw: float) -> np.ndarray:
    # |H(bw)|^2 = 1/2
    return np.exp(-0.5 * math.log(2) * (f / bw) ** 2)


def _raised_cosine(f: np.ndarray, baud: float, beta: float) -> np.ndarray:
    af = np.abs(f)
    f1 = (1 - beta) * baud / 2
    f2 = (1 + beta) * baud / 2
    h = np.zeros_like(af)
    h[af <= f1] = 1.0
    if beta > 0:
        band = (af > f1) & (af <= f2)
        h[band] = 0.5 * (1 + np.cos(np.pi / (beta * baud) * (af[band] - f1)))
    return h


def power_waveform(levels: np.ndarray, config: WaveformConfig) -> np.ndarray:
    """Transmitted optical power in mW for a sequence of level indices."""
    sps = config.samples_per_symbol
    p = np.asarray(levels, dtype=float) / 3.0 * config.peak_power
    if config.pulse_shaping == "raised-cosine":
        x = np.zeros(p.size * sps)
        x[sps // 2::sps] = p
        f = np.fft.fftfreq(x.size, d=1.0 / config.sample_rate)
        wave = np.fft.ifft(np.fft.fft(x) * sps * _raised_cosine(f, config.baud, config.rolloff)).real
    else:
        wave = np.repeat(p, sps)
        if config.pulse_shaping == "nrz-gaussian":
            f = np.fft.fftfreq(wave.size, d=1.0 / config.sample_rate)
            wave = np.fft.ifft(np.fft.fft(wave) * _gaussian_lowpass(f, config.tx_bw)).real
    return np.clip(wave, 0.0, None)


def generate_pam4(config: WaveformConfig, levels: np.ndarray | None = None):
    """Random (or given) PAM-4 symbols on a chirp-free optical field.

    Returns ``(field, levels)``; ``levels`` are the transmitted level indices.
    """
    if levels is None:
        rng = np.random.default_rng(config.rng_seed)
        bits = rng.integers(0, 2, size=(config.symbol_count, 2))
        levels = gray_levels(bits)
    levels = np.asarray(levels, dtype=np.int8)
    amplitude = np.sqrt(power_waveform(levels, config))
    return OpticalField(amplitude.astype(complex), config.sample_rate, config.center_wavelength), levels


# ----------------------------------------------------------------- channel

def cd_phase(f_ghz: np.ndarray, acc_cd: float, wavelength_nm: float) -> np.ndarray:
    """Quadratic spectral phase pi * lambda^2 * D_acc * f^2 / c (radians)."""
    f_thz = f_ghz * 1e-3
    return np.pi * wavelength_nm**2 * acc_cd * f_thz**2 / C_NM_PER_PS


def apply_cd(field: OpticalField, acc_cd: float) -> OpticalField:
    """All-pass chromatic dispersion filter for ``acc_cd`` ps/nm."""
    if len(field) == 0:
        raise ValueError("empty field")
    if acc_cd == 0:
        return field.with_samples(field.samples.copy())
    h = np.exp(1j * cd_phase(field.frequencies(), acc_cd, field.center_wavelength))
    return field.with_samples(np.fft.ifft(np.fft.fft(field.samples) * h))


def beta2_length(acc_cd: float, wavelength_nm: float) -> float:
    """Accumulated GVD beta2*L in ps^2 for ``acc_cd`` ps/nm."""
    return -acc_cd * wavelength_nm**2 / (2 * np.pi * C_NM_PER_PS)


def add_ase(
    field: OpticalField,
    osnr_db: float,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    seed: int | np.random.SeedSequence = 0,
) -> OpticalField:
    """Load white circular Gaussian noise for ``osnr_db`` in the reference bandwidth.

    The noise density is flat over the whole simulated bandwidth (the sample
    rate), single polarization.
    """
    if len(field) == 0:
        raise ValueError("empty field")
    p_sig = float(np.mean(field.power))
    if not (math.isfinite(p_sig) and p_sig > 0):
        raise ValueError("mean signal power must be positive")
    density = p_sig / (constants.ref_bandwidth * 10 ** (osnr_db / 10))  # mW/GHz
    sigma2 = density * field.sample_rate
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(field)) + 1j * rng.standard_normal(len(field))
    return field.with_samples(field.samples + math.sqrt(sigma2 / 2) * noise)


# ---------------------------------------------------------------- receiver

def detect(field: OpticalField, rx_bandwidth: float | None, order: int = 4) -> np.ndarray:
    """Square-law photodetection followed by a zero-phase Butterworth-magnitude low-pass.

    ``rx_bandwidth=None`` skips the electrical filter.
    """
    current = field.power
    if rx_bandwidth is None:
        return current
    if not rx_bandwidth > 0:
        raise ValueError("rx_bandwidth must be > 0")
    f = field.frequencies()
    h = 1.0 / np.sqrt(1.0 + (f / rx_bandwidth) ** (2 * order))
    return np.fft.ifft(np.fft.fft(current) * h).real


def _symbol_matrix(electrical: np.ndarray, symbols: np.ndarray, config: WaveformConfig):
    sps = config.samples_per_symbol
    n = len(symbols)
    if electrical.size != n * sps:
        raise ValueError("electrical length does not match symbols * samples_per_symbol")
    g = config.guard_symbols
    rows = electrical.reshape(n, sps)[g:n - g]
    return rows, np.asarray(symbols)[g:n - g]


def decision_thresholds(samples: np.ndarray, symbols: np.ndarray) -> np.ndarray:
    """Three thresholds midway between the measured means of adjacent levels."""
    means = np.array([samples[symbols == lv].mean() for lv in range(4)])
    return 0.5 * (means[:-1] + means[1:])


def _bit_errors(samples: np.ndarray, symbols: np.ndarray) -> int:
    decided = np.searchsorted(decision_thresholds(samples, symbols), samples)
    return int(_BIT_ERRORS[symbols, decided].sum())


def ber(electrical: np.ndarray, symbols: np.ndarray, config: WaveformConfig, phase: int | None = None) -> float:
    """Bit error ratio of hard PAM-4 decisions.

    With ``phase=None`` every sampling phase is tried and the best is reported.
    """
    rows, sym = _symbol_matrix(electrical, symbols, config)
    phases = range(config.samples_per_symbol) if phase is None else [phase]
    errors = min(_bit_errors(rows[:, p], sym) for p in phases)
    return errors / (2 * len(sym))


def eye_openings(electrical: np.ndarray, symbols: np.ndarray, config: WaveformConfig):
    """Per-phase eye openings, shape (3, samples_per_symbol)."""
    rows, sym = _symbol_matrix(electrical, symbols, config)
    openings = np.empty((3, rows.shape[1]))
    for eye in range(3):
        lower = rows[sym == eye]
        upper = rows[sym == eye + 1]
        if lower.size == 0 or upper.size == 0:
            raise ValueError(f"levels {eye} and {eye + 1} must both be present")
        openings[eye] = upper.min(axis=0) - lower.max(axis=0)
    return openings


def eye_metrics(
    electrical: np.ndarray,
    symbols: np.ndarray,
    config: WaveformConfig,
    reference: EyeMetrics | None = None,
) -> EyeMetrics:
    """Data-aided PAM-4 eye openings at the phase that maximizes the worst eye.

    Penalties are taken against ``reference`` or, without one, against the
    ideal level spacing ``peak_power / 3``.
    """
    per_phase = eye_openings(electrical, symbols, config)
    phase = int(np.argmax(per_phase.min(axis=0)))
    openings = np.clip(per_phase[:, phase], 0.0, None)
    ref = reference.openings if reference is not None else (config.peak_power / 3,) * 3
    penalties = tuple(
        10 * math.log10(r / o) if o > 0 else EYE_CLOSED for r, o in zip(ref, openings)
    )
    rows, sym = _symbol_matrix(electrical, symbols, config)
    return EyeMetrics(
        openings=tuple(float(o) for o in openings),
        phase=phase,
        penalties_db=penalties,
        worst_penalty_db=max(penalties),
        ber=_bit_errors(rows[:, phase], sym) / (2 * len(sym)),
    )


# ------------------------------------------------------------------ sweeps

class _Link:
    """One transmitted block plus its back-to-back reference eye."""

    def __init__(self, config: WaveformConfig):
        self.config = config
        self.field, self.symbols = generate_pam4(config)
        self.reference = eye_metrics(self.received(0.0), self.symbols, config)

    def received(self, acc_cd: float) -> np.ndarray:
        return detect(apply_cd(self.field, acc_cd), self.config.rx_bw, self.config.rx_order)

    def eye(self, acc_cd: float) -> EyeMetrics:
        return eye_metrics(self.received(acc_cd), self.symbols, self.config, self.reference)

    def penalty(self, acc_cd: float) -> float:
        return self.eye(acc_cd).worst_penalty_db


def _map(fn, items: Sequence, workers: int | None):
    if workers is None or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cd_penalty_sweep(
    config: WaveformConfig, cd_points: Sequence[float], workers: int | None = None
) -> list[tuple[float, float]]:
    """Worst eye-closure penalty (dB) at each accumulated dispersion."""
    points = [float(d) for d in cd_points]
    if not points or points[0] != 0 or any(b < a for a, b in zip(points, points[1:])):
        raise ValueError("cd_points must be sorted ascending and start at 0")
    link = _Link(config)
    return list(zip(points, _map(link.penalty, points, workers)))


def osnr_ber_sweep(
    config: WaveformConfig,
    osnr_points: Sequence[float],
    acc_cd: float = 0.0,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
    workers: int | None = None,
) -> list[tuple[float, float]]:
    """BER versus OSNR; point ``i`` draws noise from the stream (rng_seed, i)."""
    field0, symbols = generate_pam4(config)
    dispersed = apply_cd(field0, acc_cd)

    def run(item):
        i, osnr = item
        noisy = add_ase(dispersed, osnr, constants, np.random.SeedSequence([config.rng_seed, i]))
        return ber(detect(noisy, config.rx_bw, config.rx_order), symbols, config)

    items = list(enumerate(float(o) for o in osnr_points))
    return [(o, b) for (_, o), b in zip(items, _map(run, items, workers))]


def find_cd_limit(
    config: WaveformConfig,
    penalty_criterion_db: float,
    max_cd: float = 500.0,
    resolution: float = 0.5,
    coarse_step: float = 10.0,
) -> float:
    """Smallest accumulated CD (ps/nm) whose worst-eye penalty reaches the criterion.

    A coarse upward scan brackets the first crossing, bisection refines it to
    ``resolution``.
    """
    if not penalty_criterion_db > 0:
        raise ValueError("penalty_criterion_db must be > 0")
    link = _Link(config)
    lo, hi = 0.0, None
    d = 0.0
    while d < max_cd:
        d = min(d + coarse_step, max_cd)
        if link.penalty(d) >= penalty_criterion_db:
            hi = d
            break
        lo = d
    if hi is None:
        raise CriterionUnreachable(
            f"criterion unreachable: penalty stays below {penalty_criterion_db} dB up to {max_cd} ps/nm"
        )
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if link.penalty(mid) >= penalty_criterion_db:
            hi = mid
        else:
            lo = mid
    return hi


def curve_csv(rows: Iterable[tuple[float, float]], header: Sequence[str] = ("acc_cd_ps_nm", "worst_penalty_db")) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for x, y in rows:
        writer.writerow([repr(float(x)), "inf" if math.isinf(y) else repr(float(y))])
    return buf.getvalue()
