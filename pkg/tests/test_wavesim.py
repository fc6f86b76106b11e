import math

import numpy as np
import pytest

from dciplan.wavesim import (
    C_NM_PER_PS, EYE_CLOSED, CriterionUnreachable, OpticalField, WaveformConfig, add_ase, apply_cd,
    ber, cd_penalty_sweep, curve_csv, decision_thresholds, detect, eye_metrics, find_cd_limit,
    generate_pam4, gray_levels, osnr_ber_sweep,
)

CFG = WaveformConfig()  # 56 GBd, 16 sps, 4096 symbols


def rms_width_1e(t, power):
    """1/e half-width of a Gaussian intensity profile from its second moment."""
    w = power / power.sum()
    mean = np.sum(t * w)
    return math.sqrt(2 * np.sum((t - mean) ** 2 * w))


def gaussian_broadening_oracle(t0_ps, acc_cd, wavelength_nm=1550.0):
    beta2_l = -acc_cd * wavelength_nm**2 / (2 * math.pi * C_NM_PER_PS)
    return t0_ps * math.sqrt(1 + (beta2_l / t0_ps**2) ** 2)


# ------------------------------------------------------------- generation

def test_gray_mapping_adjacent_levels_differ_by_one_bit():
    bits = np.array([[0, 0], [0, 1], [1, 1], [1, 0]])
    assert list(gray_levels(bits)) == [0, 1, 2, 3]


def test_generate_deterministic():
    a, sa = generate_pam4(CFG)
    b, sb = generate_pam4(CFG)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(sa, sb)
    c, _ = generate_pam4(WaveformConfig(rng_seed=2))
    assert not np.array_equal(a.samples, c.samples)


def test_constant_symbols_give_flat_field():
    field, _ = generate_pam4(CFG, levels=np.full(512, 3))
    assert np.allclose(field.power, CFG.peak_power, atol=1e-12)


def test_rectangular_levels():
    cfg = WaveformConfig(pulse_shaping="nrz")
    field, sym = generate_pam4(cfg)
    mid = field.power.reshape(-1, cfg.samples_per_symbol)[:, cfg.samples_per_symbol // 2]
    for lv in range(4):
        assert np.all(np.abs(mid[sym == lv] - lv / 3) < 1e-6)


def test_raised_cosine_levels_at_symbol_centres():
    cfg = WaveformConfig(pulse_shaping="raised-cosine", rolloff=0.5)
    field, sym = generate_pam4(cfg)
    centre = field.power.reshape(-1, cfg.samples_per_symbol)[:, cfg.samples_per_symbol // 2]
    # clipping of small negative overshoot can only touch level 0
    for lv in range(1, 4):
        assert np.allclose(centre[sym == lv], lv / 3, atol=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        WaveformConfig(symbol_count=100)
    with pytest.raises(ValueError):
        WaveformConfig(samples_per_symbol=2)
    assert CFG.sample_rate == 56 * 16


# -------------------------------------------------------------------- CD

def test_apply_cd_zero_is_identity():
    field, _ = generate_pam4(CFG)
    out = apply_cd(field, 0.0)
    assert np.allclose(out.samples, field.samples, rtol=1e-12, atol=0)


def test_apply_cd_unitary_and_invertible_random_fields():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(256, 4096))
        field = OpticalField(rng.standard_normal(n) + 1j * rng.standard_normal(n), 900.0)
        d = rng.uniform(-2000, 2000)
        out = apply_cd(field, d)
        assert abs(out.energy - field.energy) / field.energy < 1e-9
        back = apply_cd(out, -d)
        assert np.linalg.norm(back.samples - field.samples) / np.linalg.norm(field.samples) < 1e-9


@pytest.mark.parametrize("t0", [5.0, 10.0, 20.0])
@pytest.mark.parametrize("acc_cd", [170.0, 680.0, 1360.0])
def test_gaussian_pulse_broadening(t0, acc_cd):
    fs = 1000.0  # GHz -> 1 ps sampling
    n = 1 << 14
    t = (np.arange(n) - n / 2) / fs * 1e3  # ps
    field = OpticalField(np.exp(-t**2 / (2 * t0**2)), fs)
    out = apply_cd(field, acc_cd)
    expected = gaussian_broadening_oracle(t0, acc_cd)
    assert rms_width_1e(t, out.power) == pytest.approx(expected, rel=0.01)


# ----------------------------------------------------------------- detect

def test_detect_square_law():
    flat = OpticalField(np.ones(1024), 896.0)
    assert np.allclose(detect(flat, 42.0), 1.0)
    field, _ = generate_pam4(CFG)
    g = 1.7
    assert np.allclose(detect(field.with_samples(g * field.samples), 42.0), g**2 * detect(field, 42.0))
    assert np.all(detect(field, None) >= 0)


def test_two_tone_beat():
    fs, n, f0 = 896.0, 4096, 56.0  # f0 sits exactly on bin 256
    t = np.arange(n) / fs
    tone = np.exp(2j * np.pi * f0 * t) + np.exp(-2j * np.pi * f0 * t)
    field = OpticalField(tone, fs)
    freqs = np.fft.fftfreq(n, 1 / fs)
    beat_bin = np.argmin(np.abs(freqs - 2 * f0))

    raw = np.abs(np.fft.fft(detect(field, None))) / n
    # |2 cos|^2 = 2 + 2 cos(2*w0*t): one-sided line of amplitude 1 at 2 f0
    assert raw[beat_bin] == pytest.approx(1.0, rel=1e-9)

    filtered = np.abs(np.fft.fft(detect(field, 0.9 * f0))) / n
    assert 20 * math.log10(raw[beat_bin] / filtered[beat_bin]) > 20
    assert filtered[0] == pytest.approx(raw[0])


# -------------------------------------------------------------------- eye

def _eye(acc_cd, cfg=CFG, reference=None):
    field, sym = generate_pam4(cfg)
    elec = detect(apply_cd(field, acc_cd), cfg.rx_bw, cfg.rx_order)
    return eye_metrics(elec, sym, cfg, reference)


def test_self_reference_zero_penalty():
    ref = _eye(0.0)
    assert _eye(0.0, reference=ref).worst_penalty_db == 0.0


def test_eye_closed_at_100():
    ref = _eye(0.0)
    m = _eye(100.0, reference=ref)
    assert m.worst_penalty_db == EYE_CLOSED and m.closed
    assert min(m.openings) == 0.0


def test_penalty_monotone_pre_closure():
    ref = _eye(0.0)
    pens = [_eye(d, reference=ref).worst_penalty_db for d in (0, 10, 20, 30, 40)]
    assert all(b >= a for a, b in zip(pens, pens[1:]))


@pytest.mark.parametrize("d", [1, 2, 5, 10, 25, 45, -3, -30])
def test_worst_eye_never_beats_reference(d):
    # single eyes can open a little at small CD (the low one does), and the
    # best common phase moves, so the worst opening is only bounded to 0.01 dB
    ref = _eye(0.0)
    m = _eye(d, reference=ref)
    assert m.worst_penalty_db >= 0
    assert min(m.openings) <= min(ref.openings) * 10 ** (0.01 / 10)


@pytest.mark.parametrize("d", [10.0, 25.0, 40.0])
def test_penalty_sign_symmetry(d):
    ref = _eye(0.0)
    assert _eye(d, reference=ref).worst_penalty_db == pytest.approx(_eye(-d, reference=ref).worst_penalty_db, abs=0.1)


# ------------------------------------------------------------------ sweep

SWEEP = [0, 10, 20, 30, 40, 50, 60, 80, 100]


def test_sweep_reference_point_and_monotone():
    curve = cd_penalty_sweep(CFG, SWEEP)
    assert curve[0] == (0.0, 0.0)
    pens = [p for _, p in curve]
    first_closed = next((i for i, p in enumerate(pens) if math.isinf(p)), len(pens))
    assert all(b >= a for a, b in zip(pens[:first_closed], pens[1:first_closed]))


def test_sweep_deterministic_across_workers():
    a = cd_penalty_sweep(CFG, SWEEP)
    b = cd_penalty_sweep(CFG, SWEEP, workers=4)
    assert a == b
    assert curve_csv(a) == curve_csv(b)
    assert curve_csv(a).splitlines()[0] == "acc_cd_ps_nm,worst_penalty_db"


def test_sweep_rejects_unsorted():
    with pytest.raises(ValueError):
        cd_penalty_sweep(CFG, [10, 0])


def test_cd_limit_56_gbd():
    assert 30 <= find_cd_limit(CFG, 2.0) <= 80


def test_cd_limit_scales_with_baud_squared():
    ratio = find_cd_limit(WaveformConfig(baud=28), 2.0) / find_cd_limit(CFG, 2.0)
    assert 3 <= ratio <= 5


def test_cd_limit_criterion_ordering():
    assert find_cd_limit(CFG, 1.0) <= find_cd_limit(CFG, 3.0)


def test_cd_limit_unreachable():
    with pytest.raises(CriterionUnreachable, match="criterion unreachable"):
        find_cd_limit(CFG, 2.0, max_cd=5.0)
    with pytest.raises(ValueError):
        find_cd_limit(CFG, 0.0)


# ------------------------------------------------------------- noise, BER

def test_noise_free_limit():
    field, sym = generate_pam4(CFG)
    noisy = add_ase(field, 300.0, seed=3)
    assert ber(detect(noisy, CFG.rx_bw), sym, CFG) == 0.0


def test_noise_power_in_reference_bandwidth():
    cfg = WaveformConfig(symbol_count=1024)
    field, _ = generate_pam4(cfg)
    osnr_db = 20.0
    p_sig = np.mean(field.power)
    n = len(field)
    freqs = field.frequencies()
    in_ref = np.abs(freqs) <= 6.25
    measured = []
    for seed in range(100):
        noise = add_ase(field, osnr_db, seed=seed).samples - field.samples
        spectrum = np.abs(np.fft.fft(noise)) ** 2 / n**2  # power per bin
        measured.append(spectrum[in_ref].sum() * 12.5 / (in_ref.sum() * field.sample_rate / n))
    expected = p_sig / 10 ** (osnr_db / 10)
    assert np.mean(measured) == pytest.approx(expected, rel=0.02)


def test_add_ase_deterministic_and_needs_power():
    field, _ = generate_pam4(CFG)
    assert np.array_equal(add_ase(field, 20, seed=5).samples, add_ase(field, 20, seed=5).samples)
    with pytest.raises(ValueError):
        add_ase(OpticalField(np.zeros(64), 896.0), 20)


def test_ber_monotone_in_osnr():
    curve = osnr_ber_sweep(CFG, [15.0, 20.0, 25.0])
    bers = [b for _, b in curve]
    assert bers[0] > bers[2]
    assert bers[0] >= bers[1] >= bers[2]


def test_ber_deep_noise():
    (_, b), = osnr_ber_sweep(CFG, [0.0])
    assert b > 0.1


def test_ber_sweep_independent_of_workers():
    assert osnr_ber_sweep(CFG, [18.0, 22.0], workers=2) == osnr_ber_sweep(CFG, [18.0, 22.0])


def test_ber_clean():
    field, sym = generate_pam4(CFG)
    assert ber(detect(field, CFG.rx_bw), sym, CFG) == 0.0


def test_thresholds_at_ideal_midpoints():
    cfg = WaveformConfig(pulse_shaping="nrz")
    field, sym = generate_pam4(cfg)
    mid = detect(field, None).reshape(-1, cfg.samples_per_symbol)[:, cfg.samples_per_symbol // 2]
    assert np.allclose(decision_thresholds(mid, sym), [1 / 6, 1 / 2, 5 / 6], atol=1e-3)
