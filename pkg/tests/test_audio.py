import numpy as np
import pytest

from accentconv.audio import (
    PerturbConfig,
    SpectrogramConfig,
    Waveform,
    denormalize_f0,
    extract_f0,
    integrated_loudness,
    load_and_standardize,
    load_wav,
    mel,
    normalize_f0,
    normalize_loudness,
    perturb,
    pitch_shift,
    save_wav,
    standardize,
)
from accentconv.audio.loudness import _high_pass, _high_shelf
from accentconv.errors import DataError

SR = 16000


def sine(freq, seconds=1.0, sr=SR, amp=0.5):
    t = np.arange(int(seconds * sr)) / sr
    return Waveform(amp * np.sin(2 * np.pi * freq * t), sr)


def sawtooth(freq, seconds=1.0, sr=SR, amp=0.4):
    t = np.arange(int(seconds * sr)) / sr
    return Waveform(amp * (2.0 * ((t * freq) % 1.0) - 1.0), sr)


def reference_loudness(samples, sr):
    """Independent gated loudness meter: explicit biquad + block loops."""
    out = samples
    for b, a in (_high_shelf(sr), _high_pass(sr)):
        y = np.zeros_like(out)
        x1 = x2 = y1 = y2 = 0.0
        for i, xn in enumerate(out):
            yn = b[0] * xn + b[1] * x1 + b[2] * x2 - a[1] * y1 - a[2] * y2
            y[i] = yn
            x2, x1 = x1, xn
            y2, y1 = y1, yn
        out = y
    block = int(round(0.4 * sr))
    hop = block // 4
    powers = []
    start = 0
    while start + block <= out.size:
        powers.append(np.mean(out[start : start + block] ** 2))
        start += hop
    if not powers:
        powers = [np.mean(out**2)]
    louds = [-0.691 + 10 * np.log10(p) if p > 0 else -np.inf for p in powers]
    kept = [p for p, l in zip(powers, louds) if l > -70.0]
    rel = -0.691 + 10 * np.log10(np.mean(kept)) - 10.0
    kept = [p for p, l in zip(powers, louds) if l > -70.0 and l > rel]
    return -0.691 + 10 * np.log10(np.mean(kept))


class TestStandardize:
    def test_stereo_441k_to_mono_16k(self, tmp_path):
        sr_in = 44100
        t = np.arange(int(1.2 * sr_in)) / sr_in
        left = 0.6 * np.sin(2 * np.pi * 300 * t)
        right = 0.4 * np.sin(2 * np.pi * 300 * t)
        stereo = np.stack([left, right], axis=1)
        from scipy.io import wavfile

        path = tmp_path / "stereo.wav"
        wavfile.write(path, sr_in, (stereo * 32767).astype(np.int16))

        out = load_and_standardize(path, target_rate=16000, target_loudness=-27.0)
        assert out.sample_rate == 16000
        assert out.samples.ndim == 1
        assert abs(integrated_loudness(out) - (-27.0)) <= 0.5
        assert np.max(np.abs(out.samples)) <= 1.0

    def test_already_standard_is_near_identity(self):
        x = sine(440, seconds=1.5)
        once = standardize(x, 16000, -27.0)
        twice = standardize(once, 16000, -27.0)
        ratio = twice.samples[1000:2000] / once.samples[1000:2000]
        assert np.allclose(ratio, 1.0, atol=1e-3)

    def test_sine_matches_reference_meter(self):
        x = sine(440, seconds=1.0, amp=0.9)
        out = standardize(x, 16000, -27.0)
        measured = reference_loudness(out.samples, out.sample_rate)
        assert abs(measured - (-27.0)) <= 0.5

    def test_meter_agrees_with_reference_on_noise(self):
        rng = np.random.default_rng(0)
        x = Waveform(0.1 * rng.standard_normal(SR * 2), SR)
        assert integrated_loudness(x) == pytest.approx(
            reference_loudness(x.samples, SR), abs=1e-6
        )

    def test_silent_input_rejected(self):
        with pytest.raises(DataError):
            standardize(Waveform(np.zeros(SR), SR), 16000, -27.0)

    def test_unreadable_file_rejected(self, tmp_path):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"not a wav at all")
        with pytest.raises(DataError):
            load_and_standardize(bad)

    def test_wav_roundtrip(self, tmp_path):
        x = sine(200, seconds=0.5)
        path = tmp_path / "x.wav"
        save_wav(path, x)
        back = load_wav(path)
        assert back.sample_rate == SR
        assert np.max(np.abs(back.samples - x.samples)) < 1e-3


class TestPerturb:
    def test_probability_zero_is_identity(self):
        x = sine(220)
        cfg = PerturbConfig(apply_probability=0.0)
        out = perturb(x, cfg, np.random.default_rng(3))
        assert np.array_equal(out.samples, x.samples)

    def test_fixed_seed_is_deterministic(self):
        x = sawtooth(180, seconds=0.8)
        cfg = PerturbConfig(apply_probability=1.0)
        a = perturb(x, cfg, np.random.default_rng(11))
        b = perturb(x, cfg, np.random.default_rng(11))
        assert np.array_equal(a.samples, b.samples)

    def test_pitch_factor_moves_f0(self):
        x = sawtooth(200, seconds=1.0)
        shifted = Waveform(pitch_shift(x.samples, SR, 1.2), SR)
        contour = extract_f0(shifted)
        med = np.median(contour.values[contour.voiced])
        assert abs(med - 240.0) <= 5.0

    def test_length_preserved_within_hop(self):
        x = sawtooth(150, seconds=0.73)
        cfg = PerturbConfig(apply_probability=1.0)
        out = perturb(x, cfg, np.random.default_rng(5))
        assert abs(len(out) - len(x)) <= 320

    def test_config_validation(self):
        with pytest.raises(DataError):
            PerturbConfig(pitch_shift_range=1.5)
        with pytest.raises(DataError):
            PerturbConfig(apply_probability=-0.1)


class TestMel:
    def test_frame_count(self):
        cfg = SpectrogramConfig(hop_length=200)
        x = Waveform(0.1 * np.random.default_rng(0).standard_normal(16000), SR)
        assert mel(x, cfg).frames.shape == (80, cfg.n_mels)

    def test_silence_hits_log_floor(self):
        cfg = SpectrogramConfig()
        x = Waveform(np.zeros(SR), SR)
        x.samples[0] = 1e-9  # Waveform forbids all-zero only at standardize
        m = mel(x, cfg)
        assert np.allclose(m.frames, np.log(cfg.floor), atol=1e-6)

    def test_power_scaling_shifts_log_by_log4(self):
        cfg = SpectrogramConfig()
        rng = np.random.default_rng(1)
        noise = 0.2 * rng.standard_normal(SR)
        a = mel(Waveform(noise, SR), cfg).frames
        b = mel(Waveform(2.0 * noise, SR), cfg).frames
        assert np.allclose(b - a, np.log(4.0), atol=1e-6)

    def test_too_short_input_rejected(self):
        cfg = SpectrogramConfig()
        with pytest.raises(DataError):
            mel(Waveform(np.ones(100), SR), cfg)


class TestF0:
    def test_sawtooth_220(self):
        contour = extract_f0(sawtooth(220, seconds=1.0))
        med = np.median(contour.values[contour.voiced])
        assert 215.0 <= med <= 225.0

    def test_silence_is_unvoiced(self):
        x = Waveform(1e-7 * np.ones(SR), SR)
        contour = extract_f0(x)
        assert not contour.voiced.any()

    def test_frame_count_50hz(self):
        contour = extract_f0(sine(150, seconds=2.0))
        assert len(contour) == 100

    def test_normalize_constant_contour(self):
        values = np.full(50, 200.0)
        c = normalize_f0(
            __import__("accentconv.audio.types", fromlist=["F0Contour"]).F0Contour(
                values=values, voiced=np.ones(50, dtype=bool), kind="raw"
            )
        )
        assert np.allclose(c.values, 0.0)

    def test_normalize_hand_zscore(self):
        from accentconv.audio.types import F0Contour

        values = np.exp(np.array([5.0, 5.2, 5.4]))
        c = normalize_f0(F0Contour(values=values, voiced=np.ones(3, dtype=bool)))
        assert np.allclose(c.values, [-1.2247, 0.0, 1.2247], atol=1e-4)

    def test_roundtrip(self):
        from accentconv.audio.types import F0Contour

        rng = np.random.default_rng(7)
        voiced = rng.random(40) > 0.3
        values = np.where(voiced, rng.uniform(80, 300, 40), 0.0)
        raw = F0Contour(values=values, voiced=voiced)
        back = denormalize_f0(normalize_f0(raw))
        assert np.max(np.abs(back.values[voiced] - values[voiced])) < 1e-6

    def test_too_few_voiced_frames_warns(self):
        from accentconv.audio.types import F0Contour

        raw = F0Contour(values=np.array([100.0, 0.0]), voiced=np.array([True, False]))
        c = normalize_f0(raw)
        assert c.warning and np.allclose(c.values, 0.0)

    def test_normalized_stats(self):
        contour = normalize_f0(extract_f0(sawtooth(170, seconds=1.5)))
        v = contour.values[contour.voiced]
        assert abs(v.mean()) < 1e-5
        assert abs(v.std() - 1.0) < 1e-5

    def test_f0_frames_match_mel_frames(self):
        x = sawtooth(130, seconds=1.37)
        cfg = SpectrogramConfig()
        assert len(extract_f0(x)) == mel(x, cfg).frames.shape[0]
