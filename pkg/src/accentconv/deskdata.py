"""Desk-scale synthetic speech fixtures.

A tiny artificial "language" whose utterances are concatenations of
formant-defined phone units drawn from a small lexicon. It gives every
test and smoke run a corpus with known transcripts, known phone labels,
controllable accents (systematic phone substitutions), a deterministic
native-voice TTS, and a template recognizer that works on both clean and
reconstructed audio. Everything is seeded and asset-free.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import butter, lfilter

from .audio import SpectrogramConfig, Waveform, mel, standardize
from .errors import DataError

SAMPLE_RATE = 16000

# Phone inventory: vowels carry two formants, fricatives a noise band.
VOWELS = {
    "a": (700.0, 1200.0),
    "e": (500.0, 1900.0),
    "i": (320.0, 2500.0),
    "o": (450.0, 900.0),
    "u": (350.0, 650.0),
}
FRICATIVES = {
    "s": (3600.0, 6400.0),
    "f": (1400.0, 2800.0),
    "k": (600.0, 1300.0),
}
PHONES = tuple(list(VOWELS) + list(FRICATIVES))

LEXICON = ("kesa", "kisa", "aso", "afo", "esu", "isu", "oke", "oki", "ufa", "usa")

# Systematic L2 substitutions used for "nonnative" renditions.
ACCENT_RULES = {"e": "i", "s": "f"}


@dataclass(frozen=True)
class Voice:
    name: str
    f0: float
    formant_scale: float


NATIVE_VOICE = Voice("native", 170.0, 1.0)
DESK_SPEAKERS = (
    Voice("spk_a", 120.0, 0.94),
    Voice("spk_b", 230.0, 1.08),
    Voice("spk_c", 165.0, 1.02),
)


def phone_id(symbol: str) -> int:
    """1-based label id; 0 is reserved for the CTC blank."""
    return PHONES.index(symbol) + 1


def ipa_to_ids(ipa: str) -> list[int]:
    return [phone_id(s) for s in ipa.replace(" ", "")]


def accentize(word: str) -> str:
    return "".join(ACCENT_RULES.get(p, p) for p in word)


def _ramp(n: int, sr: int) -> np.ndarray:
    edge = min(max(int(0.008 * sr), 1), n // 2)
    env = np.ones(n)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(edge) / edge)
    env[:edge] = ramp
    env[-edge:] = ramp[::-1]
    return env


def _render_vowel(symbol: str, duration: float, voice: Voice, rng: np.random.Generator) -> np.ndarray:
    f1, f2 = (f * voice.formant_scale for f in VOWELS[symbol])
    n = int(duration * SAMPLE_RATE)
    t = np.arange(n) / SAMPLE_RATE
    vib_phase = rng.uniform(0, 2 * np.pi)
    f0 = voice.f0 * (1.0 + 0.025 * np.sin(2 * np.pi * 2.5 * t + vib_phase) - 0.03 * t / max(duration, 1e-6))
    phase = 2 * np.pi * np.cumsum(f0) / SAMPLE_RATE
    out = np.zeros(n)
    k = 1
    while k * voice.f0 < 4800.0:
        fk = k * voice.f0
        amp = (
            0.05
            + np.exp(-0.5 * ((fk - f1) / 120.0) ** 2)
            + 0.7 * np.exp(-0.5 * ((fk - f2) / 160.0) ** 2)
        ) / np.sqrt(k)
        out += amp * np.sin(k * phase + rng.uniform(0, 2 * np.pi))
        k += 1
    out /= max(np.max(np.abs(out)), 1e-9)
    return out * _ramp(n, SAMPLE_RATE)


def _render_fricative(symbol: str, duration: float, voice: Voice, rng: np.random.Generator) -> np.ndarray:
    lo, hi = (f * voice.formant_scale for f in FRICATIVES[symbol])
    hi = min(hi, SAMPLE_RATE / 2 * 0.98)
    n = int(duration * SAMPLE_RATE)
    noise = rng.standard_normal(n + 256)
    b, a = butter(4, [lo, hi], btype="band", fs=SAMPLE_RATE)
    out = lfilter(b, a, noise)[256:]
    out /= max(np.max(np.abs(out)), 1e-9)
    return 0.55 * out * _ramp(n, SAMPLE_RATE)


def render_phone(symbol: str, duration: float, voice: Voice, rng: np.random.Generator) -> np.ndarray:
    if symbol in VOWELS:
        return _render_vowel(symbol, duration, voice, rng)
    if symbol in FRICATIVES:
        return _render_fricative(symbol, duration, voice, rng)
    raise DataError(f"unknown phone {symbol!r}")


@dataclass
class RenderedUtterance:
    waveform: Waveform
    transcript: str  # canonical words, space separated
    ipa: str  # phones actually rendered


def render_utterance(
    words: list[str],
    voice: Voice,
    rng: np.random.Generator,
    accented: bool = False,
    phone_duration: tuple[float, float] = (0.11, 0.17),
    gap_duration: tuple[float, float] = (0.08, 0.12),
) -> RenderedUtterance:
    """Render a word sequence; ``accented`` applies the substitution rules."""
    pieces = [np.zeros(int(0.05 * SAMPLE_RATE))]
    rendered_phones = []
    for w, word in enumerate(words):
        spoken = accentize(word) if accented else word
        for symbol in spoken:
            dur = rng.uniform(*phone_duration)
            pieces.append(render_phone(symbol, dur, voice, rng))
            rendered_phones.append(symbol)
        gap = np.zeros(int(rng.uniform(*gap_duration) * SAMPLE_RATE))
        pieces.append(gap)
    samples = 0.5 * np.concatenate(pieces)
    return RenderedUtterance(
        waveform=Waveform(samples, SAMPLE_RATE),
        transcript=" ".join(words),
        ipa=" ".join(rendered_phones),
    )


def sample_sentence(rng: np.random.Generator, n_words: tuple[int, int] = (2, 4)) -> list[str]:
    count = int(rng.integers(n_words[0], n_words[1] + 1))
    return [LEXICON[int(rng.integers(len(LEXICON)))] for _ in range(count)]


def build_corpus(
    out_dir: str | os.PathLike,
    n_utterances: int,
    seed: int,
    speakers: tuple[Voice, ...] = DESK_SPEAKERS,
    accented: bool = False,
    language: str = "desk",
    prefix: str = "utt",
    target_loudness: float = -27.0,
) -> list[dict]:
    """Render a corpus to WAV files plus manifest rows.

    Rows carry {utterance_id, audio_path, transcript, ipa, language,
    speaker_id}; audio is standardized to 16 kHz / target loudness.
    """
    from .audio import save_wav

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_utterances):
        voice = speakers[i % len(speakers)]
        words = sample_sentence(rng)
        utt = render_utterance(words, voice, rng, accented=accented)
        wav = standardize(utt.waveform, SAMPLE_RATE, target_loudness)
        utt_id = f"{prefix}_{i:04d}"
        path = out_dir / f"{utt_id}.wav"
        save_wav(path, wav)
        rows.append(
            {
                "utterance_id": utt_id,
                "audio_path": str(path),
                "transcript": utt.transcript,
                "ipa": utt.ipa,
                "language": language,
                "speaker_id": voice.name,
            }
        )
    return rows


def write_manifest(rows: list[dict], path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


class DeskNativeTTS:
    """Deterministic native-voice renderer of canonical pronunciations.

    Stands in for the external native-accent TTS: given a transcript it
    renders the canonical phones with the fixed native voice. The per-call
    generator is derived from the transcript so repeated calls replay.
    """

    def __init__(self, voice: Voice = NATIVE_VOICE, target_loudness: float = -27.0):
        self.voice = voice
        self.target_loudness = target_loudness

    def synthesize(self, transcript: str, utterance_id: str | None = None) -> Waveform:
        words = transcript.split()
        if not words:
            raise DataError("empty transcript")
        digest = hashlib.sha256(transcript.encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        utt = render_utterance(words, self.voice, rng, accented=False)
        return standardize(utt.waveform, SAMPLE_RATE, self.target_loudness)


class ReplayTTS:
    """Native-TTS fixture that replays pre-rendered files by utterance id."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)

    def synthesize(self, transcript: str, utterance_id: str | None = None) -> Waveform:
        from .audio import load_wav

        if utterance_id is None:
            raise DataError("ReplayTTS requires an utterance id")
        path = self.directory / f"{utterance_id}.wav"
        if not path.exists():
            raise DataError(f"no pre-rendered audio for {utterance_id} at {path}")
        return load_wav(path)


class TemplateRecognizer:
    """Nearest-template phone decoder with lexicon lookup.

    Serves as the pluggable recognizer for WER on desk fixtures: frames are
    classified against per-phone mean log-mel templates, silence gaps split
    words, and each phone run is matched to the closest lexicon entry.
    """

    def __init__(self, mel_config: SpectrogramConfig | None = None, seed: int = 1234):
        self.cfg = mel_config or SpectrogramConfig()
        rng = np.random.default_rng(seed)
        self.templates = {}
        for symbol in PHONES:
            frames = []
            for dur in (0.20, 0.26):
                buf = render_phone(symbol, dur, NATIVE_VOICE, rng)
                m = mel(Waveform(0.3 * buf, SAMPLE_RATE), self.cfg).frames
                frames.append(m[2:-2])
            self.templates[symbol] = np.concatenate(frames).mean(axis=0)
        self._symbols = list(self.templates)
        self._matrix = np.stack([self.templates[s] for s in self._symbols])

    def _classify_frames(self, frames: np.ndarray) -> list[str]:
        # Per-frame mean subtraction makes the match loudness-invariant.
        f = frames - frames.mean(axis=1, keepdims=True)
        m = self._matrix - self._matrix.mean(axis=1, keepdims=True)
        d = ((f[:, None, :] - m[None, :, :]) ** 2).sum(axis=2)
        return [self._symbols[j] for j in d.argmin(axis=1)]

    def transcribe(self, x: Waveform) -> str:
        m = mel(x, self.cfg).frames
        power_db = 10.0 * np.log10(np.exp(m).mean(axis=1) + 1e-12)
        active = power_db > power_db.max() - 25.0
        words = []
        t = 0
        T = len(active)
        while t < T:
            if not active[t]:
                t += 1
                continue
            start = t
            while t < T and active[t]:
                t += 1
            if t - start < 3:
                continue
            symbols = self._classify_frames(m[start:t])
            collapsed = _collapse_runs(symbols, min_run=2)
            if collapsed:
                words.append(self._decode_word(collapsed))
        return " ".join(words)

    def _decode_word(self, phones: list[str]) -> str:
        seq = "".join(phones)
        best, best_d = None, None
        for entry in LEXICON:
            d = _edit_distance(seq, entry)
            if best_d is None or d < best_d:
                best, best_d = entry, d
        return best


def _collapse_runs(symbols: list[str], min_run: int = 1) -> list[str]:
    out = []
    i = 0
    while i < len(symbols):
        j = i
        while j < len(symbols) and symbols[j] == symbols[i]:
            j += 1
        if j - i >= min_run:
            if not out or out[-1] != symbols[i]:
                out.append(symbols[i])
        i = j
    return out


def _edit_distance(a, b) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]
