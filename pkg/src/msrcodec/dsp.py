"""Deterministic signal-processing front end.

Mel-spectrogram extraction, autocorrelation F0 tracking, frame-energy
targets and training-segment cropping. Everything here is a pure function
of its inputs; the neural cascade consumes these features but never
changes them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io.wavfile

from .errors import InvalidInputError

SAMPLE_RATE = 16000
MEL_RATE = 100.0
N_MELS = 80
WIN_LENGTH = 400  # 25 ms
HOP_LENGTH = 160  # 10 ms
N_FFT = 512
FMIN_HZ = 0.0
FMAX_HZ = 8000.0
MEL_FLOOR = 1e-5
LOG_MEL_FLOOR = float(np.log(MEL_FLOOR))

F0_RATE = 12.5
F0_FRAME = 1280  # 80 ms window and hop
F0_MIN_HZ = 60.0
F0_MAX_HZ = 400.0
VOICING_THRESHOLD = 0.3

CROP_SECONDS = 6.0
CROP_SAMPLES = int(CROP_SECONDS * SAMPLE_RATE)

PIPELINE_RATES = (100.0, 25.0, 12.5)


@dataclass
class Waveform:
    """Mono 16 kHz audio with amplitudes nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidInputError("waveform must be one-dimensional")
        if self.sample_rate != SAMPLE_RATE:
            raise InvalidInputError(
                f"sample rate must be {SAMPLE_RATE} Hz, got {self.sample_rate}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise InvalidInputError("waveform contains non-finite samples")

    def __len__(self):
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class MelSpectrogram:
    """Log-compressed 80-band mel energies at 100 Hz."""

    values: np.ndarray
    frame_rate: float = MEL_RATE
    n_mels: int = N_MELS

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != self.n_mels:
            raise InvalidInputError(
                f"mel values must be frames x {self.n_mels}, got {self.values.shape}"
            )
        if self.frame_rate != MEL_RATE:
            raise InvalidInputError(f"mel frame rate must be {MEL_RATE} Hz")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("mel contains non-finite values")

    @property
    def frames(self) -> int:
        return self.values.shape[0]


@dataclass
class ProsodyTargets:
    """Per-frame F0 (Hz, 0 = unvoiced), log spectral energy and voicing at 12.5 Hz."""

    f0: np.ndarray
    energy: np.ndarray
    voicing_mask: np.ndarray

    def __post_init__(self):
        self.f0 = np.asarray(self.f0, dtype=np.float64)
        self.energy = np.asarray(self.energy, dtype=np.float64)
        self.voicing_mask = np.asarray(self.voicing_mask, dtype=bool)
        if not (len(self.f0) == len(self.energy) == len(self.voicing_mask)):
            raise InvalidInputError("prosody target sequences must have equal length")
        if np.any(self.f0 < 0):
            raise InvalidInputError("f0 must be non-negative")
        if np.any((self.f0 > 0) != self.voicing_mask):
            raise InvalidInputError("f0 > 0 must coincide with the voicing mask")

    def __len__(self):
        return len(self.f0)


@dataclass
class RatedFeatureMap:
    """A frames x channels feature array tagged with its frame rate."""

    values: np.ndarray
    rate: float

    def __post_init__(self):
        if float(self.rate) not in PIPELINE_RATES:
            raise InvalidInputError(
                f"rate must be one of {PIPELINE_RATES}, got {self.rate}"
            )
        self.rate = float(self.rate)
        if getattr(self.values, "ndim", None) != 2 or self.values.shape[0] < 1:
            raise InvalidInputError("feature map must be a non-empty 2-D array")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int = N_MELS,
    n_fft: int = N_FFT,
    sample_rate: int = SAMPLE_RATE,
    fmin: float = FMIN_HZ,
    fmax: float = FMAX_HZ,
) -> np.ndarray:
    """Triangular mel filters (peak 1) over rfft bins, shape (n_mels, n_fft//2+1)."""
    mel_points = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    fb = np.zeros((n_mels, len(bin_freqs)))
    for i in range(n_mels):
        left, center, right = hz_points[i], hz_points[i + 1], hz_points[i + 2]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        fb[i] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def mel_band_centers_hz(n_mels: int = N_MELS) -> np.ndarray:
    """Center frequency in Hz of each mel band."""
    mel_points = np.linspace(hz_to_mel(FMIN_HZ), hz_to_mel(FMAX_HZ), n_mels + 2)
    return mel_to_hz(mel_points[1:-1])


_MEL_FB = mel_filterbank()
_HANN = np.hanning(WIN_LENGTH)


def compute_mel(w: Waveform) -> MelSpectrogram:
    """80-band log-mel at 100 Hz; frame k covers samples [k*160, k*160+400)."""
    if len(w) == 0:
        raise InvalidInputError("cannot compute mel of an empty waveform")
    n_frames = len(w) // HOP_LENGTH
    if n_frames == 0:
        raise InvalidInputError(
            f"waveform shorter than one hop ({HOP_LENGTH} samples)"
        )
    needed = (n_frames - 1) * HOP_LENGTH + WIN_LENGTH
    x = np.zeros(needed)
    x[: len(w)] = w.samples[:needed] if needed <= len(w) else w.samples
    idx = np.arange(WIN_LENGTH)[None, :] + HOP_LENGTH * np.arange(n_frames)[:, None]
    frames = x[idx] * _HANN
    power = np.abs(np.fft.rfft(frames, n=N_FFT, axis=1)) ** 2
    mel = power @ _MEL_FB.T
    return MelSpectrogram(np.log(np.maximum(mel, MEL_FLOOR)))


def _normalized_acf_peak(frame: np.ndarray, lag_min: int, lag_max: int):
    """Best lag in [lag_min, lag_max] of the one-sided ACF and its r[lag]/r[0] value."""
    x = frame - frame.mean()
    r0 = float(np.dot(x, x))
    if r0 < 1e-12:
        return 0, 0.0
    n = len(x)
    lags = np.arange(lag_min, lag_max + 1)
    r = np.array([np.dot(x[: n - lag], x[lag:]) for lag in lags])
    best = int(np.argmax(r))
    return int(lags[best]), float(r[best] / r0)


def estimate_f0(w: Waveform) -> np.ndarray:
    """Autocorrelation F0 at 12.5 Hz with a 0.3 voicing threshold.

    Non-overlapping 80 ms frames, search range [60, 400] Hz; unvoiced
    frames carry f0 = 0.
    """
    n_frames = len(w) // F0_FRAME
    lag_min = int(SAMPLE_RATE / F0_MAX_HZ)
    lag_max = int(SAMPLE_RATE / F0_MIN_HZ)
    f0 = np.zeros(n_frames)
    for i in range(n_frames):
        frame = w.samples[i * F0_FRAME : (i + 1) * F0_FRAME]
        lag, peak = _normalized_acf_peak(frame, lag_min, lag_max)
        if lag > 0 and peak >= VOICING_THRESHOLD:
            f0[i] = SAMPLE_RATE / lag
    return f0


def prosody_targets(w: Waveform) -> ProsodyTargets:
    """F0, energy and voicing on the shared 12.5 Hz grid."""
    f0 = estimate_f0(w)
    if len(w) >= 8 * HOP_LENGTH:
        energy = frame_energy(compute_mel(w))[: len(f0)]
    else:
        energy = np.full(len(f0), float(np.log(N_MELS * MEL_FLOOR)))
    return ProsodyTargets(f0=f0, energy=energy, voicing_mask=f0 > 0)


def frame_energy(m: MelSpectrogram) -> np.ndarray:
    """Per-12.5 Hz-frame mean (over 8 mel frames) of log-sum-exp over the 80 bands."""
    if m.frames < 8:
        raise InvalidInputError("need at least 8 mel frames for one energy frame")
    n_out = m.frames // 8
    v = m.values[: n_out * 8]
    lse = np.logaddexp.reduce(v, axis=1)
    return lse.reshape(n_out, 8).mean(axis=1)


def crop_training_segment(w: Waveform, seed) -> Waveform:
    """Seeded 6 s crop (96000 samples); shorter inputs are right-padded with zeros."""
    rng = np.random.default_rng(seed)
    n = len(w)
    if n >= CROP_SAMPLES:
        offset = int(rng.integers(0, n - CROP_SAMPLES + 1))
        samples = w.samples[offset : offset + CROP_SAMPLES]
    else:
        samples = np.zeros(CROP_SAMPLES)
        samples[:n] = w.samples
    return Waveform(np.array(samples))


def read_wav(path) -> Waveform:
    """Read a mono 16-bit PCM WAV at 16 kHz; any other format is an error."""
    rate, data = scipy.io.wavfile.read(path)
    if rate != SAMPLE_RATE:
        raise InvalidInputError(f"expected {SAMPLE_RATE} Hz WAV, got {rate} Hz")
    if data.ndim != 1:
        raise InvalidInputError("expected mono WAV")
    if data.dtype != np.int16:
        raise InvalidInputError(f"expected 16-bit PCM WAV, got dtype {data.dtype}")
    return Waveform(data.astype(np.float64) / 32768.0)


def write_wav(path, w: Waveform) -> None:
    """Write a waveform as mono 16-bit PCM at 16 kHz."""
    q = np.clip(np.round(w.samples * 32768.0), -32768, 32767)
    scipy.io.wavfile.write(path, SAMPLE_RATE, q.astype(np.int16))


def phase_recover(m: MelSpectrogram, n_iter: int = 32) -> Waveform:
    """Iterative phase-recovery synthesis from a mel-spectrogram.

    Unvalidated plumbing: pseudo-inverts the mel filterbank and runs
    Griffin-Lim with the analysis STFT parameters. Deterministic.
    """
    mel_power = np.exp(m.values)
    pinv = np.linalg.pinv(_MEL_FB)  # (n_fft//2+1, n_mels)
    spec_power = np.clip(mel_power @ pinv.T, 0.0, None)
    mag = np.sqrt(spec_power)  # (frames, n_fft//2+1)

    n_frames = mag.shape[0]
    length = (n_frames - 1) * HOP_LENGTH + WIN_LENGTH
    window = _HANN

    def _istft(stft_mat):
        out = np.zeros(length)
        norm = np.zeros(length)
        frames = np.fft.irfft(stft_mat, n=N_FFT, axis=1)[:, :WIN_LENGTH]
        for i in range(n_frames):
            start = i * HOP_LENGTH
            out[start : start + WIN_LENGTH] += frames[i] * window
            norm[start : start + WIN_LENGTH] += window**2
        return out / np.maximum(norm, 1e-8)

    def _stft(x):
        idx = np.arange(WIN_LENGTH)[None, :] + HOP_LENGTH * np.arange(n_frames)[:, None]
        return np.fft.rfft(x[idx] * window, n=N_FFT, axis=1)

    phase = np.zeros_like(mag)
    stft_mat = mag * np.exp(1j * phase)
    for _ in range(n_iter):
        x = _istft(stft_mat)
        rebuilt = _stft(x)
        stft_mat = mag * np.exp(1j * np.angle(rebuilt))
    x = _istft(stft_mat)
    peak = np.max(np.abs(x))
    if peak > 1.0:
        x = x / peak
    return Waveform(x)
