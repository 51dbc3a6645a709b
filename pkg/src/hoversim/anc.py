"""Feedback cancellation of rotor tones at a near-ear receiver.

The rotor noise is modeled as a handful of blade-pass harmonics over a
wide-band floor. A canceller locks onto the loudest tone, then walks an
anti-phase tone's phase and amplitude downhill on the mean-square pressure
seen by a feedback microphone next to the ear. Levels are reported A-
weighted against the standard hearing curve (0 dB at 1 kHz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import AliasingRisk, BufferTooShort, EmptyBuffer, NoTarget

P_REF = 20e-6  # Pa, reference sound pressure
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Tone:
    frequency: float  # Hz
    amplitude: float  # Pa, peak
    phase: float = 0.0  # rad


@dataclass(frozen=True)
class NoiseSpectrum:
    """Tonal components plus a flat wide-band floor above a cutoff."""

    tones: tuple[Tone, ...] = ()
    wideband_rms: float = 0.0   # Pa, total RMS of the floor
    wideband_cutoff: float = 6000.0  # Hz, floor occupies [cutoff, nyquist]

    def __post_init__(self):
        if any(t.frequency <= 0 or t.amplitude < 0 for t in self.tones):
            raise ValueError("tone frequencies must be positive, amplitudes >= 0")
        ordered = tuple(sorted(self.tones, key=lambda t: t.frequency))
        object.__setattr__(self, "tones", ordered)

    def total_power(self) -> float:
        """Mean-square pressure (Pa^2) of all components."""
        return sum(0.5 * t.amplitude**2 for t in self.tones) + self.wideband_rms**2


def synthesize_noise(
    spec: NoiseSpectrum,
    duration: float,
    sample_rate: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Render the spectrum to pressure samples (Pa), deterministic per rng."""
    if spec.tones:
        if sample_rate <= 2.0 * max(t.frequency for t in spec.tones):
            raise AliasingRisk("sample rate below twice the highest tone")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for tone in spec.tones:
        out += tone.amplitude * np.sin(TWO_PI * tone.frequency * t + tone.phase)
    if spec.wideband_rms > 0.0 and n > 0:
        white = rng.standard_normal(n)
        spectrum = np.fft.rfft(white)
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        spectrum[freqs < spec.wideband_cutoff] = 0.0
        shaped = np.fft.irfft(spectrum, n)
        rms = np.sqrt(np.mean(shaped**2))
        if rms > 0.0:
            out += shaped * (spec.wideband_rms / rms)
    return out


def strongest_tone(
    buffer: np.ndarray, sample_rate: float, window: int = 4096
) -> tuple[float, float]:
    """Locate the loudest tonal component in the most recent window.

    Returns (frequency Hz, amplitude Pa peak). The peak DFT bin is refined
    by parabolic interpolation on log magnitude; the amplitude is corrected
    for the Hann window's coherent gain.
    """
    buf = np.asarray(buffer, dtype=float)
    if buf.shape[0] < window:
        raise BufferTooShort(f"{buf.shape[0]} < {window} samples")
    seg = buf[-window:]
    win = np.hanning(window)
    mags = np.abs(np.fft.rfft(seg * win))
    k = int(np.argmax(mags[1:-1])) + 1  # skip DC and nyquist for interpolation
    with np.errstate(divide="ignore"):
        ln = np.log(np.maximum(mags[k - 1 : k + 2], 1e-300))
    denom = ln[0] - 2.0 * ln[1] + ln[2]
    delta = 0.0 if denom == 0.0 else 0.5 * (ln[0] - ln[2]) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    freq = (k + delta) * sample_rate / window
    peak = math.exp(ln[1] - 0.25 * (ln[0] - ln[2]) * delta)
    amplitude = 2.0 * peak / win.sum()
    return freq, amplitude


@dataclass(frozen=True)
class AncState:
    """Canceller state: the locked tone and the anti-wave parameters."""

    target_frequency: float | None = None
    anti_amplitude: float = 0.0
    anti_phase: float = 0.0
    converged: bool = False
    phase_step: float = math.pi / 2
    amplitude_step: float = 0.05  # Pa
    last_ms: float | None = None

    def __post_init__(self):
        if self.anti_amplitude < 0:
            raise ValueError("anti amplitude must be >= 0")
        object.__setattr__(self, "anti_phase", self.anti_phase % TWO_PI)


def anti_wave(
    state: AncState, n: int, sample_rate: float, start_index: int = 0
) -> np.ndarray:
    """The anti-tone's pressure contribution at the receiver."""
    if state.target_frequency is None:
        raise NoTarget("no target frequency set")
    t = (start_index + np.arange(n)) / sample_rate
    return state.anti_amplitude * np.sin(
        TWO_PI * state.target_frequency * t + state.anti_phase
    )


def adapt_step(
    state: AncState,
    noise_window: np.ndarray,
    sample_rate: float,
    start_index: int = 0,
    tolerance: float = 1e-4,
) -> AncState:
    """One phase-then-amplitude coordinate-descent iteration.

    Candidates at +/- the current step are kept only if they lower the
    windowed mean-square residual; a fruitless probe halves that step.
    Convergence is declared when the relative improvement across a full
    iteration drops under the tolerance.

    A silent anti-wave makes the objective insensitive to phase, so from a
    cold start the phase is first oriented by scanning one quadrant-spaced
    ring at the trial amplitude; every later iteration is plain descent.
    """
    if state.target_frequency is None:
        raise NoTarget("set a target before adapting")
    noise = np.asarray(noise_window, dtype=float)
    n = noise.shape[0]

    def residual_ms(amplitude: float, phase: float) -> float:
        cand = replace(state, anti_amplitude=amplitude, anti_phase=phase)
        return float(np.mean((noise + anti_wave(cand, n, sample_rate, start_index)) ** 2))

    amp, phase = state.anti_amplitude, state.anti_phase
    phase_step, amp_step = state.phase_step, state.amplitude_step
    before = residual_ms(amp, phase)
    best = before

    if amp == 0.0:
        # Cold start: pick the best-oriented phase at the trial amplitude.
        phase = min(
            (phase + k * math.pi / 2 for k in range(4)),
            key=lambda cand: residual_ms(amp_step, cand),
        ) % TWO_PI
    else:
        for cand in (phase + phase_step, phase - phase_step):
            ms = residual_ms(amp, cand)
            if ms < best:
                best, phase = ms, cand % TWO_PI
        if best >= before:
            phase_step = max(phase_step * 0.5, 1e-5)
        else:
            # Re-expand on success so a slowly sliding optimum (frequency
            # estimate error, drifting tone) stays trackable.
            phase_step = min(phase_step * 1.5, math.pi / 2)

    mid = best
    for cand in (amp + amp_step, max(0.0, amp - amp_step)):
        if cand == amp:
            continue
        ms = residual_ms(cand, phase)
        if ms < best:
            best, amp = ms, cand
    if best >= mid:
        amp_step = max(amp_step * 0.5, 1e-7)
    else:
        amp_step = min(amp_step * 1.5, max(4.0 * amp, 1.0))

    improvement = (before - best) / before if before > 0 else 0.0
    return AncState(
        target_frequency=state.target_frequency,
        anti_amplitude=amp,
        anti_phase=phase,
        converged=improvement < tolerance,
        phase_step=phase_step,
        amplitude_step=amp_step,
        last_ms=best,
    )


def a_weighting_db(freq: np.ndarray) -> np.ndarray:
    """A-weighting gain (dB) of the standard curve, 0 dB at 1 kHz."""
    f = np.asarray(freq, dtype=float)
    f2 = f**2
    with np.errstate(divide="ignore", invalid="ignore"):
        ra = (12194.0**2 * f2**2) / (
            (f2 + 20.6**2)
            * np.sqrt((f2 + 107.7**2) * (f2 + 737.9**2))
            * (f2 + 12194.0**2)
        )
        db = 20.0 * np.log10(ra) + 2.0
    return np.where(f > 0, db, -np.inf)


def a_weighted_level(buffer: np.ndarray, sample_rate: float) -> float:
    """A-weighted sound pressure level (dBA re 20 uPa) of a pressure buffer."""
    buf = np.asarray(buffer, dtype=float)
    if buf.size == 0:
        raise EmptyBuffer("no samples")
    spectrum = np.fft.rfft(buf)
    freqs = np.fft.rfftfreq(buf.size, 1.0 / sample_rate)
    gain = np.power(10.0, a_weighting_db(freqs) / 20.0)
    gain[0] = 0.0  # DC carries no acoustic weight
    weighted = spectrum * gain
    # Parseval: mean square of the weighted signal from the rDFT bins.
    power = np.abs(weighted) ** 2
    if buf.size % 2 == 0:
        power[1:-1] *= 2.0
    else:
        power[1:] *= 2.0
    ms = power.sum() / buf.size**2
    return 10.0 * math.log10(max(ms, 1e-300) / P_REF**2)


def tone_level_db(buffer: np.ndarray, sample_rate: float, frequency: float) -> float:
    """Narrow-band level (dB re 20 uPa) at one frequency via a windowed DFT."""
    buf = np.asarray(buffer, dtype=float)
    if buf.size == 0:
        raise EmptyBuffer("no samples")
    n = buf.size
    win = np.hanning(n)
    t = np.arange(n) / sample_rate
    probe = np.exp(-1j * TWO_PI * frequency * t)
    amp = 2.0 * np.abs(np.sum(buf * win * probe)) / win.sum()
    return 20.0 * math.log10(max(amp / math.sqrt(2.0), 1e-300) / P_REF)


@dataclass(frozen=True)
class AcousticPath:
    """Free-field propagation: pure delay plus 1/r spreading loss.

    Component amplitudes are referenced to 1 m from the source; the
    receiver (the user's ear) sits at `distance` meters.
    """

    distance: float = 0.6
    speed_of_sound: float = 343.0

    def gain(self) -> float:
        return 1.0 / self.distance

    def delay_s(self) -> float:
        return self.distance / self.speed_of_sound


def default_rotor_spectrum() -> NoiseSpectrum:
    """Constructed stand-in rotor spectrum (not a measured one).

    Five blade-pass harmonics of a 180 Hz fundamental plus a flat floor
    above 6 kHz. Amplitudes are chosen so the receiver level lands near
    73 dBA and the loudest tone carries about half the A-weighted power,
    making its removal worth about 3 dBA.
    """
    return NoiseSpectrum(
        tones=(
            Tone(180.0, 0.055397),
            Tone(360.0, 0.048520),
            Tone(540.0, 0.073768),
            Tone(720.0, 0.030955),
            Tone(900.0, 0.025229),
        ),
        wideband_rms=0.032155,
        wideband_cutoff=6000.0,
    )


# Alias kept close to how the receiver spectrum is usually referred to.
def receiver_spectrum(spec: NoiseSpectrum, path: AcousticPath) -> NoiseSpectrum:
    """Spectrum as heard at the feedback microphone."""
    g = path.gain()
    delay = path.delay_s()
    tones = tuple(
        Tone(t.frequency, t.amplitude * g, (t.phase - TWO_PI * t.frequency * delay) % TWO_PI)
        for t in spec.tones
    )
    return NoiseSpectrum(
        tones=tones, wideband_rms=spec.wideband_rms * g, wideband_cutoff=spec.wideband_cutoff
    )
