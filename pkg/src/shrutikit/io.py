"""Sequence text files and PCM WAV rendering.

Sequence file layout::

    # schema_version: 1
    # tonic_hz: 261.63
    # raga: Yaman
    0
    204
    MISSING

Header lines are ``# key: value`` and must come before the first value.
Other ``#`` lines and blank lines are ignored. If the header carries
``reference_hz`` the values are cents relative to that pitch (440 for
A4-referenced pitch trackers) and are converted to tonic-relative cents
when read through :meth:`SequenceFile.observations`.
"""

from __future__ import annotations

import math
import re
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .scale import (
    DEFAULT_SCALE,
    MISSING,
    InvalidInput,
    InvalidTask,
    PitchSequence,
    ShrutiScale,
    as_pitch_sequence,
    cents_to_hz,
    reference_to_tonic,
)

SCHEMA_VERSION = 1
MISSING_TOKEN = "MISSING"
_HEADER = re.compile(r"^#\s*([A-Za-z_]+)\s*:\s*(.*?)\s*$")
_KEYS = ("schema_version", "tonic_hz", "reference_hz", "raga")

SAMPLE_RATE = 44100
CHANNELS = 2
SAMPLE_WIDTH = 2
NOTE_FRAMES = 22050
AMPLITUDE = 0.8
FADE_SECONDS = 0.005


class ParseError(InvalidInput):
    pass


def format_cents(value: float) -> str:
    """Shortest text that reads back as the same float (``204.0`` -> ``204``)."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


@dataclass(frozen=True)
class SequenceFile:
    values: tuple  # floats or MISSING, as written in the file
    tonic_hz: float = DEFAULT_SCALE.tonic_hz
    raga: Optional[str] = None
    reference_hz: Optional[float] = None
    schema_version: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_sequence(cls, seq, tonic_hz: float = DEFAULT_SCALE.tonic_hz, raga: Optional[str] = None) -> "SequenceFile":
        return cls(tuple(as_pitch_sequence(seq)), float(tonic_hz), raga)

    def observations(self) -> PitchSequence:
        """Tonic-relative cents (converted from ``reference_hz`` if set)."""
        if self.reference_hz is None:
            return PitchSequence(self.values)
        return PitchSequence(
            MISSING if v is MISSING else reference_to_tonic(v, self.tonic_hz, self.reference_hz)
            for v in self.values
        )

    def scale(self, base: ShrutiScale = DEFAULT_SCALE) -> ShrutiScale:
        return ShrutiScale(base.cents, self.tonic_hz, base.names)

    def dumps(self) -> str:
        lines = [f"# schema_version: {self.schema_version}", f"# tonic_hz: {format_cents(self.tonic_hz)}"]
        if self.reference_hz is not None:
            lines.append(f"# reference_hz: {format_cents(self.reference_hz)}")
        if self.raga:
            lines.append(f"# raga: {self.raga}")
        lines += [MISSING_TOKEN if v is MISSING else format_cents(v) for v in self.values]
        return "\n".join(lines) + "\n"


def parse_sequence(text: str) -> SequenceFile:
    header: dict = {}
    values = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m and not values:
                key = m.group(1).lower()
                if key in header:
                    raise ParseError(f"line {lineno}: duplicate header key {key!r}")
                header[key] = m.group(2)
            continue
        if line == MISSING_TOKEN:
            values.append(MISSING)
            continue
        try:
            v = float(line)
        except ValueError:
            raise ParseError(f"line {lineno}: expected a cent value or {MISSING_TOKEN}, got {line!r}") from None
        if not math.isfinite(v):
            raise ParseError(f"line {lineno}: cent value must be finite")
        values.append(v)
    if not values:
        raise ParseError("sequence file has no observations")
    try:
        version = int(header.get("schema_version", SCHEMA_VERSION))
        tonic = float(header.get("tonic_hz", DEFAULT_SCALE.tonic_hz))
        ref = float(header["reference_hz"]) if "reference_hz" in header else None
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}") from None
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    if not (tonic > 0 and math.isfinite(tonic)) or (ref is not None and not (ref > 0 and math.isfinite(ref))):
        raise ParseError("tonic_hz and reference_hz must be positive")
    extra = {k: v for k, v in header.items() if k not in _KEYS}
    return SequenceFile(tuple(values), tonic, header.get("raga") or None, ref, version, extra)


def read_sequence(path) -> SequenceFile:
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not a text file") from exc
    return parse_sequence(text)


def write_sequence(path, sf: SequenceFile) -> None:
    Path(path).write_text(sf.dumps())


# --- audio ----------------------------------------------------------------

def render_pcm(seq, tonic_hz: float, fade: bool = True) -> np.ndarray:
    """Concatenated sine notes as an ``(frames, 2)`` int16 array.

    Each note is ``NOTE_FRAMES`` frames of a sine at the note's frequency,
    peak ``AMPLITUDE`` of full scale, phase restarting at 0. With ``fade``
    every note gets a linear 5 ms ramp in and out to avoid clicks at the
    joins.
    """
    seq = as_pitch_sequence(seq)
    if seq.has_missing:
        raise InvalidTask("cannot render MISSING notes; complete the sequence first")
    scale = ShrutiScale(DEFAULT_SCALE.cents, tonic_hz)
    n = np.arange(NOTE_FRAMES)
    env = np.ones(NOTE_FRAMES)
    if fade:
        k = int(round(FADE_SECONDS * SAMPLE_RATE))
        ramp = np.arange(k) / k
        env[:k] = ramp
        env[-k:] = ramp[::-1]
    notes = []
    for cents in seq:
        f = cents_to_hz(scale, cents)
        notes.append(AMPLITUDE * env * np.sin(2 * np.pi * f * n / SAMPLE_RATE))
    mono = np.round(np.concatenate(notes) * 32767).astype("<i2")
    return np.repeat(mono[:, None], CHANNELS, axis=1)


def write_wav(path, pcm: np.ndarray) -> None:
    """16-bit PCM WAV (canonical 44-byte header) from ``(frames, channels)`` samples."""
    pcm = np.ascontiguousarray(pcm, dtype="<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(pcm.shape[1])
        w.setsampwidth(SAMPLE_WIDTH)
        w.setframerate(SAMPLE_RATE)
        w.writeframes(pcm.tobytes())


def synthesize(seq, path, tonic_hz: float, fade: bool = True) -> int:
    """Render ``seq`` to ``path``; returns the number of frames written."""
    pcm = render_pcm(seq, tonic_hz, fade)
    write_wav(path, pcm)
    return len(pcm)
