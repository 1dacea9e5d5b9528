"""Delayed-overlap mixture simulation.

Each mixture shifts its source utterances by sampled inter-speaker delays,
sums them, and optionally adds noise scaled to a target SNR. Alongside the
audio, every mixture yields a session (one segment per source) and an SOT
reference; because delays strictly increase, the serialization order
always equals the source order.

Determinism contract: the per-mixture RNG is seeded from a hash of the
global seed and the mixture id, so reruns and parallel runs produce
bit-identical WAVs and manifests.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.io import wavfile

from .core import DEFAULT_SC_SYMBOL, MtasError, Segment, Session, UtteranceGroup
from .ingest import (
    DEFAULT_NORMALIZATION,
    NormalizationConfig,
    ParseError,
    _load_json_line,
    _require,
    _require_number,
    _require_str,
    normalize_text,
    session_record,
)
from .sot import reference_record

DEFAULT_DELAY_MIN = 1.0
DEFAULT_DELAY_MAX = 1.5


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: float64 samples nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise MtasError(f"audio must be mono 1-D, got shape {arr.shape}")
        if self.sample_rate <= 0:
            raise MtasError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(arr)):
            raise MtasError("audio contains non-finite samples")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class SourceSpec:
    audio_path: str
    speaker_id: str
    transcript_text: str


@dataclass(frozen=True)
class NoiseSpec:
    audio_path: str
    snr_db: float


@dataclass(frozen=True)
class MixtureSpec:
    """A fully resolved mixture: sources, delays, noise, seed."""

    mixture_id: str
    sources: tuple[SourceSpec, ...]
    delays: tuple[float, ...]
    sample_rate: int
    seed: int
    noise: Optional[NoiseSpec] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
        if not self.sources:
            raise MtasError(f"mixture {self.mixture_id}: no sources")
        if len(self.delays) != len(self.sources):
            raise MtasError(
                f"mixture {self.mixture_id}: {len(self.delays)} delays for "
                f"{len(self.sources)} sources"
            )
        if self.delays[0] != 0.0:
            raise MtasError(f"mixture {self.mixture_id}: first delay must be 0")
        for a, b in zip(self.delays, self.delays[1:]):
            if not b > a:
                raise MtasError(
                    f"mixture {self.mixture_id}: delays must strictly increase"
                )
        if self.sample_rate <= 0:
            raise MtasError(f"mixture {self.mixture_id}: bad sample_rate")


def mixture_seed(global_seed: int, mixture_id: str) -> int:
    """Stable per-mixture seed; parallel scheduling cannot change outputs."""
    digest = hashlib.sha256(f"{global_seed}:{mixture_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def sample_delay(
    rng: np.random.Generator,
    delay_min: float = DEFAULT_DELAY_MIN,
    delay_max: float = DEFAULT_DELAY_MAX,
) -> float:
    """One uniform draw from [delay_min, delay_max); degenerate interval allowed."""
    if not 0 <= delay_min <= delay_max:
        raise MtasError(
            f"need 0 <= delay_min <= delay_max, got [{delay_min}, {delay_max}]"
        )
    if delay_min == delay_max:
        return float(delay_min)
    return float(rng.uniform(delay_min, delay_max))


def sample_delays(
    rng: np.random.Generator,
    num_sources: int,
    delay_min: float = DEFAULT_DELAY_MIN,
    delay_max: float = DEFAULT_DELAY_MAX,
) -> tuple[float, ...]:
    """Cumulative start offsets: 0 for the first source, then one draw per gap."""
    delays = [0.0]
    for _ in range(num_sources - 1):
        delays.append(delays[-1] + sample_delay(rng, delay_min, delay_max))
    return tuple(delays)


def mix(
    spec: MixtureSpec,
    source_buffers: Sequence[AudioBuffer],
    noise_buffer: Optional[AudioBuffer] = None,
) -> AudioBuffer:
    """Shift, sum, and (optionally) add SNR-scaled noise.

    Source k is shifted by round(delays[k] * sample_rate) samples. The
    noise gain solves 10*log10(P_speech / P_noise) = snr_db with both
    powers taken as mean squared amplitude over the speech-mixture extent.
    The result is peak-normalized to 0.9 only when some sample exceeds
    1.0 in magnitude, so in-range mixtures stay exactly linear.
    """
    if len(source_buffers) != len(spec.sources):
        raise MtasError(
            f"mixture {spec.mixture_id}: {len(source_buffers)} buffers for "
            f"{len(spec.sources)} sources"
        )
    for src, buf in zip(spec.sources, source_buffers):
        if buf.sample_rate != spec.sample_rate:
            raise MtasError(
                f"mixture {spec.mixture_id}: source {src.audio_path} has sample rate "
                f"{buf.sample_rate}, expected {spec.sample_rate}"
            )
        if buf.samples.size == 0:
            raise MtasError(f"mixture {spec.mixture_id}: source {src.audio_path} is empty")
    if noise_buffer is not None and noise_buffer.sample_rate != spec.sample_rate:
        raise MtasError(
            f"mixture {spec.mixture_id}: noise has sample rate "
            f"{noise_buffer.sample_rate}, expected {spec.sample_rate}"
        )

    sr = spec.sample_rate
    offsets = [int(round(d * sr)) for d in spec.delays]
    speech_len = max(off + buf.samples.size for off, buf in zip(offsets, source_buffers))
    out_len = speech_len
    if noise_buffer is not None:
        out_len = max(out_len, noise_buffer.samples.size)
    out = np.zeros(out_len, dtype=np.float64)
    for off, buf in zip(offsets, source_buffers):
        out[off : off + buf.samples.size] += buf.samples

    if noise_buffer is not None:
        if spec.noise is None:
            raise MtasError(
                f"mixture {spec.mixture_id}: noise buffer given but spec has no noise"
            )
        speech_power = float(np.mean(out[:speech_len] ** 2))
        if speech_power == 0.0:
            raise MtasError(
                f"mixture {spec.mixture_id}: silent sources, SNR is undefined"
            )
        noise_window = np.zeros(speech_len, dtype=np.float64)
        window = noise_buffer.samples[:speech_len]
        noise_window[: window.size] = window
        noise_power = float(np.mean(noise_window**2))
        if noise_power == 0.0:
            raise MtasError(
                f"mixture {spec.mixture_id}: silent noise, cannot scale to SNR"
            )
        gain = float(np.sqrt(speech_power / (noise_power * 10.0 ** (spec.noise.snr_db / 10.0))))
        out[: noise_buffer.samples.size] += gain * noise_buffer.samples

    peak = float(np.max(np.abs(out))) if out.size else 0.0
    if peak > 1.0:
        out = out * (0.9 / peak)
    return AudioBuffer(out, sr)


def mixture_session(
    spec: MixtureSpec,
    source_durations: Sequence[float],
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
    audio_path: Optional[str] = None,
) -> Session:
    """Session view of one mixture: a segment per source at its delay."""
    segments = []
    for src, delay, duration in zip(spec.sources, spec.delays, source_durations):
        tokens = tuple(normalize_text(src.transcript_text, cfg))
        segments.append(Segment(src.speaker_id, delay, delay + duration, tokens))
    return Session(spec.mixture_id, tuple(segments), audio_path)


def build_manifest(
    specs: Sequence[MixtureSpec],
    source_durations: Sequence[Sequence[float]],
    sc_symbol: str = DEFAULT_SC_SYMBOL,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> tuple[list[Session], list[dict]]:
    """Sessions plus SOT reference records for a batch of mixtures.

    Each mixture is a single scoring unit (group ``g0``); the speaker FIFO
    order equals the source order because delays strictly increase.
    """
    sessions = []
    references = []
    for spec, durations in zip(specs, source_durations):
        session = mixture_session(spec, durations, cfg, audio_path=f"{spec.mixture_id}.wav")
        sessions.append(session)
        group = UtteranceGroup("g0", session.session_id, session.segments)
        references.append(reference_record(group, sc_symbol))
    return sessions, references


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a mono WAV restricted to PCM 16-bit or float-32 samples."""
    try:
        sr, data = wavfile.read(str(path))
    except Exception as exc:
        raise MtasError(f"cannot read WAV {path}: {exc}") from exc
    if data.ndim != 1:
        raise MtasError(f"{path}: only mono WAV is supported, got {data.ndim} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise MtasError(
            f"{path}: unsupported sample format {data.dtype}, need PCM 16-bit or float-32"
        )
    return AudioBuffer(samples, int(sr))


def write_wav_pcm16(path: str | Path, buffer: AudioBuffer) -> None:
    """Write mono PCM 16-bit little-endian RIFF; samples clipped to [-1, 1]."""
    clipped = np.clip(buffer.samples, -1.0, 1.0)
    data = np.round(clipped * 32767.0).astype(np.int16)
    wavfile.write(str(path), buffer.sample_rate, data)


@dataclass(frozen=True)
class ManifestEntry:
    """One line of the input manifest; delays and seed are optional."""

    mixture_id: str
    sources: tuple[SourceSpec, ...]
    sample_rate: int
    noise: Optional[NoiseSpec] = None
    delays: Optional[tuple[float, ...]] = None
    seed: Optional[int] = None


def parse_manifest_jsonl(lines: Iterable[str]) -> list[ManifestEntry]:
    """Parse the mixture manifest.

    Required keys: ``mixture_id``, ``sources`` (array of ``audio_path`` /
    ``speaker_id`` / ``transcript_text`` objects), ``sample_rate``.
    Optional: ``noise`` (``audio_path``, ``snr_db``), explicit ``delays``,
    explicit ``seed``. A ``tempo`` key is reserved and currently ignored.
    """
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = _load_json_line(line, lineno)
        mixture_id = _require_str(obj, "mixture_id", lineno)
        if mixture_id in seen:
            raise ParseError(f"line {lineno}: duplicate mixture_id {mixture_id!r}")
        seen.add(mixture_id)
        raw_sources = _require(obj, "sources", lineno)
        if not isinstance(raw_sources, list) or not raw_sources:
            raise ParseError(f"line {lineno}: key 'sources' must be a non-empty array")
        sources = []
        for k, raw in enumerate(raw_sources):
            where = f"source {k}"
            if not isinstance(raw, dict):
                raise ParseError(f"line {lineno}: {where} must be an object")
            sources.append(
                SourceSpec(
                    _require_str(raw, "audio_path", lineno, where),
                    _require_str(raw, "speaker_id", lineno, where),
                    _require_str(raw, "transcript_text", lineno, where),
                )
            )
        sample_rate = _require(obj, "sample_rate", lineno)
        if isinstance(sample_rate, bool) or not isinstance(sample_rate, int) or sample_rate <= 0:
            raise ParseError(f"line {lineno}: key 'sample_rate' must be a positive integer")
        noise = None
        if obj.get("noise") is not None:
            raw_noise = obj["noise"]
            if not isinstance(raw_noise, dict):
                raise ParseError(f"line {lineno}: key 'noise' must be an object")
            noise = NoiseSpec(
                _require_str(raw_noise, "audio_path", lineno, "noise"),
                _require_number(raw_noise, "snr_db", lineno, "noise"),
            )
        delays = None
        if obj.get("delays") is not None:
            raw_delays = obj["delays"]
            if not isinstance(raw_delays, list) or not all(
                isinstance(d, (int, float)) and not isinstance(d, bool) for d in raw_delays
            ):
                raise ParseError(f"line {lineno}: key 'delays' must be an array of numbers")
            delays = tuple(float(d) for d in raw_delays)
        seed = None
        if obj.get("seed") is not None:
            raw_seed = obj["seed"]
            if isinstance(raw_seed, bool) or not isinstance(raw_seed, int):
                raise ParseError(f"line {lineno}: key 'seed' must be an integer")
            seed = raw_seed
        entries.append(ManifestEntry(mixture_id, tuple(sources), sample_rate, noise, delays, seed))
    return entries


def resolve_spec(
    entry: ManifestEntry,
    global_seed: int,
    delay_min: float = DEFAULT_DELAY_MIN,
    delay_max: float = DEFAULT_DELAY_MAX,
) -> MixtureSpec:
    """Materialize a manifest entry: derive the seed, sample missing delays."""
    seed = entry.seed if entry.seed is not None else mixture_seed(global_seed, entry.mixture_id)
    if entry.delays is not None:
        delays = entry.delays
    else:
        rng = np.random.default_rng(seed)
        delays = sample_delays(rng, len(entry.sources), delay_min, delay_max)
    return MixtureSpec(
        mixture_id=entry.mixture_id,
        sources=entry.sources,
        delays=delays,
        sample_rate=entry.sample_rate,
        seed=seed,
        noise=entry.noise,
    )


@dataclass(frozen=True)
class SimulationResult:
    spec: MixtureSpec
    session: Session
    reference: dict
    wav_path: Path


def simulate_mixture(
    spec: MixtureSpec,
    out_dir: Path,
    base_dir: Path,
    sc_symbol: str = DEFAULT_SC_SYMBOL,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
) -> SimulationResult:
    """Run one mixture end to end: read sources, mix, write the WAV."""

    def load(rel: str) -> AudioBuffer:
        p = Path(rel)
        return read_wav(p if p.is_absolute() else base_dir / p)

    buffers = [load(src.audio_path) for src in spec.sources]
    noise_buffer = load(spec.noise.audio_path) if spec.noise is not None else None
    mixed = mix(spec, buffers, noise_buffer)
    wav_path = out_dir / f"{spec.mixture_id}.wav"
    write_wav_pcm16(wav_path, mixed)
    durations = [b.duration for b in buffers]
    session = mixture_session(spec, durations, cfg, audio_path=wav_path.name)
    group = UtteranceGroup("g0", session.session_id, session.segments)
    return SimulationResult(spec, session, reference_record(group, sc_symbol), wav_path)


def run_simulation(
    entries: Sequence[ManifestEntry],
    out_dir: Path,
    base_dir: Path,
    global_seed: int = 0,
    delay_min: float = DEFAULT_DELAY_MIN,
    delay_max: float = DEFAULT_DELAY_MAX,
    sc_symbol: str = DEFAULT_SC_SYMBOL,
    cfg: NormalizationConfig = DEFAULT_NORMALIZATION,
    jobs: int = 1,
) -> list[SimulationResult]:
    """Simulate a whole manifest; results come back in manifest order.

    Mixtures are independent jobs. Per-mixture seeding keeps outputs
    byte-identical no matter the parallelism degree.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = [resolve_spec(e, global_seed, delay_min, delay_max) for e in entries]

    def job(spec: MixtureSpec) -> SimulationResult:
        try:
            return simulate_mixture(spec, out_dir, base_dir, sc_symbol, cfg)
        except MtasError:
            raise
        except Exception as exc:
            raise MtasError(f"mixture {spec.mixture_id}: {exc}") from exc

    if jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(job, specs))
    return [job(spec) for spec in specs]


def write_simulation_outputs(results: Sequence[SimulationResult], out_dir: Path) -> tuple[Path, Path]:
    """Write sessions.jsonl and refs.jsonl for a finished simulation run."""
    sessions_path = out_dir / "sessions.jsonl"
    refs_path = out_dir / "refs.jsonl"
    with open(sessions_path, "w", encoding="utf-8", newline="\n") as f:
        for res in results:
            f.write(json.dumps(session_record(res.session), ensure_ascii=False) + "\n")
    with open(refs_path, "w", encoding="utf-8", newline="\n") as f:
        for res in results:
            f.write(json.dumps(res.reference, ensure_ascii=False) + "\n")
    return sessions_path, refs_path
