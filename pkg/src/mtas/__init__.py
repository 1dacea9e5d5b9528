"""Multi-talker ASR evaluation toolkit.

Builds utterance groups from time-stamped multi-speaker transcripts,
serializes them into SOT-style references (speaker blocks joined by a
speaker-change symbol, first-in-first-out by emission time), scores
hypotheses with direct WER / permutation-minimal cpWER / speaker-counting
confusion, and simulates delayed-overlap speech mixtures.
"""

from .core import (
    DEFAULT_SC_SYMBOL,
    AlignmentCounts,
    MtasError,
    Segment,
    Session,
    SotTranscript,
    UtteranceGroup,
    Violation,
    validate_session,
)
from .grouping import OverlapPolicy, build_groups, overlaps
from .ingest import (
    Hypothesis,
    NormalizationConfig,
    ParseError,
    normalize_text,
    parse_hypothesis_jsonl,
    parse_session_jsonl,
    parse_stm,
)
from .metrics import (
    ConfusionMatrix,
    CostMatrix,
    align,
    confusion,
    cpwer,
    cpwer_bruteforce,
    sot_wer,
)
from .features import FeatureMatrix, StackConfig, stack_frames
from .mixsim import (
    AudioBuffer,
    MixtureSpec,
    build_manifest,
    mix,
    sample_delay,
    sample_delays,
)
from .sot import (
    SpeakerStream,
    estimate_speaker_count,
    parse_sot,
    serialize_group,
    split_sot,
)

__version__ = "0.1.0"
