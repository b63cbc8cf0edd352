"""Fault-tolerant distributed channel decoding: duplication vs. XOR combining.

Received frames are encoded with a linear channel code; a controller either
duplicates them across unreliable decoding servers or dispatches GF(2)
combinations of them, and the end-to-end error probability of both layouts
is estimated, enumerated exactly, and searched over.
"""

from .channel import (
    BscChannel,
    Purpose,
    RngStream,
    ServerFailureModel,
    effective_crossover,
    sample_availability,
    sample_noise,
)
from .convcode import (
    ConvCode,
    DetectionMode,
    FramePair,
    LinearBlockCode,
    Termination,
    crc16_append,
    crc16_ok,
    detect_error,
    encode,
    parse_taps,
    viterbi_decode,
)
from .designer import (
    DesignReport,
    ErasureModel,
    erasure_perr,
    measure_f,
    search_gnfv,
)
from .estimators import (
    ErrEstimate,
    Estimator,
    JointDecodePmf,
    SchemeKind,
    brute_force_perr,
    closed_form_perr,
    estimate_joint_pmf,
    exact_enum_perr,
    full_mc_perr,
)
from .gf2 import (
    BitMatrix,
    BitVec,
    InconsistentSystem,
    LengthMismatch,
    RankDeficient,
    TooLarge,
    ZeroMatrix,
    min_distance,
    rank,
    solve,
    xor,
)
from .schemes import (
    NfvScheme,
    Recovery,
    RecoveryStatus,
    ServerOutcome,
    build_coded_xor,
    build_diversity,
    mfr,
    mfr_witness,
    parse_scheme,
    recover,
    server_inputs,
)
from .sweep import SweepConfig, run_sweep

__all__ = [
    "BitMatrix",
    "BitVec",
    "BscChannel",
    "ConvCode",
    "DesignReport",
    "DetectionMode",
    "ErasureModel",
    "ErrEstimate",
    "Estimator",
    "FramePair",
    "InconsistentSystem",
    "JointDecodePmf",
    "LengthMismatch",
    "LinearBlockCode",
    "NfvScheme",
    "Purpose",
    "RankDeficient",
    "Recovery",
    "RecoveryStatus",
    "RngStream",
    "SchemeKind",
    "ServerFailureModel",
    "ServerOutcome",
    "SweepConfig",
    "Termination",
    "TooLarge",
    "ZeroMatrix",
    "brute_force_perr",
    "build_coded_xor",
    "build_diversity",
    "closed_form_perr",
    "crc16_append",
    "crc16_ok",
    "detect_error",
    "effective_crossover",
    "encode",
    "erasure_perr",
    "estimate_joint_pmf",
    "exact_enum_perr",
    "full_mc_perr",
    "measure_f",
    "mfr",
    "mfr_witness",
    "min_distance",
    "parse_scheme",
    "parse_taps",
    "rank",
    "recover",
    "run_sweep",
    "sample_availability",
    "sample_noise",
    "search_gnfv",
    "server_inputs",
    "solve",
    "viterbi_decode",
    "xor",
]
