"""Mapping received frames to server inputs and recovering messages.

A scheme is a K x N full-row-rank GF(2) matrix: column j says which of the K
received frames are XORed together to form server j's input.  Unit columns
give plain duplication; richer columns trade extra decoder noise for the
ability to recover from any rank-K surviving subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Sequence

import numpy as np

from . import gf2
from .convcode import DetectionMode
from .gf2 import BitMatrix, BitVec, InconsistentSystem, LengthMismatch, RankDeficient


@dataclass(frozen=True)
class NfvScheme:
    """A named frame-combining matrix (K frames x N servers)."""

    matrix: BitMatrix
    name: str = "custom"

    def __post_init__(self) -> None:
        m = self.matrix
        if m.n_rows < 1 or m.n_cols < m.n_rows:
            raise ValueError(f"need at least as many servers as frames, got {m.n_rows}x{m.n_cols}")
        if gf2.rank(m) != m.n_rows:
            raise ValueError("combining matrix must have full row rank")
        for j in range(m.n_cols):
            if m.column_weight(j) == 0:
                raise ValueError(f"server {j} receives nothing (zero column)")

    @property
    def n_frames(self) -> int:
        return self.matrix.n_rows

    @property
    def n_servers(self) -> int:
        return self.matrix.n_cols


def build_diversity(n_servers: int, n_frames: int) -> NfvScheme:
    """Duplication scheme: unit columns, the last frame fills the extra servers."""
    if n_servers < n_frames:
        raise ValueError(f"{n_servers} servers cannot host {n_frames} frames")
    cols = [1 << i for i in range(n_frames)]
    cols += [1 << (n_frames - 1)] * (n_servers - n_frames)
    return NfvScheme(BitMatrix.from_columns(cols, n_frames), "diversity")


def build_coded_xor(n_servers: int, n_frames: int) -> NfvScheme:
    """Identity columns plus all-ones (XOR of every frame) extra columns."""
    if n_servers < n_frames:
        raise ValueError(f"{n_servers} servers cannot host {n_frames} frames")
    cols = [1 << i for i in range(n_frames)]
    cols += [(1 << n_frames) - 1] * (n_servers - n_frames)
    return NfvScheme(BitMatrix.from_columns(cols, n_frames), "coded")


def parse_scheme(text: str, n_servers: int = 3, n_frames: int = 2) -> NfvScheme:
    """Parse "diversity", "coded", or "matrix:<rows>" with '/'-separated rows."""
    text = text.strip()
    if text == "diversity":
        return build_diversity(n_servers, n_frames)
    if text == "coded":
        return build_coded_xor(n_servers, n_frames)
    if text.startswith("matrix:"):
        return NfvScheme(BitMatrix.from01(text[len("matrix:"):]), "custom")
    raise ValueError(f"unknown scheme {text!r}")


def server_inputs(scheme: NfvScheme, received: Sequence[BitVec]) -> list[BitVec]:
    """Input frame for every server: XOR of the received frames in its column."""
    if len(received) != scheme.n_frames:
        raise LengthMismatch(f"expected {scheme.n_frames} frames, got {len(received)}")
    n = received[0].n
    if any(v.n != n for v in received):
        raise LengthMismatch("received frames differ in length")
    out = []
    for j in range(scheme.n_servers):
        acc = BitVec.zeros(n)
        for i in range(scheme.n_frames):
            if scheme.matrix.entry(i, j):
                acc = acc ^ received[i]
        out.append(acc)
    return out


def combine_array(scheme: NfvScheme, frames: np.ndarray) -> np.ndarray:
    """Batch form of `server_inputs`: (batch, K, L) bits -> (batch, N, L)."""
    f = np.asarray(frames, dtype=np.uint8)
    batch, k, length = f.shape
    if k != scheme.n_frames:
        raise LengthMismatch(f"expected {scheme.n_frames} frames, got {k}")
    out = np.zeros((batch, scheme.n_servers, length), dtype=np.uint8)
    for j in range(scheme.n_servers):
        for i in range(k):
            if scheme.matrix.entry(i, j):
                out[:, j, :] ^= f[:, i, :]
    return out


@dataclass(frozen=True)
class ServerOutcome:
    """One server's contribution to recovery.

    ``correct`` is the detection verdict (ground truth under genie detection,
    a CRC check otherwise); it is only meaningful when the server is available.
    """

    available: bool
    decoded: BitVec | None = None
    correct: bool = False


class RecoveryStatus(Enum):
    OK = "ok"
    RANK_DEFICIENT = "rank_deficient"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class Recovery:
    status: RecoveryStatus
    messages: tuple[BitVec, ...] | None = None

    @property
    def ok(self) -> bool:
        return self.status is RecoveryStatus.OK


def recover(
    scheme: NfvScheme,
    outcomes: Sequence[ServerOutcome],
    trust: DetectionMode = DetectionMode.GENIE,
) -> Recovery:
    """Solve for the original messages from the trusted server outputs.

    A server is trusted when it is available and its verdict is positive.  If
    the trusted columns span all K frames the unique solution is returned;
    otherwise RANK_DEFICIENT.  Under CRC trust an undetected decoder error can
    contradict redundant equations, which is reported as INCONSISTENT; under
    genie trust that would be an internal bug and raises instead.
    """
    if len(outcomes) != scheme.n_servers:
        raise LengthMismatch(f"expected {scheme.n_servers} outcomes, got {len(outcomes)}")
    trusted = [j for j, o in enumerate(outcomes) if o.available and o.correct]
    for j in trusted:
        if outcomes[j].decoded is None:
            raise ValueError(f"server {j} trusted but has no decoded frame")
    if not trusted:
        return Recovery(RecoveryStatus.RANK_DEFICIENT)
    sub = scheme.matrix.submatrix_cols(trusted)
    rhs = [outcomes[j].decoded for j in trusted]
    try:
        messages = gf2.solve(sub, rhs)  # type: ignore[arg-type]
    except RankDeficient:
        return Recovery(RecoveryStatus.RANK_DEFICIENT)
    except InconsistentSystem:
        if trust is DetectionMode.GENIE:
            raise
        return Recovery(RecoveryStatus.INCONSISTENT)
    return Recovery(RecoveryStatus.OK, messages)


def recoverable_table(matrix: BitMatrix) -> np.ndarray:
    """For every server subset mask: can the messages be recovered from it?

    Entry ``mask`` is True when the columns whose bits are set in ``mask``
    still have full row rank.
    """
    n = matrix.n_cols
    if n > 20:
        raise gf2.TooLarge(f"2^{n} subsets exceeds the enumeration budget")
    k = matrix.n_rows
    cols = matrix.columns()
    out = np.zeros(1 << n, dtype=bool)
    for mask in range(1 << n):
        if mask.bit_count() < k:
            continue
        words = [cols[j] for j in range(n) if (mask >> j) & 1]
        out[mask] = gf2.rank_words(words) == k
    return out


def mfr(scheme: NfvScheme) -> int:
    """Minimum number of server removals that makes recovery impossible.

    Equals the minimum distance of the combining matrix: removing the support
    of a minimum-weight codeword erases some frame combination entirely.
    """
    return gf2.min_distance(scheme.matrix)


def mfr_witness(scheme: NfvScheme) -> tuple[int, tuple[int, ...]]:
    """MFR together with a minimal removal set (0-based server indices)."""
    d, cw = gf2.min_weight_codeword(scheme.matrix)
    support = tuple(j for j in range(scheme.n_servers) if cw[j])
    return d, support


def removal_mfr_search(matrix: BitMatrix) -> int:
    """MFR by direct subset search (cross-check for small N)."""
    n = matrix.n_cols
    if n > 12:
        raise gf2.TooLarge("direct subset search limited to 12 servers")
    k = matrix.n_rows
    cols = matrix.columns()
    for r in range(1, n + 1):
        for removed in combinations(range(n), r):
            keep = [cols[j] for j in range(n) if j not in removed]
            if gf2.rank_words(keep) < k:
                return r
    return n + 1
