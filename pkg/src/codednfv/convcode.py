"""Rate-1/r feedforward convolutional code: encoder, hard-decision Viterbi, CRC.

The shift register holds the newest input bit in its high position, so a tap
polynomial's most significant bit weights the current input.  Taps are the
usual octal patterns (e.g. 0o171, 0o133 for the constraint-length-7 code).

Decoding ties are resolved deterministically: when two paths merge with equal
metric the predecessor with the smaller state index survives, and in
unterminated mode the traceback starts from the lowest best-metric end state.

A brute-force maximum-likelihood block code (`LinearBlockCode`) shares the
encode/decode array interface so the simulation pipeline is code-agnostic.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .gf2 import BitMatrix, BitVec, LengthMismatch, TooLarge


class Termination(Enum):
    UNTERMINATED = "unterminated"
    ZERO_TAIL = "zero_tail"


class DetectionMode(Enum):
    GENIE = "genie"
    CRC16 = "crc16"


# rows per Viterbi work chunk, scaled down for larger state counts
_DECODE_CHUNK = 4096


def parse_taps(text: str) -> tuple[int, ...]:
    """Parse comma-separated octal tap patterns, e.g. "171,133"."""
    taps = tuple(int(part.strip(), 8) for part in text.split(","))
    if not taps:
        raise ValueError("no taps given")
    return taps


class _Trellis(NamedTuple):
    parity: np.ndarray      # (1 << K,) uint8, parity of the index
    pred_state: np.ndarray  # (S, 2) int32, predecessors ordered by state index
    pred_sym: np.ndarray    # (S, 2) int16, packed output bits of each in-branch
    in_bit: np.ndarray      # (S,) uint8, input bit that leads into the state
    sym_dist: np.ndarray    # (1 << r, 1 << r) uint8, Hamming distance of symbols
    branch_dist0: np.ndarray  # (1 << r, S) int32, distance to branch-0 outputs
    branch_dist1: np.ndarray  # (1 << r, S) int32, distance to branch-1 outputs


@functools.lru_cache(maxsize=None)
def _trellis(constraint_length: int, taps: tuple[int, ...]) -> _Trellis:
    k_len = constraint_length
    n_states = 1 << (k_len - 1)
    r = len(taps)
    parity = np.zeros(1 << k_len, dtype=np.uint8)
    for i in range(1, 1 << k_len):
        parity[i] = parity[i >> 1] ^ (i & 1)

    pred_state = np.zeros((n_states, 2), dtype=np.int32)
    pred_sym = np.zeros((n_states, 2), dtype=np.int16)
    seen = np.zeros(n_states, dtype=np.int8)
    for state in range(n_states):
        for bit in (0, 1):
            reg = (bit << (k_len - 1)) | state
            nxt = reg >> 1
            sym = 0
            for tap in taps:
                sym = (sym << 1) | int(parity[reg & tap])
            slot = seen[nxt]
            pred_state[nxt, slot] = state
            pred_sym[nxt, slot] = sym
            seen[nxt] += 1
    assert int(seen.min()) == 2

    in_bit = (np.arange(n_states) >> (k_len - 2)).astype(np.uint8)
    vals = np.arange(1 << r)
    pop = np.zeros(1 << r, dtype=np.uint8)
    for i in range(1, 1 << r):
        pop[i] = pop[i >> 1] + (i & 1)
    sym_dist = pop[vals[:, None] ^ vals[None, :]]
    # branch_dist{e}[v, s] = Hamming distance from received symbol v to the
    # output of in-branch e of state s; laid out for one gather per step.
    bd = sym_dist[:, pred_sym].astype(np.int32)
    branch_dist0 = np.ascontiguousarray(bd[:, :, 0])
    branch_dist1 = np.ascontiguousarray(bd[:, :, 1])
    return _Trellis(parity, pred_state, pred_sym, in_bit, sym_dist, branch_dist0, branch_dist1)


@dataclass(frozen=True)
class ConvCode:
    """Feedforward convolutional code defined by constraint length and taps."""

    constraint_length: int
    taps: tuple[int, ...]
    termination: Termination = Termination.UNTERMINATED

    def __post_init__(self) -> None:
        object.__setattr__(self, "taps", tuple(int(t) for t in self.taps))
        k_len = self.constraint_length
        if k_len < 2:
            raise ValueError("constraint length must be at least 2")
        if k_len > 16:
            raise ValueError("constraint lengths above 16 are not supported")
        if not self.taps:
            raise ValueError("at least one tap polynomial required")
        top = 1 << (k_len - 1)
        for t in self.taps:
            if not top <= t < (top << 1):
                raise ValueError(
                    f"tap 0o{t:o} does not have exactly {k_len} significant bits"
                )
        if not any(t & 1 for t in self.taps):
            raise ValueError("no tap reaches the oldest register bit")

    @property
    def rate_inverse(self) -> int:
        return len(self.taps)

    @property
    def tail_bits(self) -> int:
        if self.termination is Termination.ZERO_TAIL:
            return self.constraint_length - 1
        return 0

    @property
    def n_states(self) -> int:
        return 1 << (self.constraint_length - 1)

    def codeword_length(self, k: int) -> int:
        return self.rate_inverse * (k + self.tail_bits)

    def message_length(self, n: int) -> int:
        if n % self.rate_inverse:
            raise LengthMismatch(f"{n} received bits for rate 1/{self.rate_inverse}")
        k = n // self.rate_inverse - self.tail_bits
        if k < 1:
            raise LengthMismatch(f"{n} bits is shorter than the termination tail")
        return k

    def encode_array(self, messages: np.ndarray) -> np.ndarray:
        """Encode a (batch, k) bit array to a (batch, n) codeword array."""
        u = np.ascontiguousarray(messages, dtype=np.uint8)
        if u.ndim != 2:
            raise LengthMismatch("expected a (batch, k) array")
        batch, k = u.shape
        if k < 1:
            raise LengthMismatch("empty message")
        if self.tail_bits:
            u = np.concatenate([u, np.zeros((batch, self.tail_bits), np.uint8)], axis=1)
        steps = u.shape[1]
        tr = _trellis(self.constraint_length, self.taps)
        r = self.rate_inverse
        shift = self.constraint_length - 1
        out = np.empty((batch, r * steps), dtype=np.uint8)
        state = np.zeros(batch, dtype=np.int32)
        for t in range(steps):
            reg = (u[:, t].astype(np.int32) << shift) | state
            for j, tap in enumerate(self.taps):
                out[:, r * t + j] = tr.parity[reg & tap]
            state = reg >> 1
        return out

    def decode_array(self, received: np.ndarray) -> np.ndarray:
        """Viterbi-decode a (batch, n) bit array to a (batch, k) message array."""
        y = np.ascontiguousarray(received, dtype=np.uint8)
        if y.ndim != 2:
            raise LengthMismatch("expected a (batch, n) array")
        batch, n = y.shape
        k = self.message_length(n)
        out = np.empty((batch, k), dtype=np.uint8)
        # chunk so the per-step work arrays stay cache-friendly
        step = max(1, _DECODE_CHUNK // max(1, self.n_states // 64))
        for lo in range(0, batch, step):
            out[lo : lo + step] = self._decode_chunk(y[lo : lo + step])
        return out

    def _decode_chunk(self, y: np.ndarray) -> np.ndarray:
        batch, n = y.shape
        steps = self.message_length(n) + self.tail_bits
        tr = _trellis(self.constraint_length, self.taps)
        r = self.rate_inverse
        n_states = self.n_states

        # Pack each step's r received bits into one symbol value.
        weights = (1 << np.arange(r - 1, -1, -1)).astype(np.int16)
        recv = (y.reshape(batch, steps, r) * weights).sum(axis=2, dtype=np.int16)

        pm = np.full((batch, n_states), np.int32(1 << 28), dtype=np.int32)
        pm[:, 0] = 0
        pred0, pred1 = tr.pred_state[:, 0], tr.pred_state[:, 1]
        decisions = np.empty((steps, batch, n_states), dtype=np.uint8)
        cand0 = np.empty((batch, n_states), dtype=np.int32)
        cand1 = np.empty((batch, n_states), dtype=np.int32)
        bm = np.empty((batch, n_states), dtype=np.int32)
        choice = np.empty((batch, n_states), dtype=bool)
        for t in range(steps):
            recv_t = recv[:, t]
            np.take(pm, pred0, axis=1, out=cand0)
            np.take(tr.branch_dist0, recv_t, axis=0, out=bm)
            cand0 += bm
            np.take(pm, pred1, axis=1, out=cand1)
            np.take(tr.branch_dist1, recv_t, axis=0, out=bm)
            cand1 += bm
            # ties keep branch 0, the smaller predecessor state
            np.less(cand1, cand0, out=choice)
            np.copyto(pm, cand0)
            np.copyto(pm, cand1, where=choice)
            decisions[t] = choice

        if self.termination is Termination.ZERO_TAIL:
            state = np.zeros(batch, dtype=np.int32)
        else:
            state = np.argmin(pm, axis=1).astype(np.int32)

        rows = np.arange(batch)
        bits = np.empty((batch, steps), dtype=np.uint8)
        for t in range(steps - 1, -1, -1):
            bits[:, t] = tr.in_bit[state]
            state = tr.pred_state[state, decisions[t, rows, state]]
        return bits[:, : steps - self.tail_bits]


def encode(code: ConvCode, u: BitVec) -> BitVec:
    """Encode one message vector."""
    out = code.encode_array(u.to_array()[None, :])[0]
    return BitVec.from_array(out)


def viterbi_decode(code: ConvCode, y: BitVec) -> BitVec:
    """Maximum-likelihood (minimum Hamming distance) decode of one frame."""
    out = code.decode_array(y.to_array()[None, :])[0]
    return BitVec.from_array(out)


# ---------------------------------------------------------------------------
# CRC-16 framing (poly x^16 + x^12 + x^5 + 1, zero init and zero xor-out).
# The zero init keeps the check GF(2)-linear, so the XOR of valid frames is
# itself a valid frame and combined streams stay checkable.

CRC_POLY = 0x1021
CRC_BITS = 16


def crc16(bits: BitVec) -> BitVec:
    """16-bit remainder of the given bits, most significant check bit first."""
    reg = 0
    for b in bits:
        fb = ((reg >> 15) & 1) ^ b
        reg = (reg << 1) & 0xFFFF
        if fb:
            reg ^= CRC_POLY
    return BitVec.from_bits((reg >> (15 - i)) & 1 for i in range(CRC_BITS))


def crc16_append(payload: BitVec) -> BitVec:
    """Frame = payload followed by its 16 check bits."""
    check = crc16(payload)
    return BitVec(payload.word | (check.word << payload.n), payload.n + CRC_BITS)


def crc16_ok(frame: BitVec) -> bool:
    """True when the trailing check bits match the payload."""
    if frame.n <= CRC_BITS:
        raise LengthMismatch(f"frame of {frame.n} bits has no room for a check")
    return crc16(frame).word == 0


@functools.lru_cache(maxsize=None)
def _crc_matrix(frame_bits: int) -> np.ndarray:
    """(frame_bits, 16) GF(2) map from a whole frame to its remainder."""
    mat = np.zeros((frame_bits, CRC_BITS), dtype=np.uint8)
    for i in range(frame_bits):
        mat[i] = crc16(BitVec(1 << i, frame_bits)).to_array()
    return mat


def crc16_ok_array(frames: np.ndarray) -> np.ndarray:
    """Vectorized `crc16_ok` over a (batch, frame_bits) array."""
    f = np.asarray(frames, dtype=np.uint8)
    rem = f.astype(np.int32) @ _crc_matrix(f.shape[1]).astype(np.int32)
    return (rem % 2 == 0).all(axis=1)


def crc16_append_array(payloads: np.ndarray) -> np.ndarray:
    p = np.asarray(payloads, dtype=np.uint8)
    mat = np.zeros((p.shape[1], CRC_BITS), dtype=np.uint8)
    for i in range(p.shape[1]):
        mat[i] = crc16(BitVec(1 << i, p.shape[1])).to_array()
    checks = (p.astype(np.int32) @ mat.astype(np.int32)) % 2
    return np.concatenate([p, checks.astype(np.uint8)], axis=1)


def detect_error(mode: DetectionMode, decoded: BitVec, truth: BitVec | None = None) -> bool:
    """Verdict on a decoded frame: True means "believed correct".

    Genie mode compares against the true message exactly; CRC16 mode checks
    the embedded trailing check and can rarely pass on a wrong frame.
    """
    if mode is DetectionMode.GENIE:
        if truth is None:
            raise ValueError("genie detection needs the true message")
        return decoded == truth
    return crc16_ok(decoded)


@dataclass(frozen=True)
class FramePair:
    """A message together with its codeword."""

    message: BitVec
    codeword: BitVec

    @classmethod
    def make(cls, code: ConvCode, message: BitVec) -> FramePair:
        return cls(message, encode(code, message))


@dataclass(frozen=True)
class LinearBlockCode:
    """Tiny generator-matrix block code with brute-force ML decoding.

    Decoding enumerates all 2^k codewords and picks the closest, breaking
    ties toward the smallest message index.  Only suitable for small k.
    """

    generator: BitMatrix

    def __post_init__(self) -> None:
        if self.generator.n_rows > 12:
            raise TooLarge("brute-force ML decoding beyond 2^12 codewords")

    @property
    def message_length(self) -> int:
        return self.generator.n_rows

    def codeword_length(self, k: int | None = None) -> int:
        if k is not None and k != self.message_length:
            raise LengthMismatch(
                f"this code has fixed k={self.message_length}, got {k}"
            )
        return self.generator.n_cols

    @functools.cached_property
    def _codewords(self) -> np.ndarray:
        k, n = self.message_length, self.generator.n_cols
        cw = np.zeros((1 << k, n), dtype=np.uint8)
        rows = [self.generator.row_vec(i).to_array() for i in range(k)]
        for m in range(1 << k):
            acc = np.zeros(n, dtype=np.uint8)
            for i in range(k):
                if (m >> i) & 1:
                    acc ^= rows[i]
            cw[m] = acc
        return cw

    def encode_array(self, messages: np.ndarray) -> np.ndarray:
        u = np.asarray(messages, dtype=np.uint8)
        idx = (u << np.arange(u.shape[1])).sum(axis=1)
        return self._codewords[idx]

    def decode_array(self, received: np.ndarray) -> np.ndarray:
        y = np.asarray(received, dtype=np.int32)
        cw = self._codewords.astype(np.int32)
        # Hamming distance via weights: d(y, c) = w(c) + w(y) - 2 y.c
        dots = y @ cw.T
        dist = cw.sum(axis=1)[None, :] + y.sum(axis=1)[:, None] - 2 * dots
        best = np.argmin(dist, axis=1)
        k = self.message_length
        return ((best[:, None] >> np.arange(k)) & 1).astype(np.uint8)

    def encode(self, u: BitVec) -> BitVec:
        return BitVec.from_array(self.encode_array(u.to_array()[None, :])[0])

    def ml_decode(self, y: BitVec) -> BitVec:
        return BitVec.from_array(self.decode_array(y.to_array()[None, :])[0])
