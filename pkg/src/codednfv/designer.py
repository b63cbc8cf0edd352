"""Search for good frame-combining matrices under an erasure abstraction.

A server is modelled as erased when it fails outright (probability q) or
when its decoder errs, which happens more often the more frames are XORed
onto it.  The decode-error probability f(d) as a function of the column
weight d is measured, not assumed, and feeds an exact erasure-failure
evaluation; candidate matrices are ranked by that failure probability, which
internalizes the sparsity-versus-distance tension.

Column order is a server relabeling, so candidates are canonicalized as a
sorted column multiset before evaluation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import gf2
from .channel import BscChannel, Purpose, RngStream, effective_crossover, sample_noise_array
from .estimators import _block_sizes, _resolve_workers, _run_blocks
from .gf2 import BitMatrix, TooLarge
from .schemes import NfvScheme, mfr


@dataclass(frozen=True)
class ErasureModel:
    """Per-server erasure probability q + (1-q) f(d) for column weight d."""

    q: float
    f_table: Mapping[int, float]

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"failure probability {self.q} outside [0, 1]")
        items = sorted(self.f_table.items())
        if not items:
            raise ValueError("empty decode-error table")
        prev = 0.0
        for d, f in items:
            if d < 1:
                raise ValueError(f"column weight {d} below 1")
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"decode-error probability {f} outside [0, 1]")
            if f < prev:
                raise ValueError("decode-error table must be non-decreasing in d")
            prev = f

    def erasure_prob(self, d: int) -> float:
        if d not in self.f_table:
            raise KeyError(f"no decode-error entry for column weight {d}")
        return self.q + (1.0 - self.q) * self.f_table[d]

    @classmethod
    def constant(cls, q: float, f: float, d_max: int) -> ErasureModel:
        return cls(q, {d: f for d in range(1, d_max + 1)})


def _fer_block(args) -> int:
    code, k, p, seed, stream_id, block = args
    gen = RngStream(seed, stream_id, Purpose.MESSAGE).generator()
    msgs = gen.integers(0, 2, size=(block, k), dtype=np.uint8)
    sent = code.encode_array(msgs)
    noise = sample_noise_array(
        BscChannel(p), sent.shape, RngStream(seed, stream_id, Purpose.NOISE)
    )
    decoded = code.decode_array(sent ^ noise)
    return int((decoded != msgs).any(axis=1).sum())


def measure_f(
    code,
    p: float,
    d_max: int,
    trials: int,
    seed: int,
    *,
    k: int | None = None,
    workers: int | None = 1,
) -> dict[int, float]:
    """Monte Carlo decode-error rate when d received signals are XOR-combined.

    Combining d noisy frames leaves the decoder facing crossover
    ``effective_crossover(p, d)``, so f(d) is the frame error rate at that
    crossover; f(1) is the plain single-frame error rate.
    """
    if d_max < 1:
        raise ValueError("need at least d = 1")
    fixed = getattr(code, "message_length", None)
    if isinstance(fixed, int):
        k = fixed
    elif k is None:
        raise ValueError("frame length k required for this code")
    table: dict[int, float] = {}
    for d in range(1, d_max + 1):
        p_eff = effective_crossover(p, d)
        args = [
            (code, k, p_eff, seed, (d << 24) | i, b)
            for i, b in enumerate(_block_sizes(trials))
        ]
        errs = sum(_run_blocks(_fer_block, args, _resolve_workers(workers)))
        table[d] = errs / trials
    return table


def erasure_perr(matrix: BitMatrix, model: ErasureModel) -> float:
    """Exact failure probability with independent per-server erasures.

    Sums over all 2^N erasure patterns the probability that the surviving
    columns no longer span the K frames.
    """
    n = matrix.n_cols
    if n > 20:
        raise TooLarge(f"2^{n} erasure patterns exceeds the enumeration budget")
    k = matrix.n_rows
    cols = matrix.columns()
    probs = [model.erasure_prob(matrix.column_weight(j)) for j in range(n)]
    p_fail = 0.0
    for survive in range(1 << n):
        pr = 1.0
        for j in range(n):
            pr *= (1.0 - probs[j]) if (survive >> j) & 1 else probs[j]
        if pr == 0.0:
            continue
        words = [cols[j] for j in range(n) if (survive >> j) & 1]
        if gf2.rank_words(words) < k:
            p_fail += pr
    return p_fail


@dataclass(frozen=True)
class DesignReport:
    """A ranked candidate combining matrix and its figures of merit."""

    matrix: BitMatrix
    p_err: float
    min_dist: int
    max_col_weight: int
    mfr: int

    def as_dict(self) -> dict:
        return {
            "matrix": self.matrix.to01("/"),
            "p_err": self.p_err,
            "min_dist": self.min_dist,
            "max_col_weight": self.max_col_weight,
            "mfr": self.mfr,
        }


def search_gnfv(
    n_frames: int,
    n_servers: int,
    model: ErasureModel,
    budget: int,
    seed: int = 0,
    top: int | None = None,
) -> list[DesignReport]:
    """Rank full-rank K x N combining matrices by exact erasure failure.

    Enumerates canonical column multisets exhaustively when they fit the
    budget, otherwise draws seeded random candidates.  Ties break toward a
    smaller maximum column weight, then the lexicographic canonical form.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    if n_frames < 1 or n_servers < n_frames:
        raise ValueError(f"invalid size {n_frames}x{n_servers}")
    n_cols_values = (1 << n_frames) - 1
    total = math.comb(n_cols_values + n_servers - 1, n_servers)
    if total <= budget:
        candidates: Iterable[tuple[int, ...]] = combinations_with_replacement(
            range(1, 1 << n_frames), n_servers
        )
    else:
        gen = RngStream(seed, 0, Purpose.SEARCH).generator()
        draws = gen.integers(1, 1 << n_frames, size=(budget, n_servers))
        candidates = sorted({tuple(sorted(int(c) for c in row)) for row in draws})

    reports = []
    for cols in candidates:
        matrix = BitMatrix.from_columns(cols, n_frames)
        if gf2.rank(matrix) < n_frames:
            continue
        reports.append(
            DesignReport(
                matrix=matrix,
                p_err=erasure_perr(matrix, model),
                min_dist=gf2.min_distance(matrix),
                max_col_weight=max(matrix.column_weight(j) for j in range(n_servers)),
                mfr=mfr(NfvScheme(matrix, "candidate")),
            )
        )
    reports.sort(key=lambda r: (r.p_err, r.max_col_weight, r.matrix.columns()))
    return reports[:top] if top is not None else reports


def f_table_to_csv(table: Mapping[int, float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["d", "f"])
    for d in sorted(table):
        writer.writerow([d, f"{table[d]:.10g}"])
    return buf.getvalue()


def f_table_from_csv(text: str) -> dict[int, float]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["d", "f"]:
        raise ValueError("expected header 'd,f'")
    return {int(d): float(f) for d, f in rows[1:] if d}


def reports_to_jsonl(reports: Sequence[DesignReport]) -> str:
    return "".join(json.dumps(r.as_dict()) + "\n" for r in reports)
