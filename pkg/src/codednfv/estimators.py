"""Error-probability estimators for frame dispatch over unreliable servers.

Three routes to the end-to-end error probability are provided and compared:

* ``exact_enum_perr``: Monte Carlo only for the joint decoder-outcome pmf,
  with the server-availability average computed exactly by enumeration.
  This is the headline estimator.
* ``closed_form_perr``: the weighted-set formula for the 3-server/2-frame
  duplication and XOR schemes, where a decoding pattern S contributes
  Pr(S)(1-q)^|S|.  It requires every correct decoder to be available, so it
  upper-bounds the exact error probability; both are reported side by side.
* ``full_mc_perr``: simulates the entire pipeline per trial, including
  availability and controller recovery.  Used to cross-validate the others
  and to quantify CRC-based (rather than genie) detection.

Decoder outcomes across servers share channel noise, so the pmf is estimated
jointly over all 2^N correctness masks, never as per-server marginals.

Trials are partitioned into fixed-size blocks, each drawing from its own
counter-based stream; block results merge by integer addition, so estimates
are bit-identical for any worker count or completion order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .channel import (
    BscChannel,
    Purpose,
    RngStream,
    ServerFailureModel,
    sample_availability_array,
    sample_noise_array,
)
from .convcode import DetectionMode, LinearBlockCode, crc16_append_array, crc16_ok_array
from .gf2 import BitVec, TooLarge
from .schemes import NfvScheme, ServerOutcome, combine_array, recover, recoverable_table

BLOCK_TRIALS = 8192

# Wide namespace between sweep points so their block streams never collide.
POINT_STREAM_STRIDE = 1 << 24


class Estimator(Enum):
    EXACT_ENUM = "exact_enum"
    CLOSED_FORM = "closed_form"
    FULL_MC = "full_mc"


class SchemeKind(Enum):
    """The two 3-server, 2-frame schemes the closed form is defined for."""

    DIVERSITY_3X2 = "diversity"
    CODED_3X2 = "coded"


@dataclass
class JointDecodePmf:
    """Empirical joint distribution of the per-server correctness mask.

    ``counts[mask]`` is the number of trials in which exactly the servers
    whose bits are set in ``mask`` decoded their input correctly.
    """

    n_servers: int
    counts: np.ndarray
    trials: int

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (1 << self.n_servers,):
            raise ValueError("counts must have one entry per server subset")
        if int(self.counts.sum()) != self.trials:
            raise ValueError("counts do not sum to the trial count")

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.trials

    def prob(self, mask: int) -> float:
        return float(self.counts[mask]) / self.trials

    def marginal_correct(self, server: int) -> float:
        masks = np.arange(1 << self.n_servers)
        sel = (masks >> server) & 1 == 1
        return float(self.counts[sel].sum()) / self.trials


@dataclass(frozen=True)
class ErrEstimate:
    """An error probability with a 95% confidence half-width."""

    p_err: float
    ci_halfwidth: float
    trials: int
    estimator: Estimator
    undetected_rate: float | None = None


def _frame_bits(code: ConvCode | LinearBlockCode, k: int | None) -> int:
    fixed = getattr(code, "message_length", None)
    if isinstance(fixed, int):
        if k is not None and k != fixed:
            raise ValueError(f"code has fixed frame length {fixed}, got k={k}")
        return fixed
    if k is None:
        raise ValueError("frame length k required for this code")
    return k


def _block_sizes(trials: int) -> list[int]:
    if trials < 1:
        raise ValueError("need at least one trial")
    full, rest = divmod(trials, BLOCK_TRIALS)
    return [BLOCK_TRIALS] * full + ([rest] if rest else [])


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("CODEDNFV_WORKERS", "1"))
    return max(1, workers)


def _run_blocks(fn, args_list, workers: int) -> list:
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=min(workers, len(args_list))) as pool:
        return list(pool.map(fn, args_list))


def _simulate_block(
    code,
    scheme: NfvScheme,
    p: float,
    k: int,
    seed: int,
    stream: int,
    block: int,
    with_payload_crc: bool,
):
    """Draw one block: true messages, decoded outputs, correctness masks."""
    ch = BscChannel(p)
    kk, n_srv = scheme.n_frames, scheme.n_servers
    gen_msg = RngStream(seed, stream, Purpose.MESSAGE).generator()
    if with_payload_crc:
        payload = gen_msg.integers(0, 2, size=(block, kk, k - 16), dtype=np.uint8)
        messages = crc16_append_array(payload.reshape(block * kk, k - 16)).reshape(
            block, kk, k
        )
    else:
        messages = gen_msg.integers(0, 2, size=(block, kk, k), dtype=np.uint8)
    sent = code.encode_array(messages.reshape(block * kk, k))
    n = sent.shape[1]
    sent = sent.reshape(block, kk, n)
    noise = sample_noise_array(ch, (block, kk, n), RngStream(seed, stream, Purpose.NOISE))
    received = sent ^ noise
    inputs = combine_array(scheme, received)
    decoded = code.decode_array(inputs.reshape(block * n_srv, n)).reshape(block, n_srv, k)
    targets = combine_array(scheme, messages)
    correct = (decoded == targets).all(axis=2)
    masks = (correct.astype(np.int64) << np.arange(n_srv)).sum(axis=1)
    return messages, decoded, correct, masks


def _pmf_block(args) -> np.ndarray:
    code, scheme, p, k, seed, stream, block = args
    _, _, _, masks = _simulate_block(code, scheme, p, k, seed, stream, block, False)
    return np.bincount(masks, minlength=1 << scheme.n_servers).astype(np.int64)


def estimate_joint_pmf(
    code,
    scheme: NfvScheme,
    p: float,
    trials: int,
    seed: int,
    *,
    k: int | None = None,
    workers: int | None = 1,
    stream_offset: int = 0,
) -> JointDecodePmf:
    """Monte Carlo estimate of the joint correctness-mask distribution.

    Each trial draws fresh messages and channel noise, forms every server's
    input through the scheme, decodes them all, and records which servers
    matched their combined-message target.
    """
    k = _frame_bits(code, k)
    args = [
        (code, scheme, p, k, seed, stream_offset + i, b)
        for i, b in enumerate(_block_sizes(trials))
    ]
    counts_list = _run_blocks(_pmf_block, args, _resolve_workers(workers))
    counts = np.sum(counts_list, axis=0, dtype=np.int64)
    return JointDecodePmf(scheme.n_servers, counts, trials)


def _ci_halfwidth(p_hat: float, trials: int, variance: float | None = None) -> float:
    """95% half-width; Wilson fallback when either outcome count is small."""
    z = 1.959963984540054
    lo_count = min(p_hat, 1.0 - p_hat) * trials
    if lo_count < 10.0:
        denom = 1.0 + z * z / trials
        return (z / denom) * math.sqrt(
            p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials)
        )
    if variance is None:
        variance = p_hat * (1.0 - p_hat) / trials
    return z * math.sqrt(max(variance, 0.0))


def _weighted_pmf_estimate(
    pmf: JointDecodePmf, weights: np.ndarray, estimator: Estimator
) -> ErrEstimate:
    """Error estimate 1 - E[w(mask)] with the multinomial sampling variance."""
    probs = pmf.probs
    success = float(probs @ weights)
    var = (float(probs @ (weights**2)) - success**2) / pmf.trials
    p_err = 1.0 - success
    return ErrEstimate(p_err, _ci_halfwidth(p_err, pmf.trials, var), pmf.trials, estimator)


def closed_form_perr(pmf: JointDecodePmf, q: float, kind: SchemeKind) -> ErrEstimate:
    """Weighted-set error formula for the 3-server, 2-frame schemes.

    A correctness pattern S counts as a success with weight (1-q)^|S|; for
    the duplication scheme only patterns containing server 1 and one other
    server are eligible, for the XOR scheme any pattern of two or more.
    The weighting demands that every correct decoder be available, ignoring
    successes where a redundant correct server is down, so the result is an
    upper bound on the exact error probability.
    """
    if pmf.n_servers != 3:
        raise ValueError("closed form defined for exactly 3 servers")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"failure probability {q} outside [0, 1]")
    masks = np.arange(8)
    sizes = np.array([m.bit_count() for m in range(8)])
    if kind is SchemeKind.DIVERSITY_3X2:
        eligible = (sizes >= 2) & ((masks & 1) == 1)
    else:
        eligible = sizes >= 2
    weights = np.where(eligible, (1.0 - q) ** sizes, 0.0)
    return _weighted_pmf_estimate(pmf, weights, Estimator.CLOSED_FORM)


def exact_enum_perr(pmf: JointDecodePmf, q: float, scheme: NfvScheme) -> ErrEstimate:
    """Exact availability average on top of the estimated decode pmf.

    For each observed correctness mask C the success probability is summed
    over the subsets M of C that remain available, weighted binomially in q,
    and counted when the columns of M still span all frames.
    """
    if pmf.n_servers != scheme.n_servers:
        raise ValueError("pmf and scheme disagree on server count")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"failure probability {q} outside [0, 1]")
    if scheme.n_servers > 20:
        raise TooLarge("availability enumeration beyond 2^20 subsets")
    ok = recoverable_table(scheme.matrix)
    up = 1.0 - q
    weights = np.zeros(1 << scheme.n_servers)
    for c in range(1 << scheme.n_servers):
        if pmf.counts[c] == 0:
            continue
        total = 0.0
        # iterate over all subsets m of c
        m = c
        while True:
            if ok[m]:
                nm = m.bit_count()
                total += up**nm * q ** (c.bit_count() - nm)
            if m == 0:
                break
            m = (m - 1) & c
        weights[c] = total
    return _weighted_pmf_estimate(pmf, weights, Estimator.EXACT_ENUM)


def _mc_block(args) -> tuple[int, int]:
    code, scheme, p, q, k, seed, stream, block, trust = args
    with_crc = trust is DetectionMode.CRC16
    messages, decoded, correct, masks = _simulate_block(
        code, scheme, p, k, seed, stream, block, with_crc
    )
    model = ServerFailureModel(q, scheme.n_servers)
    avail = sample_availability_array(
        model, block, RngStream(seed, stream, Purpose.AVAILABILITY)
    )
    avail_masks = (avail.astype(np.int64) << np.arange(scheme.n_servers)).sum(axis=1)
    ok = recoverable_table(scheme.matrix)

    if not with_crc:
        return int(block - ok[masks & avail_masks].sum()), 0

    passed = crc16_ok_array(decoded.reshape(-1, decoded.shape[2])).reshape(
        block, scheme.n_servers
    )
    pass_masks = (passed.astype(np.int64) << np.arange(scheme.n_servers)).sum(axis=1)
    # A correct decode always carries a valid check, so an available server
    # that passes while wrong is exactly an undetected decoder error; trials
    # without one behave like genie trials and stay on the fast path.
    bad = (pass_masks & avail_masks & ~masks) != 0
    clean_trusted = (masks & avail_masks)[~bad]
    failures = int(clean_trusted.size - ok[clean_trusted].sum())
    undetected = 0
    for t in np.nonzero(bad)[0]:
        outcomes = [
            ServerOutcome(
                available=bool(avail[t, j]),
                decoded=BitVec.from_array(decoded[t, j]),
                correct=bool(passed[t, j]),
            )
            for j in range(scheme.n_servers)
        ]
        res = recover(scheme, outcomes, DetectionMode.CRC16)
        if res.ok:
            truth = tuple(BitVec.from_array(messages[t, i]) for i in range(scheme.n_frames))
            if res.messages == truth:
                continue
            undetected += 1
        failures += 1
    return failures, undetected


def full_mc_perr(
    code,
    scheme: NfvScheme,
    p: float,
    q: float,
    trials: int,
    seed: int,
    trust: DetectionMode = DetectionMode.GENIE,
    *,
    k: int | None = None,
    workers: int | None = 1,
    stream_offset: int = 0,
) -> ErrEstimate:
    """Simulate the whole pipeline per trial, availability and recovery included.

    Under CRC detection a recovery that silently returns wrong messages
    counts as a failure and is also reported via ``undetected_rate``.
    """
    k = _frame_bits(code, k)
    if trust is DetectionMode.CRC16 and k <= 16:
        raise ValueError(f"frame length {k} leaves no payload after the 16 check bits")
    args = [
        (code, scheme, p, q, k, seed, stream_offset + i, b, trust)
        for i, b in enumerate(_block_sizes(trials))
    ]
    results = _run_blocks(_mc_block, args, _resolve_workers(workers))
    failures = sum(r[0] for r in results)
    undetected = sum(r[1] for r in results)
    p_err = failures / trials
    return ErrEstimate(
        p_err,
        _ci_halfwidth(p_err, trials),
        trials,
        Estimator.FULL_MC,
        undetected_rate=(undetected / trials) if trust is DetectionMode.CRC16 else None,
    )


# ---------------------------------------------------------------------------
# Brute-force oracle for tiny block codes (test reference, no Monte Carlo).

ORACLE_BUDGET = 1 << 22


def brute_force_perr(
    code: LinearBlockCode, scheme: NfvScheme, p: float, q: float
) -> float:
    """Exact end-to-end error probability by exhaustive enumeration.

    Averages over every message tuple, every noise pattern (weighted by its
    BSC probability) and every availability pattern, re-deriving maximum
    likelihood decoding and recoverability from first principles so the
    result is independent of the simulation pipeline it validates.
    """
    kb = code.message_length
    nb = code.generator.n_cols
    kk, n_srv = scheme.n_frames, scheme.n_servers
    work = (1 << (kk * kb)) * (1 << (kk * nb)) * (1 << kb)
    if work > ORACLE_BUDGET:
        raise TooLarge(f"oracle enumeration of {work} decode steps refused")

    # Codewords by direct row XOR of the generator, independent of encode().
    gen_rows = [code.generator.rows[i] for i in range(kb)]
    codewords = []
    for m in range(1 << kb):
        w = 0
        for i in range(kb):
            if (m >> i) & 1:
                w ^= gen_rows[i]
        codewords.append(w)

    def ml(word: int) -> int:
        best, best_m = nb + 1, 0
        for m, cw in enumerate(codewords):
            d = (cw ^ word).bit_count()
            if d < best:
                best, best_m = d, m
        return best_m

    cols = scheme.matrix.columns()

    def parity(a: int) -> int:
        return a.bit_count() & 1

    # Failure probability of a correctness mask, averaged over availability:
    # unrecoverable when some nonzero message combination is invisible to
    # every available-and-correct column.
    def avail_failure(corr: int) -> float:
        total = 0.0
        for amask in range(1 << n_srv):
            s = amask & corr
            visible = all(
                any(parity(v & cols[j]) for j in range(n_srv) if (s >> j) & 1)
                for v in range(1, 1 << kk)
            )
            if not visible:
                na = amask.bit_count()
                total += (1.0 - q) ** na * q ** (n_srv - na)
        return total

    fail_cache: dict[int, float] = {}
    p_err = 0.0
    msg_weight = 1.0 / (1 << (kk * kb))
    for msg_tuple in range(1 << (kk * kb)):
        msgs = [(msg_tuple >> (i * kb)) & ((1 << kb) - 1) for i in range(kk)]
        sent = [codewords[m] for m in msgs]
        for noise_tuple in range(1 << (kk * nb)):
            noises = [(noise_tuple >> (i * nb)) & ((1 << nb) - 1) for i in range(kk)]
            w = sum(z.bit_count() for z in noises)
            prob = p**w * (1.0 - p) ** (kk * nb - w)
            if prob == 0.0:
                continue
            received = [sent[i] ^ noises[i] for i in range(kk)]
            corr = 0
            for j in range(n_srv):
                inp = 0
                target = 0
                for i in range(kk):
                    if (cols[j] >> i) & 1:
                        inp ^= received[i]
                        target ^= msgs[i]
                if ml(inp) == target:
                    corr |= 1 << j
            if corr not in fail_cache:
                fail_cache[corr] = avail_failure(corr)
            p_err += msg_weight * prob * fail_cache[corr]
    return p_err
