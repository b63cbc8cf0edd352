"""Experiment sweeps over (scheme, p, q) with machine-readable output.

A sweep estimates the joint decode pmf once per (scheme, p) point and reuses
it across the whole q grid for the analytic estimators, so log-spaced q
sweeps cost no extra simulation.  Output rows follow a fixed CSV schema and
are byte-identical for a given config and master seed, regardless of worker
count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields, replace

from .convcode import ConvCode, DetectionMode, Termination, parse_taps
from .estimators import (
    POINT_STREAM_STRIDE,
    Estimator,
    SchemeKind,
    closed_form_perr,
    estimate_joint_pmf,
    exact_enum_perr,
    full_mc_perr,
)
from .schemes import parse_scheme

CSV_FIELDS = (
    "scheme",
    "p",
    "q",
    "estimator",
    "trials",
    "p_err",
    "ci_halfwidth",
    "detection_mode",
    "seed",
)

_DEFAULT_ESTIMATORS = (Estimator.EXACT_ENUM, Estimator.CLOSED_FORM)


class ConfigError(ValueError):
    """A sweep configuration field failed validation."""


class PartialSweep(RuntimeError):
    """A sweep aborted partway; completed rows are attached."""

    def __init__(self, message: str, rows: list[dict]):
        super().__init__(message)
        self.rows = rows


def parse_grid(text: str) -> tuple[float, ...]:
    """Comma-separated values, or "logspace:start,stop,count"."""
    text = text.strip()
    if text.startswith("logspace:"):
        parts = text[len("logspace:"):].split(",")
        if len(parts) != 3:
            raise ConfigError(f"logspace needs start,stop,count: {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if start <= 0 or stop <= 0 or count < 1:
            raise ConfigError(f"logspace bounds must be positive: {text!r}")
        if count == 1:
            return (start,)
        la, lb = math.log10(start), math.log10(stop)
        return tuple(10 ** (la + (lb - la) * i / (count - 1)) for i in range(count))
    return tuple(float(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class SweepConfig:
    taps: tuple[int, ...] = (0o171, 0o133)
    constraint_length: int = 7
    k: int = 70
    termination: Termination = Termination.UNTERMINATED
    n_servers: int = 3
    n_frames: int = 2
    schemes: tuple[str, ...] = ("diversity", "coded")
    p_grid: tuple[float, ...] = (0.05,)
    q_grid: tuple[float, ...] = (0.001,)
    trials: int = 100_000
    seed: int = 1
    detection: DetectionMode = DetectionMode.GENIE
    estimators: tuple[Estimator, ...] = _DEFAULT_ESTIMATORS
    workers: int | None = None

    def validate(self) -> None:
        errors = []
        if self.trials < 1:
            errors.append("trials: must be at least 1")
        for name, grid in (("p", self.p_grid), ("q", self.q_grid)):
            if not grid:
                errors.append(f"{name}: empty grid")
            for v in grid:
                if not 0.0 <= v <= 1.0:
                    errors.append(f"{name}: value {v} outside [0, 1]")
        if self.k < 1:
            errors.append("k: must be at least 1")
        if self.detection is DetectionMode.CRC16 and self.k <= 16:
            errors.append("k: too short to carry the 16 check bits")
        for s in self.schemes:
            try:
                parse_scheme(s, self.n_servers, self.n_frames)
            except ValueError as exc:
                errors.append(f"schemes: {s!r}: {exc}")
        if Estimator.CLOSED_FORM in self.estimators:
            if (self.n_servers, self.n_frames) != (3, 2):
                errors.append("estimators: closed_form requires 3 servers and 2 frames")
            for s in self.schemes:
                if s not in ("diversity", "coded"):
                    errors.append(f"estimators: closed_form undefined for scheme {s!r}")
        try:
            self.code()
        except ValueError as exc:
            errors.append(f"taps: {exc}")
        if errors:
            raise ConfigError("; ".join(errors))

    def code(self) -> ConvCode:
        return ConvCode(self.constraint_length, self.taps, self.termination)

    @classmethod
    def from_text(cls, text: str) -> SweepConfig:
        """Parse flat key = value lines; '#' starts a comment."""
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        return cls().with_overrides(values)

    def with_overrides(self, values: dict[str, str | None]) -> SweepConfig:
        """Apply string-valued overrides (config file or CLI flags)."""
        known = {f.name for f in fields(self)}
        updates = {}
        for key, val in values.items():
            if val is None:
                continue
            field_name = {"p": "p_grid", "q": "q_grid"}.get(key, key)
            if field_name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            updates[field_name] = _parse_field(field_name, val)
        return replace(self, **updates)


def _parse_field(name: str, val: str):
    try:
        if name == "taps":
            return parse_taps(val)
        if name in ("constraint_length", "k", "n_servers", "n_frames", "trials", "seed"):
            return int(val)
        if name == "workers":
            return int(val)
        if name == "termination":
            return Termination(val)
        if name == "detection":
            return DetectionMode(val)
        if name == "schemes":
            return tuple(s.strip() for s in val.split(",") if s.strip())
        if name in ("p_grid", "q_grid"):
            return parse_grid(val)
        if name == "estimators":
            return tuple(Estimator(e.strip()) for e in val.split(",") if e.strip())
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    raise ConfigError(f"unknown config key {name!r}")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def run_sweep(config: SweepConfig) -> list[dict]:
    """Run every (scheme, p, q, estimator) point and return result rows.

    Raises PartialSweep with the rows completed so far if any point fails.
    """
    config.validate()
    code = config.code()
    rows: list[dict] = []
    point = 0
    try:
        for scheme_name in config.schemes:
            scheme = parse_scheme(scheme_name, config.n_servers, config.n_frames)
            for p in config.p_grid:
                pmf = None
                if any(e is not Estimator.FULL_MC for e in config.estimators):
                    pmf = estimate_joint_pmf(
                        code,
                        scheme,
                        p,
                        config.trials,
                        config.seed,
                        k=config.k,
                        workers=config.workers,
                        stream_offset=point * POINT_STREAM_STRIDE,
                    )
                point += 1
                for q in config.q_grid:
                    for est in config.estimators:
                        # pmf-based estimators are defined on ground-truth
                        # decode outcomes; only full_mc honors CRC detection
                        detection = DetectionMode.GENIE
                        if est is Estimator.EXACT_ENUM:
                            res = exact_enum_perr(pmf, q, scheme)
                        elif est is Estimator.CLOSED_FORM:
                            res = closed_form_perr(pmf, q, SchemeKind(scheme_name))
                        else:
                            detection = config.detection
                            res = full_mc_perr(
                                code,
                                scheme,
                                p,
                                q,
                                config.trials,
                                config.seed,
                                detection,
                                k=config.k,
                                workers=config.workers,
                                stream_offset=point * POINT_STREAM_STRIDE,
                            )
                            point += 1
                        rows.append(
                            {
                                "scheme": scheme.name,
                                "p": _fmt(p),
                                "q": _fmt(q),
                                "estimator": est.value,
                                "trials": str(res.trials),
                                "p_err": _fmt(res.p_err),
                                "ci_halfwidth": _fmt(res.ci_halfwidth),
                                "detection_mode": detection.value,
                                "seed": str(config.seed),
                            }
                        )
    except Exception as exc:
        raise PartialSweep(f"sweep aborted at point {point}: {exc}", rows) from exc
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    return "".join(json.dumps(row) + "\n" for row in rows)
