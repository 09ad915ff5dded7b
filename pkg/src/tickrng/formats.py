"""File formats: event streams, bit streams, test reports, run manifests.

Event streams are one ASCII decimal slot index per line, or a packed
binary stream of little-endian unsigned 64-bit integers.  Bit streams
are either ASCII ``0``/``1`` characters (whitespace-insensitive) or a
packed format with an 8-byte little-endian bit-count header followed by
MSB-first bytes, zero-padded.  Reports are CSV.  Every file produced by
the CLI is accompanied by a JSON run manifest (``<file>.manifest.json``)
recording the exact command, parameters and random generator, so any
output can be reproduced bit-exactly with ``tickrng replay``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError
from .extract import BitStream
from .sim import ClockConfig, ClockMode, EventStream
from .suite import TestReport

__all__ = [
    "EVENT_FORMATS",
    "BIT_FORMATS",
    "read_events",
    "write_events",
    "read_bits",
    "write_bits",
    "write_report",
    "REPORT_HEADER",
    "RunManifest",
    "manifest_path_for",
    "write_manifest",
    "read_manifest",
]

EVENT_FORMATS = ("ascii", "binary")
BIT_FORMATS = ("ascii01", "packed")
REPORT_HEADER = ("test_id", "test_index", "run_index", "p_value", "pass")

_U64_MAX = 2**64 - 1


def _default_clock() -> ClockConfig:
    return ClockConfig(mode=ClockMode.FREE_RUNNING)


def _check_event_order(values: list[int], labels: list[str]) -> None:
    last = 0
    for value, label in zip(values, labels):
        if value < 1:
            raise DataError(f"{label}: slot index must be >= 1, got {value}")
        if value > _U64_MAX:
            raise DataError(f"{label}: slot index {value} overflows 64 bits")
        if value <= last:
            kind = "duplicate" if value == last else "non-increasing"
            raise DataError(f"{label}: {kind} slot index {value} (previous was {last})")
        last = value


def read_events(path, fmt: str = "ascii", clock: ClockConfig | None = None) -> EventStream:
    """Read an event stream; an empty file yields an empty stream."""
    if fmt not in EVENT_FORMATS:
        raise ValueError(f"unknown event format {fmt!r}")
    path = Path(path)
    if clock is None:
        clock = _default_clock()
    values: list[int] = []
    labels: list[str] = []
    if fmt == "ascii":
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            text = line.strip()
            if not text:
                continue
            try:
                value = int(text)
            except ValueError:
                raise DataError(f"line {lineno}: {text!r} is not a decimal slot index") from None
            values.append(value)
            labels.append(f"line {lineno}")
    else:
        blob = path.read_bytes()
        if len(blob) % 8:
            raise DataError(f"binary event file length {len(blob)} is not a multiple of 8")
        arr = np.frombuffer(blob, dtype="<u8")
        values = [int(v) for v in arr]
        labels = [f"entry {i}" for i in range(1, len(values) + 1)]
    _check_event_order(values, labels)
    return EventStream(np.array(values, dtype=np.uint64), clock)


def write_events(stream: EventStream, path, fmt: str = "ascii") -> None:
    if fmt not in EVENT_FORMATS:
        raise ValueError(f"unknown event format {fmt!r}")
    path = Path(path)
    if fmt == "ascii":
        path.write_text("".join(f"{int(s)}\n" for s in stream.slots))
    else:
        path.write_bytes(stream.slots.astype("<u8").tobytes())


def read_bits(path, fmt: str = "ascii01") -> BitStream:
    if fmt not in BIT_FORMATS:
        raise ValueError(f"unknown bit format {fmt!r}")
    path = Path(path)
    if fmt == "ascii01":
        out = []
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            for ch in line:
                if ch in "01":
                    out.append(ch == "1")
                elif not ch.isspace():
                    raise DataError(f"line {lineno}: stray character {ch!r} in bit stream")
        return BitStream(np.array(out, dtype=np.uint8))
    blob = path.read_bytes()
    if len(blob) < 8:
        raise DataError("packed bit file shorter than its 8-byte header")
    bit_len = int.from_bytes(blob[:8], "little")
    need = (bit_len + 7) // 8
    payload = blob[8:]
    if len(payload) < need:
        raise DataError(f"packed bit file truncated: header says {bit_len} bits, payload has {len(payload)} bytes")
    if len(payload) > need:
        raise DataError(f"packed bit file has {len(payload) - need} trailing bytes")
    unpacked = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    if bit_len and unpacked[bit_len:].any():
        raise DataError("packed bit file has non-zero padding bits")
    return BitStream(unpacked[:bit_len])


def write_bits(bits: BitStream, path, fmt: str = "ascii01") -> None:
    if fmt not in BIT_FORMATS:
        raise ValueError(f"unknown bit format {fmt!r}")
    path = Path(path)
    if fmt == "ascii01":
        path.write_text("".join("1" if b else "0" for b in bits.bits) + "\n")
    else:
        header = len(bits).to_bytes(8, "little")
        payload = np.packbits(bits.bits).tobytes()
        path.write_bytes(header + payload)


def write_report(report: TestReport, path) -> None:
    """Write one CSV row per (procedure, run), sorted by (test_index, run_index).

    Not-applicable entries carry ``NA`` in the p_value and pass columns.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADER)
        for entry in report.sorted_entries():
            if entry.applicable:
                writer.writerow(
                    [
                        entry.test_id.value,
                        entry.test_index,
                        entry.run_index,
                        f"{entry.p_value:.6g}",
                        int(entry.passed),
                    ]
                )
            else:
                writer.writerow([entry.test_id.value, entry.test_index, entry.run_index, "NA", "NA"])


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI output bit-exactly."""

    subcommand: str
    argv: list[str]
    parameters: dict
    outputs: list[str]
    generator: dict | None = None
    conventions: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def manifest_path_for(output_path) -> Path:
    return Path(str(output_path) + ".manifest.json")


def write_manifest(manifest: RunManifest, output_path) -> Path:
    target = manifest_path_for(output_path)
    target.write_text(manifest.to_json())
    return target


def read_manifest(path) -> RunManifest:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest is not valid JSON: {exc}") from None
    try:
        return RunManifest(
            subcommand=raw["subcommand"],
            argv=list(raw["argv"]),
            parameters=dict(raw["parameters"]),
            outputs=list(raw["outputs"]),
            generator=raw.get("generator"),
            conventions=dict(raw.get("conventions", {})),
            version=raw.get("version", __version__),
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"manifest is missing required field: {exc}") from None
