"""Reader and writer for SRS channel-estimate logs.

One record per line::

    <utc_ms>,<sfn>,<pair_index>,<g0>,...,<g63>

Each gain is 8 hex digits: 4 for the real part, then 4 for the imaginary part,
each a 16-bit two's-complement integer with scale 1/32768. ``pair_index`` is
``channel * 4 + ue_antenna``; the 64 gains run row-major over the 8x8 beam grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

from .errors import FormatError, OrderingError, ValidationError

N_CHANNELS = 3
N_UE_ANTENNAS = 4
N_PAIRS = N_CHANNELS * N_UE_ANTENNAS
BEAM_GRID = (8, 8)
N_GAINS = BEAM_GRID[0] * BEAM_GRID[1]
SFN_MODULUS = 1024
FULL_SCALE = 32768
N_FIELDS = 3 + N_GAINS

_HEX = frozenset("0123456789abcdefABCDEF")


class FixedComplex(NamedTuple):
    """Raw 16-bit fixed-point complex gain."""

    re: int
    im: int

    @property
    def value(self) -> complex:
        return complex(self.re / FULL_SCALE, self.im / FULL_SCALE)

    @classmethod
    def from_complex(cls, z: complex) -> "FixedComplex":
        re, im = quantize(np.array([z]))[0]
        return cls(int(re), int(im))


def _check_raw(x: int) -> None:
    if not -FULL_SCALE <= x < FULL_SCALE:
        raise ValidationError(f"raw component {x} does not fit in 16 bits")


def decode_gain(hex8: str) -> FixedComplex:
    if len(hex8) != 8:
        raise FormatError(f"gain field must be 8 hex digits, got {len(hex8)}: {hex8!r}")
    for offset, ch in enumerate(hex8):
        if ch not in _HEX:
            raise FormatError(f"non-hex character {ch!r} at byte offset {offset} in {hex8!r}")
    re = int(hex8[:4], 16)
    im = int(hex8[4:], 16)
    return FixedComplex(re - 0x10000 if re >= 0x8000 else re, im - 0x10000 if im >= 0x8000 else im)


def encode_gain(g: FixedComplex) -> str:
    _check_raw(g.re)
    _check_raw(g.im)
    return f"{g.re & 0xFFFF:04X}{g.im & 0xFFFF:04X}"


def quantize(z: np.ndarray) -> np.ndarray:
    """Complex array -> int16 array of shape ``z.shape + (2,)``, saturating at full scale."""
    z = np.asarray(z)
    parts = np.stack([z.real, z.imag], axis=-1) * FULL_SCALE
    return np.clip(np.rint(parts), -FULL_SCALE, FULL_SCALE - 1).astype(np.int16)


def dequantize(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    return (raw[..., 0] + 1j * raw[..., 1]) / FULL_SCALE


@dataclass(frozen=True, eq=False)
class SrsRecord:
    utc: int
    sfn: int
    pair_index: int
    gains: np.ndarray  # (64, 2) int16 raw (re, im)

    def __post_init__(self):
        gains = np.asarray(self.gains)
        if gains.shape != (N_GAINS, 2):
            raise ValidationError(f"expected {N_GAINS} gains, got array of shape {gains.shape}")
        if not 0 <= self.sfn < SFN_MODULUS:
            raise ValidationError(f"sfn {self.sfn} outside [0, {SFN_MODULUS - 1}]")
        if not 0 <= self.pair_index < N_PAIRS:
            raise ValidationError(f"pair_index {self.pair_index} outside [0, {N_PAIRS - 1}]")
        if gains.dtype != np.int16:
            if gains.min(initial=0) < -FULL_SCALE or gains.max(initial=0) >= FULL_SCALE:
                raise ValidationError("gain component does not fit in 16 bits")
            gains = gains.astype(np.int16)
        object.__setattr__(self, "gains", gains)

    @property
    def channel(self) -> int:
        return self.pair_index // N_UE_ANTENNAS

    @property
    def antenna(self) -> int:
        return self.pair_index % N_UE_ANTENNAS

    def gain(self, k: int) -> FixedComplex:
        return FixedComplex(int(self.gains[k, 0]), int(self.gains[k, 1]))

    def complex_gains(self) -> np.ndarray:
        return dequantize(self.gains).reshape(BEAM_GRID)

    def __eq__(self, other):
        if not isinstance(other, SrsRecord):
            return NotImplemented
        return (
            self.utc == other.utc
            and self.sfn == other.sfn
            and self.pair_index == other.pair_index
            and np.array_equal(self.gains, other.gains)
        )


class SrsLog:
    """Columnar, utc-ordered collection of records.

    Columns: ``utc`` (N,) int64, ``sfn`` (N,) int16, ``pair_index`` (N,) int8,
    ``gains`` (N, 64, 2) int16.
    """

    def __init__(self, utc, sfn, pair_index, gains):
        self.utc = np.asarray(utc, dtype=np.int64).reshape(-1)
        self.sfn = np.asarray(sfn, dtype=np.int64).reshape(-1)
        self.pair_index = np.asarray(pair_index, dtype=np.int64).reshape(-1)
        gains = np.asarray(gains)
        n = len(self.utc)
        if gains.size == 0 and n == 0:
            gains = np.zeros((0, N_GAINS, 2), dtype=np.int16)
        if gains.shape != (n, N_GAINS, 2):
            raise ValidationError(f"gains must have shape ({n}, {N_GAINS}, 2), got {gains.shape}")
        if len(self.sfn) != n or len(self.pair_index) != n:
            raise ValidationError("column lengths differ")
        if gains.dtype != np.int16:
            if n and (gains.min() < -FULL_SCALE or gains.max() >= FULL_SCALE):
                raise ValidationError("gain component does not fit in 16 bits")
            gains = gains.astype(np.int16)
        self.gains = gains
        self._validate()

    def _validate(self) -> None:
        bad = np.flatnonzero((self.sfn < 0) | (self.sfn >= SFN_MODULUS))
        if bad.size:
            raise ValidationError(f"record {bad[0]}: sfn {self.sfn[bad[0]]} outside [0, 1023]")
        bad = np.flatnonzero((self.pair_index < 0) | (self.pair_index >= N_PAIRS))
        if bad.size:
            raise ValidationError(
                f"record {bad[0]}: pair_index {self.pair_index[bad[0]]} outside [0, 11]"
            )
        bad = np.flatnonzero(np.diff(self.utc) < 0)
        if bad.size:
            i = bad[0] + 1
            raise OrderingError(f"record {i}: utc {self.utc[i]} precedes {self.utc[i - 1]}")

    @classmethod
    def empty(cls) -> "SrsLog":
        return cls([], [], [], np.zeros((0, N_GAINS, 2), dtype=np.int16))

    @classmethod
    def from_records(cls, records: Iterable[SrsRecord]) -> "SrsLog":
        records = list(records)
        if not records:
            return cls.empty()
        return cls(
            [r.utc for r in records],
            [r.sfn for r in records],
            [r.pair_index for r in records],
            np.stack([r.gains for r in records]),
        )

    def __len__(self) -> int:
        return len(self.utc)

    def __getitem__(self, i: int) -> SrsRecord:
        return SrsRecord(
            int(self.utc[i]), int(self.sfn[i]), int(self.pair_index[i]), self.gains[i]
        )

    def __iter__(self) -> Iterator[SrsRecord]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, SrsLog):
            return NotImplemented
        return (
            np.array_equal(self.utc, other.utc)
            and np.array_equal(self.sfn, other.sfn)
            and np.array_equal(self.pair_index, other.pair_index)
            and np.array_equal(self.gains, other.gains)
        )

    def __repr__(self) -> str:
        return f"SrsLog(n_records={len(self)})"


def _locate_bad_hex(field: str, line_no: int, field_no: int) -> FormatError:
    if len(field) != 8:
        return FormatError(
            f"line {line_no}: gain field {field_no - 3} has {len(field)} characters, expected 8"
        )
    for offset, ch in enumerate(field):
        if ch not in _HEX:
            return FormatError(
                f"line {line_no}: gain field {field_no - 3}: non-hex character {ch!r} "
                f"at byte offset {offset}"
            )
    return FormatError(f"line {line_no}: malformed gain field {field!r}")


def _parse_int(text: str, name: str, line_no: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"line {line_no}: {name} field {text!r} is not an integer") from None


def parse_log(stream: Iterable[str]) -> SrsLog:
    """Parse an SRS log from an iterable of text lines (a file object works).

    Blank lines are skipped. Raises FormatError for malformed lines (with the
    1-based line number), ValidationError for out-of-range fields and
    OrderingError when utc decreases.
    """
    utc, sfn, pair, blobs = [], [], [], []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != N_FIELDS:
            raise FormatError(f"line {line_no}: expected {N_FIELDS} fields, got {len(fields)}")
        t = _parse_int(fields[0], "utc", line_no)
        s = _parse_int(fields[1], "sfn", line_no)
        p = _parse_int(fields[2], "pair_index", line_no)
        if not 0 <= s < SFN_MODULUS:
            raise ValidationError(f"line {line_no}: sfn {s} outside [0, 1023]")
        if not 0 <= p < N_PAIRS:
            raise ValidationError(f"line {line_no}: pair_index {p} outside [0, 11]")
        if utc and t < utc[-1]:
            raise OrderingError(f"line {line_no}: utc {t} precedes previous record utc {utc[-1]}")
        hexes = fields[3:]
        joined = "".join(hexes)
        blob = None
        if len(joined) == 8 * N_GAINS:
            try:
                blob = bytes.fromhex(joined)
            except ValueError:
                blob = None
        if blob is None or len(blob) != 4 * N_GAINS:
            for k, field in enumerate(hexes, start=3):
                if len(field) != 8 or not _HEX.issuperset(field):
                    raise _locate_bad_hex(field, line_no, k)
            raise FormatError(f"line {line_no}: malformed gain fields")
        utc.append(t)
        sfn.append(s)
        pair.append(p)
        blobs.append(blob)
    if not utc:
        return SrsLog.empty()
    gains = np.frombuffer(b"".join(blobs), dtype=">i2").astype(np.int16)
    return SrsLog(utc, sfn, pair, gains.reshape(len(utc), N_GAINS, 2))


def format_record(utc: int, sfn: int, pair_index: int, gains: np.ndarray) -> str:
    hexes = np.asarray(gains, dtype=">i2").tobytes().hex().upper()
    fields = [hexes[k : k + 8] for k in range(0, len(hexes), 8)]
    return f"{utc},{sfn},{pair_index}," + ",".join(fields)


def write_log(log: SrsLog, sink: IO[str]) -> None:
    for i in range(len(log)):
        sink.write(format_record(int(log.utc[i]), int(log.sfn[i]), int(log.pair_index[i]), log.gains[i]))
        sink.write("\n")


def read_log_file(path) -> SrsLog:
    with open(path, encoding="utf-8") as fh:
        return parse_log(fh)


def write_log_file(log: SrsLog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_log(log, fh)
