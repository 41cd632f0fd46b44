import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srsfp.errors import FormatError, OrderingError, ValidationError
from srsfp.srslog import (
    FixedComplex,
    SrsLog,
    SrsRecord,
    decode_gain,
    dequantize,
    encode_gain,
    parse_log,
    quantize,
    write_log,
)

raw16 = st.integers(-32768, 32767)


def random_log(rng, n):
    utc = np.sort(rng.integers(0, 10**6, n)) + 1_600_000_000_000
    sfn = rng.integers(0, 1024, n)
    pair = rng.integers(0, 12, n)
    gains = rng.integers(-32768, 32768, (n, 64, 2)).astype(np.int16)
    return SrsLog(utc, sfn, pair, gains)


def roundtrip(log):
    buf = io.StringIO()
    write_log(log, buf)
    return parse_log(io.StringIO(buf.getvalue()))


def test_decode_zero():
    assert decode_gain("00000000") == FixedComplex(0, 0)


def test_decode_twos_complement_extremes():
    assert decode_gain("7FFF8000") == FixedComplex(32767, -32768)


def test_decode_accepts_lowercase():
    assert decode_gain("ffff0001") == FixedComplex(-1, 1)


def test_encode_examples():
    assert encode_gain(FixedComplex(0, 0)) == "00000000"
    assert encode_gain(FixedComplex(-1, -1)) == "FFFFFFFF"


@pytest.mark.parametrize("re", [-32768, -1, 0, 1, 32767])
@pytest.mark.parametrize("im", [-32768, -1, 0, 1, 32767])
def test_boundary_roundtrip(re, im):
    g = FixedComplex(re, im)
    assert decode_gain(encode_gain(g)) == g


def test_random_pairs_roundtrip(rng):
    for re, im in rng.integers(-32768, 32768, (1000, 2)):
        g = FixedComplex(int(re), int(im))
        assert decode_gain(encode_gain(g)) == g


@given(raw16, raw16)
def test_gain_roundtrip_property(re, im):
    g = FixedComplex(re, im)
    s = encode_gain(g)
    assert len(s) == 8 and s == s.upper()
    assert decode_gain(s) == g


def test_fixed_value_scale():
    assert FixedComplex(16384, -32768).value == complex(0.5, -1.0)


@pytest.mark.parametrize("bad,offset", [("0000000G", 7), ("x0000000", 0), ("00-00000", 2)])
def test_decode_reports_byte_offset(bad, offset):
    with pytest.raises(FormatError, match=f"offset {offset}"):
        decode_gain(bad)


@pytest.mark.parametrize("bad", ["", "0000000", "000000000"])
def test_decode_wrong_length(bad):
    with pytest.raises(FormatError):
        decode_gain(bad)


def test_encode_rejects_out_of_range():
    with pytest.raises(ValidationError):
        encode_gain(FixedComplex(32768, 0))


def test_quantize_saturates_and_rounds():
    raw = quantize(np.array([1.0 + 0j, -1.0 - 2j, 0.5 + 0.25j]))
    assert raw.tolist() == [[32767, 0], [-32768, -32768], [16384, 8192]]


@given(st.floats(-0.999, 0.999), st.floats(-0.999, 0.999))
def test_quantization_error_bounded(a, b):
    z = complex(a, b)
    err = dequantize(quantize(np.array([z])))[0] - z
    assert abs(err.real) <= 0.5 / 32768 + 1e-15
    assert abs(err.imag) <= 0.5 / 32768 + 1e-15


def test_parse_empty_stream():
    log = parse_log(io.StringIO(""))
    assert len(log) == 0


def test_parse_single_zero_line():
    line = "1000,5,3," + ",".join(["00000000"] * 64)
    log = parse_log([line])
    assert len(log) == 1
    rec = log[0]
    assert (rec.utc, rec.sfn, rec.pair_index) == (1000, 5, 3)
    assert all(rec.gain(k) == (0, 0) for k in range(64))
    assert (rec.channel, rec.antenna) == (0, 3)


def test_write_empty_log():
    buf = io.StringIO()
    write_log(SrsLog.empty(), buf)
    assert buf.getvalue() == ""


def test_write_single_zero_record():
    log = SrsLog.from_records([SrsRecord(7, 0, 0, np.zeros((64, 2), np.int16))])
    buf = io.StringIO()
    write_log(log, buf)
    text = buf.getvalue()
    assert text.count("\n") == 1
    assert text.rstrip("\n").endswith("," + ",".join(["00000000"] * 64))


def test_roundtrip_ten_thousand_records(rng):
    log = random_log(rng, 10_000)
    assert roundtrip(log) == log


@given(st.integers(0, 30), st.integers(0, 2**32 - 1))
def test_roundtrip_property(n, seed):
    log = random_log(np.random.default_rng(seed), n)
    back = roundtrip(log)
    assert back == log
    assert list(back) == list(log)


def test_ties_in_utc_allowed():
    gains = np.zeros((2, 64, 2), np.int16)
    log = SrsLog([5, 5], [0, 0], [0, 1], gains)
    assert roundtrip(log) == log


def test_blank_lines_skipped():
    line = "1,0,0," + ",".join(["00000000"] * 64)
    assert len(parse_log(["\n", line, "", line])) == 2


@pytest.mark.parametrize(
    "sfn,pair",
    [(1024, 0), (-1, 0), (0, 12), (0, -1)],
)
def test_out_of_range_fields(sfn, pair):
    line = f"1,{sfn},{pair}," + ",".join(["00000000"] * 64)
    with pytest.raises(ValidationError, match="line 1"):
        parse_log([line])


def test_decreasing_utc_is_ordering_error():
    zeros = ",".join(["00000000"] * 64)
    with pytest.raises(OrderingError, match="line 2"):
        parse_log([f"10,0,0,{zeros}", f"9,0,0,{zeros}"])


def test_malformed_line_reports_line_number():
    zeros = ",".join(["00000000"] * 64)
    with pytest.raises(FormatError, match="line 2"):
        parse_log([f"10,0,0,{zeros}", f"11,0,0,{zeros},00000000"])
    with pytest.raises(FormatError, match="line 1"):
        parse_log([f"abc,0,0,{zeros}"])


def test_bad_hex_reports_field():
    fields = ["00000000"] * 64
    fields[10] = "00Z00000"
    with pytest.raises(FormatError, match="line 1.*offset 2"):
        parse_log(["1,0,0," + ",".join(fields)])


def test_record_invariants():
    with pytest.raises(ValidationError):
        SrsRecord(0, 1024, 0, np.zeros((64, 2)))
    with pytest.raises(ValidationError):
        SrsRecord(0, 0, 12, np.zeros((64, 2)))
    with pytest.raises(ValidationError):
        SrsRecord(0, 0, 0, np.zeros((63, 2)))


def test_log_rejects_decreasing_utc():
    with pytest.raises(OrderingError):
        SrsLog([2, 1], [0, 0], [0, 0], np.zeros((2, 64, 2), np.int16))
