"""WAV and CSV artifact writers: exact headers, scaling, clipping, formats."""

import struct
import wave

import numpy as np
import pytest

from sidpatch.output import encode_pcm16, write_trace_csv, write_wav


def test_wav_header_arithmetic_exact(tmp_path):
    path = tmp_path / "z.wav"
    write_wav(np.zeros(4410), 1, path, 44100)
    data = path.read_bytes()
    assert len(data) == 44 + 8820
    assert data[:4] == b"RIFF"
    assert struct.unpack("<I", data[4:8])[0] == 36 + 8820
    assert data[8:12] == b"WAVE"
    assert data[12:16] == b"fmt "
    fmt = struct.unpack("<IHHIIHH", data[16:36])
    assert fmt == (16, 1, 1, 44100, 88200, 2, 16)
    assert data[36:40] == b"data"
    assert struct.unpack("<I", data[40:44])[0] == 8820
    assert set(data[44:]) == {0}


def test_full_scale_maps_to_peak_word(tmp_path):
    path = tmp_path / "fs.wav"
    clip = write_wav(np.full(100, 10.0), 1, path, 44100)
    assert clip == 0
    with wave.open(str(path)) as w:
        frames = np.frombuffer(w.readframes(100), dtype="<i2")
    assert np.all(frames == 32767)


def test_negative_full_scale(tmp_path):
    path = tmp_path / "nfs.wav"
    write_wav(np.full(10, -10.0), 1, path, 44100)
    frames = np.frombuffer(path.read_bytes()[44:], dtype="<i2")
    assert np.all(frames == -32767)


def test_overrange_clips_and_counts(tmp_path):
    path = tmp_path / "clip.wav"
    n = 50
    clip = write_wav(np.full(n, 15.0), 1, path, 44100)
    assert clip == n
    frames = np.frombuffer(path.read_bytes()[44:], dtype="<i2")
    assert np.all(frames == 32767)


def test_half_scale_word():
    words, clip = encode_pcm16(np.array([5.0, -5.0, 0.0]))
    assert clip == 0
    assert list(words) == [16384, -16384, 0]  # rint(5/10*32767) = 16384


def test_stereo_interleaves(tmp_path):
    path = tmp_path / "st.wav"
    left = np.array([10.0, 0.0])
    right = np.array([0.0, -10.0])
    write_wav((left, right), 2, path, 8000)
    data = path.read_bytes()
    fmt = struct.unpack("<IHHIIHH", data[16:36])
    assert fmt == (16, 1, 2, 8000, 32000, 4, 16)
    frames = np.frombuffer(data[44:], dtype="<i2")
    assert list(frames) == [32767, 0, 0, -32767]


def test_non_finite_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_wav(np.array([0.0, np.inf]), 1, tmp_path / "x.wav", 44100)
    with pytest.raises(ValueError):
        write_wav(np.array([np.nan]), 1, tmp_path / "y.wav", 44100)


def test_unequal_stereo_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_wav((np.zeros(3), np.zeros(4)), 2, tmp_path / "x.wav", 44100)


def test_byte_identical_across_calls(tmp_path):
    rng = np.random.default_rng(1)
    samples = rng.uniform(-12, 12, size=1000)
    a = tmp_path / "a.wav"
    b = tmp_path / "b.wav"
    write_wav(samples, 1, a, 44100)
    write_wav(samples, 1, b, 44100)
    assert a.read_bytes() == b.read_bytes()


def test_csv_rows_and_header(tmp_path):
    path = tmp_path / "t.csv"
    rows = write_trace_csv({"cv": np.array([0.0, 1.25, 2.5])}, path, 1, 44100)
    lines = path.read_text().splitlines()
    assert rows == 3
    assert len(lines) == 4
    assert lines[0] == "time_s,cv"
    assert lines[1] == "0.000000,0"
    assert lines[2] == f"{1 / 44100:.6f},1.25"


def test_csv_decimation(tmp_path):
    path = tmp_path / "d.csv"
    rows = write_trace_csv({"x": np.arange(100.0)}, path, 10, 44100)
    assert rows == 10
    lines = path.read_text().splitlines()
    assert len(lines) == 11
    assert lines[1].endswith(",0")
    assert lines[-1].endswith(",90")


def test_csv_six_significant_digits(tmp_path):
    path = tmp_path / "s.csv"
    write_trace_csv({"v": np.array([1.2345678, -0.000123456789])}, path, 1, 44100)
    lines = path.read_text().splitlines()
    assert lines[1] == "0.000000,1.23457"
    assert lines[2].endswith(",-0.000123457")


def test_csv_multiple_columns_in_order(tmp_path):
    path = tmp_path / "m.csv"
    traces = {"b_trace": np.zeros(2), "a_trace": np.ones(2)}
    write_trace_csv(traces, path, 1, 44100)
    lines = path.read_text().splitlines()
    assert lines[0] == "time_s,b_trace,a_trace"  # insertion order preserved


def test_csv_unequal_lengths_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_trace_csv({"a": np.zeros(3), "b": np.zeros(4)},
                        tmp_path / "x.csv", 1, 44100)
