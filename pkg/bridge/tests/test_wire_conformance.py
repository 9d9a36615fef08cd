"""Replay the engine repository's recorded protocol fixtures byte-exactly."""

import io
import json

import numpy as np
import pytest

from zoomstack_bridge.protocol import (
    StreamReader,
    WireError,
    error_bytes,
    handshake_bytes,
    read_handshake,
    read_request,
    success_bytes,
)


def reader_of(blob: bytes) -> StreamReader:
    return StreamReader(io.BytesIO(blob).read)


def ramp(shape, offset):
    n = int(np.prod(shape))
    return (np.arange(n, dtype=np.float32) * 0.125 - offset).reshape(shape)


@pytest.fixture
def meta(fixtures_dir):
    return json.loads((fixtures_dir / "session.json").read_text())


class TestHandshake:
    def test_bytes_match(self, fixtures_dir, meta):
        assert handshake_bytes(meta["handshake"]["T"]) == (
            fixtures_dir / "handshake.bin"
        ).read_bytes()

    def test_decodes(self, fixtures_dir, meta):
        version, steps = read_handshake(reader_of((fixtures_dir / "handshake.bin").read_bytes()))
        assert version == meta["version"]
        assert steps == meta["handshake"]["T"]

    def test_wrong_magic_refused(self):
        with pytest.raises(WireError, match="magic"):
            read_handshake(reader_of(b"WHAT" + bytes(8)))


class TestRequestFixtures:
    @pytest.mark.parametrize("name", ["request_cond", "request_uncond"])
    def test_decode_fields(self, fixtures_dir, meta, name):
        req = read_request(reader_of((fixtures_dir / f"{name}.bin").read_bytes()))
        m = meta[name]
        assert req.request_id == m["request_id"]
        assert req.level == m["level"]
        assert req.timestep == m["timestep"]
        assert req.conditional == m["conditional"]
        assert req.prompt == m["prompt"]
        assert np.array_equal(req.z, ramp(m["shape"], 1.5))

    def test_sequential_frames(self, fixtures_dir):
        blob = (fixtures_dir / "request_cond.bin").read_bytes() + (
            fixtures_dir / "request_uncond.bin"
        ).read_bytes()
        r = reader_of(blob)
        assert read_request(r).conditional is True
        assert read_request(r).conditional is False
        assert read_request(r) is None


class TestResponseFixtures:
    def test_success_bytes_match(self, fixtures_dir, meta):
        m = meta["response_ok"]
        assert success_bytes(m["request_id"], ramp(m["shape"], 0.25)) == (
            fixtures_dir / "response_ok.bin"
        ).read_bytes()

    def test_error_bytes_match(self, fixtures_dir, meta):
        m = meta["response_err"]
        assert error_bytes(m["request_id"], m["status"], m["error"]) == (
            fixtures_dir / "response_err.bin"
        ).read_bytes()
