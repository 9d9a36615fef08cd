"""Regenerate the frozen wire-protocol fixture files.

The binaries under fixtures/protocol/ are the normative byte-level encoding
shared with external backend implementations; regenerate only when the
protocol version changes, and commit the results.

Usage: python3 tests/make_protocol_fixtures.py
"""

import json
from pathlib import Path

import numpy as np

from zoomstack.protocol import (
    DenoiseRequest,
    DenoiseResponse,
    encode_handshake,
    encode_request,
    encode_response,
)

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "protocol"

HANDSHAKE_T = 64
REQ_SHAPE = (4, 3, 2)


def payload(offset: float) -> np.ndarray:
    n = int(np.prod(REQ_SHAPE))
    return (np.arange(n, dtype=np.float32) * 0.125 - offset).reshape(REQ_SHAPE)


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    (FIXTURE_DIR / "handshake.bin").write_bytes(encode_handshake(HANDSHAKE_T))

    req_cond = DenoiseRequest(
        request_id=7,
        level=2,
        timestep=63,
        conditional=True,
        prompt="a close-up of tree bark",
        z=payload(1.5),
    )
    (FIXTURE_DIR / "request_cond.bin").write_bytes(encode_request(req_cond))

    req_uncond = DenoiseRequest(
        request_id=8,
        level=2,
        timestep=63,
        conditional=False,
        prompt="",
        z=payload(1.5),
    )
    (FIXTURE_DIR / "request_uncond.bin").write_bytes(encode_request(req_uncond))

    resp_ok = DenoiseResponse(request_id=7, status=0, eps=payload(0.25))
    (FIXTURE_DIR / "response_ok.bin").write_bytes(encode_response(resp_ok))

    resp_err = DenoiseResponse(request_id=8, status=3, error="no such adapter")
    (FIXTURE_DIR / "response_err.bin").write_bytes(encode_response(resp_err))

    meta = {
        "version": 1,
        "handshake": {"T": HANDSHAKE_T},
        "request_cond": {
            "request_id": 7,
            "level": 2,
            "timestep": 63,
            "conditional": True,
            "prompt": "a close-up of tree bark",
            "shape": list(REQ_SHAPE),
            "z": "arange(n, float32) * 0.125 - 1.5",
        },
        "request_uncond": {
            "request_id": 8,
            "level": 2,
            "timestep": 63,
            "conditional": False,
            "prompt": "",
            "shape": list(REQ_SHAPE),
            "z": "arange(n, float32) * 0.125 - 1.5",
        },
        "response_ok": {
            "request_id": 7,
            "status": 0,
            "shape": list(REQ_SHAPE),
            "eps": "arange(n, float32) * 0.125 - 0.25",
        },
        "response_err": {"request_id": 8, "status": 3, "error": "no such adapter"},
    }
    (FIXTURE_DIR / "session.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"wrote fixtures to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
