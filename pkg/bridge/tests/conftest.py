import struct
import sys
from pathlib import Path

import numpy as np
import pytest

BRIDGE_SRC = Path(__file__).parent.parent / "src"
if str(BRIDGE_SRC) not in sys.path:
    sys.path.insert(0, str(BRIDGE_SRC))

# byte-level fixtures shared with the engine repository
ENGINE_FIXTURES = Path(__file__).parent.parent.parent / "tests" / "fixtures" / "protocol"


@pytest.fixture
def fixtures_dir():
    if not ENGINE_FIXTURES.exists():
        pytest.skip("engine protocol fixtures not present")
    return ENGINE_FIXTURES


def encode_client_request(
    request_id: int,
    level: int,
    timestep: int,
    conditional: bool,
    prompt: str,
    z: np.ndarray,
    version: int = 1,
) -> bytes:
    """Client-side request encoding, written from the protocol document."""
    z = np.ascontiguousarray(z, dtype="<f4")
    prompt_raw = prompt.encode("utf-8")
    h, w, c = z.shape
    return b"".join(
        [
            struct.pack("<I", version),
            struct.pack("<Q", request_id),
            struct.pack("<I", level),
            struct.pack("<I", timestep),
            struct.pack("<B", 1 if conditional else 0),
            struct.pack("<I", len(prompt_raw)),
            prompt_raw,
            struct.pack("<I", h),
            struct.pack("<I", w),
            struct.pack("<I", c),
            z.tobytes(),
        ]
    )


def write_zstk(path: Path, layers: np.ndarray, p: int) -> None:
    """Hand-rolled ZSTK writer for oracle-adapter tests."""
    n, h, w, c = layers.shape
    header = b"ZSTK" + struct.pack("<IIIIII", 1, n, h, w, c, p)
    path.write_bytes(header + np.ascontiguousarray(layers, dtype="<f4").tobytes())
