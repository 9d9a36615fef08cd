"""Minimal stdio wire-protocol server used by the remote-client tests.

Echoes z back as the noise prediction.  Flags (for exercising client error
paths): --delay-first SECS stalls the first response; --error-on-level N
answers that level with a nonzero status; --quit-after N closes the stream
after N responses.
"""

import argparse
import sys

from zoomstack.protocol import (
    DenoiseResponse,
    FrameReader,
    decode_handshake,
    encode_handshake,
    encode_response,
    read_request,
)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--delay-first", type=float, default=0.0)
    parser.add_argument("--error-on-level", type=int, default=None)
    parser.add_argument("--quit-after", type=int, default=None)
    args = parser.parse_args()

    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    reader = FrameReader(stdin.read)
    _, total_steps = decode_handshake(reader)
    stdout.write(encode_handshake(total_steps))
    stdout.flush()

    answered = 0
    first = True
    while True:
        req = read_request(reader)
        if req is None:
            return
        if first and args.delay_first:
            import time

            time.sleep(args.delay_first)
        first = False
        if args.error_on_level is not None and req.level == args.error_on_level:
            resp = DenoiseResponse(request_id=req.request_id, status=9,
                                   error=f"refusing level {req.level}")
        else:
            resp = DenoiseResponse(request_id=req.request_id, status=0, eps=req.z)
        stdout.write(encode_response(resp))
        stdout.flush()
        answered += 1
        if args.quit_after is not None and answered >= args.quit_after:
            return


if __name__ == "__main__":
    main()
