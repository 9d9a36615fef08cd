"""CLI entry point: `python -m zoomstack_bridge --transport stdio --adapter echo`."""

from __future__ import annotations

import argparse
import sys

from .adapters import AdapterError, make_adapter
from .protocol import WireError
from .server import BackendConfig, serve_stdio, serve_tcp


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(prog="zoomstack-bridge", description=__doc__)
    parser.add_argument("--transport", default="stdio",
                        help="'stdio' or 'tcp:<port>' (0 picks a free port)")
    parser.add_argument("--adapter", default="echo",
                        help="'echo' or 'oracle:<stack.zstk>'")
    parser.add_argument("--device", default="cpu", help="device hint for model adapters")
    parser.add_argument("--cache-size", type=int, default=64,
                        help="prompt-embedding cache entries")
    args = parser.parse_args(argv)
    config = BackendConfig(transport=args.transport, adapter=args.adapter,
                           device=args.device, cache_size=args.cache_size)
    try:
        port = config.tcp_port()
    except ValueError as exc:
        parser.error(str(exc))
        return
    try:
        if port is None:
            serve_stdio(make_adapter(config.adapter))
        else:
            def announce(bound_port: int) -> None:
                print(f"listening on 127.0.0.1:{bound_port}", file=sys.stderr, flush=True)

            serve_tcp(lambda: make_adapter(config.adapter), port, announce)
    except AdapterError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        sys.exit(2)
    except WireError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        sys.exit(3)
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
