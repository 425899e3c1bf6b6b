"""Threaded HTTP/1.1 front-end over the dispatcher.

Binds to loopback by default; there is no authentication in this version,
so only widen the bind address on a trusted network.
"""

from __future__ import annotations

import argparse
import logging
import os
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit

from .api import dispatch
from .gateway import Gateway

logger = logging.getLogger(__name__)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "bomtrace"

    def _handle(self, method: str) -> None:
        parts = urlsplit(self.path)
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else None
        status, content_type, payload = dispatch(
            self.server.gateway,
            method,
            parts.path,
            parts.query,
            body,
            base_path=self.server.base_path,
        )
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self) -> None:
        self._handle("GET")

    def do_POST(self) -> None:
        self._handle("POST")

    def do_PUT(self) -> None:
        self._handle("PUT")

    # unsupported verbs still get a JSON 404 from the dispatcher
    def do_DELETE(self) -> None:
        self._handle("DELETE")

    def do_PATCH(self) -> None:
        self._handle("PATCH")

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s %s", self.address_string(), fmt % args)


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, gateway: Gateway, host: str = "127.0.0.1", port: int = 8080,
                 base_path: str = ""):
        self.gateway = gateway
        self.base_path = base_path.rstrip("/")
        super().__init__((host, port), _Handler)


def build_parser() -> argparse.ArgumentParser:
    """Flags first, BOMTRACE_* environment variables as fallbacks."""
    env = os.environ
    parser = argparse.ArgumentParser(
        prog="bomtrace-server",
        description="Serve the traceability API over HTTP",
    )
    parser.add_argument(
        "--host", default=env.get("BOMTRACE_HOST", "127.0.0.1"),
        help="bind address (default 127.0.0.1)",
    )
    parser.add_argument(
        "--port", type=int, default=int(env.get("BOMTRACE_PORT", "8080")),
        help="bind port (default 8080)",
    )
    parser.add_argument(
        "--data-dir", default=env.get("BOMTRACE_DATA_DIR"),
        required="BOMTRACE_DATA_DIR" not in env, help="store directory",
    )
    parser.add_argument(
        "--base-path", default=env.get("BOMTRACE_BASE_PATH", ""),
        help="path prefix for all routes",
    )
    parser.add_argument(
        "--deterministic-ids", action="store_true",
        default=env.get("BOMTRACE_DETERMINISTIC_IDS", "") == "1",
        help="counter-based ids instead of random (test mode)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    gateway = Gateway(args.data_dir, deterministic_ids=args.deterministic_ids)
    server = ApiServer(gateway, args.host, args.port, args.base_path)
    logger.info("listening on http://%s:%d%s", args.host, args.port, server.base_path)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        gateway.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
