"""REST surface over a session.

    GET  /schema         -> schema document
    GET  /healthz        -> {"ok": true}
    GET  /catalog/stats  -> {"k", "pattern_count", "sample"}
    POST /query          -> QueryRequest body; 422 carries diagnostics
    POST /update         -> {"ops": [...]} -> {"version": v}; 409 read-only

Status mapping: 400 malformed JSON/body, 422 diagnostics and query/data
errors, 409 updates against a read-only store, 404 unknown path.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Tuple

from ..errors import ConfigError, Diagnostic, FlexgraphError
from .session import GraphSession


def make_handler(session: GraphSession):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # tests stay quiet
            pass

        def _send(self, code: int, doc: dict) -> None:
            body = json.dumps(doc).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods",
                             "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(body)

        def _body(self) -> Optional[dict]:
            try:
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length)
                doc = json.loads(raw.decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                return None
            return doc if isinstance(doc, dict) else None

        def do_OPTIONS(self):  # CORS preflight for the console
            self._send(204, {})

        def do_GET(self):
            if self.path == "/healthz":
                self._send(200, {"ok": True})
            elif self.path == "/schema":
                self._send(200, session.schema_json())
            elif self.path == "/catalog/stats":
                self._send(200, session.catalog_stats())
            else:
                self._send(404, {"error": "not found"})

        def do_POST(self):
            if self.path == "/query":
                doc = self._body()
                if doc is None:
                    self._send(400, {"error": "malformed JSON body"})
                    return
                try:
                    self._send(200, session.query(doc))
                except Diagnostic as d:
                    self._send(422, {"error": str(d), "diagnostic": d.to_json()})
                except FlexgraphError as e:
                    self._send(422, {"error": str(e)})
            elif self.path == "/update":
                doc = self._body()
                if doc is None or not isinstance(doc.get("ops"), list):
                    self._send(400, {"error": "body must be {\"ops\": [...]}"})
                    return
                try:
                    version = session.update(doc["ops"])
                    self._send(200, {"version": version})
                except ConfigError as e:
                    self._send(409, {"error": str(e)})
                except FlexgraphError as e:
                    self._send(422, {"error": str(e)})
            else:
                self._send(404, {"error": "not found"})

    return Handler


class GraphServer:
    """ThreadingHTTPServer wrapper; concurrent handlers, one session."""

    def __init__(self, session: GraphSession, host: str = "127.0.0.1",
                 port: int = 0):
        self.httpd = ThreadingHTTPServer((host, port), make_handler(session))
        self.session = session
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> Tuple[str, int]:
        return self.httpd.server_address[:2]

    def start_background(self) -> "GraphServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "GraphServer":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
