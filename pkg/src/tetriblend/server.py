"""Local HTTP service exposing one immutable blend model.

JSON endpoints:

* ``GET /healthz`` — liveness probe.
* ``GET /api/session`` — model metadata.
* ``GET /api/mesh/{j}`` — vertices (flat ``[x0,y0,z0,...]``) and faces
  (flat index triples) of shape j; 0 is the rest shape, 1..m the targets.
* ``POST /api/blend`` — ``{"weights": [...], "energy": "ET"|"ES",
  "blendFn": "C"|"P"}`` returns blended vertices plus a solve report.

Optionally serves static UI assets at the root path. Concurrency: requests
run on a thread per connection; blend solves are throttled by a semaphore
sized from TETRIBLEND_THREADS (default: CPU count).
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .errors import TetriblendError
from .mesh import TriangleMesh
from .pipeline import BlendModel, BlendRequest, blend

__all__ = ["SessionState", "create_server", "serve", "worker_limit"]

_MAX_BODY = 16 * 1024 * 1024

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".png": "image/png",
}


def worker_limit() -> int:
    """Parallel solve cap: TETRIBLEND_THREADS if set, else the CPU count."""
    raw = os.environ.get("TETRIBLEND_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class SessionState:
    """Immutable service state: the model plus every shape's mesh."""

    model: BlendModel
    meshes: tuple  # index 0 = rest, 1..m = targets
    shape_names: tuple

    @classmethod
    def build(cls, model: BlendModel, target_meshes=None, shape_names=None) -> "SessionState":
        m = model.shape_count
        if target_meshes is None:
            # a cache-loaded model has no target geometry on hand; unit
            # weight vectors reproduce it through the pipeline itself
            target_meshes = []
            for k in range(m):
                w = np.zeros(m)
                w[k] = 1.0
                mesh, _ = blend(model, BlendRequest(weights=w))
                target_meshes.append(mesh)
        target_meshes = list(target_meshes)
        if len(target_meshes) != m:
            raise ValueError(f"{len(target_meshes)} target meshes for {m} shapes")
        if shape_names is None:
            shape_names = ["rest"] + [f"target_{j}" for j in range(1, m + 1)]
        shape_names = [str(s) for s in shape_names]
        if len(shape_names) != m + 1:
            raise ValueError(f"{len(shape_names)} names for {m + 1} shapes")
        return cls(
            model=model,
            meshes=tuple([model.rest] + target_meshes),
            shape_names=tuple(shape_names),
        )

    def session_payload(self) -> dict:
        return {
            "m": self.model.shape_count,
            "vertexCount": self.model.rest.vertex_count,
            "faceCount": self.model.rest.face_count,
            "tetCount": self.model.structure.tet_count,
            "method": self.model.method.value,
            "shapeNames": list(self.shape_names),
        }

    def mesh_payload(self, j: int) -> dict:
        mesh: TriangleMesh = self.meshes[j]
        return {
            "vertices": mesh.vertices.ravel().tolist(),
            "faces": mesh.faces.ravel().tolist(),
        }


class _BadRequest(Exception):
    pass


class _WeightCountMismatch(Exception):
    pass


def _parse_blend_body(raw: bytes, m: int) -> BlendRequest:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise _BadRequest(f"body is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise _BadRequest("body must be a JSON object")
    weights = doc.get("weights")
    if not isinstance(weights, list) or not all(
        isinstance(w, (int, float)) and not isinstance(w, bool) for w in weights
    ):
        raise _BadRequest("'weights' must be a list of numbers")
    if len(weights) != m:
        raise _WeightCountMismatch(f"expected {m} weights, got {len(weights)}")
    energy = doc.get("energy", "ET")
    blend_fn = doc.get("blendFn", "C")
    max_iterations = doc.get("maxIterations", 100)
    tol = doc.get("tol", 1e-6)
    if energy not in ("ET", "ES") or blend_fn not in ("C", "P"):
        raise _BadRequest("'energy' must be ET or ES; 'blendFn' must be C or P")
    if not isinstance(max_iterations, int) or isinstance(max_iterations, bool) or max_iterations < 1:
        raise _BadRequest("'maxIterations' must be a positive integer")
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or tol <= 0:
        raise _BadRequest("'tol' must be a positive number")
    return BlendRequest(
        weights=np.asarray(weights, dtype=np.float64),
        energy=energy,
        blend_fn=blend_fn,
        max_iterations=max_iterations,
        tol=float(tol),
    )


def create_server(state: SessionState, port: int, static_dir=None, verbose=False):
    """Build (but do not start) the HTTP server bound to localhost."""
    static_root = Path(static_dir).resolve() if static_dir else None
    gate = threading.BoundedSemaphore(worker_limit())

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            if verbose:
                BaseHTTPRequestHandler.log_message(self, fmt, *args)

        def _send(self, code: int, body: bytes, content_type: str):
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, code: int, payload):
            self._send(code, json.dumps(payload).encode("utf-8"), "application/json")

        def _send_error_json(self, code: int, message: str):
            self._send_json(code, {"error": message})

        def do_GET(self):
            path = self.path.split("?", 1)[0]
            if path == "/healthz":
                self._send(200, b"ok", "text/plain; charset=utf-8")
            elif path == "/api/session":
                self._send_json(200, state.session_payload())
            elif path.startswith("/api/mesh/"):
                tail = path[len("/api/mesh/") :]
                if not tail.isdigit():
                    self._send_error_json(400, f"bad mesh index {tail!r}")
                    return
                j = int(tail)
                if j >= len(state.meshes):
                    self._send_error_json(404, f"no shape {j}; have 0..{len(state.meshes) - 1}")
                    return
                self._send_json(200, state.mesh_payload(j))
            else:
                self._serve_static(path)

        def do_POST(self):
            path = self.path.split("?", 1)[0]
            if path != "/api/blend":
                self._send_error_json(404, f"unknown endpoint {path}")
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
            except ValueError:
                self._send_error_json(400, "bad Content-Length")
                return
            if length <= 0 or length > _MAX_BODY:
                self._send_error_json(400, "missing or oversized request body")
                return
            raw = self.rfile.read(length)
            try:
                request = _parse_blend_body(raw, state.model.shape_count)
            except _BadRequest as exc:
                self._send_error_json(400, str(exc))
                return
            except _WeightCountMismatch as exc:
                self._send_error_json(422, str(exc))
                return
            try:
                with gate:
                    t0 = time.perf_counter()
                    mesh, report = blend(state.model, request)
                    millis = (time.perf_counter() - t0) * 1000.0
            except (TetriblendError, ValueError) as exc:
                self._send_error_json(500, f"solver error: {exc}")
                return
            self._send_json(
                200,
                {
                    "vertices": mesh.vertices.ravel().tolist(),
                    "report": {
                        "energy": report.final_energy,
                        "iterations": report.iterations,
                        "converged": report.converged,
                        "millis": millis,
                    },
                },
            )

        def _serve_static(self, path: str):
            if static_root is None:
                if path == "/":
                    body = (
                        b"tetriblend service: GET /api/session, GET /api/mesh/{j}, "
                        b"POST /api/blend, GET /healthz\n"
                    )
                    self._send(200, body, "text/plain; charset=utf-8")
                else:
                    self._send_error_json(404, f"no static assets; unknown path {path}")
                return
            rel = path.lstrip("/") or "index.html"
            target = (static_root / rel).resolve()
            if static_root not in target.parents and target != static_root:
                self._send_error_json(404, "path escapes the static root")
                return
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                self._send_error_json(404, f"not found: {path}")
                return
            ctype = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
            self._send(200, target.read_bytes(), ctype)

    server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
    server.daemon_threads = True
    return server


def serve(state: SessionState, port: int, static_dir=None, verbose=True) -> None:
    """Run the service until interrupted."""
    server = create_server(state, port, static_dir=static_dir, verbose=verbose)
    host, bound_port = server.server_address[:2]
    print(f"serving on http://{host}:{bound_port} ({state.model.shape_count} targets)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
