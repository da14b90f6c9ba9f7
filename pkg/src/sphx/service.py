"""Read-only HTTP search service over a loaded index.

Endpoints (JSON in, JSON out):

    GET  /healthz            liveness and index shape
    GET  /doc/{id}           stored record: support size, vector if kept
    POST /search             {vector|doc_id, mode, lambda, k, q, eta}

The index (and the transform rebuilt from its config) is loaded once at
startup and never mutated; requests are served concurrently. When the
service is given the corpus vector store it annotates results with true
inner products against the query.
"""

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import analysis
from .corpus import load_vectors
from .embedding import UnitVector, make_transform, map_vector
from .errors import SphxError
from .index import (
    NearestNeighbor,
    ThresholdLambda,
    TopK,
    load_index,
    search,
)

_NORM_SLACK = 0.01  # accept client vectors within 1% of unit norm


@dataclass
class ServiceConfig:
    index_path: str
    host: str = "127.0.0.1"
    port: int = 8080
    max_results: int = 100
    cors_origins: tuple = ()
    vectors_path: str | None = None
    vectors_format: str = "csv"


class _HttpError(Exception):
    def __init__(self, status, message):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class SearchService:
    """Request-independent state shared by all handler threads."""

    config: ServiceConfig
    index: object = field(init=False)
    transform: object = field(init=False)
    vectors: dict = field(init=False)

    def __post_init__(self):
        self.index = load_index(self.config.index_path)
        cfg = self.index.config
        self.transform = make_transform(cfg.kind, cfg.d, cfg.m, cfg.seed)
        self.vectors = {}
        if self.config.vectors_path:
            corpus = load_vectors(
                self.config.vectors_path, format=self.config.vectors_format
            )
            self.vectors = dict(zip(corpus.ids, corpus.vectors))

    # -- request logic, exercised directly by tests ---------------------

    def health(self) -> dict:
        cfg = self.index.config
        return {
            "status": "ok",
            "doc_count": self.index.doc_count,
            "m": cfg.m,
            "d": cfg.d,
            "kind": cfg.kind.value,
            "has_vectors": bool(self.vectors),
        }

    def doc_record(self, doc_id: str) -> dict:
        try:
            internal = self.index.doc_ids.index(doc_id)
        except ValueError:
            raise _HttpError(404, f"unknown doc id {doc_id!r}")
        record = {
            "doc_id": doc_id,
            "support_size": int(self.index.doc_k[internal]),
        }
        if doc_id in self.vectors:
            record["vector"] = [float(v) for v in self.vectors[doc_id]]
        return record

    def _query_vector(self, body) -> UnitVector:
        if "vector" in body:
            try:
                raw = np.asarray([float(v) for v in body["vector"]], dtype=np.float64)
            except (TypeError, ValueError):
                raise _HttpError(400, "vector must be a list of numbers")
            if raw.size != self.index.config.d:
                raise _HttpError(
                    400,
                    f"vector has d={raw.size}, index expects {self.index.config.d}",
                )
            norm = float(np.linalg.norm(raw))
            if norm == 0.0 or abs(norm - 1.0) > _NORM_SLACK:
                raise _HttpError(
                    400, f"vector norm {norm:.6f} not within 1% of unit"
                )
            return UnitVector(raw / norm)
        if "doc_id" in body:
            doc_id = str(body["doc_id"])
            if doc_id not in self.vectors:
                raise _HttpError(404, f"no stored vector for doc id {doc_id!r}")
            return UnitVector(self.vectors[doc_id])
        raise _HttpError(400, "request needs either 'vector' or 'doc_id'")

    def run_search(self, body: dict) -> dict:
        cfg = self.index.config
        query = self._query_vector(body)
        mode = body.get("mode", "top_k")
        try:
            if mode == "top_k":
                k = int(body.get("k", 10))
                if k < 1:
                    raise _HttpError(400, "k must be >= 1")
                cutoff = TopK(min(k, self.config.max_results))
            elif mode in ("threshold", "nearest_neighbor"):
                lam = float(body["lambda"])
                if not -1.0 <= lam <= 1.0:
                    raise _HttpError(400, f"lambda {lam} outside [-1, 1]")
                if mode == "threshold":
                    cutoff = ThresholdLambda(lam)
                else:
                    cutoff = NearestNeighbor(lam, float(body.get("eta", 1.645)))
            else:
                raise _HttpError(400, f"unknown mode {mode!r}")
        except KeyError as exc:
            raise _HttpError(400, f"mode {mode!r} needs parameter {exc}")
        except (TypeError, ValueError):
            raise _HttpError(400, "lambda/k/eta must be numeric")

        h_query = cfg.h_query
        if "q" in body:
            try:
                q_mult = float(body["q"])
            except (TypeError, ValueError):
                raise _HttpError(400, "q must be numeric")
            if q_mult < 1.0:
                raise _HttpError(400, "query threshold multiplier q must be >= 1")
            h_query = analysis.threshold_h(cfg.m, q_mult * cfg.r)

        code = map_vector(self.transform, query, h_query)
        try:
            results = search(self.index, code, cutoff)
        except SphxError as exc:
            # lambda outside the valid phase region for eps-based modes
            raise _HttpError(422, str(exc))
        results = results[: self.config.max_results]

        count_threshold = None
        if isinstance(cutoff, ThresholdLambda):
            count_threshold = cfg.m * analysis.mu(cutoff.lam, cfg.h_index)
        elif isinstance(cutoff, NearestNeighbor):
            eps_minus = analysis.solve_epsilon_side(
                cutoff.lam0, cfg.m, cfg.r, cutoff.eta, "minus"
            )
            count_threshold = cfg.m * analysis.mu(
                cutoff.lam0 - eps_minus, cfg.h_index
            )

        payload = []
        for res in results:
            entry = {
                "doc_id": res.doc_id,
                "score": res.score,
                "raw_count": res.raw_count,
            }
            if res.doc_id in self.vectors:
                entry["true_inner"] = float(
                    self.vectors[res.doc_id] @ query.coords
                )
            payload.append(entry)
        return {
            "results": payload,
            "mode": mode,
            "cutoff": {
                "rule": results[0].retrieved_by if results else mode,
                "count_threshold": count_threshold,
            },
            "query_support_size": code.k,
            "h_query": h_query,
        }


def _make_handler(service: SearchService):
    cors = service.config.cors_origins

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # tests stay quiet
            pass

        def _cors_headers(self):
            origin = self.headers.get("Origin")
            if origin and ("*" in cors or origin in cors):
                self.send_header("Access-Control-Allow-Origin", origin)
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def _reply(self, status, obj):
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self._cors_headers()
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors_headers()
            self.end_headers()

        def do_GET(self):
            try:
                if self.path == "/healthz":
                    self._reply(200, service.health())
                elif self.path.startswith("/doc/"):
                    self._reply(200, service.doc_record(self.path[len("/doc/"):]))
                else:
                    self._reply(404, {"error": f"no route {self.path}"})
            except _HttpError as exc:
                self._reply(exc.status, {"error": exc.message})

        def do_POST(self):
            try:
                if self.path != "/search":
                    self._reply(404, {"error": f"no route {self.path}"})
                    return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    raise _HttpError(400, "request body is not valid JSON")
                if not isinstance(body, dict):
                    raise _HttpError(400, "request body must be a JSON object")
                self._reply(200, service.run_search(body))
            except _HttpError as exc:
                self._reply(exc.status, {"error": exc.message})

    return Handler


def make_server(config: ServiceConfig) -> ThreadingHTTPServer:
    service = SearchService(config)
    server = ThreadingHTTPServer(
        (config.host, config.port), _make_handler(service)
    )
    server.service = service
    return server


def serve(config: ServiceConfig) -> None:
    """Run until interrupted; the CLI's `serve` subcommand lands here."""
    server = make_server(config)
    host, port = server.server_address[:2]
    print(f"serving index {config.index_path!r} on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def serve_background(config: ServiceConfig):
    """Start in a daemon thread; returns (server, thread) for tests."""
    server = make_server(config)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
