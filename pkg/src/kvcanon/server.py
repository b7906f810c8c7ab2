"""HTTP service over the inventory store: extraction, batch iterations, the
review queue, coverage/sweep metrics, and static assets for the review UI.

Built on the standard library's threading HTTP server; all mutations go
through the store's single writer lock, reads serve immutable snapshots.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .backends import RuleBackend
from .batch import BatchConfig, run_batch_iteration
from .clustering import decision_from_obj, proposal_to_obj
from .corpus import Page, load_corpus, page_from_obj, split_by_report_hash
from .errors import (
    ConfigError,
    ConflictError,
    CorpusFormatError,
    KvcanonError,
    StateError,
    ValidationError,
)
from .extract import ExtractorConfig, extract_page
from .inventory import (
    KeyInventory,
    coverage,
    inventory_to_obj,
    load_inventory,
    register_alias,
    top_fraction_keys,
)
from .store import InventoryStore

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".json": "application/json; charset=utf-8",
}


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8020
    store_dir: str = "store"
    corpus_path: str | None = None
    split_seed: int = 0
    seed_inventory_path: str | None = None
    knowledge_inventory_path: str | None = None
    ui_dir: str | None = None
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)


class ServiceState:
    """Shared state behind the handler: store, corpora, and backend construction."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = InventoryStore(config.store_dir)
        if config.seed_inventory_path and self.store.current_version() == 0:
            seed = load_inventory(config.seed_inventory_path)
            if seed.version == 0:
                seed = KeyInventory(version=1, entries=seed.entries)
            self.store.commit(seed)
        self._corpus: list[Page] | None = None
        self._knowledge: KeyInventory | None = (
            load_inventory(config.knowledge_inventory_path)
            if config.knowledge_inventory_path
            else None
        )
        self._backend_lock = threading.Lock()
        self._backend_cache: tuple[int, RuleBackend] | None = None

    def corpus(self) -> list[Page]:
        if self._corpus is None:
            if not self.config.corpus_path:
                raise ConfigError("no corpus configured for metrics endpoints")
            self._corpus = load_corpus(self.config.corpus_path)
        return self._corpus

    def backend(self) -> RuleBackend:
        """Rule backend over the knowledge inventory (or the current snapshot)."""
        if self._knowledge is not None:
            with self._backend_lock:
                if self._backend_cache is None:
                    self._backend_cache = (-1, RuleBackend(self._knowledge))
                return self._backend_cache[1]
        version = self.store.current_version()
        with self._backend_lock:
            if self._backend_cache is None or self._backend_cache[0] != version:
                self._backend_cache = (version, RuleBackend(self.store.get(version)))
            return self._backend_cache[1]


class ApiHandler(BaseHTTPRequestHandler):
    state: ServiceState  # injected by make_server

    server_version = "kvcanon"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt: str, *args: object) -> None:  # quiet by default
        pass

    # -- plumbing -------------------------------------------------------------

    def _send_json(self, status: int, payload: object) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"malformed JSON body: {exc}") from exc
        if not isinstance(obj, dict):
            raise ValidationError("JSON body must be an object")
        return obj

    def _dispatch(self, method: str) -> None:
        parsed = urlparse(self.path)
        query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
        try:
            handler = self._route(method, parsed.path)
            if handler is None:
                self._send_json(404, {"error": f"no route for {method} {parsed.path}"})
                return
            handler(query)
        except (ConflictError, StateError) as exc:
            self._send_json(409, {"error": str(exc)})
        except (ValidationError, ConfigError, CorpusFormatError) as exc:
            self._send_json(400, {"error": str(exc)})
        except KvcanonError as exc:
            self._send_json(500, {"error": str(exc)})
        except BrokenPipeError:
            pass

    def _route(self, method: str, path: str):
        state = self.state
        if method == "GET":
            if path == "/health":
                return lambda q: self._send_json(
                    200, {"status": "ok", "inventory_version": state.store.current_version()}
                )
            if path == "/v1/inventory":
                return self._get_inventory
            if path == "/v1/review/queue":
                return lambda q: self._send_json(
                    200, [proposal_to_obj(p) for p in state.store.queue(q.get("status"))]
                )
            if path == "/v1/metrics/coverage":
                return self._get_coverage
            if path == "/v1/metrics/sweep":
                return self._get_sweep
            if path == "/v1/batches":
                return lambda q: self._send_json(200, state.store.batches())
            if path == "/" or path.startswith("/ui"):
                return lambda q: self._serve_static(path)
        if method == "POST":
            if path == "/v1/extract":
                return self._post_extract
            if path == "/v1/batches":
                return self._post_batch
            if path == "/v1/review/decisions":
                return self._post_decision
            if path == "/v1/inventory/aliases":
                return self._post_alias
        return None

    def do_GET(self) -> None:  # noqa: N802 (http.server naming)
        self._dispatch("GET")

    def do_POST(self) -> None:  # noqa: N802
        self._dispatch("POST")

    # -- endpoints --------------------------------------------------------------

    def _get_inventory(self, query: dict) -> None:
        store = self.state.store
        if "version" in query:
            inv = store.get(int(query["version"]))
        else:
            inv = store.current()
        self._send_json(200, inventory_to_obj(inv))

    def _get_sweep(self, query: dict) -> None:
        payload = self.state.store.load_sweep()
        if payload is None:
            self._send_json(404, {"error": "no sweep recorded yet"})
        else:
            self._send_json(200, payload)

    def _get_coverage(self, query: dict) -> None:
        state = self.state
        pages = state.corpus()
        split_name = query.get("split", "test")
        if split_name not in ("train", "validation", "test", "all"):
            raise ValidationError(f"unknown split {split_name!r}")
        if split_name != "all":
            split = split_by_report_hash(pages, seed=state.config.split_seed)
            pages = split.pages_for(split_name, pages)
        inv = state.store.current()
        if "fraction" in query:
            inv = top_fraction_keys(inv, float(query["fraction"]))
        mode = query.get("mode", "occurrence")
        value = coverage(inv, pages, mode)
        self._send_json(
            200,
            {
                "coverage": value,
                "mode": mode,
                "split": split_name,
                **({"fraction": float(query["fraction"])} if "fraction" in query else {}),
                "inventory_version": inv.version,
            },
        )

    def _post_extract(self, query: dict) -> None:
        state = self.state
        body = self._read_body()
        if "text" not in body or not isinstance(body["text"], str):
            raise ValidationError("extract request requires a 'text' string")
        inv = state.store.current()
        view = inv
        if body.get("fraction") is not None:
            view = top_fraction_keys(inv, float(body["fraction"]))
        elif body.get("keys"):
            wanted = set(body["keys"])
            unknown = wanted - inv.canonicals()
            if unknown:
                raise ValidationError(f"unknown canonical keys: {sorted(unknown)}")
            view = KeyInventory(
                version=inv.version,
                entries=tuple(e for e in inv.entries if e.canonical in wanted),
                restriction={"keys": sorted(wanted)},
            )
        config = state.config.extractor
        if body.get("include_aliases") is False:
            config = ExtractorConfig(
                **{**config.__dict__, "max_aliases": 0}
            )
        pairs = extract_page(body["text"], view, state.backend(), config)
        self._send_json(
            200,
            {
                "pairs": [
                    {
                        "canonical_key": p.canonical_key,
                        "surface_key": p.surface_key,
                        "key_span": list(p.key_span),
                        "value_span": list(p.value_span) if p.value_span else None,
                        "value": p.value,
                        "score": p.score,
                    }
                    for p in pairs
                ],
                "inventory_version": view.version,
            },
        )

    def _post_batch(self, query: dict) -> None:
        state = self.state
        body = self._read_body()
        if "pages" not in body or not isinstance(body["pages"], list):
            raise ValidationError("batch request requires a 'pages' array")
        pages = [page_from_obj(obj) for obj in body["pages"]]
        mode = body.get("mode", "interactive")
        base = state.config.batch
        config = BatchConfig(
            mode=mode,
            tau=base.tau,
            extractor=base.extractor,
            refresh_command=base.refresh_command,
        )
        record, _predictions = run_batch_iteration(pages, state.store, state.backend(), config)
        self._send_json(200, record.to_obj())

    def _post_decision(self, query: dict) -> None:
        decision = decision_from_obj(self._read_body())
        inv = self.state.store.apply_decision(decision)
        self._send_json(200, {"inventory_version": inv.version, "proposal_id": decision.proposal_id})

    def _post_alias(self, query: dict) -> None:
        body = self._read_body()
        canonical = body.get("canonical")
        alias = body.get("alias")
        if not isinstance(canonical, str) or not isinstance(alias, str):
            raise ValidationError("alias registration requires 'canonical' and 'alias' strings")
        inv = self.state.store.mutate(lambda cur: register_alias(cur, canonical, alias))
        self._send_json(200, {"inventory_version": inv.version})

    # -- static UI ---------------------------------------------------------------

    def _serve_static(self, path: str) -> None:
        ui_dir = self.state.config.ui_dir
        if not ui_dir:
            self._send_json(200, {"service": "kvcanon", "ui": "not configured"})
            return
        rel = path[3:] if path.startswith("/ui") else path
        rel = rel.lstrip("/") or "index.html"
        root = Path(ui_dir).resolve()
        target = (root / rel).resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            self._send_json(404, {"error": f"no asset {rel!r}"})
            return
        body = target.read_bytes()
        self.send_response(200)
        self.send_header(
            "Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        )
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(config: ServiceConfig) -> ThreadingHTTPServer:
    """Bind the service; raises OSError when the port is busy."""
    state = ServiceState(config)
    handler = type("BoundApiHandler", (ApiHandler,), {"state": state})
    server = ThreadingHTTPServer((config.host, config.port), handler)
    server.daemon_threads = True
    return server


def serve_api(config: ServiceConfig) -> None:
    server = make_server(config)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (store: {config.store_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
