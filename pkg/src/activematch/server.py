"""HTTP label service consumed by the browser labeling UI.

API (versioned under /api/v1):
  GET  /api/v1/queries/next   -> 200 LabelQuery JSON | 204 when idle
  GET  /api/v1/images/{id}    -> PNG of the queried image
  POST /api/v1/labels         -> {query_id, label}; 200 | 404 | 409 | 422
  GET  /api/v1/status         -> run metrics JSON
Static UI files (if built) are served from the web root.
"""

from __future__ import annotations

import os
import threading

import uvicorn
from fastapi import FastAPI, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .oracle import OracleError, QueryQueue, encode_png


class RunStatus:
    """Thread-safe snapshot of run progress shown in the UI."""

    def __init__(self):
        self._lock = threading.Lock()
        self._data = {
            "training_step": 0,
            "labels_collected": 0,
            "label_budget": 0,
            "test_accuracy": None,
        }

    def update(self, **kwargs) -> None:
        with self._lock:
            for key, value in kwargs.items():
                if value is not None or key not in self._data:
                    self._data[key] = value

    def snapshot(self) -> dict:
        with self._lock:
            return dict(self._data)


class LabelSubmission(BaseModel):
    query_id: int
    label: int


def create_app(queue: QueryQueue, status: RunStatus, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="activematch label service")

    @app.get("/api/v1/queries/next")
    def next_query():
        query = queue.next_unanswered()
        if query is None:
            return Response(status_code=204)
        return {
            "query_id": query.query_id,
            "dataset_index": query.dataset_index,
            "image_url": f"/api/v1/images/{query.query_id}",
            "class_names": query.class_names,
            "issued_at": query.issued_at,
            "queue_depth": queue.depth(),
        }

    @app.get("/api/v1/images/{query_id}")
    def query_image(query_id: int):
        query = queue.get(query_id)
        if query is None:
            return Response(status_code=404)
        return Response(content=encode_png(query.image), media_type="image/png")

    @app.post("/api/v1/labels")
    def submit_label(body: LabelSubmission):
        try:
            answer = queue.answer(body.query_id, body.label, source="human")
        except KeyError:
            if queue.is_answered(body.query_id):
                return Response(status_code=409)
            return Response(status_code=404)
        except OracleError:
            return Response(status_code=409)
        except ValueError as e:
            return Response(status_code=422, content=str(e))
        return {"query_id": answer.query_id, "label": answer.label}

    @app.get("/api/v1/status")
    def run_status():
        snap = status.snapshot()
        snap["queue_depth"] = queue.depth()
        return snap

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app


class LabelServer:
    """Runs the FastAPI app in a background thread next to the trainer."""

    def __init__(self, queue: QueryQueue, status: RunStatus,
                 host: str = "127.0.0.1", port: int = 8765,
                 static_dir: str | None = None):
        self.app = create_app(queue, status, static_dir)
        config = uvicorn.Config(self.app, host=host, port=port, log_level="warning")
        self._server = uvicorn.Server(config)
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        import time

        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("label server failed to start (bind failure?)")
            time.sleep(0.05)

    def stop(self) -> None:
        self._server.should_exit = True
        if self._thread:
            self._thread.join(timeout=10)


def default_static_dir() -> str | None:
    """Location of the built labeling UI, when present."""
    here = os.path.dirname(os.path.abspath(__file__))
    for candidate in (
        os.path.join(here, "ui"),
        os.path.join(os.getcwd(), "frontend", "dist"),
    ):
        if os.path.isdir(candidate):
            return candidate
    return None
