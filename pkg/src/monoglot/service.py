"""HTTP inference service over a loaded model bundle.

Endpoints: POST /translate, GET /languages, GET /health. The bundle is
immutable after startup; requests only bump a counter.
"""

from __future__ import annotations

import json
import threading

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import textpipe
from .decoder import ModelBundle, RewriteRequest, rewrite

MAX_TEXT_CHARS = 2000


class ServiceState:
    def __init__(self):
        self.bundle = None
        self.request_count = 0
        self._lock = threading.Lock()

    def bump(self):
        with self._lock:
            self.request_count += 1


def create_app(bundle_dir=None, bundle=None, defer_load=False):
    """Build the app. The bundle loads at startup unless given directly."""
    app = FastAPI(title="monoglot")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    state = ServiceState()
    state.bundle = bundle
    app.state.service = state

    if bundle is None and bundle_dir is not None and not defer_load:
        @app.on_event("startup")
        def _load():
            state.bundle = ModelBundle.load(bundle_dir)

    @app.get("/health")
    def health():
        if state.bundle is None:
            return JSONResponse({"status": "loading"}, status_code=503)
        return {"status": "ok"}

    @app.get("/languages")
    def languages():
        if state.bundle is None:
            return JSONResponse({"error": "model not loaded"}, status_code=503)
        pipeline = state.bundle.pipeline
        return {"languages": pipeline.lang_tags, "styles": pipeline.style_tags}

    @app.post("/translate")
    async def translate(request: Request):
        if state.bundle is None:
            return JSONResponse({"error": "model not loaded"}, status_code=503)
        raw = await request.body()
        try:
            body = json.loads(raw.decode("utf-8"))
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
        except (ValueError, UnicodeDecodeError) as exc:
            return JSONResponse({"error": f"malformed JSON: {exc}"}, status_code=400)
        missing = [k for k in ("text", "source_lang", "target_lang", "target_style")
                   if k not in body]
        if missing:
            return JSONResponse(
                {"error": f"missing fields: {missing}"}, status_code=400
            )
        text = str(body["text"])
        if len(text) > MAX_TEXT_CHARS:
            return JSONResponse(
                {"error": f"text over {MAX_TEXT_CHARS} characters"}, status_code=413
            )
        pipeline = state.bundle.pipeline
        if body["target_lang"] not in pipeline.lang_tags:
            return JSONResponse(
                {"error": f"unknown language {body['target_lang']!r}",
                 "available_languages": pipeline.lang_tags},
                status_code=422,
            )
        if body["target_style"] not in pipeline.style_tags:
            return JSONResponse(
                {"error": f"unknown style {body['target_style']!r}",
                 "available_styles": pipeline.style_tags},
                status_code=422,
            )
        try:
            beam = int(body.get("beam", 5))
        except (TypeError, ValueError):
            return JSONResponse({"error": "beam must be an integer"}, status_code=400)
        if beam < 1:
            return JSONResponse({"error": "beam must be >= 1"}, status_code=422)
        req = RewriteRequest(
            text=text, source_lang=str(body["source_lang"]),
            target_lang=body["target_lang"], target_style=body["target_style"],
            beam=beam,
        )
        output, score = rewrite(req, state.bundle)
        state.bump()
        return {
            "output": output,
            "score": score,
            "tokens_in": len(textpipe.tokenize(text)),
            "tokens_out": len(textpipe.tokenize(output)),
        }

    return app
