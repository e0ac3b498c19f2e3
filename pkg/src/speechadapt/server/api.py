"""HTTP surface over the session engine.

JSON in, JSON out; domain errors map to ``{"error": code, "detail": ...}``
with a status per error family. Configuration comes from an optional JSON
file with environment-variable overrides.
"""

from __future__ import annotations

import argparse
import json
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from ..errors import BadConfig, GateRejected, SpeechAdaptError
from ..uncertainty import export_difficulty_csv, DifficultyEntry
from .engine import SessionEngine
from .store import EventStore

_STATUS_BY_CODE = {
    "unknown_profile": 404,
    "unknown_prompt": 404,
    "unknown_utterance": 404,
    "unknown_slot": 404,
    "unknown_word": 404,
    "alternative_mismatch": 409,
    "nothing_to_adapt": 409,
    "cold_start_incomplete": 409,
    "unsupported_format": 415,
    "gate_rejected": 422,
    "too_short": 422,
    "corrupt_log": 500,
    "transport": 502,
    "timeout": 504,
    "protocol_violation": 502,
}


@dataclass
class ServerConfig:
    port: int = 8077
    store_path: str = "./profile-store"
    recognizer_endpoint: str | None = None
    gate_threshold_db: float = 15.0


def load_config(path: str | Path | None = None) -> ServerConfig:
    """Config file plus SPEECHADAPT_* environment overrides."""
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    config = ServerConfig(
        port=int(raw.get("port", 8077)),
        store_path=str(raw.get("store_path", "./profile-store")),
        recognizer_endpoint=raw.get("recognizer_endpoint"),
        gate_threshold_db=float(raw.get("gate_threshold_db", 15.0)),
    )
    if os.environ.get("SPEECHADAPT_PORT"):
        config.port = int(os.environ["SPEECHADAPT_PORT"])
    if os.environ.get("SPEECHADAPT_STORE_PATH"):
        config.store_path = os.environ["SPEECHADAPT_STORE_PATH"]
    if os.environ.get("SPEECHADAPT_RECOGNIZER_ENDPOINT"):
        config.recognizer_endpoint = os.environ["SPEECHADAPT_RECOGNIZER_ENDPOINT"]
    if os.environ.get("SPEECHADAPT_GATE_THRESHOLD_DB"):
        config.gate_threshold_db = float(os.environ["SPEECHADAPT_GATE_THRESHOLD_DB"])
    return config


def create_app(engine: SessionEngine, config: ServerConfig | None = None) -> FastAPI:
    app = FastAPI(title="speechadapt session server")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    server_config = config or ServerConfig()

    @app.exception_handler(SpeechAdaptError)
    async def domain_error(request: Request, exc: SpeechAdaptError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        body = {"error": exc.code, "detail": exc.detail}
        if isinstance(exc, GateRejected):
            body["report"] = exc.report.to_payload()
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "bad_request", "detail": str(exc)})

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.post("/profiles", status_code=201)
    async def create_profile(request: Request):
        config_body = await request.json()
        if "gate_threshold_db" not in config_body:
            config_body["gate_threshold_db"] = server_config.gate_threshold_db
        if "recognizer_endpoint" not in config_body and server_config.recognizer_endpoint:
            config_body["recognizer_endpoint"] = server_config.recognizer_endpoint
        return engine.create_profile(config_body)

    @app.get("/profiles/{pid}")
    async def get_profile(pid: str):
        return engine.profile_summary(pid)

    @app.get("/profiles/{pid}/prompts")
    async def prompts(pid: str, n: int = 1):
        return engine.next_prompts(pid, n)

    @app.post("/profiles/{pid}/recordings")
    async def recordings(pid: str, request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/"):
            form = await request.form()
            prompt_ref = form.get("prompt_ref")
            upload = form.get("file")
            if upload is None or prompt_ref is None:
                raise BadConfig("multipart upload needs file and prompt_ref fields")
            data = await upload.read()
            return engine.submit_recording(pid, str(prompt_ref), wav_bytes=data)
        body = await request.json()
        if not body.get("simulate"):
            raise BadConfig('JSON recording submissions must set {"simulate": true}')
        return engine.submit_recording(pid, body.get("prompt_ref", ""), simulate=True)

    @app.post("/profiles/{pid}/transcribe")
    async def transcribe(pid: str, request: Request):
        body = await request.json()
        return engine.transcribe(pid, body.get("utterance_id", ""))

    @app.get("/profiles/{pid}/transcripts/{uid}")
    async def get_transcript(pid: str, uid: str):
        return engine.get_transcript(pid, uid)

    @app.post("/profiles/{pid}/corrections")
    async def corrections(pid: str, request: Request):
        body = await request.json()
        return engine.apply_correction(pid, body)

    @app.post("/profiles/{pid}/adapt")
    async def adapt(pid: str):
        return engine.run_adaptation_round(pid)

    @app.get("/profiles/{pid}/metrics")
    async def metrics(pid: str):
        return engine.metrics(pid)

    @app.get("/profiles/{pid}/difficulty")
    async def difficulty(pid: str, format: str = "json"):
        entries = engine.difficulty(pid)
        if format == "csv":
            table = {
                e["phoneme"]: DifficultyEntry(
                    phoneme=e["phoneme"],
                    error_rate=e["error_rate"],
                    epistemic_mi=e["epistemic_mi"],
                    phd_score=e["phd_score"],
                )
                for e in entries
            }
            return PlainTextResponse(export_difficulty_csv(table), media_type="text/csv")
        return {"difficulty": entries}

    @app.post("/profiles/{pid}/reset-acoustic")
    async def reset_acoustic(pid: str):
        return engine.reset_acoustic_baseline(pid)

    return app


def build_default_app() -> FastAPI:
    config = load_config(os.environ.get("SPEECHADAPT_CONFIG"))
    engine = SessionEngine(store=EventStore(config.store_path))
    return create_app(engine, config)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="speechadapt-server")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--port", type=int, help="override port")
    args = parser.parse_args(argv)
    config = load_config(args.config)
    if args.port:
        config.port = args.port
    engine = SessionEngine(store=EventStore(config.store_path))
    app = create_app(engine, config)

    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
