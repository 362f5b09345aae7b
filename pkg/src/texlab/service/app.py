"""FastAPI application exposing the lab operations over HTTP."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from . import models as m
from . import ops


def create_app() -> FastAPI:
    app = FastAPI(title="texlab", version=__version__,
                  description="Texture-mode video codec laboratory")

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/analyze", response_model=m.AnalyzeResponse)
    def analyze(req: m.AnalyzeRequest):
        try:
            return ops.run_analyze(req)
        except ops.InputFault as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/encode", response_model=m.EncodeResponse)
    def encode(req: m.EncodeRequest):
        try:
            return ops.run_encode(req)
        except ops.InputFault as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except ops.CodecFault as exc:
            raise HTTPException(status_code=500, detail=str(exc))

    @app.post("/compare", response_model=m.CompareResponse)
    def compare(req: m.CompareRequest):
        try:
            return ops.run_compare(req)
        except ops.ComparisonFault as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/roundtrip", response_model=m.RoundtripResponse)
    def roundtrip(req: m.RoundtripRequest):
        try:
            return ops.run_roundtrip(req)
        except ops.InputFault as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except ops.VerificationFault as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    return app


app = create_app()
