"""FastAPI application exposing the evaluation toolkit over HTTP.

Each endpoint wraps one library operation; payloads mirror the file
interchange formats, so a leaderboard-style deployment can hold a dataset
server-side or accept it inline per request. Start with `refeval serve` or
point uvicorn at `refeval.service.app:create_app`.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..datastats import compute_stats
from ..metrics import aggregate
from ..report import render_table
from ..synth import BaselineKind, generate, recall_by_instance_count, run_baseline
from ..types import EvalError, Subset, validate_dataset
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="refeval",
        description="Multi-instance referring-expression detection evaluation service.",
        version="0.1.0",
    )

    @app.exception_handler(EvalError)
    async def eval_error_handler(_request: Request, exc: EvalError) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"code": exc.code, "message": exc.args[0]}
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(_request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"code": "VALUE_ERROR", "message": str(exc)}
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(request: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        dataset = [schemas.image_from_model(m) for m in request.dataset]
        violations = validate_dataset(dataset)
        if violations:
            raise EvalError(
                "INVALID_DATASET",
                f"dataset has {len(violations)} violations; "
                f"first: {violations[0]}",
            )
        predictions = schemas.predictions_from_models(request.predictions, dataset)
        if request.point_eval:
            boxed = [p.referring_id for p in predictions if p.boxes]
            if boxed:
                raise EvalError(
                    "SCHEMA_ERROR",
                    f"point_eval requires point or rejection payloads, but "
                    f"{len(boxed)} predictions carry boxes (first: {boxed[0]!r})",
                )
        report = aggregate(
            dataset,
            predictions,
            density_numerator=request.density_numerator,
            subsets={Subset(request.subset)} if request.subset else None,
        )
        return schemas.EvaluateResponse(
            report=schemas.report_to_model(report), table=render_table(report)
        )

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate(request: schemas.DatasetRequest) -> schemas.ValidateResponse:
        dataset = [schemas.image_from_model(m) for m in request.dataset]
        violations = validate_dataset(dataset)
        return schemas.ValidateResponse(
            valid=not violations,
            violations=[schemas.violation_to_model(v) for v in violations],
        )

    @app.post("/stats", response_model=schemas.StatsResponse)
    def stats(request: schemas.DatasetRequest) -> schemas.StatsResponse:
        dataset = [schemas.image_from_model(m) for m in request.dataset]
        return schemas.stats_to_model(compute_stats(dataset))

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(request: schemas.SynthRequest) -> schemas.SynthResponse:
        dataset, ledger = generate(request.to_config())
        return schemas.SynthResponse(
            dataset=[schemas.image_to_model(i) for i in dataset],
            ledger=schemas.ledger_to_model(ledger),
        )

    @app.post("/baseline", response_model=schemas.BaselineResponse)
    def baseline(request: schemas.BaselineRequest) -> schemas.BaselineResponse:
        kind = BaselineKind.parse(request.kind)
        dataset = [schemas.image_from_model(m) for m in request.dataset]
        predictions = run_baseline(kind, dataset, seed=request.seed)
        return schemas.BaselineResponse(
            predictions=[schemas.prediction_to_model(p) for p in predictions]
        )

    @app.post("/figure6", response_model=schemas.Figure6Response)
    def figure6(request: schemas.Figure6Request) -> schemas.Figure6Response:
        dataset = [schemas.image_from_model(m) for m in request.dataset]
        predictions = schemas.predictions_from_models(request.predictions, dataset)
        buckets = recall_by_instance_count(
            dataset, predictions, density_numerator=request.density_numerator
        )
        return schemas.buckets_to_model(buckets)

    return app
