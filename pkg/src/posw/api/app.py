"""FastAPI service exposing the consensus protocol and experiment drivers.

Error contract: domain validation problems come back as HTTP 400 with
``detail.type == "validation"``, protocol violations as ``"protocol"``, and a
run that exhausts its round cap as HTTP 409 with ``detail.type ==
"cap-exceeded"`` plus a replay payload. Malformed request bodies surface as
FastAPI's standard 422.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import CapExceededError, PoswError, ProtocolError
from ..experiments import (
    compare_over_dataset,
    parse_fault_specs,
    run_over_dataset,
    simulate_over_dataset,
)
from ..protocol import run_consensus
from ..synth import SynthesisSpec, synthesize_ensemble
from .schemas import (
    CompareRequest,
    CompareResponse,
    ConsensusRequest,
    ConsensusResponse,
    DatasetModel,
    GenRequest,
    HealthResponse,
    RunRequest,
    RunResponse,
    SimulateRequest,
    SimulateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="posw", version=__version__)

    @app.exception_handler(PoswError)
    async def posw_error_handler(request: Request, exc: PoswError) -> JSONResponse:
        if isinstance(exc, CapExceededError):
            return JSONResponse(
                status_code=409,
                content={
                    "detail": {
                        "type": "cap-exceeded",
                        "message": str(exc),
                        "replay": exc.replay_payload(),
                    }
                },
            )
        kind = "protocol" if isinstance(exc, ProtocolError) else "validation"
        return JSONResponse(
            status_code=400,
            content={"detail": {"type": kind, "message": str(exc)}},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/consensus", response_model=ConsensusResponse, response_model_exclude_none=True)
    def consensus(req: ConsensusRequest) -> ConsensusResponse:
        result = run_consensus(req.beliefs, req.config.to_config())
        return ConsensusResponse.from_result(result, req.include_trace)

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        dataset = req.dataset.to_dataset()
        return RunResponse(**run_over_dataset(dataset, req.config.to_config()))

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> CompareResponse:
        dataset = req.dataset.to_dataset()
        out = compare_over_dataset(dataset, req.methods, req.config.to_config())
        return CompareResponse(**out)

    @app.post("/gen", response_model=DatasetModel, response_model_exclude_none=False)
    def gen(req: GenRequest) -> DatasetModel:
        spec = SynthesisSpec(
            n_samples=req.n_samples,
            n_peers=req.n_peers,
            n_classes=req.n_classes,
            accuracies=tuple(req.accuracies),
            concentration=req.concentration,
            rng_seed=req.rng_seed,
        )
        return DatasetModel.from_dataset(synthesize_ensemble(spec))

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        dataset = req.dataset.to_dataset()
        silent = [f.peer for f in req.faults if f.kind == "silent"]
        liars = []
        for f in req.faults:
            if f.kind == "liar":
                if f.label is None or f.prob is None:
                    raise ProtocolError(f"liar fault for peer {f.peer} needs label and prob")
                liars.append((f.peer, f.label, f.prob))
        faults = parse_fault_specs(silent, liars, n_peers=dataset.n_peers)
        return SimulateResponse(**simulate_over_dataset(dataset, faults, req.config.to_config()))

    return app


app = create_app()
