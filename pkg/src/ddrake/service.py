"""HTTP service exposing campaigns and complexity accounting.

The service wraps the simulation core; the CLI is a thin client that
posts to these endpoints (in-process by default, or over the network
against a deployed instance).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .detector import complexity_terms
from .harness import KNOWN_DETECTORS, run_campaign, spec_from_dict

app = FastAPI(title="ddrake", description="Delay-Doppler rake link simulator")


class CampaignRequest(BaseModel):
    """Mirrors SimSpec field-for-field, plus the worker count."""

    M: int = 64
    N: int = 32
    delta_f: float = 15e3
    l_max: int = 8
    qam_order: int = 4
    channel: str = "eva"
    speed_kmh: float = 120.0
    doppler_cap: int = 4
    snr_db: list[float] = Field(default_factory=lambda: [15.0])
    detectors: list[str] = Field(default_factory=lambda: ["mrc"])
    S: int = 10
    n_turbo: int = 2
    epsilon: float = 1e-12
    code_length: int = 1024
    code_file: str = ""
    max_frames: int = 200
    target_frame_errors: int = 200
    max_bits: int = 10_000_000
    master_seed: int = 0
    workers: int = 1


class MetricRecordModel(BaseModel):
    snr_db: float
    detector: str
    bits: int
    bit_errors: int
    frames: int
    frame_errors: int
    ber: float
    fer: float
    iter_multiplies_per_frame: int
    wall_time_s: float


class CampaignResponse(BaseModel):
    records: list[MetricRecordModel]


class ComplexityRequest(BaseModel):
    N: int
    M: int
    l_max: int
    L: int
    S: int


class ComplexityResponse(BaseModel):
    iterative: int
    setup_products: int
    setup_ffts: int
    tf_initializer: int
    total: int


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "detectors": list(KNOWN_DETECTORS)}


@app.post("/campaign", response_model=CampaignResponse)
def campaign(req: CampaignRequest) -> CampaignResponse:
    payload = req.model_dump()
    workers = payload.pop("workers")
    try:
        spec = spec_from_dict(payload)
        records = run_campaign(spec, workers=workers)
    except (ValueError, FileNotFoundError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return CampaignResponse(
        records=[
            MetricRecordModel(
                snr_db=r.snr_db,
                detector=r.detector,
                bits=r.bits,
                bit_errors=r.bit_errors,
                frames=r.frames,
                frame_errors=r.frame_errors,
                ber=r.ber,
                fer=r.fer,
                iter_multiplies_per_frame=r.iter_multiplies_per_frame,
                wall_time_s=r.wall_time_s,
            )
            for r in records
        ]
    )


@app.post("/complexity", response_model=ComplexityResponse)
def complexity(req: ComplexityRequest) -> ComplexityResponse:
    if req.l_max >= req.M or req.L < 1 or req.S < 0:
        raise HTTPException(status_code=400, detail="invalid complexity parameters")
    terms = complexity_terms(req.N, req.M, req.l_max, req.L, req.S)
    return ComplexityResponse(total=sum(terms.values()), **terms)
