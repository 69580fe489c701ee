"""HTTP service hosting the validation API and read-only match browsing.

All responses are JSON; errors use {"error": <kind>, "detail": <message>}.
"""

from __future__ import annotations

import math
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import AppConfig
from .hitl import confusion, lr_plus, predict_hitl_precision, NO_MATCH
from .model import DomainError
from .store import ValidationStore


class VoteBody(BaseModel):
    validator: str
    choice: str


class MatchJobBody(BaseModel):
    index_corpus: str
    query_corpus: str
    head: str
    out_dir: str = "run"


def create_app(store: ValidationStore, config: AppConfig) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        store.close()

    app = FastAPI(title="matchfuse validation service", lifespan=lifespan)
    app.state.store = store
    app.state.config = config

    @app.exception_handler(DomainError)
    async def domain_error(_req: Request, exc: DomainError):
        return JSONResponse(status_code=409, content={"error": "conflict", "detail": str(exc)})

    @app.exception_handler(KeyError)
    async def not_found(_req: Request, exc: KeyError):
        return JSONResponse(status_code=404, content={"error": "not-found", "detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/validation/next")
    def next_row(validator: str):
        row = store.next_pending(validator)
        if row is None:
            return {"row": None, "pending": store.pending_count()}
        view = row.to_dict()
        view["votes_collected"] = len(row.votes)
        del view["votes"]          # validators never see each other's votes
        del view["true_choice"]    # nor ground truth
        return {"row": view, "pending": store.pending_count()}

    @app.post("/validation/{row_id}/vote")
    def vote(row_id: str, body: VoteBody):
        row = store.vote(row_id, body.validator, body.choice)
        result = {"row_id": row_id, "status": row.status}
        if row.status == "complete":
            result["verdict"] = store.verdict(row_id)
        return result

    @app.get("/validation/stats")
    def stats():
        completed = store.completed_rows()
        agreement = None
        if completed:
            unanimous = sum(1 for r in completed
                            if len({c for _, c in r.votes}) == 1)
            agreement = unanimous / len(completed)
        payload: dict = {
            "rows_total": len(store.rows),
            "rows_completed": len(completed),
            "rows_pending": store.pending_count(),
            "agreement_rate": agreement,
            "confirmed": sum(1 for r in completed
                             if store.verdict(r.row_id) != NO_MATCH),
        }
        labeled = [r for r in completed if r.labeled]
        if config.experiment_mode and labeled:
            try:
                est = confusion(labeled, rule_name=store.rule_name,
                                n_bootstrap=200, seed=config.seed)
                lr = lr_plus(est)
                confirmed_true = sum(
                    1 for r in labeled
                    if r.is_true_row and store.verdict(r.row_id) != NO_MATCH)
                confirmed_all = sum(
                    1 for r in labeled if store.verdict(r.row_id) != NO_MATCH)
                payload["experiment"] = {
                    "confusion": est.to_dict(),
                    "lr_plus": None if math.isinf(lr) else lr,
                    "predicted_hitl_precision": predict_hitl_precision(config.p_model, lr),
                    "empirical_output_precision": (
                        confirmed_true / confirmed_all if confirmed_all else None),
                    "p_model": config.p_model,
                }
            except DomainError:
                payload["experiment"] = None
        return payload

    @app.get("/rows/{row_id}")
    def get_row(row_id: str):
        row = store.rows.get(row_id)
        if row is None:
            raise KeyError(row_id)
        view = row.to_dict()
        view["verdict"] = store.verdict(row_id)
        return view

    @app.post("/match-jobs")
    def match_job(body: MatchJobBody):
        from .encoder import ProjectionHead
        from .io import ingest_offers
        from .pipeline import run_pipeline

        index_corpus = ingest_offers(body.index_corpus)
        query_corpus = ingest_offers(body.query_corpus)
        head = ProjectionHead.load(body.head)
        report = run_pipeline(index_corpus, query_corpus, head, config,
                              body.out_dir, store=store)
        return report

    return app
