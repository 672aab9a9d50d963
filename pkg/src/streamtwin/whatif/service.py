"""HTTP facade over the what-if engine: read-only artifacts, stateless requests."""

from __future__ import annotations

from typing import Mapping, Sequence

from fastapi import FastAPI, Request
from fastapi.exceptions import HTTPException, RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict
from starlette.exceptions import HTTPException as StarletteHTTPException

from ..errors import ConfigurationError
from ..learner.boosting import TreeEnsemble
from ..pipeline.selection import FeatureCatalog
from ..twins import SensitivityVector
from .engine import UnknownTraceError, UnknownUserError, run_whatif
from .simulator import DEFAULT_LADDER, WhatIfScenario
from .traces import BandwidthTrace, builtin_traces

__all__ = ["API_SCHEMA", "DEFAULT_SESSION_CAP", "create_app", "serve"]

API_SCHEMA = "whatif-api/v1"
DEFAULT_SESSION_CAP = 5000


class ScenarioBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace: str
    cohort: list[str] | str
    abr: str = "hybrid-low-latency"
    segment_size: float = 2.0
    video_duration: float = 600.0
    ladder: list[tuple[float, str]] | None = None
    n_sessions: int = 10
    seed: int = 0
    name: str | None = None

    def to_scenario(self) -> WhatIfScenario:
        return WhatIfScenario(
            trace=self.trace,
            abr=self.abr,
            segment_size=self.segment_size,
            video_duration=self.video_duration,
            ladder=tuple((float(b), str(label)) for b, label in self.ladder)
            if self.ladder
            else DEFAULT_LADDER,
            n_sessions=self.n_sessions,
            cohort=tuple(self.cohort) if isinstance(self.cohort, list) else self.cohort,
            seed=self.seed,
            name=self.name,
        )


class WhatIfBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenarios: list[ScenarioBody]


def _cohort_size(cohort: Sequence[str] | str, n_users: int) -> int:
    if isinstance(cohort, str):
        try:
            return max(0, int(cohort.split(":", 1)[1]))
        except (IndexError, ValueError):
            return n_users
    return len(cohort)


def create_app(
    model: TreeEnsemble,
    vectors: Sequence[SensitivityVector],
    catalog: FeatureCatalog,
    traces: Mapping[str, BandwidthTrace] | None = None,
    session_cap: int = DEFAULT_SESSION_CAP,
) -> FastAPI:
    """Wire loaded artifacts into the API. All shared state is immutable."""
    trace_map = dict(builtin_traces() if traces is None else traces)
    by_user = {v.user_id: v for v in vectors}
    vector_list = list(vectors)

    app = FastAPI(title="streamtwin what-if service", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def _on_validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        fields = [
            {
                "field": ".".join(str(part) for part in err["loc"] if part != "body") or "body",
                "message": err["msg"],
            }
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=400,
            content={
                "schema": API_SCHEMA,
                "error": {"message": "invalid request body", "fields": fields},
            },
        )

    @app.exception_handler(StarletteHTTPException)
    async def _on_http_error(request: Request, exc: StarletteHTTPException) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status_code,
            content={"schema": API_SCHEMA, "error": {"message": str(exc.detail)}},
        )

    @app.get("/health")
    def health() -> dict[str, object]:
        return {"schema": API_SCHEMA, "status": "ok"}

    @app.get("/users")
    def users() -> dict[str, object]:
        return {
            "schema": API_SCHEMA,
            "users": [
                {"user_id": v.user_id, "degenerate": v.degenerate} for v in vector_list
            ],
        }

    @app.get("/users/{user_id}/sensitivities")
    def sensitivities(user_id: str) -> dict[str, object]:
        vector = by_user.get(user_id)
        if vector is None:
            raise HTTPException(status_code=404, detail=f"unknown user {user_id!r}")
        return {
            "schema": API_SCHEMA,
            "user_id": vector.user_id,
            "degenerate": vector.degenerate,
            "weights": dict(vector.weights),
        }

    @app.get("/traces")
    def traces_endpoint() -> dict[str, object]:
        return {
            "schema": API_SCHEMA,
            "traces": [
                {
                    "name": trace.name,
                    "cycle_s": trace.cycle_s,
                    "steps": [
                        [d, b] for d, b in zip(trace.durations_s, trace.bandwidths_kbps)
                    ],
                }
                for trace in (trace_map[name] for name in sorted(trace_map))
            ],
        }

    @app.get("/features")
    def features() -> dict[str, object]:
        return {"schema": API_SCHEMA, "catalog": catalog.as_dict()}

    @app.post("/whatif")
    def whatif(body: WhatIfBody) -> dict[str, object]:
        scenarios = [s.to_scenario() for s in body.scenarios]
        for i, scenario in enumerate(scenarios):
            requested = scenario.n_sessions * _cohort_size(scenario.cohort, len(by_user))
            if requested > session_cap:
                raise HTTPException(
                    status_code=422,
                    detail=(
                        f"scenario {scenario.label(i)!r} requests {requested} sessions; "
                        f"the cap is {session_cap}"
                    ),
                )
        try:
            result = run_whatif(scenarios, model, vector_list, trace_map)
        except (UnknownTraceError, UnknownUserError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ConfigurationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"schema": API_SCHEMA, "result": result.as_dict()}

    return app


def serve(app: FastAPI, bind: str) -> None:
    """Blocking uvicorn server; `bind` is 'host:port'."""
    import uvicorn

    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise ConfigurationError(f"bind must look like 'host:port', got {bind!r}")
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
