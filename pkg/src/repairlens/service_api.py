"""HTTP service for interactive repair debugging.

A session holds a dirty table, its constraints, and the chosen repair
algorithm. Repairing is synchronous and cached per revision; explanations run
as asynchronous jobs that snapshot the revision they were submitted at, so
later edits never disturb a running job. Every edit bumps the revision, which
invalidates the cached repair and marks existing jobs stale.

Endpoints (all bodies and responses are wire JSON):

    POST   /sessions                    create from {table_csv, dc_text, algorithm}
    GET    /sessions/{id}
    POST   /sessions/{id}/repair
    POST   /sessions/{id}/explain       submit {target, mode, params} -> job
    GET    /jobs/{id}
    PATCH  /sessions/{id}/cells         {row, attr, value}
    PUT    /sessions/{id}/constraints   {dc_text}
    DELETE /sessions/{id}
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from typing import Any, Mapping, Optional

from fastapi import FastAPI, Request, Response
from fastapi.concurrency import run_in_threadpool

from . import wire
from .adapter import AdapterConfig, ExternalRepairAlgorithm
from .dc_lang import format_dc, parse_constraints, parse_dc
from .errors import (
    ArgError,
    BlackBoxError,
    FixpointError,
    ParseError,
    RepairLensError,
    TableError,
    UnexplainableCellError,
)
from .repair_engine import RepairAlgorithm, RepairTask, reference_repair
from .shapley_engine import rank, shapley_cells_sampled, shapley_constraints
from .store import Store
from .table_model import diff_tables, parse_table

DEFAULT_SAMPLES = 5000
DEFAULT_SEED = 0
DEFAULT_IMPUTATION = "column-distribution"


class _HttpError(Exception):
    """Internal short-circuit carrying a ready-to-send error document."""

    def __init__(self, status: int, kind: str, message: str, **extra: Any):
        super().__init__(message)
        self.status = status
        self.doc = {"error": {"type": kind, "message": message, **extra}}


def _wire_response(doc: Any, status: int = 200) -> Response:
    return Response(wire.dumps(doc), status_code=status, media_type="application/json")


def _bad_request(message: str) -> _HttpError:
    return _HttpError(422, "BadRequest", message)


def _domain_error(exc: RepairLensError) -> _HttpError:
    """Map a domain exception to its HTTP shape."""
    kind = type(exc).__name__
    if isinstance(exc, ParseError):
        return _HttpError(422, kind, str(exc), line=exc.line, column=exc.column)
    if isinstance(exc, UnexplainableCellError):
        return _HttpError(409, kind, str(exc))
    if isinstance(exc, FixpointError):
        extra = {}
        if exc.last_table is not None:
            extra["last_table"] = wire.encode_table(exc.last_table)
        return _HttpError(409, kind, str(exc), **extra)
    if isinstance(exc, BlackBoxError):  # ContractError included
        return _HttpError(502, kind, str(exc))
    # TableError, BindError, ArgError, CapError: the request itself is bad
    return _HttpError(422, kind, str(exc))


def _body_str(body: Mapping[str, Any], key: str, default: Optional[str] = None) -> str:
    value = body.get(key, default)
    if not isinstance(value, str):
        raise _bad_request(f"field {key!r} must be a string")
    return value


def _body_int(params: Mapping[str, Any], key: str, default: int) -> int:
    value = params.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise _bad_request(f"parameter {key!r} must be an integer")
    return value


class RepairService:
    """All state and behavior behind the HTTP surface.

    Handlers run in worker threads; per-session locks serialize writes while
    the explanation executor only ever reads frozen revision snapshots.
    """

    def __init__(
        self,
        data_dir: str,
        workers: int = 1,
        adapter_registry: Optional[Mapping[str, AdapterConfig]] = None,
    ):
        self.store = Store(data_dir)
        self.workers = workers
        self.registry = dict(adapter_registry or {})
        self._adapters: dict[str, ExternalRepairAlgorithm] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=1)

    def startup(self) -> None:
        """Re-enqueue jobs interrupted by a previous shutdown."""
        for job in self.store.all_jobs():
            if job["status"] in ("pending", "running"):
                job["status"] = "pending"
                self.store.save_job(job)
                self._executor.submit(self._run_job, job["id"])

    def close(self) -> None:
        self._executor.shutdown(wait=True)
        for adapter in self._adapters.values():
            adapter.close()

    def _lock(self, sid: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(sid, threading.Lock())

    def _resolve(self, name: str) -> RepairAlgorithm:
        if name == "reference":
            return reference_repair
        config = self.registry.get(name)
        if config is None:
            raise ArgError(f"unknown algorithm {name!r}")
        with self._guard:
            adapter = self._adapters.get(name)
            if adapter is None:
                adapter = self._adapters[name] = ExternalRepairAlgorithm(config)
        adapter.verify()
        return adapter

    def _load(self, sid: str) -> dict[str, Any]:
        doc = self.store.load_session(sid)
        if doc is None:
            raise _HttpError(404, "NotFound", f"no session {sid!r}")
        return doc

    def _view(self, doc: dict[str, Any]) -> dict[str, Any]:
        """Session document plus the repair cached at its revision, if any."""
        rep = self.store.load_repair(doc["id"], doc["revision"])
        out = dict(doc)
        out["clean"] = rep["clean"] if rep else None
        out["changes"] = rep["changes"] if rep else None
        return out

    # -- handlers (sync, called via threadpool) --

    def create_session(self, body: Mapping[str, Any]) -> Response:
        table_csv = _body_str(body, "table_csv")
        dc_text = _body_str(body, "dc_text")
        algorithm = _body_str(body, "algorithm", "reference")
        try:
            table = parse_table(table_csv)
            constraints = parse_constraints(dc_text)
            for dc in constraints:
                dc.bind(table.schema)
            self._resolve(algorithm)
        except RepairLensError as exc:
            raise _domain_error(exc) from exc
        doc = {
            "id": self.store.new_session_id(),
            "revision": 0,
            "algorithm": algorithm,
            "table": wire.encode_table(table),
            "constraints": [format_dc(dc) for dc in constraints],
        }
        self.store.save_revision(doc)
        return _wire_response(self._view(doc), 201)

    def get_session(self, sid: str) -> Response:
        return _wire_response(self._view(self._load(sid)))

    def run_repair(self, sid: str) -> Response:
        with self._lock(sid):
            doc = self._load(sid)
            rep = self.store.load_repair(sid, doc["revision"])
            if rep is None:
                try:
                    dirty = wire.decode_table(doc["table"])
                    constraints = [parse_dc(text) for text in doc["constraints"]]
                    clean = self._resolve(doc["algorithm"])(constraints, dirty)
                except RepairLensError as exc:
                    raise _domain_error(exc) from exc
                except TypeError as exc:
                    # an order predicate comparing text against a number
                    raise _HttpError(422, "TypeError", str(exc)) from exc
                rep = {
                    "revision": doc["revision"],
                    "clean": wire.encode_table(clean),
                    "changes": [wire.encode_change(c) for c in diff_tables(dirty, clean)],
                }
                self.store.save_repair(sid, doc["revision"], rep)
            return _wire_response(rep)

    def submit_explain(self, sid: str, body: Mapping[str, Any]) -> Response:
        with self._lock(sid):
            doc = self._load(sid)
            rep = self.store.load_repair(sid, doc["revision"])
            if rep is None:
                raise _HttpError(
                    409,
                    "StaleRepair",
                    "no repair at the current revision; run repair first",
                )
            try:
                target = wire.decode_cellref(body.get("target"))
                wire.decode_table(doc["table"]).check_ref(target)
            except (ValueError, TableError) as exc:
                raise _bad_request(f"bad target: {exc}") from exc
            if not any(
                c["row"] == target.row and c["attr"] == target.attr
                for c in rep["changes"]
            ):
                raise _HttpError(
                    409,
                    "UnexplainableCellError",
                    "only changed cells are explainable; "
                    f"the repair did not change {target.row}:{target.attr}",
                )
            mode = _body_str(body, "mode", "constraints")
            if mode not in ("constraints", "cells"):
                raise _bad_request(f"mode must be 'constraints' or 'cells', got {mode!r}")
            params = None
            if mode == "cells":
                raw = body.get("params") or {}
                if not isinstance(raw, Mapping):
                    raise _bad_request("field 'params' must be an object")
                params = {
                    "m": _body_int(raw, "m", DEFAULT_SAMPLES),
                    "seed": _body_int(raw, "seed", DEFAULT_SEED),
                    "imputation": _body_str(raw, "imputation", DEFAULT_IMPUTATION),
                }
                if params["m"] < 1:
                    raise _bad_request("parameter 'm' must be >= 1")
                if params["imputation"] not in ("column-distribution", "null"):
                    raise _bad_request(f"unknown imputation {params['imputation']!r}")
            job = {
                "id": self.store.new_job_id(),
                "session": sid,
                "revision": doc["revision"],
                "target": wire.encode_cellref(target),
                "mode": mode,
                "params": params,
                "status": "pending",
                "result": None,
                "error": None,
            }
            self.store.save_job(job)
        self._executor.submit(self._run_job, job["id"])
        return _wire_response({**job, "stale": False}, 202)

    def get_job(self, jid: str) -> Response:
        job = self.store.load_job(jid)
        if job is None:
            raise _HttpError(404, "NotFound", f"no job {jid!r}")
        session = self.store.load_session(job["session"])
        stale = session is None or session["revision"] != job["revision"]
        return _wire_response({**job, "stale": stale})

    def edit_cell(self, sid: str, body: Mapping[str, Any]) -> Response:
        with self._lock(sid):
            doc = self._load(sid)
            if "value" not in body:
                raise _bad_request("field 'value' is required (null clears the cell)")
            try:
                ref = wire.decode_cellref(body)
                value = wire.decode_value(body["value"])
                table = wire.decode_table(doc["table"]).with_value(ref, value)
            except (ValueError, TableError) as exc:
                raise _bad_request(f"bad edit: {exc}") from exc
            doc = {**doc, "revision": doc["revision"] + 1, "table": wire.encode_table(table)}
            self.store.save_revision(doc)
            return _wire_response(self._view(doc))

    def edit_constraints(self, sid: str, body: Mapping[str, Any]) -> Response:
        with self._lock(sid):
            doc = self._load(sid)
            dc_text = _body_str(body, "dc_text")
            try:
                constraints = parse_constraints(dc_text)
                schema = wire.decode_table(doc["table"]).schema
                for dc in constraints:
                    dc.bind(schema)
            except RepairLensError as exc:
                raise _domain_error(exc) from exc
            doc = {
                **doc,
                "revision": doc["revision"] + 1,
                "constraints": [format_dc(dc) for dc in constraints],
            }
            self.store.save_revision(doc)
            return _wire_response(self._view(doc))

    def delete_session(self, sid: str) -> Response:
        with self._lock(sid):
            self._load(sid)
            self.store.delete_session(sid)
        return Response(status_code=204)

    # -- job execution --

    def _run_job(self, jid: str) -> None:
        job = self.store.load_job(jid)
        if job is None or job["status"] not in ("pending", "running"):
            return
        job["status"] = "running"
        self.store.save_job(job)
        try:
            sid, rev = job["session"], job["revision"]
            doc = self.store.load_session(sid, revision=rev)
            rep = self.store.load_repair(sid, rev)
            if doc is None or rep is None:
                raise RepairLensError("the job's revision snapshot is gone")
            dirty = wire.decode_table(doc["table"])
            constraints = tuple(parse_dc(text) for text in doc["constraints"])
            target = wire.decode_cellref(job["target"])
            expected = next(
                wire.decode_value(c["after"])
                for c in rep["changes"]
                if c["row"] == target.row and c["attr"] == target.attr
            )
            task = RepairTask(constraints, dirty, target, expected)
            alg = self._resolve(doc["algorithm"])
            if job["mode"] == "constraints":
                report = shapley_constraints(alg, task)
            else:
                p = job["params"]
                report = shapley_cells_sampled(
                    alg,
                    task,
                    m=p["m"],
                    seed=p["seed"],
                    imputation=p["imputation"],
                    workers=self.workers,
                )
            job["result"] = {"report": wire.encode_report(report, rank(report))}
            job["status"] = "done"
        except Exception as exc:  # a failed job must never kill the worker
            job["status"] = "failed"
            job["error"] = f"{type(exc).__name__}: {exc}"
        self.store.save_job(job)


def create_app(
    data_dir: str,
    workers: int = 1,
    adapter_registry: Optional[Mapping[str, AdapterConfig]] = None,
) -> FastAPI:
    service = RepairService(data_dir, workers, adapter_registry)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        service.startup()
        yield
        service.close()

    app = FastAPI(title="repairlens", lifespan=lifespan)
    app.state.service = service

    @app.exception_handler(_HttpError)
    async def on_http_error(request: Request, exc: _HttpError) -> Response:
        return _wire_response(exc.doc, exc.status)

    @app.exception_handler(RepairLensError)
    async def on_domain_error(request: Request, exc: RepairLensError) -> Response:
        mapped = _domain_error(exc)
        return _wire_response(mapped.doc, mapped.status)

    async def body_of(request: Request) -> dict[str, Any]:
        raw = await request.body()
        try:
            doc = wire.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise _bad_request(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise _bad_request("request body must be a JSON object")
        return doc

    @app.post("/sessions")
    async def create_session(request: Request) -> Response:
        body = await body_of(request)
        return await run_in_threadpool(service.create_session, body)

    @app.get("/sessions/{sid}")
    async def get_session(sid: str) -> Response:
        return await run_in_threadpool(service.get_session, sid)

    @app.post("/sessions/{sid}/repair")
    async def run_repair(sid: str) -> Response:
        return await run_in_threadpool(service.run_repair, sid)

    @app.post("/sessions/{sid}/explain")
    async def submit_explain(sid: str, request: Request) -> Response:
        body = await body_of(request)
        return await run_in_threadpool(service.submit_explain, sid, body)

    @app.get("/jobs/{jid}")
    async def get_job(jid: str) -> Response:
        return await run_in_threadpool(service.get_job, jid)

    @app.patch("/sessions/{sid}/cells")
    async def edit_cell(sid: str, request: Request) -> Response:
        body = await body_of(request)
        return await run_in_threadpool(service.edit_cell, sid, body)

    @app.put("/sessions/{sid}/constraints")
    async def edit_constraints(sid: str, request: Request) -> Response:
        body = await body_of(request)
        return await run_in_threadpool(service.edit_constraints, sid, body)

    @app.delete("/sessions/{sid}")
    async def delete_session(sid: str) -> Response:
        return await run_in_threadpool(service.delete_session, sid)

    return app
