"""Long-running studio service: hosts evolution runs and rendering endpoints.

Each run executes on its own thread; HTTP handlers only read immutable
generation snapshots published at generation boundaries, so responses for
an explicit generation never change. Pause blocks the loop at the next
boundary without touching RNG state (variation substreams are keyed by
generation, not by a shared stream), which keeps paused-then-resumed runs
bit-identical to uninterrupted ones.
"""

from __future__ import annotations

import base64
import itertools
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .alphabet import builtin_targets
from .core import GridSpec, Stencil
from .documents import (
    StencilDocument,
    builtin_shape_library,
    document_to_json,
    load_shape_library,
    parse_shape_mapping,
    serialize_stencil,
)
from .evolve import (
    EvoConfig,
    GenerationRecord,
    GenerationSnapshot,
    RunStats,
    STATS_COLUMNS,
    evolve,
)
from .raster import RenderSettings, TargetSet, load_targets, render
from .search import FitnessConfig, FitnessVariant, SearchConfig
from .vector import png_bytes, render_specimen, svg_glyph_for_mask

MAX_CONCURRENT_RUNS = 4
SNAPSHOT_WINDOW = 50  # most recent generations kept, plus every 10th forever


class RunRequest(BaseModel):
    targets: str = "builtin"
    fitness: str = "exp1"
    subset: str = "BIQVWX"
    population_size: int = 30
    generations: int = 50
    seed: int = 0
    grid_density: int = 10
    canvas_size: int = 64
    stroke_weight: float = 3.0
    min_segments: int = 10
    max_segments: int = 40
    top_k: int = 5
    tournament_size: int = 3
    elite_count: int = 1


class SpecimenRequest(BaseModel):
    text: str
    stencil: Optional[dict] = None
    run_id: Optional[str] = None
    generation: Optional[int] = None
    rank: Optional[int] = None
    mapping: Optional[dict] = None
    tracking: float = 4.0


@dataclass
class Run:
    run_id: str
    config: EvoConfig
    state: str = "RUNNING"  # RUNNING | PAUSED | DONE | FAILED
    error: Optional[str] = None
    current_generation: int = -1
    records: list[GenerationRecord] = field(default_factory=list)
    snapshots: dict[int, GenerationSnapshot] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    resume_event: threading.Event = field(default_factory=threading.Event)
    stop_requested: bool = False
    thread: Optional[threading.Thread] = None

    def handle(self) -> dict:
        with self.lock:
            return {
                "run_id": self.run_id,
                "state": self.state,
                "current_generation": self.current_generation,
                "error": self.error,
                "config": {
                    "fitness": self.config.fitness.variant.value,
                    "subset": "".join(sorted(self.config.fitness.evaluated_subset)),
                    "population_size": self.config.population_size,
                    "generations": self.config.generations,
                    "seed": self.config.rng_seed,
                    "grid_density": self.config.grid.density,
                    "canvas_size": self.config.render.canvas_size,
                    "stroke_weight": self.config.render.stroke_weight,
                    "bounds": list(self.config.bounds),
                    "top_k": self.config.search.top_k,
                },
            }


def _config_from_request(req: RunRequest, targets: TargetSet) -> EvoConfig:
    variant = FitnessVariant(req.fitness)
    subset = frozenset(req.subset) if variant is FitnessVariant.EXP3 else frozenset()
    return EvoConfig(
        population_size=req.population_size,
        generations=req.generations,
        tournament_size=req.tournament_size,
        elite_count=req.elite_count,
        rng_seed=req.seed,
        grid=GridSpec(req.grid_density),
        bounds=(req.min_segments, req.max_segments),
        render=RenderSettings(req.canvas_size, req.stroke_weight),
        search=SearchConfig(top_k=req.top_k),
        fitness=FitnessConfig(variant=variant, evaluated_subset=subset),
        threads=1,
    )


class RunRegistry:
    def __init__(self, targets_root: Optional[Path], runs_root: Path):
        self._targets_root = targets_root
        self._runs_root = runs_root
        self._runs: dict[str, Run] = {}
        self._lock = threading.Lock()
        self._ids = itertools.count(1)

    def resolve_targets(self, name: str, settings: RenderSettings) -> TargetSet:
        if name == "builtin":
            return builtin_targets(settings)
        if self._targets_root is None:
            raise ValueError(f"unknown target set {name!r} (no --targets-root)")
        path = (self._targets_root / name).resolve()
        if not str(path).startswith(str(self._targets_root.resolve())):
            raise ValueError(f"target set name {name!r} escapes the targets root")
        targets = load_targets(path)
        if targets.canvas_size != settings.canvas_size:
            raise ValueError(
                f"target bitmaps are {targets.canvas_size}px, config says "
                f"{settings.canvas_size}px"
            )
        return targets

    def active_count(self) -> int:
        with self._lock:
            return sum(1 for r in self._runs.values() if r.state in ("RUNNING", "PAUSED"))

    def start(self, req: RunRequest) -> Run:
        config_targets = self.resolve_targets(
            req.targets, RenderSettings(req.canvas_size, req.stroke_weight)
        )
        config = _config_from_request(req, config_targets)
        with self._lock:
            active = sum(1 for r in self._runs.values() if r.state in ("RUNNING", "PAUSED"))
            if active >= MAX_CONCURRENT_RUNS:
                raise CapacityError(f"at capacity: {active} active runs")
            run = Run(run_id=f"run-{next(self._ids):04d}", config=config)
            run.resume_event.set()
            self._runs[run.run_id] = run

        def observer(snapshot: GenerationSnapshot) -> None:
            with run.lock:
                run.current_generation = snapshot.generation
                run.records.append(snapshot.record)
                run.snapshots[snapshot.generation] = snapshot
                self._prune(run)
            # Block here (not inside the lock) while paused; the loop sits
            # at the generation boundary until resumed or deleted.
            run.resume_event.wait()

        def loop() -> None:
            try:
                evolve(
                    config,
                    config_targets,
                    observer=observer,
                    should_stop=lambda: run.stop_requested,
                )
                with run.lock:
                    if run.state != "FAILED":
                        run.state = "DONE"
            except Exception as exc:  # pragma: no cover - defensive
                with run.lock:
                    run.state = "FAILED"
                    run.error = str(exc)

        run.thread = threading.Thread(target=loop, name=run.run_id, daemon=True)
        run.thread.start()
        return run

    @staticmethod
    def _prune(run: Run) -> None:
        horizon = run.current_generation - SNAPSHOT_WINDOW
        stale = [
            g for g in run.snapshots
            if g < horizon and g % 10 != 0
        ]
        for g in stale:
            del run.snapshots[g]

    def get(self, run_id: str) -> Run:
        with self._lock:
            run = self._runs.get(run_id)
        if run is None:
            raise KeyError(run_id)
        return run

    def all(self) -> list[Run]:
        with self._lock:
            return list(self._runs.values())

    def delete(self, run_id: str) -> None:
        run = self.get(run_id)
        run.stop_requested = True
        run.resume_event.set()
        if run.thread is not None:
            run.thread.join(timeout=60)
        self._persist(run)
        with self._lock:
            del self._runs[run_id]

    def _persist(self, run: Run) -> None:
        with run.lock:
            if not run.snapshots:
                return
            latest = run.snapshots[max(run.snapshots)]
            records = list(run.records)
        out = self._runs_root / run.run_id
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.csv").write_text(RunStats(tuple(records)).to_csv(), encoding="utf-8")
        for rank, st in enumerate(latest.population):
            doc = _doc_for(run, st, latest.generation, rank)
            (out / f"rank_{rank:03d}.stencil").write_text(
                serialize_stencil(doc), encoding="utf-8"
            )


class CapacityError(RuntimeError):
    pass


def _doc_for(run: Run, stencil: Stencil, generation: int, rank: int) -> StencilDocument:
    return StencilDocument.from_stencil(
        stencil,
        run.config.grid,
        run.config.render,
        fitness_variant=run.config.fitness.variant.value,
        evaluated_subset="".join(sorted(run.config.fitness.evaluated_subset)) or None,
        provenance={
            "run_id": run.run_id,
            "seed": run.config.rng_seed,
            "generation": generation,
            "rank": rank,
        },
    )


def _snapshot_or_404(run: Run, generation: str | None) -> GenerationSnapshot:
    with run.lock:
        if not run.snapshots:
            raise HTTPException(404, "run has no completed generations yet")
        if generation in (None, "latest"):
            return run.snapshots[max(run.snapshots)]
        try:
            gen = int(generation)
        except ValueError:
            raise HTTPException(400, f"bad generation {generation!r}")
        if gen > run.current_generation:
            raise HTTPException(404, f"generation {gen} not reached yet")
        snap = run.snapshots.get(gen)
        if snap is None:
            raise HTTPException(404, f"generation {gen} no longer retained")
        return snap


def create_app(
    targets_root: Optional[Path] = None,
    shape_libs: tuple[Path, ...] = (),
    runs_root: Path = Path("runs"),
    frontend_dist: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="stencilforge service", version="0.1.0")
    registry = RunRegistry(targets_root, runs_root)
    library = builtin_shape_library()
    for lib_path in shape_libs:
        library = library.merged_with(load_shape_library(lib_path))
    app.state.registry = registry
    app.state.shape_library = library

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def get_run(run_id: str) -> Run:
        try:
            return registry.get(run_id)
        except KeyError:
            raise HTTPException(404, f"unknown run {run_id!r}")

    @app.post("/runs", status_code=201)
    def create_run(req: RunRequest):
        try:
            run = registry.start(req)
        except CapacityError as exc:
            raise HTTPException(409, str(exc))
        except (ValueError, FileNotFoundError) as exc:
            raise HTTPException(400, str(exc))
        return run.handle()

    @app.get("/runs")
    def list_runs():
        return [r.handle() for r in registry.all()]

    @app.get("/runs/{run_id}")
    def run_handle(run_id: str):
        return get_run(run_id).handle()

    @app.get("/runs/{run_id}/population")
    def population(run_id: str, generation: Optional[str] = None):
        run = get_run(run_id)
        snap = _snapshot_or_404(run, generation)
        return {
            "run_id": run_id,
            "generation": snap.generation,
            "stencils": [
                {
                    "rank": rank,
                    "fitness": st.fitness,
                    "element_count": len(st),
                    "document": f"/runs/{run_id}/stencils/{rank}/document"
                    f"?generation={snap.generation}",
                }
                for rank, st in enumerate(snap.population)
            ],
        }

    @app.get("/runs/{run_id}/stencils/{rank}/document")
    def stencil_document(run_id: str, rank: int, generation: Optional[str] = None):
        run = get_run(run_id)
        snap = _snapshot_or_404(run, generation)
        if not (0 <= rank < len(snap.population)):
            raise HTTPException(404, f"rank {rank} out of range")
        doc = _doc_for(run, snap.population[rank], snap.generation, rank)
        return JSONResponse(document_to_json(doc))

    @app.get("/runs/{run_id}/stencils/{rank}/glyphs/{character}/alternatives")
    def alternatives(
        run_id: str,
        rank: int,
        character: str,
        generation: Optional[str] = None,
        format: str = "svg",
    ):
        if format not in ("svg", "png"):
            raise HTTPException(400, f"unknown format {format!r}")
        run = get_run(run_id)
        snap = _snapshot_or_404(run, generation)
        if not (0 <= rank < len(snap.population)):
            raise HTTPException(404, f"rank {rank} out of range")
        st = snap.population[rank]
        if not st.solutions or character not in st.solutions:
            raise HTTPException(404, f"no solution for character {character!r}")
        sol = st.solutions[character]
        doc = _doc_for(run, st, snap.generation, rank)
        entries = []
        for mask, score in sol.alternatives:
            if format == "svg":
                payload = {"media_type": "image/svg+xml",
                           "svg": svg_glyph_for_mask(doc, mask)}
            else:
                canvas = render(st, mask, run.config.render, run.config.grid)
                payload = {
                    "media_type": "image/png",
                    "png_base64": base64.b64encode(png_bytes(canvas)).decode(),
                }
            entries.append({"mask": mask.bitstring(), "score": score, **payload})
        return {"run_id": run_id, "generation": snap.generation,
                "character": character, "alternatives": entries}

    @app.get("/runs/{run_id}/stats")
    def stats(run_id: str):
        run = get_run(run_id)
        with run.lock:
            records = list(run.records)
        return {
            "run_id": run_id,
            "columns": list(STATS_COLUMNS),
            "records": [
                {
                    "generation": r.generation,
                    "best_fitness": r.best_fitness,
                    "mean_fitness": r.mean_fitness,
                    "best_element_count": r.best_element_count,
                    "mean_element_count": r.mean_element_count,
                    "mean_l_score": r.mean_l_score,
                    "mean_nonl_score": r.mean_nonl_score,
                    "population_similarity": r.population_similarity,
                    "boost_active": r.boost_active,
                }
                for r in records
            ],
        }

    @app.post("/runs/{run_id}/pause")
    def pause(run_id: str):
        run = get_run(run_id)
        with run.lock:
            if run.state in ("DONE", "FAILED"):
                raise HTTPException(409, f"cannot pause a {run.state} run")
            run.state = "PAUSED"
            run.resume_event.clear()
        return run.handle()

    @app.post("/runs/{run_id}/resume")
    def resume(run_id: str):
        run = get_run(run_id)
        with run.lock:
            if run.state in ("DONE", "FAILED"):
                raise HTTPException(409, f"cannot resume a {run.state} run")
            run.state = "RUNNING"
            run.resume_event.set()
        return run.handle()

    @app.delete("/runs/{run_id}")
    def delete(run_id: str):
        get_run(run_id)
        registry.delete(run_id)
        return Response(status_code=204)

    @app.get("/shapes")
    def shapes():
        return {
            "shapes": [
                {"id": s.id, "path": s.path, "stroke": s.stroke}
                for s in library.shapes
            ]
        }

    @app.get("/targets")
    def target_sets():
        names = ["builtin"]
        if targets_root is not None and targets_root.is_dir():
            names.extend(
                sorted(p.name for p in targets_root.iterdir() if (p / "manifest.txt").is_file())
            )
        return {"targets": names}

    @app.post("/render/specimen")
    def specimen(req: SpecimenRequest):
        from .documents import DocumentError, parse_stencil
        import json as _json

        if (req.stencil is None) == (req.run_id is None):
            raise HTTPException(400, "pass exactly one of stencil or run_id")
        try:
            if req.stencil is not None:
                doc = parse_stencil(_json.dumps(req.stencil))
            else:
                run = get_run(req.run_id)
                snap = _snapshot_or_404(
                    run,
                    "latest" if req.generation is None else str(req.generation),
                )
                rank = req.rank or 0
                if not (0 <= rank < len(snap.population)):
                    raise HTTPException(404, f"rank {rank} out of range")
                doc = _doc_for(run, snap.population[rank], snap.generation, rank)
            mapping = None
            if req.mapping is not None:
                mapping = parse_shape_mapping(_json.dumps(req.mapping))
            svg = render_specimen(
                doc, req.text, mapping=mapping, library=library, tracking=req.tracking
            )
        except HTTPException:
            raise
        except (DocumentError, KeyError, ValueError) as exc:
            raise HTTPException(400, str(exc))
        return Response(content=svg, media_type="image/svg+xml")

    if frontend_dist is not None and frontend_dist.is_dir():
        app.mount("/", StaticFiles(directory=frontend_dist, html=True), name="studio")

    return app
