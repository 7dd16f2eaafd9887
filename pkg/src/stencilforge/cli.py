"""Command-line front door: run evolutions, render exports, reproduce experiments."""

from __future__ import annotations

import os
from pathlib import Path

import click

from .alphabet import builtin_targets
from .core import GridSpec, InfeasibleStencilError
from .documents import (
    StencilDocument,
    builtin_shape_library,
    load_shape_library,
    load_shape_mapping,
    load_stencil,
    save_stencil,
    serialize_shape_library,
    ShapeMapping,
)
from .evolve import EvoConfig, RunStats, STATS_COLUMNS, evolve
from .raster import RenderSettings, TargetSet, load_targets, render
from .search import (
    FitnessConfig,
    FitnessVariant,
    SearchConfig,
    shared_elements,
)
from .vector import export_svg_glyph, render_specimen, write_png

BUILTIN_TARGETS_NAME = "builtin"


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return threads
    env = os.environ.get("STENCILFORGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise click.ClickException(
                f"STENCILFORGE_THREADS must be an integer, got {env!r}"
            ) from exc
    return os.cpu_count() or 1


def resolve_targets(name: str, settings: RenderSettings) -> TargetSet:
    """A named target set: the packaged alphabet or a directory of PGMs."""
    if name == BUILTIN_TARGETS_NAME:
        return builtin_targets(settings)
    targets = load_targets(name)
    if targets.canvas_size != settings.canvas_size:
        raise click.ClickException(
            f"target bitmaps are {targets.canvas_size}px but --canvas is "
            f"{settings.canvas_size}px; set --canvas {targets.canvas_size}"
        )
    return targets


def build_config(
    targets_name: str,
    fitness: str,
    subset: str,
    pop: int,
    gens: int,
    seed: int,
    grid_density: int,
    canvas: int,
    stroke: float,
    min_segments: int,
    max_segments: int,
    top_k: int,
    threads: int | None,
) -> tuple[EvoConfig, TargetSet]:
    settings = RenderSettings(canvas_size=canvas, stroke_weight=stroke)
    targets = resolve_targets(targets_name, settings)
    variant = FitnessVariant(fitness)
    evaluated = frozenset(subset) if variant is FitnessVariant.EXP3 else frozenset()
    config = EvoConfig(
        population_size=pop,
        generations=gens,
        rng_seed=seed,
        grid=GridSpec(grid_density),
        bounds=(min_segments, max_segments),
        render=settings,
        search=SearchConfig(top_k=top_k),
        fitness=FitnessConfig(variant=variant, evaluated_subset=evaluated),
        threads=resolve_threads(threads),
    )
    return config, targets


def write_population(out_dir: Path, population, config: EvoConfig, targets) -> list[Path]:
    ranked = sorted(population, key=lambda s: -(s.fitness or 0.0))
    paths = []
    for rank, st in enumerate(ranked):
        doc = StencilDocument.from_stencil(
            st,
            config.grid,
            config.render,
            fitness_variant=config.fitness.variant.value,
            evaluated_subset="".join(sorted(config.fitness.evaluated_subset)) or None,
            provenance={
                "seed": config.rng_seed,
                "generation": config.generations,
                "rank": rank,
            },
        )
        path = out_dir / f"rank_{rank:03d}.stencil"
        save_stencil(doc, path)
        paths.append(path)
    return paths


@click.group()
@click.version_option(package_name="stencilforge")
def main():
    """Evolve type stencils and render the glyphs they draw."""


@main.command("evolve")
@click.option("--targets", "targets_name", default=BUILTIN_TARGETS_NAME, show_default=True,
              help=f"Target directory (manifest.txt + <CHAR>.pgm) or '{BUILTIN_TARGETS_NAME}'.")
@click.option("--fitness", type=click.Choice(["exp1", "exp2", "exp3"]), default="exp1",
              show_default=True, help="Fitness function guiding evolution.")
@click.option("--subset", default="BIQVWX", show_default=True,
              help="Evaluated characters for exp3.")
@click.option("--pop", type=int, default=100, show_default=True, help="Population size.")
@click.option("--gens", type=int, default=300, show_default=True, help="Generations.")
@click.option("--seed", type=int, default=0, show_default=True, help="RNG seed.")
@click.option("--grid", "grid_density", type=int, default=10, show_default=True,
              help="Grid points per axis.")
@click.option("--canvas", type=int, default=64, show_default=True, help="Canvas size, px.")
@click.option("--stroke", type=float, default=3.0, show_default=True,
              help="Stroke weight, px.")
@click.option("--min-segments", type=int, default=10, show_default=True)
@click.option("--max-segments", type=int, default=40, show_default=True)
@click.option("--top-k", type=int, default=5, show_default=True,
              help="Alternative masks kept per character.")
@click.option("--threads", type=int, default=None,
              help="Evaluation processes [default: STENCILFORGE_THREADS or all cores].")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True,
              help="Output directory for stats.csv and the final population.")
def cmd_evolve(targets_name, fitness, subset, pop, gens, seed, grid_density, canvas,
               stroke, min_segments, max_segments, top_k, threads, out_dir):
    """Run one evolution and write stats.csv plus ranked .stencil files."""
    try:
        config, targets = build_config(
            targets_name, fitness, subset, pop, gens, seed, grid_density,
            canvas, stroke, min_segments, max_segments, top_k, threads,
        )
        population, stats = evolve(config, targets)
    except (ValueError, InfeasibleStencilError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "stats.csv").write_text(stats.to_csv(), encoding="utf-8")
    write_population(out_dir, population, config, targets)
    last = stats.records[-1]
    click.echo(
        f"fitness={fitness} seed={seed} generations={last.generation} "
        f"best_fitness={last.best_fitness:.6f} best_elements={last.best_element_count} "
        f"out={out_dir}"
    )


@main.command("render")
@click.option("--stencil", "stencil_path", type=click.Path(path_type=Path), required=True,
              help="A .stencil document.")
@click.option("--char", "character", default=None, help="Render one glyph.")
@click.option("--text", default=None, help="Render a specimen line.")
@click.option("--svg", "svg_out", type=click.Path(path_type=Path), default=None,
              help="Write SVG here.")
@click.option("--png", "png_out", type=click.Path(path_type=Path), default=None,
              help="Write PNG here (single glyph only).")
@click.option("--shapes", "shapes_path", type=click.Path(path_type=Path), default=None,
              help="Shape library file [default: packaged library].")
@click.option("--mapping", "mapping_path", type=click.Path(path_type=Path), default=None,
              help="Shape mapping file for element replacement.")
@click.option("--random-seed", "random_seed", type=int, default=None,
              help="Random shape mapping with this seed.")
@click.option("--tracking", type=float, default=4.0, show_default=True,
              help="Extra advance between specimen glyphs, px.")
def cmd_render(stencil_path, character, text, svg_out, png_out, shapes_path,
               mapping_path, random_seed, tracking):
    """Export a glyph or a specimen line from a saved stencil."""
    if (character is None) == (text is None):
        raise click.UsageError("pass exactly one of --char or --text")
    if character is not None and not (svg_out or png_out):
        raise click.UsageError("--char needs --svg or --png")
    if text is not None and not svg_out:
        raise click.UsageError("--text needs --svg")
    if mapping_path is not None and random_seed is not None:
        raise click.UsageError("pass at most one of --mapping or --random-seed")
    try:
        doc = load_stencil(stencil_path)
        library = load_shape_library(shapes_path) if shapes_path else builtin_shape_library()
        mapping = None
        if mapping_path is not None:
            mapping = load_shape_mapping(mapping_path)
        elif random_seed is not None:
            mapping = ShapeMapping(mode="random", seed=random_seed)

        if character is not None:
            if svg_out:
                svg_out.write_text(export_svg_glyph(doc, character), encoding="utf-8")
                click.echo(f"wrote {svg_out}")
            if png_out:
                st = doc.to_stencil()
                canvas = render(
                    st, doc.solution_for(character).best_mask,
                    doc.render_settings(), doc.grid(),
                )
                write_png(canvas, png_out)
                click.echo(f"wrote {png_out}")
        else:
            svg = render_specimen(doc, text, mapping=mapping, library=library,
                                  tracking=tracking)
            svg_out.write_text(svg, encoding="utf-8")
            click.echo(f"wrote {svg_out}")
    except (KeyError, ValueError, FileNotFoundError) as exc:
        message = exc.args[0] if exc.args else str(exc)
        raise click.ClickException(str(message)) from exc


@main.command("experiments")
@click.option("--suite", type=click.Choice(["exp1", "exp2", "exp3"]), required=True,
              help="Which fitness function drives the runs.")
@click.option("--runs", type=int, default=5, show_default=True, help="Seeded runs.")
@click.option("--seed-base", type=int, default=1, show_default=True,
              help="Run i uses seed seed_base + i.")
@click.option("--targets", "targets_name", default=BUILTIN_TARGETS_NAME, show_default=True)
@click.option("--subset", default="BIQVWX", show_default=True)
@click.option("--pop", type=int, default=100, show_default=True)
@click.option("--gens", type=int, default=300, show_default=True)
@click.option("--grid", "grid_density", type=int, default=10, show_default=True)
@click.option("--canvas", type=int, default=64, show_default=True)
@click.option("--stroke", type=float, default=3.0, show_default=True)
@click.option("--min-segments", type=int, default=10, show_default=True)
@click.option("--max-segments", type=int, default=40, show_default=True)
@click.option("--top-k", type=int, default=5, show_default=True)
@click.option("--threads", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def cmd_experiments(suite, runs, seed_base, targets_name, subset, pop, gens,
                    grid_density, canvas, stroke, min_segments, max_segments,
                    top_k, threads, out_dir):
    """Run a seeded suite, aggregate mean curves, export shared elements."""
    if runs < 1:
        raise click.UsageError("--runs must be >= 1")
    out_dir.mkdir(parents=True, exist_ok=True)
    all_stats: list[RunStats] = []
    best_stencil = None
    best_config = None
    try:
        for i in range(runs):
            config, targets = build_config(
                targets_name, suite, subset, pop, gens, seed_base + i, grid_density,
                canvas, stroke, min_segments, max_segments, top_k, threads,
            )
            population, stats = evolve(config, targets)
            all_stats.append(stats)
            (out_dir / f"run_{seed_base + i}.csv").write_text(
                stats.to_csv(), encoding="utf-8"
            )
            top = max(population, key=lambda s: s.fitness or 0.0)
            if best_stencil is None or (top.fitness or 0.0) > (best_stencil.fitness or 0.0):
                best_stencil, best_config = top, config
            click.echo(
                f"run seed={seed_base + i}: best_fitness={stats.records[-1].best_fitness:.6f} "
                f"elements={stats.records[-1].best_element_count}"
            )
    except (ValueError, InfeasibleStencilError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc)) from exc

    (out_dir / "aggregate.csv").write_text(aggregate_csv(all_stats), encoding="utf-8")
    assert best_stencil is not None and best_config is not None
    matrix = shared_elements(best_stencil)
    (out_dir / "shared_elements.csv").write_text(matrix.to_csv(), encoding="utf-8")
    doc = StencilDocument.from_stencil(
        best_stencil, best_config.grid, best_config.render,
        fitness_variant=suite,
        evaluated_subset="".join(sorted(best_config.fitness.evaluated_subset)) or None,
        provenance={"suite": suite, "runs": runs, "seed_base": seed_base},
    )
    save_stencil(doc, out_dir / "best.stencil")
    click.echo(f"suite={suite} runs={runs} out={out_dir}")


def aggregate_csv(all_stats: list[RunStats]) -> str:
    """Per-generation means across runs for every numeric stats column."""
    numeric = [c for c in STATS_COLUMNS if c not in ("generation", "boost_active")]
    n_gens = min(len(s.records) for s in all_stats)
    lines = ["generation," + ",".join(f"mean_{c}" for c in numeric)]
    for g in range(n_gens):
        row = [str(g)]
        for col in numeric:
            values = [getattr(s.records[g], col) for s in all_stats]
            present = [v for v in values if v is not None]
            row.append(repr(sum(present) / len(present)) if present else "")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@main.command("shapes")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True,
              help="Write the packaged shape library here.")
def cmd_shapes(out_path):
    """Export the packaged shape library file."""
    out_path.write_text(serialize_shape_library(builtin_shape_library()), encoding="utf-8")
    click.echo(f"wrote {out_path}")


@main.command("serve")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--targets-root", type=click.Path(path_type=Path), default=None,
              help="Directory whose subdirectories are loadable target sets.")
@click.option("--shape-libs", type=click.Path(path_type=Path), multiple=True,
              help="Extra shape library files to merge with the packaged one.")
@click.option("--runs-root", type=click.Path(path_type=Path), default=Path("runs"),
              show_default=True, help="Where deleted runs persist their last snapshot.")
def cmd_serve(port, host, targets_root, shape_libs, runs_root):
    """Host the studio service (REST API plus the built UI, if present)."""
    import uvicorn

    from .service import create_app

    dist = Path("frontend/dist")
    app = create_app(
        targets_root=targets_root,
        shape_libs=tuple(shape_libs),
        runs_root=runs_root,
        frontend_dist=dist if dist.is_dir() else None,
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
