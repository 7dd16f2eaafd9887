"""stencilforge: evolution of type stencils that draw coherent glyph sets."""

from .core import (
    GlyphMask,
    GlyphSolution,
    GridSpec,
    InfeasibleStencilError,
    Segment,
    Stencil,
    is_valid,
    random_stencil,
    segment,
    segment_midpoint,
)
from .raster import (
    Canvas,
    RenderSettings,
    TargetSet,
    glyph_score,
    load_targets,
    render,
    render_expression,
    rmse,
)
from .search import (
    EXP3_DEFAULT_SUBSET,
    FitnessConfig,
    FitnessVariant,
    SearchConfig,
    SharedElementMatrix,
    evaluate_stencil,
    fit_exp_1,
    fit_exp_2,
    fit_exp_3,
    hillclimb_mask,
    reduce_gaps,
    reduce_size,
    shared_elements,
)
from .evolve import (
    EvoConfig,
    GenerationRecord,
    GenerationSnapshot,
    RunStats,
    area_crossover,
    evolve,
    mutate,
    population_similarity,
)
from .alphabet import builtin_targets

__version__ = "0.1.0"
