"""Two-sample topological comparison of 2-D point clouds.

Pipeline: point cloud -> Gaussian KDE on a grid -> super-level-set
persistence diagrams (H0, H1) -> either diagram distances (bottleneck,
p-Wasserstein) or a parametric nearest-neighbour model per diagram with
coefficient-difference hypothesis tests, plus a Monte Carlo harness that
reproduces the benchmark table layout.
"""

from .samplers import (
    CIRCLE,
    EXAMPLE_PAIRS,
    TWO_CONCENTRIC_CIRCLES,
    TWO_DISTINCT_CIRCLES,
    ShapeSpec,
    circle,
    load_cloud,
    sample_shape,
    save_cloud,
    two_concentric_circles,
    two_distinct_circles,
)
from .kde import ScalarGrid, default_bounds, kde_eval, kde_grid, kde_values
from .persistence import (
    DEATH_AT_GRID_MIN,
    ESSENTIAL_DROPPED,
    DiagramPair,
    PersistenceDiagram,
    boundary_matrix_diagrams,
    diagram_pipeline,
    h0_superlevel,
    h1_superlevel,
    load_diagram,
    load_diagrams,
    save_diagrams,
)
from .distances import bottleneck, matching_cost, range_ratio, wasserstein
from .rst import (
    DegenerateModelError,
    FitFailedError,
    RstConfig,
    RstFit,
    VarianceUnavailableError,
    conditional_density,
    fit,
    log_pseudolikelihood,
    nn_stat,
    select_k,
    silverman_bandwidth,
    transform,
)
from .inference import (
    ParamDiff,
    TestReport,
    compare_fits,
    empirical_pvalue,
    ks_normal_check,
    significance_count,
    z_pvalue,
)
from .harness import (
    COLD_MONTHS,
    HOT_MONTHS,
    ComparisonReport,
    ExperimentConfig,
    IngestResult,
    SummaryRow,
    SuiteEntry,
    compare_datasets,
    derive_seed,
    ingest_csv,
    run_experiment,
    run_suite,
    write_summary_csv,
)

__version__ = "0.1.0"
