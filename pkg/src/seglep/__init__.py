"""Bottom-up hierarchical image segmentation from fused pixel cues.

The package merges one-pixel regions greedily by a unit merging cost that
trades off appearance complexity, semantic evidence, boundary regularity
and the effort a boundary would take to trace by hand.  The full merge
log doubles as a segmentation hierarchy.
"""

from .engine import (ConstantPrior, EngineConfig, MergeEvent, RadialPrior,
                     RunResult, init_state, merge_step, run,
                     unit_merging_cost)
from .hierarchy import (MergeHierarchy, boundary_mask, build_ucm,
                        extract_semantic, hierarchy_from_events, threshold)
from .metrics import (ScoreSweep, boundary_f, covering, mean_iou, ods_ois,
                      pri, voi)
from .pipeline import (CueParams, ImageBundle, full_hierarchy, prepare,
                       quantile_levels, run_engine, zero_contour)
from .raster import (ContourMap, LabelMap, RasterImage, SemanticMap,
                     load_contour_map, load_image, load_semantic_map,
                     read_label_map, read_ucm, write_label_map,
                     write_overlay, write_ucm)

__version__ = "0.1.0"

__all__ = [
    "ConstantPrior", "EngineConfig", "MergeEvent", "RadialPrior",
    "RunResult", "init_state", "merge_step", "run", "unit_merging_cost",
    "MergeHierarchy", "boundary_mask", "build_ucm", "extract_semantic",
    "hierarchy_from_events", "threshold",
    "ScoreSweep", "boundary_f", "covering", "mean_iou", "ods_ois", "pri",
    "voi",
    "CueParams", "ImageBundle", "full_hierarchy", "prepare",
    "quantile_levels", "run_engine", "zero_contour",
    "ContourMap", "LabelMap", "RasterImage", "SemanticMap",
    "load_contour_map", "load_image", "load_semantic_map", "read_label_map",
    "read_ucm", "write_label_map", "write_overlay", "write_ucm",
    "__version__",
]
