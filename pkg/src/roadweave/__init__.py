"""roadweave: road-network inference from direction fields, with human validation tooling."""

from .field import (
    DirectionField,
    FieldDimensionError,
    FieldFormatError,
    FieldGrid,
    FieldMagicError,
    FieldPayloadError,
    FieldValueError,
    bucket_center,
    bucket_of,
    bucketize,
    extract_peaks,
    rasterize_truth,
    read_field,
    truth_angles,
    write_field,
    zero_field,
)
from .graph import (
    Frame,
    GraphFormatError,
    GraphPosition,
    Point,
    RoadGraph,
    connected_components,
    convex_hull_area,
    densify,
    distances_from_position,
    edge_chains,
    edge_key,
    graph_from_geojson,
    graph_from_json,
    graph_to_geojson,
    graph_to_json,
    latlon_to_local,
    local_to_latlon,
    points_at_graph_distance,
    project_to_graph,
    read_geojson,
    read_graph_json,
    write_geojson,
    write_graph_json,
)
from .metrics import OriginOutcome, TopoParams, TopoResult, rge, topo_compare
from .pruning import (
    ClusterCenters,
    PruneParams,
    betweenness,
    grid_cluster,
    prune_major,
    shortest_path_tree,
)
from .search import (
    SearchParams,
    SearchState,
    StepEvent,
    extract_inferred,
    init_from_basemap,
    init_from_seeds,
    mask_directions,
    run,
    step,
)
from .teleport import RankedComponent, TeleportCursor, score_components

__version__ = "0.1.0"
