"""oirskit: simulation and control toolkit for array-type optical
intelligent reflecting surfaces (micro-mirror arrays and optical phased
arrays): control solutions, receiver-plane power predictions, power
efficiencies and beam splitting with prescribed power ratios."""

from .analysis import (
    FadingSampleSet,
    OffsetSweep,
    Receiver,
    fading_samples,
    offset_sweep,
    received_power,
)
from .beam import GaussianBeam, centered_disk_power, disk_power, rect_power
from .beam_split import (
    GroupingConfig,
    Partition,
    SplitSpec,
    SplitTarget,
    brute_force_grouping,
    compose_target_field,
    optimize_grouping,
    power_matrices,
    region_masks,
    signal_window,
)
from .errors import (
    ComputeError,
    ConfigError,
    DegenerateGeometryError,
    EmptyAimError,
    InfeasibleRatioError,
    InfeasibleTargetError,
    LayoutMismatchError,
    OirsError,
    OutOfWindowError,
    OverlappingRegionsError,
    ParallelNormalsError,
    PartitionTooLargeError,
    RegionOutOfWindowError,
    SamplingError,
)
from .grid import FieldGrid, PowerDensityMap
from .mirror_array import (
    AimSolution,
    MirrorArray,
    MirrorElement,
    RingLayout,
    aim_array,
    compare_efficiencies,
    efficiency_numeric,
    efficiency_ring_estimate,
    element_incident_power,
    receiver_power_density,
    reflected_power,
)
from .phased_array import (
    OpticalSetup,
    PhasedArray,
    RetrievalConfig,
    RetrievalResult,
    build_reflectance,
    fraunhofer,
    gaussian_incident,
    inverse_fraunhofer,
    load_phase_csv,
    non_adjustable_field,
    opa_efficiency,
    retrieve_phase,
    save_phase_csv,
    uniform_incident,
)

__version__ = "0.1.0"
