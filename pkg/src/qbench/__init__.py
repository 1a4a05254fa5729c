"""qbench: a linear-optics quantum computing bench.

Exact-amplitude and Monte-Carlo simulation of heralded photon sources,
waveplate gates, projective measurement and tomography, entangled-pair
production and a heralded two-qubit C-NOT, over a JSON scene graph with a
CLI and a session service.
"""

from .errors import (
    DanglingPathError,
    ImpossibleOutcomeError,
    InsufficientDataError,
    QBenchError,
    ReferenceError_,
    RegistryError,
    SceneParseError,
    UnknownSceneError,
    ValidationError,
)
from .measure import (
    CountsTable,
    TomographySettings,
    chsh_value,
    coincidence_1ao1,
    correlation_E,
    measure_shot,
    projective_probability,
    tomography_reconstruct,
)
from .optics import (
    DetectorSpec,
    PbsSpec,
    RefractiveIndexPoint,
    SpdcSourceSpec,
    WaveplateSpec,
    detect,
    jones_hwp,
    jones_qwp,
    pbs_mode_unitary,
    phase_match,
    qhq_decompose,
    qhq_unitary,
    spdc_emit,
)
from .propagate import EventTrace, propagate_exact, propagate_sampled
from .quantum import (
    BlochVector,
    DensityMatrix2,
    FockState,
    ModeIndex,
    ModeUnitary,
    OccupationPattern,
    PolarizationState,
    apply_jones,
    apply_mode_unitary,
    bloch_from_state,
    fidelity,
    inner_product,
    post_select,
    tensor,
)
from .scene import Scene, builtin_scene, load_scene, scene_hash, serialize_scene

__version__ = "0.1.0"
