"""Target pose generation for hanging tasks: decoupled SE(3) diffusion with
isotropic-Gaussian rotation noise, plus gravity-descent-coverage refinement."""

from .dataset import Dataset, Demo, Normalization, generate_demos, load_dataset, save_dataset
from .diffusion import (
    NoisePair,
    OracleDenoiser,
    Pose,
    forward_pose,
    forward_rotation,
    forward_translation,
    reverse_step,
    sample_target_pose,
    smooth_l1_loss,
)
# The evaluate() driver stays on its submodule (hangpose.evaluate.evaluate)
# so the module itself remains importable as an attribute of the package.
from .evaluate import TrialReport, ablate_timesteps, mode_coverage
from .geometry import (
    BoxSpec,
    HookSpec,
    MugSpec,
    RackSpec,
    VoxelGrid,
    hanging_pose,
    hook_through_handle,
    is_success,
    overlap_volume,
    rack_archetype,
    sample_surface,
    standard_mug,
    voxelize,
)
from .igso3 import IgSo3Table, TableCache, build_table, sample_rotation, sample_shifted
from .network import (
    Denoiser,
    TrainConfig,
    TrainExample,
    condition_registry,
    embed_condition,
    encode_cloud,
    encode_pose,
    encode_timestep,
    load_checkpoint,
    predict_noise,
    save_checkpoint,
    train,
)
from .refine import RefineResult, gdc_coefficient, jitter_translation, refine_pose
from .schedule import (
    AdjustSchedule,
    NoiseSchedule,
    make_adjust_schedule,
    make_schedule,
)
from .so3 import (
    exp_rotation,
    geodesic_distance,
    geodesic_flow,
    log_rotation,
    sample_uniform_axis,
)

__version__ = "0.1.0"
