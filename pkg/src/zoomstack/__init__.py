"""Multi-scale joint diffusion sampling engine for consistent zoom stacks."""

from .blending import ObservationSet, blend_layer, blend_stack, naive_blend, upscale_bilinear
from .core import (
    CenterMask,
    NoiseStack,
    ZoomSchedule,
    ZoomStack,
    center_crop,
    center_mask,
    downscale,
    downscale_adjoint,
    downscale_once,
    gaussian_kernel,
    render_image,
    render_noise,
)
from .denoisers import (
    UNCOND,
    Denoiser,
    GaussianDenoiser,
    LevelShiftDenoiser,
    OracleDenoiser,
)
from .diffusion import NoiseSchedule, cfg_combine, ddpm_update, make_schedule, predict_clean
from .errors import (
    BackendError,
    DimensionError,
    InvariantViolation,
    ProtocolError,
    ValidationError,
    ZoomStackError,
)
from .grounding import AdamState, GroundingConfig, apply_grounding, grounding_grad, grounding_loss
from .pyramid import LaplacianPyramid, build_laplacian, recompose
from .remote import RemoteDenoiser, handshake_check, open_transport
from .sampling import SamplerConfig, SamplingTrace, joint_sample, sample_iterative
from .scenespec import SceneSpec, parse_scene_spec
from .storage import load_png, load_stack, save_png, save_stack
from .video import export_sequence, render_frame, zoom_values

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BackendError",
    "CenterMask",
    "Denoiser",
    "DimensionError",
    "GaussianDenoiser",
    "GroundingConfig",
    "InvariantViolation",
    "LaplacianPyramid",
    "LevelShiftDenoiser",
    "NoiseSchedule",
    "NoiseStack",
    "ObservationSet",
    "OracleDenoiser",
    "ProtocolError",
    "RemoteDenoiser",
    "SamplerConfig",
    "SamplingTrace",
    "SceneSpec",
    "UNCOND",
    "ValidationError",
    "ZoomSchedule",
    "ZoomStack",
    "ZoomStackError",
    "apply_grounding",
    "blend_layer",
    "blend_stack",
    "build_laplacian",
    "center_crop",
    "center_mask",
    "cfg_combine",
    "ddpm_update",
    "downscale",
    "downscale_adjoint",
    "downscale_once",
    "export_sequence",
    "gaussian_kernel",
    "grounding_grad",
    "grounding_loss",
    "handshake_check",
    "joint_sample",
    "load_png",
    "load_stack",
    "make_schedule",
    "naive_blend",
    "open_transport",
    "parse_scene_spec",
    "predict_clean",
    "recompose",
    "render_frame",
    "render_image",
    "render_noise",
    "sample_iterative",
    "save_png",
    "save_stack",
    "upscale_bilinear",
    "zoom_values",
]
