"""Lane-mask post-processing: clustering, top-down fitting, path curvature and lateral offset."""
from ._accel import BACKEND
from .pipeline import FrameResult, PipelineConfig, Session, process_frame
from .viewgeom import CameraModel, Homography, homography_from_camera

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CameraModel",
    "FrameResult",
    "Homography",
    "PipelineConfig",
    "Session",
    "homography_from_camera",
    "process_frame",
]
