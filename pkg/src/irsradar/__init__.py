"""Multi-IRS-aided OFDM radar: measurement synthesis, GLRT detection and
joint waveform / phase-shift design."""

from irsradar.scene import IrsArray, PathParams, SceneConfig, compute_path_params, path_angles, steering_vector
from irsradar.channel import ChannelStructure, build_C, build_Q1_Q2, build_rank1_factor
from irsradar.signal_model import NoiseModel, OfdmWaveform, doppler_matrix, make_noise_model, synthesize
from irsradar.detector import DetectorConfig, GlrResult, glr_statistic, noncentrality, theoretical_pd
from irsradar.optimizer import DesignState, algorithm1
from irsradar.estimators import GLRTDetector, JointDesigner

__version__ = "0.1.0"

__all__ = [
    "IrsArray",
    "PathParams",
    "SceneConfig",
    "compute_path_params",
    "path_angles",
    "steering_vector",
    "ChannelStructure",
    "build_C",
    "build_Q1_Q2",
    "build_rank1_factor",
    "NoiseModel",
    "OfdmWaveform",
    "doppler_matrix",
    "make_noise_model",
    "synthesize",
    "DetectorConfig",
    "GlrResult",
    "glr_statistic",
    "noncentrality",
    "theoretical_pd",
    "DesignState",
    "algorithm1",
    "GLRTDetector",
    "JointDesigner",
]
