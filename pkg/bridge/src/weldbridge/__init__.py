"""weldbridge: adapter from a trained detector to the weldkit detections format."""

from .bridge import BridgeConfig, infer_dir
from .models import SavedModelDetector, StubModel, load_model

__version__ = "0.1.0"

__all__ = ["BridgeConfig", "SavedModelDetector", "StubModel", "infer_dir", "load_model"]
