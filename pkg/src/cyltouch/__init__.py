"""Grasp-intent recognition on a cylindrical tactile grid.

Core pieces: a shift-aligned (cylindrical) kernel SVM trained with SMO,
baseline classifiers, a simulated-data generator, an evaluation harness,
a real-time sliding-window pipeline and a streaming service.
"""

__version__ = "0.1.0"

from .types import (  # noqa: F401
    FeatureMap,
    GridShape,
    IntentLabel,
    LABELS,
    TactileFrame,
    TactileWindow,
)
