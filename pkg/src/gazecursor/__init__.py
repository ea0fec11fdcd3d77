"""Eye-gaze cursor engine.

Turns per-frame facial landmarks plus a grayscale camera image into a
stream of cursor events: landmark-based eye isolation, blink detection
via the eye aspect ratio, pupil localization on the eye crop, gaze
direction classification, and deterministic event synthesis.
"""

__version__ = "0.1.0"
