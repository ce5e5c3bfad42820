import math

FPS = 30
SUBSTEPS_PER_FRAME = 10
SUBSTEP_S = 1.0 / (FPS * SUBSTEPS_PER_FRAME)


def frame_count(duration_s: float) -> int:
    """Frames in a clip of ``duration_s`` seconds at 30 Hz, rounding half up."""
    return int(math.floor(duration_s * FPS + 0.5))
