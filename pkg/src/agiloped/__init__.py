"""Control stack for a low-cost parallel-kinematics biped, closed against a
reduced-order physics harness."""

__version__ = "0.1.0"
