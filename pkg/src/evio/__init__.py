"""Event-camera visual-inertial odometry front-end with simulator and evaluator."""

__version__ = "0.1.0"
