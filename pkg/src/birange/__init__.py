"""Digital twin and measurement simulator for a bistatic spherical
positioning range: gantry kinematics, collision safety, jerk-limited
trajectory verification, and end-to-end reflectivity measurement
simulation against analytic sphere models."""

__version__ = "0.1.0"
