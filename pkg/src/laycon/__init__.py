"""Layered control stack: MPC planner, explicit reference governor, ISS tracker.

Offline certificate computation (Lyapunov levels, settling times, mismatch
bounds, contract compatibility) plus sampled-data simulation of a hybrid
battery/supercapacitor storage plant with per-step assume-guarantee
monitoring.
"""

__version__ = "0.1.0"
