"""Spacecraft reorientation toolkit with a pointing keep-out cone.

Subpackages cover quaternion math, rigid-body dynamics, keep-out-cone
geometry, a sampled-data control-barrier-function safety filter, a shaped
reward, an episodic RL environment with a curriculum scenario sampler,
policy inference, Monte Carlo evaluation, a wire-protocol environment
server, and a CLI.
"""

__version__ = "0.1.0"
