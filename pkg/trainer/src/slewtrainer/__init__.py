"""Curriculum SAC training against the reorientation environment server.

The trainer talks to the environment exclusively over its newline-
delimited JSON protocol and hands trained actors back as the runtime's
policy-weights JSON files.
"""

__version__ = "0.1.0"
