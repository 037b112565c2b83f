"""
gradflow harness - batch experiments, artifacts and the command-line entry point.

Experiments are described in INI files, validated into ExperimentConfig objects
and executed concurrently up to a worker cap. Each experiment writes its CSV,
JSON and SVG artifacts into its own directory, atomically.
"""

__version__ = "1.0.0"
