"""Zero-shot navigation planning from sampled candidate videos.

The pipeline turns one observation image and a language instruction into a
scale-calibrated, kinematically feasible waypoint trajectory:

    generate K candidate videos -> judge-rank and select -> decode geometry ->
    recover metric scale -> plan collision-free trajectory -> execute.
"""

__version__ = "0.1.0"
