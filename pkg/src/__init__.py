"""
Transiogram Toolkit - spatial transition probabilities for categorical raster maps.

Estimation, kernel fitting, model validity checks, shape metrics and a Gaussian
excursion-set simulator, wired together by the command line in src.main.
"""

__version__ = "1.0.0"
