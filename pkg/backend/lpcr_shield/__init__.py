# LPCR Shield
"""
Synthetic license-plate character recognition under geometric patch
attacks: dataset generation, a numpy CNN, exhaustive mask attacks,
attack-aware training and the analysis report.
"""

__version__ = "1.1.0"
