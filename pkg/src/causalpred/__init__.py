"""Causal models as predictors of statistical-test outcomes on variable
subsets never jointly observed, certified by VC-type generalization bounds."""

__version__ = "0.1.0"
