"""
Bayesian privacy accountant package.
"""
