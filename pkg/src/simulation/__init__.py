"""
Synthetic and desk-scale workloads for the accountants.
"""
