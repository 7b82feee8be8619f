"""
Persistence: ledger documents, distance streams, trace and dataset CSV.
"""
