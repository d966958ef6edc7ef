"""
Record types carrying sampled data and fit results
"""
