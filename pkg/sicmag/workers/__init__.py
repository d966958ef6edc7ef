"""
Sweep-point workers
"""
