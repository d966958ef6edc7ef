"""
Core settings, exceptions and the least-squares solver
"""
