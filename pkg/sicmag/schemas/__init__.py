"""
Pydantic schemas for model parameters, configuration and reports
"""
