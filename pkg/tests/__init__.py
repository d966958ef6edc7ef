"""
Test suite for the sicmag magnetometry toolkit
"""
