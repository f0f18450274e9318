"""
Test package for ZFStats
"""
