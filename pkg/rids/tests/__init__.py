"""
Tests for the rids package.
"""
