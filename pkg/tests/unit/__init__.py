"""Unit tests for the filter stability toolkit"""
