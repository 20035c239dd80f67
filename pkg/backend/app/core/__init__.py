"""Filtering, stability analysis and control modules"""
