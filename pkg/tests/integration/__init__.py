"""Integration tests: certification runs and end-to-end CLI runs"""
