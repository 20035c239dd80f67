"""Worker modules"""
