"""Output writers"""
