"""Data Models Module - cell scenario, utilities, channel formulas and algorithm state"""
