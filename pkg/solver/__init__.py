"""Centralized oracle: high-SINR objective, projections, certificate and grid search"""
