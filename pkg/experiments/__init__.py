"""Sweep, scaling, convergence and validation experiments"""
