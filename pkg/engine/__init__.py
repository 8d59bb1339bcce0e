"""Distributed price/power iteration and its stability monitor"""
