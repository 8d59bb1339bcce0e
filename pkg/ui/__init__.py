"""SVG plots"""
