"""Configuration Module - environment defaults, presets and run configuration"""
