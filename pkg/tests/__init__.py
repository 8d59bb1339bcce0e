"""Test suite for the power control simulator"""
