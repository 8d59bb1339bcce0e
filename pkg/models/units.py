"""Unit conversions; dB only appears at configuration ingestion"""
import math

import numpy as np


def db_to_linear(x_db):
    """Convert a gain in dB to linear scale (scalar or array)"""
    if np.ndim(x_db) == 0:
        return 10.0 ** (float(x_db) / 10.0)
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a linear gain to dB"""
    if np.ndim(x) == 0:
        return 10.0 * math.log10(float(x))
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm_to_watts(x_dbm):
    """Convert dBm to watts"""
    return db_to_linear(np.asarray(x_dbm, dtype=float) - 30.0) if np.ndim(x_dbm) else db_to_linear(float(x_dbm) - 30.0)


def dbw_to_watts(x_dbw):
    """Convert dBW to watts"""
    return db_to_linear(x_dbw)


def watts_to_dbm(p):
    """Convert watts to dBm"""
    return linear_to_db(p) + 30.0


def nats_to_bits(r):
    """Presentation-layer conversion of a rate"""
    return r / math.log(2.0)
