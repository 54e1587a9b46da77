"""Stable-vehicle transmission backbone for highway vehicular networks:
channel, MAC and queueing models plus a packet-level simulator."""

__version__ = "0.1.0"
