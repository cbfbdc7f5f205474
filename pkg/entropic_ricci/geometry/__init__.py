"""Geodesic equations and curvature"""
